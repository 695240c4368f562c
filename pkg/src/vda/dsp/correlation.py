"""Pearson correlation between the original signal and its components."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import ComponentSet


@dataclass
class CorrelationResult:
    matrix: np.ndarray              # (C+1) x (C+1), original is row/col 0
    zero_variance: list[int]        # view indices whose correlations were zeroed


def component_correlation_matrix(cs: ComponentSet) -> CorrelationResult:
    """Symmetric unit-diagonal correlation matrix over the C+1 views.

    Zero-variance views get correlation 0 with everything (flagged), keeping
    the matrix well-defined.
    """
    series = np.stack([s.samples for s in cs.views()])
    centered = series - series.mean(axis=1, keepdims=True)
    norms = np.sqrt((centered ** 2).sum(axis=1))
    zero = [i for i, nz in enumerate(norms) if nz == 0.0]
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = centered / safe[:, None]
    r = unit @ unit.T
    for i in zero:
        r[i, :] = 0.0
        r[:, i] = 0.0
    np.fill_diagonal(r, 1.0)
    r = np.clip(r, -1.0, 1.0)
    return CorrelationResult(r, zero)
