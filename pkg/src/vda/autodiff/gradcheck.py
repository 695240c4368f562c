"""Finite-difference validation of analytic gradients."""

from __future__ import annotations

import numpy as np

from .tensor import Tape, Tensor, backward


def finite_difference_check(f, x: Tensor, h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f`` must be a deterministic scalar-valued function of ``x`` (it may
    close over other tensors; only ``x`` is perturbed). Per coordinate the
    error is |analytic - numeric| / max(|analytic|, 1e-8); the max over all
    coordinates is returned.
    """
    if not (1e-7 <= h <= 1e-3):
        raise ValueError(f"step h={h} outside [1e-7, 1e-3]")
    saved_grad = x.grad
    x.grad = None
    x.requires_grad = True
    with Tape() as tape:
        y = f(x)
    if y.data.shape != ():
        raise ValueError("finite_difference_check needs a scalar-valued f")
    backward(tape, y)
    analytic = np.zeros_like(x.data) if x.grad is None else x.grad.copy()
    x.grad = saved_grad

    flat = x.data.reshape(-1)
    numeric = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        f_plus = float(f(x).data)
        flat[i] = orig - h
        f_minus = float(f(x).data)
        flat[i] = orig
        numeric[i] = (f_plus - f_minus) / (2.0 * h)
    numeric = numeric.reshape(x.data.shape)

    denom = np.maximum(np.abs(analytic), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))
