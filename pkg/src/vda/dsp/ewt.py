"""Empirical wavelet transform: adaptive spectrum segmentation + Meyer-type bank.

Boundaries sit at midpoints between the C largest spectral maxima. The filter
bank uses Meyer's polynomial transition and forms a partition of unity in
amplitude, so the components sum back to the input exactly (up to float
round-off).
"""

from __future__ import annotations

import numpy as np
from scipy.signal import find_peaks

from .fd import DecompositionConfig
from .signal import ComponentSet, Signal


def _meyer_step(t: np.ndarray) -> np.ndarray:
    # Meyer auxiliary polynomial: 0 at t<=0, 1 at t>=1, C^3-smooth in between.
    t = np.clip(t, 0.0, 1.0)
    beta = t ** 4 * (35.0 - 84.0 * t + 70.0 * t ** 2 - 20.0 * t ** 3)
    return np.sin(0.5 * np.pi * beta) ** 2


def _top_maxima(mag: np.ndarray, c: int, prominence: float) -> list[int]:
    # Relax the prominence threshold a few times before giving up.
    for relax in range(5):
        thr = prominence * mag.max() * (0.5 ** relax) if mag.max() > 0 else 0.0
        peaks, props = find_peaks(mag, height=thr if thr > 0 else None)
        if peaks.size >= c:
            order = np.argsort(mag[peaks])[::-1][:c]
            return sorted(int(p) for p in peaks[order])
    return []


def ewt_boundaries(mag: np.ndarray, c: int, prominence: float) -> np.ndarray:
    """C-1 internal boundaries (bin units); equal-width fallback when the
    spectrum offers too few maxima."""
    n_bins = mag.size
    peaks = _top_maxima(mag, c, prominence)
    if len(peaks) == c:
        bounds = np.array(
            [0.5 * (peaks[i] + peaks[i + 1]) for i in range(c - 1)], dtype=np.float64
        )
        if np.all(np.diff(bounds) > 1.0) and bounds[0] > 1.0 and bounds[-1] < n_bins - 2:
            return bounds
    return np.linspace(0, n_bins - 1, c + 1)[1:-1]


def _filter_bank(n_bins: int, bounds: np.ndarray, gamma: float) -> np.ndarray:
    """[C, n_bins] bank; rows sum to one at every bin."""
    edges = np.concatenate(([0.0], bounds, [float(n_bins - 1)]))
    widths = np.diff(edges)
    bins = np.arange(n_bins, dtype=np.float64)
    # Rising step at each internal boundary; transition half-width limited by
    # the narrower adjacent segment so neighbouring transitions never overlap.
    rises = []
    for i, w in enumerate(bounds):
        tau = gamma * min(widths[i], widths[i + 1])
        tau = max(tau, 0.5)
        rises.append(_meyer_step((bins - (w - tau)) / (2.0 * tau)))
    c = len(bounds) + 1
    bank = np.empty((c, n_bins))
    prev = np.ones(n_bins)
    for k in range(c):
        nxt = rises[k] if k < c - 1 else np.zeros(n_bins)
        bank[k] = prev - nxt
        prev = nxt
    return bank


def ewt_decompose(signal: Signal, config: DecompositionConfig) -> ComponentSet:
    """Decompose into C components that reconstruct the input by summation."""
    if config.method != "EWT":
        raise ValueError("ewt_decompose requires method='EWT'")
    n = len(signal)
    spec = np.fft.rfft(signal.samples)
    mag = np.abs(spec)
    bounds = ewt_boundaries(mag, config.C, config.peak_prominence)
    bank = _filter_bank(mag.size, bounds, config.ewt_transition)

    hz_per_bin = signal.sample_rate / 2.0 / max(mag.size - 1, 1)
    edges_hz = np.concatenate(([0.0], bounds * hz_per_bin,
                               [signal.sample_rate / 2.0]))
    components = [
        Signal(np.fft.irfft(spec * bank[k], n=n), signal.sample_rate)
        for k in range(config.C)
    ]
    bands = [(float(edges_hz[k]), float(edges_hz[k + 1])) for k in range(config.C)]
    return ComponentSet(signal, components, bands=bands)


def decompose(signal: Signal, config: DecompositionConfig) -> ComponentSet:
    """Dispatch to the configured decomposition method."""
    from .fd import fd_decompose

    if config.method == "FD":
        return fd_decompose(signal, config)
    return ewt_decompose(signal, config)
