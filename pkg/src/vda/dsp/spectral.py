"""FFT helpers and interval-constrained spectral peak detection."""

from __future__ import annotations

import numpy as np
from scipy.signal import find_peaks

from .signal import Signal


def real_fft(signal: Signal) -> np.ndarray:
    """One-sided complex spectrum of a real signal."""
    if len(signal) < 2:
        raise ValueError("real_fft needs at least 2 samples")
    return np.fft.rfft(signal.samples)


def real_ifft(spectrum: np.ndarray, n: int, sample_rate: int) -> Signal:
    """Inverse of real_fft; ``n`` is the original sample count."""
    if spectrum.size == 0:
        raise ValueError("real_ifft of an empty spectrum")
    return Signal(np.fft.irfft(spectrum, n=n), sample_rate)


def rfft_freqs(n: int, sample_rate: int) -> np.ndarray:
    return np.fft.rfftfreq(n, d=1.0 / sample_rate)


def detect_spectral_peaks(magnitude: np.ndarray, intervals, prominence: float):
    """Local maxima inside each [lo, hi) bin interval above prominence * interval max.

    Intervals are half-open in bin index space; empty or silent intervals are
    skipped. Each returned bin is a local maximum of the magnitude (one extra
    context bin on each side is used so peaks on interval borders are kept).
    Returns a sorted, de-duplicated list of bin indices.
    """
    if not (0.0 < prominence < 1.0):
        raise ValueError("prominence must lie in (0, 1)")
    magnitude = np.asarray(magnitude, dtype=np.float64)
    found: set[int] = set()
    for lo, hi in intervals:
        lo = max(int(lo), 0)
        hi = min(int(hi), magnitude.size)
        if hi <= lo:
            continue
        seg = magnitude[lo:hi]
        seg_max = seg.max()
        if seg_max <= 0.0:
            continue
        ctx_lo = max(lo - 1, 0)
        ctx_hi = min(hi + 1, magnitude.size)
        peaks, _ = find_peaks(magnitude[ctx_lo:ctx_hi])
        for p in peaks + ctx_lo:
            if lo <= p < hi and magnitude[p] >= prominence * seg_max:
                found.add(int(p))
    return sorted(found)
