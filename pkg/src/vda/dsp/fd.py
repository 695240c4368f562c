"""Filter decomposition (FD): Butterworth band-pass bank over peak-derived bands.

Peaks are detected inside fixed frequency intervals, grouped down to C bands
by the configured merge strategy, and each band is realized as a 4th-order
Butterworth filter applied forward-backward (zero phase).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .signal import ComponentSet, Signal
from .spectral import detect_spectral_peaks, rfft_freqs

DEFAULT_FD_BAND_EDGES = (0.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0)

# Intervals whose spectral max sits more than 40 dB below the global max carry
# no content worth a band of their own; peak detection skips them.
INTERVAL_SILENCE_FLOOR = 1e-2

MERGE_HIGH_FREQUENCY = "merge_high_frequency"
MERGE_NEAREST_NEIGHBOR = "merge_nearest_neighbor"


@dataclass
class DecompositionConfig:
    method: str = "FD"  # "FD" | "EWT"
    C: int = 3
    fd_band_edges: tuple[float, ...] = DEFAULT_FD_BAND_EDGES
    merge_strategy: str = MERGE_NEAREST_NEIGHBOR
    peak_prominence: float = 0.5
    ewt_transition: float = 0.1  # transition width as a fraction of segment width

    def __post_init__(self):
        if self.method not in ("FD", "EWT"):
            raise ValueError(f"unknown decomposition method {self.method!r}")
        if self.C < 2:
            raise ValueError("C must be at least 2")
        if self.merge_strategy not in (MERGE_HIGH_FREQUENCY, MERGE_NEAREST_NEIGHBOR):
            raise ValueError(f"unknown merge strategy {self.merge_strategy!r}")
        if not (0.0 < self.peak_prominence < 1.0):
            raise ValueError("peak_prominence must lie in (0, 1)")
        edges = tuple(float(e) for e in self.fd_band_edges)
        if len(edges) < self.C + 1 or any(
            b <= a for a, b in zip(edges, edges[1:])
        ):
            raise ValueError(
                "fd_band_edges must be strictly increasing with length >= C+1"
            )
        self.fd_band_edges = edges


def _merge_nearest(clusters: list[list[float]], target: int) -> list[list[float]]:
    # Greedily merge the pair of adjacent peak clusters with the smallest
    # frequency gap; on ties the lower-frequency pair wins.
    while len(clusters) > target:
        gaps = [clusters[i + 1][0] - clusters[i][-1] for i in range(len(clusters) - 1)]
        i = int(np.argmin(gaps))
        clusters[i : i + 2] = [clusters[i] + clusters[i + 1]]
    return clusters


def _merge_high(clusters: list[list[float]], target: int) -> list[list[float]]:
    # Repeatedly merge the two highest-frequency clusters, keeping the low end intact.
    while len(clusters) > target:
        clusters[-2:] = [clusters[-2] + clusters[-1]]
    return clusters


def _bands_from_peaks(peaks_hz, strategy: str, c: int, nyquist: float):
    clusters = [[p] for p in sorted(peaks_hz)]
    if strategy == MERGE_NEAREST_NEIGHBOR:
        clusters = _merge_nearest(clusters, c)
    else:
        clusters = _merge_high(clusters, c)
    bounds = [
        0.5 * (clusters[i][-1] + clusters[i + 1][0]) for i in range(len(clusters) - 1)
    ]
    edges = [0.0] + bounds + [nyquist]
    return [(edges[i], edges[i + 1]) for i in range(c)]


def _widest_fixed_bands(edges, c: int):
    intervals = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
    widest = sorted(intervals, key=lambda b: b[1] - b[0], reverse=True)[:c]
    return sorted(widest)


def _band_filter(x: np.ndarray, lo: float, hi: float, sample_rate: int) -> np.ndarray:
    nyq = sample_rate / 2.0
    lo_n = lo / nyq
    hi_n = min(hi / nyq, 0.999)
    if lo_n <= 1e-9:
        sos = butter(4, hi_n, btype="lowpass", output="sos")
    elif hi_n >= 0.999:
        sos = butter(4, lo_n, btype="highpass", output="sos")
    else:
        sos = butter(4, [lo_n, hi_n], btype="bandpass", output="sos")
    pad = 3 * (2 * sos.shape[0] + 1)
    if x.size <= pad:
        raise ValueError(
            f"signal of {x.size} samples is shorter than the filter warm-up ({pad})"
        )
    return sosfiltfilt(sos, x)


def fd_decompose(signal: Signal, config: DecompositionConfig) -> ComponentSet:
    """Split a signal into C band-limited components via the FD filter bank."""
    if config.method != "FD":
        raise ValueError("fd_decompose requires method='FD'")
    n = len(signal)
    nyq = signal.sample_rate / 2.0
    freqs = rfft_freqs(n, signal.sample_rate)
    mag = np.abs(np.fft.rfft(signal.samples))

    hz_per_bin = freqs[1] if freqs.size > 1 else nyq
    floor = INTERVAL_SILENCE_FLOOR * mag.max()
    intervals = []
    for lo, hi in zip(config.fd_band_edges, config.fd_band_edges[1:]):
        if lo >= nyq:
            break
        b_lo = int(np.ceil(lo / hz_per_bin))
        b_hi = int(np.ceil(min(hi, nyq) / hz_per_bin))
        if b_hi > b_lo and mag[b_lo:b_hi].max() > floor:
            intervals.append((b_lo, b_hi))
    peak_bins = detect_spectral_peaks(mag, intervals, config.peak_prominence)
    peaks_hz = [freqs[b] for b in peak_bins]

    if len(peaks_hz) < config.C:
        bands = _widest_fixed_bands(config.fd_band_edges, config.C)
    else:
        bands = _bands_from_peaks(peaks_hz, config.merge_strategy, config.C, nyq)

    components = [
        Signal(_band_filter(signal.samples, lo, hi, signal.sample_rate),
               signal.sample_rate)
        for lo, hi in bands
    ]
    return ComponentSet(signal, components, bands=[tuple(b) for b in bands])
