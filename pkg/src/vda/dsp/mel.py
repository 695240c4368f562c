"""Framing and log-Mel filterbank features."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import get_window

from .signal import Signal

ENERGY_FLOOR = 1e-10


def frame_sequence(signal: Signal, frame_ms: float, hop_ms: float | None = None):
    """Cut a signal into frames; the last partial frame is zero-padded.

    hop defaults to the frame length (non-overlapping).
    """
    if frame_ms <= 0:
        raise ValueError("frame_ms must be positive")
    if hop_ms is None:
        hop_ms = frame_ms
    if hop_ms <= 0:
        raise ValueError("hop_ms must be positive")
    flen = int(round(frame_ms * signal.sample_rate / 1000.0))
    hop = int(round(hop_ms * signal.sample_rate / 1000.0))
    frames = []
    start = 0
    while start < len(signal) or not frames:
        chunk = signal.samples[start : start + flen]
        if chunk.size < flen:
            chunk = np.pad(chunk, (0, flen - chunk.size))
        frames.append(Signal(chunk, signal.sample_rate))
        start += hop
        if start >= len(signal):
            break
    return frames


@dataclass
class MelFrames:
    """[F x M] matrix of log-Mel energies plus the windowing that produced it."""

    frames: np.ndarray
    frame_length_ms: float
    hop_ms: float
    M: int


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def _cached_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    bank = mel_filterbank(n_mels, n_fft, sample_rate)
    bank.setflags(write=False)
    return bank


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular filters spanning [0, sample_rate/2], HTK mel scale."""
    nyq = sample_rate / 2.0
    pts_hz = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(nyq), n_mels + 2))
    bin_freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    bank = np.zeros((n_mels, bin_freqs.size))
    for m in range(n_mels):
        lo, center, hi = pts_hz[m], pts_hz[m + 1], pts_hz[m + 2]
        up = (bin_freqs - lo) / (center - lo)
        down = (hi - bin_freqs) / (hi - center)
        bank[m] = np.maximum(0.0, np.minimum(up, down))
    return bank


def mel_features(signal: Signal, n_mels: int = 80, window_ms: float = 25.0,
                 hop_ms: float = 10.0) -> MelFrames:
    """Log-Mel energies over Hann sub-windows; silence yields log(1e-10)."""
    if n_mels < 1:
        raise ValueError("n_mels must be >= 1")
    win = int(round(window_ms * signal.sample_rate / 1000.0))
    hop = int(round(hop_ms * signal.sample_rate / 1000.0))
    x = signal.samples
    if x.size < win:
        x = np.pad(x, (0, win - x.size))
    n_windows = 1 + (x.size - win) // hop
    window = get_window("hann", win, fftbins=True)
    bank = _cached_filterbank(n_mels, win, signal.sample_rate)
    starts = np.arange(n_windows) * hop
    segs = x[starts[:, None] + np.arange(win)] * window
    power = np.abs(np.fft.rfft(segs, axis=1)) ** 2
    rows = np.log(np.maximum(power @ bank.T, ENERGY_FLOOR))
    return MelFrames(rows, window_ms, hop_ms, n_mels)
