"""Mono signal container and PCM16 WAV input/output."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Signal:
    """Mono waveform: float64 samples at a fixed sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ValueError("Signal needs a non-empty 1-D sample array")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("Signal contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self):
        return self.samples.size


@dataclass
class ComponentSet:
    """Original signal plus its C decomposed components.

    ``bands`` records the (low, high) Hz range each component was assigned,
    when the decomposition defines one.
    """

    original: Signal
    components: list[Signal]
    bands: list[tuple[float, float]] | None = field(default=None)

    def __post_init__(self):
        n = len(self.original)
        for c in self.components:
            if len(c) != n or c.sample_rate != self.original.sample_rate:
                raise ValueError("components must match the original's length and rate")

    @property
    def C(self) -> int:
        return len(self.components)

    def views(self) -> list[Signal]:
        """The (C+1)-way input view: original first, then components."""
        return [self.original] + list(self.components)


def _float_to_pcm16(x: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(x * 32767.0), -32768, 32767).astype(np.int16)


def write_wav(path: str, signal: Signal):
    """Write mono PCM16 WAV atomically (temp file + rename)."""
    from scipy.io import wavfile

    tmp = path + ".tmp"
    wavfile.write(tmp, signal.sample_rate, _float_to_pcm16(signal.samples))
    os.replace(tmp, path)


def read_wav(path: str) -> Signal:
    from scipy.io import wavfile

    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono WAV, got {data.ndim} channels")
    if data.dtype != np.int16:
        raise ValueError(f"{path}: expected PCM16 WAV, got dtype {data.dtype}")
    return Signal(data.astype(np.float64) / 32767.0, int(rate))


def write_components_wav(path: str, cs: ComponentSet):
    """Export a component set as multi-channel WAV: channel 0 is the original."""
    from scipy.io import wavfile

    stack = np.stack([s.samples for s in cs.views()], axis=1)
    tmp = path + ".tmp"
    wavfile.write(tmp, cs.original.sample_rate, _float_to_pcm16(stack))
    os.replace(tmp, path)
