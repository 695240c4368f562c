"""SimVowels: deterministic synthetic vowel dataset.

Speakers are vocal-tract scalings of a shared formant table; each vowel is a
superposition of three narrow-band formant carriers. Utterances are 4-second
sentences with a fresh vowel drawn every second, so the vowel is a fast
frame-level factor and the speaker a slow sequence-level factor.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .dsp.signal import Signal, write_wav

SAMPLE_RATE = 16000
UTTERANCE_SECONDS = 4
FRAME_MS = 200.0
FRAMES_PER_SECOND = int(round(1000.0 / FRAME_MS))

# (center Hz, bandwidth Hz, relative amplitude) for F1..F3, standard
# American-English measurements.
FORMANT_TABLE = {
    "/a/": ((730.0, 60.0, 1.0), (1090.0, 90.0, 0.6), (2440.0, 120.0, 0.3)),
    "/e/": ((530.0, 60.0, 1.0), (1840.0, 90.0, 0.6), (2480.0, 120.0, 0.3)),
    "/I/": ((390.0, 60.0, 1.0), (1990.0, 90.0, 0.6), (2550.0, 120.0, 0.3)),
    "/aw/": ((570.0, 60.0, 1.0), (840.0, 90.0, 0.6), (2410.0, 120.0, 0.3)),
    "/u/": ((300.0, 60.0, 1.0), (870.0, 90.0, 0.6), (2240.0, 120.0, 0.3)),
}
VOWEL_NAMES = tuple(FORMANT_TABLE)

NOISE_DB = -40.0
PEAK_LEVEL = 0.9

# Seed-stream tags so bank/utterance randomness never collides.
_BANK_STREAM = 1
_UTTERANCE_STREAM = 2


@dataclass(frozen=True)
class VowelSpec:
    name: str
    formants: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if len(self.formants) != 3:
            raise ValueError("a vowel needs exactly 3 formants")
        centers = [f[0] for f in self.formants]
        if sorted(centers) != centers or len(set(centers)) != 3:
            raise ValueError("formant centers must be strictly increasing")


@dataclass(frozen=True)
class SpeakerSpec:
    id: int
    vocal_tract_factor: float
    f0: float

    def __post_init__(self):
        if not (0.80 <= self.vocal_tract_factor <= 1.20):
            raise ValueError("vocal_tract_factor outside [0.80, 1.20]")


@dataclass
class UtteranceRecord:
    signal: Signal
    speaker_id: int
    second_labels: list[str]   # one vowel per second
    frame_labels: list[str]    # one vowel per analysis frame


def vowel_spec(name: str) -> VowelSpec:
    if name not in FORMANT_TABLE:
        raise ValueError(f"unknown vowel {name!r}; choose from {VOWEL_NAMES}")
    return VowelSpec(name, FORMANT_TABLE[name])


def build_speaker_bank(n: int, seed: int) -> list[SpeakerSpec]:
    """n speakers with factors uniform in [0.80, 1.20] and f0 in [85, 255] Hz."""
    if n < 1:
        raise ValueError("need at least one speaker")
    rng = np.random.default_rng(np.random.SeedSequence([seed, _BANK_STREAM]))
    factors = rng.uniform(0.80, 1.20, size=n)
    f0s = rng.uniform(85.0, 255.0, size=n)
    # continuous draws collide with probability ~0, but the contract demands
    # distinct (factor, f0) pairs
    while len({(f, g) for f, g in zip(factors, f0s)}) < n:
        factors = rng.uniform(0.80, 1.20, size=n)
        f0s = rng.uniform(85.0, 255.0, size=n)
    return [SpeakerSpec(i, float(factors[i]), float(f0s[i])) for i in range(n)]


def _render_segment(speaker: SpeakerSpec, vowel: VowelSpec, duration_s: float,
                    rng: np.random.Generator, sample_rate: int) -> np.ndarray:
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    nyq = sample_rate / 2.0
    clean = np.zeros(n)
    for center, bw, amp in vowel.formants:
        fc = speaker.vocal_tract_factor * center
        if fc + bw / 2.0 >= nyq:
            raise ValueError(
                f"scaled formant {fc:.1f} Hz (+{bw / 2:.0f} Hz sideband) exceeds "
                f"the Nyquist frequency {nyq:.0f} Hz"
            )
        phase_c = rng.uniform(0.0, 2.0 * np.pi)
        phase_m = rng.uniform(0.0, 2.0 * np.pi)
        # AM carrier: sidebands at +-bw/2 realize the formant bandwidth
        envelope = 1.0 + 0.5 * np.cos(2.0 * np.pi * (bw / 2.0) * t + phase_m)
        clean += amp * envelope * np.cos(2.0 * np.pi * fc * t + phase_c)
    noise_amp = 10.0 ** (NOISE_DB / 20.0) * np.max(np.abs(clean))
    x = clean + noise_amp * rng.standard_normal(n)
    return x * (PEAK_LEVEL / np.max(np.abs(x)))


def synth_vowel_segment(speaker: SpeakerSpec, vowel: VowelSpec, duration_s: float,
                        seed: int, sample_rate: int = SAMPLE_RATE) -> Signal:
    """One steady vowel: three AM formant carriers plus a -40 dB noise floor."""
    if duration_s < 0.1:
        raise ValueError("segment duration must be at least 0.1 s")
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    return Signal(_render_segment(speaker, vowel, duration_s, rng, sample_rate),
                  sample_rate)


def draw_vowels(rng: np.random.Generator, n: int = UTTERANCE_SECONDS) -> list[str]:
    return [VOWEL_NAMES[i] for i in rng.integers(0, len(VOWEL_NAMES), size=n)]


def generate_utterance(speaker: SpeakerSpec, seed,
                       sample_rate: int = SAMPLE_RATE) -> UtteranceRecord:
    """4 seconds of speech, one uniformly drawn vowel per second.

    ``seed`` is an int or a numpy SeedSequence.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence([int(seed)])
    rng = np.random.default_rng(seed)
    vowels = draw_vowels(rng)
    pieces = [
        _render_segment(speaker, vowel_spec(v), 1.0, rng, sample_rate)
        for v in vowels
    ]
    frame_labels = [v for v in vowels for _ in range(FRAMES_PER_SECOND)]
    return UtteranceRecord(Signal(np.concatenate(pieces), sample_rate),
                           speaker.id, list(vowels), frame_labels)


MANIFEST_NAME = "manifest.csv"
MANIFEST_HEADER = ["path", "split", "speaker_id", "sec0", "sec1", "sec2", "sec3"]

# Fractions matching the reference 4000/500/300 split of 4800 utterances.
_TRAIN_FRACTION = 4000.0 / 4800.0
_DEV_FRACTION = 500.0 / 4800.0


def split_sizes(n: int) -> tuple[int, int, int]:
    n_train = int(np.floor(n * _TRAIN_FRACTION))
    n_dev = int(np.floor(n * _DEV_FRACTION))
    return n_train, n_dev, n - n_train - n_dev


def utterance_seed(global_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([global_seed, _UTTERANCE_STREAM, index])


def generate_dataset(n_utterances: int, n_speakers: int, seed: int,
                     out_dir: str) -> str:
    """Write WAVs and a manifest under out_dir; returns the manifest path.

    Utterance i belongs to speaker i % n_speakers, so every speaker appears
    in every split. Fully deterministic in (seed, n_utterances, n_speakers).
    """
    if n_utterances < 0:
        raise ValueError("n_utterances must be non-negative")
    if n_utterances % max(n_speakers, 1) != 0 and n_utterances > 0:
        raise ValueError("n_utterances must divide evenly across speakers")
    os.makedirs(out_dir, exist_ok=True)
    wav_dir = os.path.join(out_dir, "wav")
    os.makedirs(wav_dir, exist_ok=True)

    bank = build_speaker_bank(n_speakers, seed) if n_utterances > 0 else []
    n_train, n_dev, _ = split_sizes(n_utterances)
    written: list[str] = []
    rows = []
    try:
        for i in range(n_utterances):
            speaker = bank[i % n_speakers]
            rec = generate_utterance(speaker, utterance_seed(seed, i))
            rel = os.path.join("wav", f"utt{i:05d}.wav")
            path = os.path.join(out_dir, rel)
            write_wav(path, rec.signal)
            written.append(path)
            split = "train" if i < n_train else ("dev" if i < n_train + n_dev else "test")
            rows.append([rel, split, speaker.id] + rec.second_labels)
    except Exception:
        for p in written:
            if os.path.exists(p):
                os.remove(p)
        raise

    manifest = os.path.join(out_dir, MANIFEST_NAME)
    tmp = manifest + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(rows)
    os.replace(tmp, manifest)
    return manifest


def load_manifest(manifest_path: str):
    """Rows of (wav_path, split, speaker_id, [sec0..sec3]) with absolute paths."""
    base = os.path.dirname(os.path.abspath(manifest_path))
    out = []
    with open(manifest_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != MANIFEST_HEADER:
            raise ValueError(f"unexpected manifest header {header}")
        for row in reader:
            out.append((os.path.join(base, row[0]), row[1], int(row[2]), row[3:7]))
    return out


def frame_labels_for(second_labels, frames_per_second: int = FRAMES_PER_SECOND):
    return [v for v in second_labels for _ in range(frames_per_second)]
