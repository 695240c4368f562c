"""Batch preparation: sequence length normalization, decomposition views,
per-frame log-Mel vectors, and SSL masking."""

from __future__ import annotations

import numpy as np

from ..dsp.ewt import decompose
from ..dsp.fd import DecompositionConfig
from ..dsp.mel import frame_sequence, mel_features
from ..dsp.signal import Signal
from .config import EncoderConfig, TrainingConfig
from .losses import MaskSpec, sample_mask

FRAME_MS = 200.0
MEL_WINDOW_MS = 25.0
MEL_HOP_MS = 10.0


def prepare_sequences(signals: list[Signal], tcfg: TrainingConfig) -> list[Signal]:
    """Length-normalize raw sequences before decomposition.

    Sequences shorter than d_min are discarded; ones between d_min and d_max
    are zero-padded to d_max; longer ones are cut into d_max chunks (the
    leftover tail is kept when it still clears d_min). Every surviving
    sequence is standardized to mean 0, variance 1.
    """
    out = []
    for sig in signals:
        d_min = int(round(tcfg.d_min_s * sig.sample_rate))
        d_max = int(round(tcfg.d_max_s * sig.sample_rate))
        if len(sig) < d_min:
            continue
        pieces = []
        if len(sig) <= d_max:
            pieces.append(np.pad(sig.samples, (0, d_max - len(sig))))
        else:
            for start in range(0, len(sig), d_max):
                chunk = sig.samples[start : start + d_max]
                if chunk.size < d_min:
                    break
                pieces.append(np.pad(chunk, (0, d_max - chunk.size)))
        for x in pieces:
            sd = x.std()
            x = (x - x.mean()) / (sd if sd > 0 else 1.0)
            out.append(Signal(x, sig.sample_rate))
    return out


def frame_mel_vector(sig: Signal, n_mels: int) -> np.ndarray:
    """One M-vector per analysis frame: log-Mel rows of the frame, averaged."""
    return mel_features(sig, n_mels, MEL_WINDOW_MS, MEL_HOP_MS).frames.mean(axis=0)


def build_views(sig: Signal, dec_cfg: DecompositionConfig | None,
                enc: EncoderConfig) -> np.ndarray:
    """[K, F, M] log-Mel views: view 0 is the original signal, then the C
    decomposition components. dec_cfg=None yields the single original view."""
    if dec_cfg is None:
        sources = [sig]
    else:
        sources = decompose(sig, dec_cfg).views()
    views = np.stack([
        np.stack([
            frame_mel_vector(frame, enc.mel_bins)
            for frame in frame_sequence(src, FRAME_MS)
        ])
        for src in sources
    ])
    return views


def decompose_and_mask(signals: list[Signal], dec_cfg: DecompositionConfig | None,
                       tcfg: TrainingConfig, enc: EncoderConfig,
                       rng: np.random.Generator):
    """Alg-style batch front-end: (C+1)-view Mel tensors [B, K, F, M] plus a
    fresh uniform without-replacement MaskSpec."""
    prepared = prepare_sequences(signals, tcfg)
    if not prepared:
        raise ValueError("no sequence survived length normalization")
    views = np.stack([build_views(s, dec_cfg, enc) for s in prepared])
    mask = sample_mask(views.shape[0], views.shape[2], tcfg.l_ssl_pct, rng)
    return views, mask


def batch_size_for(tcfg: TrainingConfig) -> int:
    return max(1, int(round(tcfg.batch_seconds / tcfg.d_max_s)))


def frames_per_sequence(tcfg: TrainingConfig) -> int:
    return max(1, int(round(tcfg.d_max_s * 1000.0 / FRAME_MS)))
