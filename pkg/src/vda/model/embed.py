"""Deterministic embedding of a dataset with a trained checkpoint.

Inference uses posterior means only (no sampling), so repeated embedding of
the same manifest is bit-identical.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from ..dsp.signal import read_wav
from ..simvowels import frame_labels_for, load_manifest
from .checkpoint import Checkpoint
from .data import build_views, prepare_sequences
from .network import aggregate_subspaces, encode_sequences, encode_views


@dataclass
class EmbeddingResult:
    frame_z: np.ndarray                  # [n_frames, D]
    frame_factors: dict[str, list]       # aligned per-frame labels
    seq_s: np.ndarray | None             # [n_utterances, D_s] when dual branch
    seq_factors: dict[str, list]


def embed_dataset(ckpt: Checkpoint, manifest_path: str,
                  splits: tuple[str, ...] | None = ("dev", "test"),
                  expect_encoder=None) -> EmbeddingResult:
    """Embed every manifest row in ``splits`` (None means all rows)."""
    enc = ckpt.encoder
    if expect_encoder is not None and expect_encoder != enc:
        raise ValueError(
            "requested encoder config does not match the checkpoint, "
            "refusing to embed with mismatched settings"
        )
    params = ckpt.tensors()
    rows = [r for r in load_manifest(manifest_path)
            if splits is None or r[1] in splits]
    if not rows:
        raise ValueError(f"manifest has no rows in splits {splits}")

    frame_chunks, frame_vowels, frame_speakers = [], [], []
    seq_chunks, seq_speakers = [], []
    batch = 16
    for start in range(0, len(rows), batch):
        part = rows[start : start + batch]
        sigs = prepare_sequences([read_wav(p) for p, _, _, _ in part], ckpt.training)
        if len(sigs) != len(part):
            raise ValueError("embedding requires every sequence to survive "
                             "length normalization")
        views = np.stack([build_views(s, ckpt.decomposition, enc) for s in sigs])
        from ..autodiff import Tensor

        vt = Tensor(views)
        _h, mu, _lv = encode_views(params, enc, vt)
        z = aggregate_subspaces(np.swapaxes(mu.data, 1, 2), enc, params)  # [B,F,D]
        f_out = z.shape[1]
        for b, (_p, _s, speaker, secs) in enumerate(part):
            labels = frame_labels_for(secs)
            frame_chunks.append(z[b])
            for i in range(f_out):
                # map encoder frames back onto label frames (identity for
                # stride-1 stacks)
                src = int(round((i + 0.5) * len(labels) / f_out - 0.5))
                frame_vowels.append(labels[min(src, len(labels) - 1)])
                frame_speakers.append(speaker)
        if enc.dual_branch:
            _hp, mu_s, _lv_s = encode_sequences(params, enc, vt)
            s = aggregate_subspaces(mu_s.data, enc, params, prefix="s_")
            seq_chunks.append(s)
            seq_speakers.extend(speaker for _p, _s, speaker, _v in part)

    frame_z = np.concatenate(frame_chunks, axis=0)
    seq_s = np.concatenate(seq_chunks, axis=0) if seq_chunks else None
    return EmbeddingResult(
        frame_z=frame_z,
        frame_factors={"vowel": frame_vowels, "speaker": frame_speakers},
        seq_s=seq_s,
        seq_factors={"speaker": seq_speakers} if seq_s is not None else {},
    )


def write_embedding_csv(path: str, table: np.ndarray, factors: dict[str, list]):
    """Embedding columns z0..z{D-1} followed by named factor columns."""
    d = table.shape[1]
    header = [f"z{i}" for i in range(d)] + list(factors)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in range(table.shape[0]):
            row = [repr(float(x)) for x in table[r]]
            row += [str(factors[name][r]) for name in factors]
            writer.writerow(row)
    os.replace(tmp, path)


def read_embedding_csv(path: str):
    """Returns (table [N, D], factors dict of string lists)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        z_cols = [i for i, name in enumerate(header) if name.startswith("z")
                  and name[1:].isdigit()]
        factor_cols = [i for i in range(len(header)) if i not in z_cols]
        z_rows, factors = [], {header[i]: [] for i in factor_cols}
        for row in reader:
            z_rows.append([float(row[i]) for i in z_cols])
            for i in factor_cols:
                factors[header[i]].append(row[i])
    return np.asarray(z_rows, dtype=np.float64), factors
