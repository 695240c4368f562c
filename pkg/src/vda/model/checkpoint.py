"""Checkpoint container: JSON header line + little-endian float32 payload."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor
from ..dsp.fd import DecompositionConfig
from .config import (
    EncoderConfig,
    TrainingConfig,
    config_to_dict,
    encoder_from_dict,
    training_from_dict,
)

FORMAT_TAG = "vda-checkpoint-v1"


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    encoder: EncoderConfig
    training: TrainingConfig
    decomposition: DecompositionConfig | None
    seed: int
    epoch: int

    def tensors(self) -> dict[str, Tensor]:
        return {k: Tensor(v.copy(), requires_grad=True) for k, v in self.params.items()}


def save_checkpoint(path: str, params: dict[str, Tensor], enc: EncoderConfig,
                    tcfg: TrainingConfig, dec_cfg: DecompositionConfig | None,
                    epoch: int):
    """Write atomically; offsets are relative to the start of the payload."""
    entries = []
    payload = bytearray()
    for name, tensor in params.items():
        arr = tensor.data.astype("<f4")
        entries.append({"name": name, "shape": list(arr.shape), "offset": len(payload)})
        payload.extend(arr.tobytes())
    header = {
        "format": FORMAT_TAG,
        "epoch": int(epoch),
        "seed": int(tcfg.seed),
        "encoder": config_to_dict(enc),
        "training": config_to_dict(tcfg),
        "decomposition": config_to_dict(dec_cfg) if dec_cfg is not None else None,
        "params": entries,
    }
    blob = json.dumps(header, sort_keys=True).encode() + b"\n" + bytes(payload)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        blob = fh.read()
    nl = blob.index(b"\n")
    header = json.loads(blob[:nl].decode())
    if header.get("format") != FORMAT_TAG:
        raise ValueError(f"{path}: not a recognized checkpoint (format tag missing)")
    payload = blob[nl + 1 :]
    params = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=start)
        params[entry["name"]] = arr.reshape(shape).astype(np.float64)
    dec = header["decomposition"]
    return Checkpoint(
        params=params,
        encoder=encoder_from_dict(header["encoder"]),
        training=training_from_dict(header["training"]),
        decomposition=DecompositionConfig(**_dec_kwargs(dec)) if dec else None,
        seed=header["seed"],
        epoch=header["epoch"],
    )


def _dec_kwargs(d: dict) -> dict:
    d = dict(d)
    d["fd_band_edges"] = tuple(d["fd_band_edges"])
    return d
