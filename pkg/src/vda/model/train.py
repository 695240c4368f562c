"""DecVAE training loop: per-epoch Adam updates with the dual learning-rate
schedule, masked DELBO, and patience-based early stopping."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from ..autodiff import Tape, Tensor, adam_init, adam_step, backward, zero_grads
from ..dsp.fd import DecompositionConfig
from ..dsp.signal import read_wav
from ..simvowels import load_manifest
from .checkpoint import save_checkpoint
from .config import EncoderConfig, TrainingConfig
from .data import batch_size_for, build_views, prepare_sequences
from .losses import MaskSpec, combine_breakdowns, delbo_loss, sample_mask, sequence_delbo_loss
from .network import encode_sequences, encode_views, init_branch_params

LOG_HEADER = [
    "epoch", "loss_total", "loss_recon", "loss_ortho", "loss_prior",
    "jsd_pos_mean", "jsd_neg_mean", "lr_Z", "lr_S",
]

# seed-stream tags
_INIT_STREAM = 10
_EPOCH_STREAM = 11
_DEV_MASK_STREAM = 12

CHECKPOINT_NAME = "checkpoint.bin"
LOG_NAME = "train_log.csv"


@dataclass
class TrainResult:
    checkpoint_path: str
    log_path: str
    epochs_run: int
    stopped_early: bool
    log_rows: list[dict]


class TrainingAborted(RuntimeError):
    """Raised when the loss turns non-finite; the last good checkpoint was saved."""


def lr_z_at(epoch: int, tcfg: TrainingConfig) -> float:
    # constant schedule after a linear warmup
    return tcfg.lr_z * min(1.0, (epoch + 1) / tcfg.warmup_epochs)


def lr_s_at(epoch: int, tcfg: TrainingConfig) -> float:
    # linear warmup to the peak, then linear decay toward the epoch cap
    if epoch + 1 <= tcfg.warmup_epochs:
        return tcfg.lr_s * (epoch + 1) / tcfg.warmup_epochs
    span = max(1, tcfg.t_max - tcfg.warmup_epochs)
    return tcfg.lr_s * max(0.0, 1.0 - (epoch + 1 - tcfg.warmup_epochs) / span)


def precompute_views(signals, dec_cfg, tcfg, enc) -> np.ndarray:
    """Deterministic [N, K, F, M] cache of decomposed log-Mel views."""
    prepared = prepare_sequences(signals, tcfg)
    if not prepared:
        raise ValueError("no sequence survived length normalization")
    return np.stack([build_views(s, dec_cfg, enc) for s in prepared])


def _forward_loss(params, enc, tcfg, views_np, mask, dual: bool):
    views = Tensor(views_np)
    h, mu, lv = encode_views(params, enc, views)
    total, parts = delbo_loss(h, mu, lv, mask, enc, tcfg)
    s_parts = None
    if dual:
        hp, mu_s, lv_s = encode_sequences(params, enc, views)
        s_total, s_parts = sequence_delbo_loss(hp, mu_s, lv_s, enc, tcfg)
        total = total + s_total
    return total, combine_breakdowns(parts, s_parts)


def validation_loss(params, enc, tcfg, dev_views, dev_masks, dual: bool,
                    batch: int) -> float:
    losses, weights = [], []
    for start in range(0, dev_views.shape[0], batch):
        chunk = dev_views[start : start + batch]
        mask = MaskSpec(dev_masks[start : start + batch])
        total, _ = _forward_loss(params, enc, tcfg, chunk, mask, dual)
        losses.append(float(total.data))
        weights.append(chunk.shape[0])
    return float(np.average(losses, weights=weights))


def train_decvae(manifest_path: str, enc: EncoderConfig, tcfg: TrainingConfig,
                 dec_cfg: DecompositionConfig | None, out_dir: str,
                 log_fn=None) -> TrainResult:
    """Pre-train a DecVAE on the manifest's train split, validating on dev.

    Writes checkpoint.bin and train_log.csv under out_dir. Deterministic in
    (manifest, configs): weight init, batch order, masks and the dev mask all
    derive from tcfg.seed.
    """
    if dec_cfg is not None and dec_cfg.C != enc.C:
        raise ValueError(f"decomposition C={dec_cfg.C} but encoder C={enc.C}")
    if dec_cfg is None and enc.C != 0:
        raise ValueError("encoder expects component views but no decomposition is set")
    rows = load_manifest(manifest_path)
    train_sigs = [read_wav(p) for p, split, _, _ in rows if split == "train"]
    dev_sigs = [read_wav(p) for p, split, _, _ in rows if split == "dev"]
    if not train_sigs:
        raise ValueError("manifest has an empty train split")

    os.makedirs(out_dir, exist_ok=True)
    train_views = precompute_views(train_sigs, dec_cfg, tcfg, enc)
    dev_views = (precompute_views(dev_sigs, dec_cfg, tcfg, enc)
                 if dev_sigs else train_views[:1])

    n_frames = train_views.shape[2]
    batch = batch_size_for(tcfg)
    dual = enc.dual_branch

    init_rng = np.random.default_rng(np.random.SeedSequence([tcfg.seed, _INIT_STREAM]))
    params = init_branch_params(enc, init_rng)
    if dual:
        params.update(init_branch_params(enc, init_rng, prefix="s_",
                                         head_dim=enc.s_dim))
    z_params = [params[k] for k in params if not k.startswith("s_")]
    s_params = [params[k] for k in params if k.startswith("s_")]
    state_z = adam_init(z_params, tcfg.lr_z)
    state_s = adam_init(s_params, tcfg.lr_s) if dual else None

    dev_rng = np.random.default_rng(np.random.SeedSequence([tcfg.seed, _DEV_MASK_STREAM]))
    dev_masks = sample_mask(dev_views.shape[0], n_frames, tcfg.l_ssl_pct, dev_rng).indices

    log_rows: list[dict] = []
    best = np.inf
    patience = 0
    stopped_early = False
    last_good = None
    epochs_run = 0

    for epoch in range(tcfg.t_max):
        rng_e = np.random.default_rng(
            np.random.SeedSequence([tcfg.seed, _EPOCH_STREAM, epoch]))
        order = rng_e.permutation(train_views.shape[0])
        lr_z = lr_z_at(epoch, tcfg)
        lr_s = lr_s_at(epoch, tcfg)

        epoch_parts = []
        for start in range(0, order.size, batch):
            idx = order[start : start + batch]
            mask = sample_mask(idx.size, n_frames, tcfg.l_ssl_pct, rng_e)
            with Tape() as tape:
                total, parts = _forward_loss(params, enc, tcfg,
                                             train_views[idx], mask, dual)
            if not np.isfinite(total.data):
                if last_good is not None:
                    for k, v in last_good.items():
                        params[k].data = v
                ckpt = os.path.join(out_dir, CHECKPOINT_NAME)
                save_checkpoint(ckpt, params, enc, tcfg, dec_cfg, epoch)
                raise TrainingAborted(
                    f"non-finite loss at epoch {epoch + 1}; "
                    f"last good checkpoint saved to {ckpt}"
                )
            backward(tape, total)
            adam_step(z_params, state_z, lr=lr_z)
            if dual:
                adam_step(s_params, state_s, lr=lr_s)
            zero_grads(list(params.values()))
            epoch_parts.append(parts)

        val = validation_loss(params, enc, tcfg, dev_views, dev_masks, dual, batch)
        epochs_run = epoch + 1
        row = {
            "epoch": epochs_run,
            "loss_total": val,
            "loss_recon": float(np.mean([p.recon for p in epoch_parts])),
            "loss_ortho": float(np.mean([p.ortho for p in epoch_parts])),
            "loss_prior": float(np.mean([p.prior for p in epoch_parts])),
            "jsd_pos_mean": float(np.mean([p.jsd_pos_mean for p in epoch_parts])),
            "jsd_neg_mean": float(np.mean([p.jsd_neg_mean for p in epoch_parts])),
            "lr_Z": lr_z,
            "lr_S": lr_s if dual else 0.0,
        }
        log_rows.append(row)
        if log_fn is not None:
            log_fn(row)
        last_good = {k: v.data.copy() for k, v in params.items()}

        # improvement-only patience after the warmup period
        if epochs_run > tcfg.tau_warmup:
            if not np.isfinite(best) or (best - val) / abs(best) > tcfg.tau_delta:
                best = val
                patience = 0
            else:
                patience += 1
                if patience >= tcfg.tau_patience:
                    stopped_early = True
                    break

    ckpt_path = os.path.join(out_dir, CHECKPOINT_NAME)
    save_checkpoint(ckpt_path, params, enc, tcfg, dec_cfg, epochs_run)
    log_path = os.path.join(out_dir, LOG_NAME)
    _write_log(log_path, log_rows)
    return TrainResult(ckpt_path, log_path, epochs_run, stopped_early, log_rows)


def _write_log(path: str, rows: list[dict]):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LOG_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(row[k]) if isinstance(row[k], float) else row[k]
                             for k in LOG_HEADER})
    os.replace(tmp, path)
