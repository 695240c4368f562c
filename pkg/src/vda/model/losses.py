"""DELBO loss terms: JSD-based latent reconstruction/orthogonality and the
Gaussian prior KL, combined into single- and dual-branch objectives.

The contrastive terms drive the normalized JSD between softmax distributions
of hidden embeddings toward 0 (component vs. original) or 1 (component vs.
component) through binary cross-entropy with clamped inputs, so every term in
the minimized total decreases during training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import (
    Tensor,
    clip,
    exp,
    gather_frames,
    index_select,
    log,
    moveaxis,
    mul,
    neg,
    reshape,
    softmax,
    sub,
    tmean,
    tsum,
)
from .config import EncoderConfig, TrainingConfig

LN2 = float(np.log(2.0))


@dataclass
class MaskSpec:
    """Frame indices entering the loss, one row per batch item."""

    indices: np.ndarray  # [B, n_masked] int

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.intp)
        if self.indices.ndim != 2 or self.indices.shape[1] < 1:
            raise ValueError("mask needs shape [B, n_masked] with n_masked >= 1")


def sample_mask(batch: int, n_frames: int, l_ssl_pct: float,
                rng: np.random.Generator) -> MaskSpec:
    """Uniform without-replacement frame subset, |selected| = round(pct * F) >= 1."""
    n_sel = max(1, int(round(l_ssl_pct * n_frames)))
    idx = np.stack([
        np.sort(rng.choice(n_frames, size=n_sel, replace=False))
        for _ in range(batch)
    ])
    return MaskSpec(idx)


def _jsd_from_probs(p: Tensor, log_p: Tensor, q: Tensor, log_q: Tensor) -> Tensor:
    """Normalized JSD from precomputed softmax distributions (broadcastable)."""
    m = mul(p + q, Tensor(0.5))
    log_m = log(m)
    kl_pm = tsum(mul(p, sub(log_p, log_m)), axis=-1)
    kl_qm = tsum(mul(q, sub(log_q, log_m)), axis=-1)
    return mul(kl_pm + kl_qm, Tensor(0.5 / LN2))


def pairwise_jsd(h_a: Tensor, h_b: Tensor) -> Tensor:
    """Jensen-Shannon divergence between softmax(h_a) and softmax(h_b),
    normalized by ln 2 so the result lies in [0, 1]. Reduces the last axis."""
    p = softmax(h_a)
    q = softmax(h_b)
    return _jsd_from_probs(p, log(p), q, log(q))


def _bce_toward(s: Tensor, target: float, eps: float) -> Tensor:
    sc = clip(s, eps, 1.0 - eps)
    if target == 0.0:
        return neg(log(sub(Tensor(1.0), sc)))
    return neg(log(sc))


def _weighted_mean_over_pairs(bce: Tensor, weights) -> Tensor:
    # sum_i w_i * mean_{batch,frames}(bce_i); the pair axis is axis 1
    w = np.asarray(weights, dtype=np.float64).reshape(
        (1, len(weights)) + (1,) * (bce.ndim - 2))
    return tmean(tsum(mul(bce, Tensor(w)), axis=1))


def _as_view_distributions(h_masked: Tensor, mode: str):
    """Softmax distributions plus their logs, with views on axis 0.

    mode "frame": one distribution per (view, sample) over the d hidden units,
    shape [K, N, d] with the softmax on the last axis. mode "batch_dim": one
    distribution per (view, hidden unit) over the N masked samples in the
    batch, shape [K, N, d] with the softmax on axis 1.
    """
    k_views = h_masked.shape[1]
    d = h_masked.shape[-1]
    flat = reshape(moveaxis(h_masked, 1, 0), (k_views, -1, d))  # [K, N, d]
    axis = 1 if mode == "batch_dim" else -1
    p = softmax(flat, axis=axis)
    return p, log(p), axis


def _pair_jsd(p: Tensor, log_p: Tensor, idx_a, idx_b, axis: int) -> Tensor:
    pa, log_pa = index_select(p, idx_a, 0), index_select(log_p, idx_a, 0)
    pb, log_pb = index_select(p, idx_b, 0), index_select(log_p, idx_b, 0)
    m = mul(pa + pb, Tensor(0.5))
    log_m = log(m)
    kl_am = tsum(mul(pa, sub(log_pa, log_m)), axis=axis)
    kl_bm = tsum(mul(pb, sub(log_pb, log_m)), axis=axis)
    return mul(kl_am + kl_bm, Tensor(0.5 / LN2))  # [n_pairs, rest]


def _weighted_mean_over_pairs(bce: Tensor, weights) -> Tensor:
    # sum_i w_i * mean(bce_i); the pair axis is axis 0
    w = np.asarray(weights, dtype=np.float64).reshape(
        (len(weights),) + (1,) * (bce.ndim - 1))
    return tmean(tsum(mul(bce, Tensor(w)), axis=0))


def _recon_terms(h_masked: Tensor, w_pos, eps: float, mode: str):
    """Positive pairs (component i vs original), batched over i."""
    c = h_masked.shape[1] - 1
    p, log_p, axis = _as_view_distributions(h_masked, mode)
    s = _pair_jsd(p, log_p, list(range(1, c + 1)), [0] * c, axis)
    total = _weighted_mean_over_pairs(_bce_toward(s, 0.0, eps), w_pos)
    return total, float(s.data.mean())


def _ortho_terms(h_masked: Tensor, w_neg, eps: float, mode: str):
    """Negative pairs (component i vs component j, i<j), batched over pairs."""
    c = h_masked.shape[1] - 1
    idx_i = [i for i in range(1, c + 1) for _j in range(i + 1, c + 1)]
    idx_j = [j for i in range(1, c + 1) for j in range(i + 1, c + 1)]
    p, log_p, axis = _as_view_distributions(h_masked, mode)
    s = _pair_jsd(p, log_p, idx_i, idx_j, axis)
    total = _weighted_mean_over_pairs(_bce_toward(s, 1.0, eps), w_neg)
    return total, float(s.data.mean())


def _prior_term(mu: Tensor, logvar: Tensor) -> Tensor:
    # 0.5 * sum_z (exp(lv) + mu^2 - 1 - lv), summed over subspaces,
    # averaged over the remaining (batch, frame) axes
    kl = mul(
        sub(exp(logvar) + mul(mu, mu), logvar + Tensor(1.0)),
        Tensor(0.5),
    )
    summed = tsum(kl, axis=(1, kl.ndim - 1))  # subspace axis and z axis
    return tmean(summed)


def _apply_mask(t: Tensor, mask: MaskSpec, frame_axis: int = 2) -> Tensor:
    return gather_frames(t, mask.indices, axis=frame_axis)


def loss_recon(h: Tensor, mask: MaskSpec, w_pos, eps: float = 1e-4,
               mode: str = "frame") -> Tensor:
    """Component-to-original similarity loss on masked frames (target JSD 0)."""
    if h.shape[1] - 1 < 1:
        raise ValueError("loss_recon needs at least one component view")
    total, _ = _recon_terms(_apply_mask(h, mask), w_pos, eps, mode)
    return total


def loss_ortho(h: Tensor, mask: MaskSpec, w_neg, eps: float = 1e-4,
               mode: str = "frame") -> Tensor:
    """Component-pair separation loss on masked frames (target JSD 1)."""
    if h.shape[1] - 1 < 2:
        raise ValueError("loss_ortho needs at least two component views")
    total, _ = _ortho_terms(_apply_mask(h, mask), w_neg, eps, mode)
    return total


def loss_prior(mu: Tensor, logvar: Tensor, mask: MaskSpec) -> Tensor:
    """Closed-form KL(N(mu, diag exp(logvar)) || N(0, I)) over all subspaces,
    averaged over masked frames and batch."""
    return _prior_term(_apply_mask(mu, mask), _apply_mask(logvar, mask))


@dataclass
class LossBreakdown:
    total: float
    recon: float
    ortho: float
    prior: float
    jsd_pos_mean: float
    jsd_neg_mean: float


def delbo_loss(h: Tensor, mu: Tensor, logvar: Tensor, mask: MaskSpec,
               enc: EncoderConfig, tcfg: TrainingConfig, beta: float | None = None):
    """Minimized DELBO total = recon + ortho + beta * prior on masked frames.

    Returns (total Tensor, LossBreakdown). With C=0 (no decomposition views)
    only the prior term remains.
    """
    beta = tcfg.beta if beta is None else beta
    eps = tcfg.epsilon
    c = enc.C
    h_m = _apply_mask(h, mask)
    mu_m = _apply_mask(mu, mask)
    lv_m = _apply_mask(logvar, mask)

    zero = Tensor(0.0)
    recon_t, jsd_pos = (_recon_terms(h_m, tcfg.pos_weights(c), eps, tcfg.jsd_mode)
                        if c >= 1 else (zero, 0.0))
    ortho_t, jsd_neg = (_ortho_terms(h_m, tcfg.neg_weights(c), eps, tcfg.jsd_mode)
                        if c >= 2 else (zero, 0.0))
    prior_t = _prior_term(mu_m, lv_m)

    total = recon_t + ortho_t + mul(prior_t, Tensor(beta))
    parts = LossBreakdown(
        total=float(total.data), recon=float(recon_t.data),
        ortho=float(ortho_t.data), prior=float(prior_t.data),
        jsd_pos_mean=jsd_pos, jsd_neg_mean=jsd_neg,
    )
    return total, parts


def sequence_delbo_loss(hp: Tensor, mu_s: Tensor, logvar_s: Tensor,
                        enc: EncoderConfig, tcfg: TrainingConfig,
                        beta: float | None = None):
    """S-branch DELBO on pooled per-utterance embeddings (no frame masking:
    every utterance in the batch enters the loss)."""
    beta = tcfg.beta_s if beta is None else beta
    eps = tcfg.epsilon
    c = enc.C

    zero = Tensor(0.0)
    recon_t, jsd_pos = (_recon_terms(hp, tcfg.pos_weights(c), eps, tcfg.jsd_mode)
                        if c >= 1 else (zero, 0.0))
    ortho_t, jsd_neg = (_ortho_terms(hp, tcfg.neg_weights(c), eps, tcfg.jsd_mode)
                        if c >= 2 else (zero, 0.0))
    kl = mul(sub(exp(logvar_s) + mul(mu_s, mu_s), logvar_s + Tensor(1.0)), Tensor(0.5))
    prior_t = tmean(tsum(kl, axis=(1, 2)))

    total = recon_t + ortho_t + mul(prior_t, Tensor(beta))
    parts = LossBreakdown(
        total=float(total.data), recon=float(recon_t.data),
        ortho=float(ortho_t.data), prior=float(prior_t.data),
        jsd_pos_mean=jsd_pos, jsd_neg_mean=jsd_neg,
    )
    return total, parts


def combine_breakdowns(z: LossBreakdown, s: LossBreakdown | None) -> LossBreakdown:
    if s is None:
        return z
    pos = [v for v, present in ((z.jsd_pos_mean, z.recon != 0 or z.jsd_pos_mean > 0),
                                (s.jsd_pos_mean, s.recon != 0 or s.jsd_pos_mean > 0))
           if present]
    neg = [v for v, present in ((z.jsd_neg_mean, z.ortho != 0 or z.jsd_neg_mean > 0),
                                (s.jsd_neg_mean, s.ortho != 0 or s.jsd_neg_mean > 0))
           if present]
    return LossBreakdown(
        total=z.total + s.total,
        recon=z.recon + s.recon,
        ortho=z.ortho + s.ortho,
        prior=z.prior + s.prior,
        jsd_pos_mean=float(np.mean(pos)) if pos else 0.0,
        jsd_neg_mean=float(np.mean(neg)) if neg else 0.0,
    )
