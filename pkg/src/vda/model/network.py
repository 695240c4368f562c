"""DecVAE recognition network: shared conv encoder, hidden projector,
per-subspace latent heads, and subspace aggregation."""

from __future__ import annotations

import numpy as np

from ..autodiff import (
    Tensor,
    clip,
    conv1d,
    gelu,
    layernorm,
    linear,
    moveaxis,
    reshape,
    tmean,
    view_linear,
)
from .config import EncoderConfig

LOGVAR_CLAMP = 20.0


def _he(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


def init_branch_params(enc: EncoderConfig, rng: np.random.Generator,
                       prefix: str = "", head_dim: int | None = None) -> dict[str, Tensor]:
    """He-initialized weights for one recognition branch (biases zero)."""
    head_dim = enc.z_dim if head_dim is None else head_dim
    params: dict[str, Tensor] = {}

    def p(name, arr):
        params[prefix + name] = Tensor(arr, requires_grad=True)

    c_in = enc.mel_bins
    for i, (ch, k, _stride) in enumerate(enc.conv_layers):
        p(f"conv{i}_w", _he(rng, c_in * k, (ch, c_in, k)))
        p(f"conv{i}_b", np.zeros(ch))
        p(f"ln{i}_g", np.ones(ch))
        p(f"ln{i}_b", np.zeros(ch))
        c_in = ch
    p("fh_w", _he(rng, enc.v, (enc.v, enc.d)))
    p("fh_b", np.zeros(enc.d))
    # per-view latent heads, stacked on a leading view axis
    p("head_mu_w", _he(rng, enc.d, (enc.n_views, enc.d, head_dim)))
    p("head_mu_b", np.zeros((enc.n_views, head_dim)))
    p("head_lv_w", _he(rng, enc.d, (enc.n_views, enc.d, head_dim)))
    p("head_lv_b", np.zeros((enc.n_views, head_dim)))
    if enc.aggregation == "learned_projection":
        in_dim = head_dim * max(enc.C, 1)
        p("agg_w1", _he(rng, in_dim, (in_dim, in_dim)))
        p("agg_b1", np.zeros(in_dim))
        p("agg_w2", _he(rng, in_dim, (in_dim, enc.projection_dim)))
        p("agg_b2", np.zeros(enc.projection_dim))
    return params


def conv_out_frames(enc: EncoderConfig, f_in: int) -> int:
    f = f_in
    for _ch, k, stride in enc.conv_layers:
        pad = (k - 1) // 2
        f = (f + 2 * pad - k) // stride + 1
    return f


def _backbone(params: dict[str, Tensor], enc: EncoderConfig, views: Tensor,
              prefix: str) -> Tensor:
    """Conv stack + hidden projector shared by all views: -> H [B, K, F', d]."""
    b, k_views, f_in, m = views.shape
    if k_views != enc.n_views or m != enc.mel_bins:
        raise ValueError(
            f"views shaped {views.shape} do not match encoder "
            f"(expected K={enc.n_views}, M={enc.mel_bins})"
        )
    x = reshape(views, (b * k_views, f_in, m))
    x = moveaxis(x, 1, 2)  # [N, M, F]: mel bins are conv channels
    for i, (_ch, k, stride) in enumerate(enc.conv_layers):
        pad = (k - 1) // 2
        x = conv1d(x, params[f"{prefix}conv{i}_w"], params[f"{prefix}conv{i}_b"],
                   stride=stride, padding=pad)
        x = layernorm(x, params[f"{prefix}ln{i}_g"], params[f"{prefix}ln{i}_b"],
                      axis=1)
        x = gelu(x)
    x = moveaxis(x, 1, 2)  # [N, F', v]
    h = gelu(linear(x, params[f"{prefix}fh_w"], params[f"{prefix}fh_b"]))
    return reshape(h, (b, k_views, h.shape[1], enc.d))


def _latent_heads(params, h, prefix):
    """Per-view (mu, logvar) heads on [B, K, ..., d] hidden embeddings."""
    mu = view_linear(h, params[f"{prefix}head_mu_w"], params[f"{prefix}head_mu_b"])
    lv = clip(
        view_linear(h, params[f"{prefix}head_lv_w"], params[f"{prefix}head_lv_b"]),
        -LOGVAR_CLAMP, LOGVAR_CLAMP,
    )
    return mu, lv


def encode_views(params: dict[str, Tensor], enc: EncoderConfig, views: Tensor,
                 prefix: str = ""):
    """Frame branch forward: views [B, K, F, M] -> (H, mu, logvar).

    H is [B, K, F', d]; mu and logvar are [B, K, F', z_dim]. A single encoder
    and projector handle every view; only the latent heads are per-view.
    """
    h4 = _backbone(params, enc, views, prefix)
    mu, lv = _latent_heads(params, h4, prefix)
    return h4, mu, lv


def pool_hidden(h4: Tensor) -> Tensor:
    """Mean-pool frame embeddings into one per-view sequence embedding."""
    return tmean(h4, axis=2)


def encode_sequences(params: dict[str, Tensor], enc: EncoderConfig, views: Tensor,
                     prefix: str = "s_"):
    """Sequence branch: pool H over frames, then apply the S latent heads.

    Returns (H_pooled [B, K, d], mu [B, K, s_dim], logvar [B, K, s_dim]).
    """
    hp = pool_hidden(_backbone(params, enc, views, prefix))  # [B, K, d]
    mu, lv = _latent_heads(params, hp, prefix)
    return hp, mu, lv


def reparameterize(mu: Tensor, logvar: Tensor, rng: np.random.Generator) -> Tensor:
    """z = mu + exp(logvar/2) * eps with gradients through mu and logvar."""
    from ..autodiff import add, exp, mul

    eps = Tensor(rng.standard_normal(mu.shape))
    lv = clip(logvar, -LOGVAR_CLAMP, LOGVAR_CLAMP)
    return add(mu, mul(exp(mul(lv, Tensor(0.5))), eps))


def aggregate_subspaces(subspaces: np.ndarray, enc: EncoderConfig,
                        params: dict[str, Tensor] | None = None,
                        prefix: str = "") -> np.ndarray:
    """Combine per-subspace codes [..., K, z] into the final code Z.

    concat_all keeps the original's subspace first; learned_projection applies
    a two-layer fully-connected map (GELU between) to the concatenated
    component subspaces.
    """
    from scipy.special import erf

    k_views = subspaces.shape[-2]
    if enc.aggregation == "concat_all":
        return subspaces.reshape(subspaces.shape[:-2] + (-1,))
    if enc.aggregation == "concat_components":
        comp = subspaces[..., 1:, :] if k_views > 1 else subspaces
        return comp.reshape(comp.shape[:-2] + (-1,))
    if enc.aggregation == "single_subspace":
        if not (0 <= enc.subspace_index < k_views):
            raise ValueError(
                f"subspace index {enc.subspace_index} out of range for {k_views} views"
            )
        return subspaces[..., enc.subspace_index, :]
    if params is None:
        raise ValueError("learned_projection needs the branch parameters")
    comp = subspaces[..., 1:, :] if k_views > 1 else subspaces
    x = comp.reshape(comp.shape[:-2] + (-1,))
    w1, b1 = params[prefix + "agg_w1"].data, params[prefix + "agg_b1"].data
    w2, b2 = params[prefix + "agg_w2"].data, params[prefix + "agg_b2"].data
    hidden = x @ w1 + b1
    hidden = hidden * 0.5 * (1.0 + erf(hidden / np.sqrt(2.0)))
    return hidden @ w2 + b2
