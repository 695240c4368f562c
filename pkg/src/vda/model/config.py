"""Encoder and training configuration for the DecVAE model."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

AGGREGATIONS = (
    "single_subspace",
    "concat_components",
    "concat_all",
    "learned_projection",
)


@dataclass
class EncoderConfig:
    """Architecture of one recognition branch.

    ``C`` is the number of decomposition components (C=0 disables the
    decomposition views entirely, leaving a plain single-subspace encoder).
    The conv stack runs along the frame axis with mel bins as input channels;
    the last layer's channel count is the encoder output dim ``v``.
    """

    conv_layers: tuple = ((64, 3, 1), (64, 3, 1), (128, 3, 1))
    v: int = 128
    d: int = 128
    z_dim: int = 16
    C: int = 3
    aggregation: str = "concat_all"
    subspace_index: int = 0
    projection_dim: int = 64
    mel_bins: int = 80
    dual_branch: bool = True
    s_dim: int | None = None

    def __post_init__(self):
        self.conv_layers = tuple(tuple(int(x) for x in layer) for layer in self.conv_layers)
        if not self.conv_layers:
            raise ValueError("need at least one conv layer")
        if self.conv_layers[-1][0] != self.v:
            raise ValueError(
                f"last conv layer has {self.conv_layers[-1][0]} channels but v={self.v}"
            )
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        if self.C < 0:
            raise ValueError("C must be non-negative")
        if self.s_dim is None:
            self.s_dim = self.z_dim

    @property
    def n_views(self) -> int:
        return self.C + 1

    def aggregated_dim(self, per_subspace: int | None = None) -> int:
        z = self.z_dim if per_subspace is None else per_subspace
        if self.aggregation == "concat_all":
            return z * (self.C + 1)
        if self.aggregation == "concat_components":
            return z * max(self.C, 1)
        if self.aggregation == "single_subspace":
            return z
        return self.projection_dim

    @staticmethod
    def paper_scale(C: int = 3, z_dim: int = 48) -> "EncoderConfig":
        return EncoderConfig(
            conv_layers=tuple([(512, 3, 1)] * 7),
            v=512, d=512, z_dim=z_dim, C=C,
        )


@dataclass
class TrainingConfig:
    """DELBO weights, optimizer schedules and early-stopping thresholds."""

    beta: float = 0.1
    beta_s: float | None = None      # defaults to beta
    w_pos: float | tuple = 1.0       # scalar or per-component tuple (len C)
    w_neg: float | tuple = 1.0       # scalar or per-pair tuple, (i,j) i<j lexicographic
    l_ssl_pct: float = 0.5
    epsilon: float = 1e-4
    jsd_mode: str = "batch_dim"  # "batch_dim": per-dim over samples; "frame": per-frame over dims
    batch_seconds: float = 60.0
    lr_z: float = 8e-5
    lr_s: float = 1e-4
    warmup_epochs: int = 20
    t_max: int = 150
    tau_warmup: int = 100
    tau_delta: float = 0.002
    tau_patience: int = 5
    d_min_s: float = 0.2
    d_max_s: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.l_ssl_pct <= 1.0):
            raise ValueError("l_ssl_pct must lie in (0, 1]")
        if self.beta < 0 or (self.beta_s is not None and self.beta_s < 0):
            raise ValueError("beta weights must be non-negative")
        if self.epsilon <= 0 or self.epsilon >= 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        if self.jsd_mode not in ("batch_dim", "frame"):
            raise ValueError(f"unknown jsd_mode {self.jsd_mode!r}")
        if self.d_min_s <= 0 or self.d_max_s < self.d_min_s:
            raise ValueError("need 0 < d_min_s <= d_max_s")
        if self.beta_s is None:
            self.beta_s = self.beta
        if isinstance(self.w_pos, (list, tuple)):
            self.w_pos = tuple(float(w) for w in self.w_pos)
        if isinstance(self.w_neg, (list, tuple)):
            self.w_neg = tuple(float(w) for w in self.w_neg)

    def pos_weights(self, c: int) -> tuple:
        if isinstance(self.w_pos, tuple):
            if len(self.w_pos) != c:
                raise ValueError(f"w_pos needs {c} entries, got {len(self.w_pos)}")
            return self.w_pos
        return (float(self.w_pos),) * c

    def neg_weights(self, c: int) -> tuple:
        n_pairs = c * (c - 1) // 2
        if isinstance(self.w_neg, tuple):
            if len(self.w_neg) != n_pairs:
                raise ValueError(f"w_neg needs {n_pairs} entries, got {len(self.w_neg)}")
            return self.w_neg
        return (float(self.w_neg),) * n_pairs


def config_to_dict(cfg) -> dict:
    return asdict(cfg)


def encoder_from_dict(d: dict) -> EncoderConfig:
    d = dict(d)
    d["conv_layers"] = tuple(tuple(l) for l in d["conv_layers"])
    return EncoderConfig(**d)


def training_from_dict(d: dict) -> TrainingConfig:
    d = dict(d)
    for key in ("w_pos", "w_neg"):
        if isinstance(d.get(key), list):
            d[key] = tuple(d[key])
    return TrainingConfig(**d)
