from .config import AGGREGATIONS, EncoderConfig, TrainingConfig
from .network import (
    aggregate_subspaces,
    conv_out_frames,
    encode_sequences,
    encode_views,
    init_branch_params,
    pool_hidden,
    reparameterize,
)
from .losses import (
    LossBreakdown,
    MaskSpec,
    delbo_loss,
    loss_ortho,
    loss_prior,
    loss_recon,
    pairwise_jsd,
    sample_mask,
    sequence_delbo_loss,
)
from .data import (
    FRAME_MS,
    batch_size_for,
    build_views,
    decompose_and_mask,
    frame_mel_vector,
    prepare_sequences,
)
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .train import TrainResult, TrainingAborted, train_decvae
from .embed import EmbeddingResult, embed_dataset, read_embedding_csv, write_embedding_csv

__all__ = [
    "AGGREGATIONS", "EncoderConfig", "TrainingConfig",
    "aggregate_subspaces", "conv_out_frames", "encode_sequences",
    "encode_views", "init_branch_params", "pool_hidden", "reparameterize",
    "LossBreakdown", "MaskSpec", "delbo_loss", "loss_ortho", "loss_prior",
    "loss_recon", "pairwise_jsd", "sample_mask", "sequence_delbo_loss",
    "FRAME_MS", "batch_size_for", "build_views", "decompose_and_mask",
    "frame_mel_vector", "prepare_sequences",
    "Checkpoint", "load_checkpoint", "save_checkpoint",
    "TrainResult", "TrainingAborted", "train_decvae",
    "EmbeddingResult", "embed_dataset", "read_embedding_csv", "write_embedding_csv",
]
