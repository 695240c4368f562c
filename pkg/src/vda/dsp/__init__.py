from .signal import ComponentSet, Signal, read_wav, write_components_wav, write_wav
from .spectral import detect_spectral_peaks, real_fft, real_ifft, rfft_freqs
from .fd import (
    DEFAULT_FD_BAND_EDGES,
    MERGE_HIGH_FREQUENCY,
    MERGE_NEAREST_NEIGHBOR,
    DecompositionConfig,
    fd_decompose,
)
from .ewt import decompose, ewt_boundaries, ewt_decompose
from .mel import MelFrames, frame_sequence, hz_to_mel, mel_features, mel_filterbank, mel_to_hz
from .correlation import CorrelationResult, component_correlation_matrix

__all__ = [
    "ComponentSet", "Signal", "read_wav", "write_components_wav", "write_wav",
    "detect_spectral_peaks", "real_fft", "real_ifft", "rfft_freqs",
    "DEFAULT_FD_BAND_EDGES", "MERGE_HIGH_FREQUENCY", "MERGE_NEAREST_NEIGHBOR",
    "DecompositionConfig", "fd_decompose",
    "decompose", "ewt_boundaries", "ewt_decompose",
    "MelFrames", "frame_sequence", "hz_to_mel", "mel_features",
    "mel_filterbank", "mel_to_hz",
    "CorrelationResult", "component_correlation_matrix",
]
