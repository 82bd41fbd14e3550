from .config import CLASS_NAMES, GLACIER, NOINFO, OCEAN, ROCK, ModelConfig, toy_config
from .layers import ResNetBlock, crop_inner, replicate_channels
from .network import (
    Decoder,
    Encoder,
    HybridZoneNet,
    MaskedReconstructionHead,
    ModelOutput,
    TranslationHead,
    decoder_forward,
    encoder_forward,
)

__all__ = [
    "ModelConfig",
    "toy_config",
    "CLASS_NAMES",
    "NOINFO",
    "ROCK",
    "GLACIER",
    "OCEAN",
    "HybridZoneNet",
    "Encoder",
    "Decoder",
    "ModelOutput",
    "MaskedReconstructionHead",
    "TranslationHead",
    "ResNetBlock",
    "replicate_channels",
    "crop_inner",
    "encoder_forward",
    "decoder_forward",
]
