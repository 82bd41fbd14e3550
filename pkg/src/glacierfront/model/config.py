"""Model configuration and its invariants."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError

HEADS = ("zones", "simmim", "translator")

CLASS_NAMES = ("no-info", "rock", "glacier", "ocean")
NOINFO, ROCK, GLACIER, OCEAN = 0, 1, 2, 3


@dataclass
class ModelConfig:
    """Hyperparameters of the hybrid encoder/decoder.

    stages: one (depth, dim, heads) triple per encoder stage; stage i
    runs at spatial size input_size / (patch_embed * 2**i), and every
    stage's feature map must be divisible by `window`.

    The full-scale defaults (512 input, window 16) are only ever
    shape-validated in tests; training and gradient checks use toy
    configs such as :func:`toy_config`.
    """

    input_size: int = 512
    inner_size: int = 256
    window: int = 16
    stages: tuple[tuple[int, int, int], ...] = (
        (2, 96, 3),
        (2, 192, 6),
        (6, 384, 12),
        (2, 768, 24),
    )
    patch_embed: int = 4
    num_classes: int = 4
    head: str = "zones"
    optical_channels: int = 14
    mlp_ratio: float = 4.0
    fuse_stages: tuple[int, ...] = (0, 1, 2)
    norm_groups: int = 8
    position_bias: bool = True
    cosine_attention: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.num_classes != 4:
            raise ConfigError(f"num_classes must be 4, got {self.num_classes}")
        if self.head not in HEADS:
            raise ConfigError(f"head must be one of {HEADS}, got '{self.head}'")
        if len(self.stages) != 4:
            raise ConfigError(f"exactly 4 encoder stages required, got {len(self.stages)}")
        if self.inner_size >= self.input_size:
            raise ConfigError(
                f"inner_size ({self.inner_size}) must be smaller than input_size ({self.input_size})"
            )
        if self.input_size % 2 or self.inner_size % 2:
            raise ConfigError("input_size and inner_size must both be even")
        for i, (depth, dim, heads) in enumerate(self.stages):
            size = self.stage_size(i)
            if self.input_size % (self.patch_embed * 2**i) != 0:
                raise ConfigError(
                    f"input_size {self.input_size} not divisible by patch_embed*2^{i}"
                )
            if size % self.window != 0:
                raise ConfigError(
                    f"stage {i} feature map {size} not divisible by window {self.window}"
                )
            if dim % heads != 0:
                raise ConfigError(f"stage {i} dim {dim} not divisible by heads {heads}")
            if depth < 1:
                raise ConfigError(f"stage {i} depth must be >= 1, got {depth}")
        for s in self.fuse_stages:
            if s not in (0, 1, 2):
                raise ConfigError(f"fuse_stages entries must be in (0,1,2), got {s}")

    def stage_size(self, i: int) -> int:
        return self.input_size // (self.patch_embed * 2**i)

    @property
    def deepest_size(self) -> int:
        return self.stage_size(3)

    @property
    def simmim_scale(self) -> int:
        """Upscale factor from the deepest feature map to full resolution."""
        return self.input_size // self.deepest_size


def toy_config(
    input_size: int = 64,
    inner_size: int = 32,
    head: str = "zones",
    window: int = 2,
    dims: tuple[int, int, int, int] = (16, 16, 32, 32),
    heads: tuple[int, int, int, int] = (2, 2, 4, 4),
    **kwargs,
) -> ModelConfig:
    """A small configuration that trains in seconds on a CPU."""
    stages = tuple((1, d, h) for d, h in zip(dims, heads))
    return ModelConfig(
        input_size=input_size,
        inner_size=inner_size,
        window=window,
        stages=stages,
        head=head,
        **kwargs,
    )
