"""The assembled segmentation network.

Encoder: patch embedding followed by four windowed-attention stages,
halving resolution between stages, so stage i runs at
input/(patch_embed * 2**i). Decoder: from the deepest stage upward,
alternate residual blocks and nearest-neighbour 2x upsampling, fusing
encoder stages by channel concatenation at matching resolution, ending
in a 1x1 projection to the four zone logits. Two optional pretraining
heads: a one-layer masked-reconstruction head on the deepest features
and a one-layer 1x1 translation head on the decoder output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..tensor import Module, Tensor, concat, nearest_upsample2x, parameter, to_nchw
from .config import ModelConfig
from .layers import (
    INIT_STD,
    Conv2d,
    Linear,
    PatchEmbed,
    PatchMerge,
    ResNetBlock,
    TransformerBlock,
    crop_inner,
    replicate_channels,
)


class Encoder(Module):
    def __init__(self, rng, cfg: ModelConfig):
        self.embed = PatchEmbed(rng, 3, cfg.patch_embed, cfg.stages[0][1])
        self.stages = []
        self.merges = []
        for i, (depth, dim, heads) in enumerate(cfg.stages):
            self.stages.append(
                [
                    TransformerBlock(
                        rng, dim, cfg.window, heads, cfg.mlp_ratio,
                        cfg.position_bias, cfg.cosine_attention,
                    )
                    for _ in range(depth)
                ]
            )
            if i < 3:
                self.merges.append(PatchMerge(rng, dim, cfg.stages[i + 1][1]))

    def __call__(self, x3: Tensor) -> list[Tensor]:
        feats = []
        t = self.embed(x3)
        for i, blocks in enumerate(self.stages):
            for block in blocks:
                t = block(t)
            feats.append(t)
            if i < 3:
                t = self.merges[i](t)
        return feats


class Decoder(Module):
    def __init__(self, rng, cfg: ModelConfig):
        dims = [dim for _, dim, _ in cfg.stages]
        self.fuse_stages = cfg.fuse_stages
        cur = dims[3]
        self.blocks = []
        self.fused_dim = []
        for i in (2, 1, 0):
            c_in = cur + dims[i] if i in cfg.fuse_stages else cur
            self.blocks.append(ResNetBlock(rng, c_in, dims[i], cfg.norm_groups))
            cur = dims[i]
        self.tail = []
        for _ in range(self._tail_steps(cfg)):
            c_out = max(cur // 2, 8)
            self.tail.append(ResNetBlock(rng, cur, c_out, cfg.norm_groups))
            cur = c_out
        self.proj = Conv2d(rng, cur, cfg.num_classes, kernel=1)

    @staticmethod
    def _tail_steps(cfg: ModelConfig) -> int:
        # upsamples needed from stage-0 resolution back to full resolution
        steps = 0
        p = cfg.patch_embed
        while p > 1:
            p //= 2
            steps += 1
        return steps

    def __call__(self, feats: list[Tensor]) -> Tensor:
        x = to_nchw(feats[3])
        for block, stage in zip(self.blocks, (2, 1, 0)):
            x = nearest_upsample2x(x)
            if stage in self.fuse_stages:
                x = concat([x, to_nchw(feats[stage])], axis=1)
            x = block(x)
        for block in self.tail:
            x = nearest_upsample2x(x)
            x = block(x)
        return self.proj(x)


class MaskedReconstructionHead(Module):
    """One linear layer from the deepest tokens to scale**2 output
    pixels per token, rearranged depth-to-space to full resolution."""

    def __init__(self, rng, dim: int, scale: int, out_channels: int):
        self.scale = scale
        self.out_channels = out_channels
        self.proj = Linear(rng, dim, out_channels * scale * scale)

    def __call__(self, deepest: Tensor) -> Tensor:
        n, h, w, _ = deepest.shape
        s, c = self.scale, self.out_channels
        t = self.proj(deepest)
        return (
            t.reshape(n, h, w, c, s, s)
            .transpose(0, 3, 1, 4, 2, 5)
            .reshape(n, c, h * s, w * s)
        )


class TranslationHead(Module):
    """One 1x1 convolution from the decoder output channels to the
    optical target channels."""

    def __init__(self, rng, c_in: int, c_out: int):
        self.proj = Conv2d(rng, c_in, c_out, kernel=1)

    def __call__(self, decoder_out: Tensor) -> Tensor:
        return self.proj(decoder_out)


@dataclass
class ModelOutput:
    features: list[Tensor]
    logits: Tensor | None = None
    prediction: Tensor | None = None


class HybridZoneNet(Module):
    """Windowed-attention encoder + residual convolutional decoder.

    Input is a single-channel radar image replicated to three channels
    for the encoder. The zone output has four channels ordered
    (no-info, rock, glacier, ocean); at test time only the centered
    inner crop of the output is kept.
    """

    def __init__(self, cfg: ModelConfig, seed: int = 0):
        rng = np.random.Generator(np.random.PCG64(seed))
        self.cfg = cfg
        self.encoder = Encoder(rng, cfg)
        self.decoder = Decoder(rng, cfg)
        if cfg.head == "simmim":
            self.recon_head = MaskedReconstructionHead(
                rng, cfg.stages[3][1], cfg.simmim_scale, cfg.optical_channels
            )
        elif cfg.head == "translator":
            self.trans_head = TranslationHead(rng, cfg.num_classes, cfg.optical_channels)

    def __call__(self, x: Tensor) -> ModelOutput:
        if x.shape[-1] != self.cfg.input_size or x.shape[-2] != self.cfg.input_size:
            raise ConfigError(
                f"model expects {self.cfg.input_size}x{self.cfg.input_size} input, got {x.shape}"
            )
        feats = self.encoder(replicate_channels(x))
        if self.cfg.head == "simmim":
            return ModelOutput(features=feats, prediction=self.recon_head(feats[3]))
        logits = self.decoder(feats)
        if self.cfg.head == "translator":
            return ModelOutput(features=feats, logits=logits, prediction=self.trans_head(logits))
        return ModelOutput(features=feats, logits=logits)

    def logits(self, x: Tensor) -> Tensor:
        out = self(x)
        if out.logits is None:
            raise ConfigError("model head does not produce zone logits")
        return out.logits

    def inner_logits(self, x: Tensor) -> Tensor:
        return crop_inner(self.logits(x), self.cfg.inner_size)

    def summary(self) -> str:
        """Per-parameter shapes and totals; identical across runs for a
        fixed config."""
        lines = ["parameter                                            shape              count"]
        total = 0
        for name, p in self.parameters().items():
            total += p.size
            lines.append(f"{name:<52} {str(tuple(p.shape)):<18} {p.size:>6}")
        lines.append(f"total parameters: {total}")
        return "\n".join(lines)


def encoder_forward(model: HybridZoneNet, x: Tensor) -> list[Tensor]:
    """Stage features for a replicated single-channel input."""
    return model.encoder(replicate_channels(x))


def decoder_forward(model: HybridZoneNet, feats: list[Tensor]) -> Tensor:
    return model.decoder(feats)
