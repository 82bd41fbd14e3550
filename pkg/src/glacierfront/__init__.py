"""Calving-front delineation at desk scale.

A numpy-backed library covering the full pipeline: a minimal autodiff
tensor engine, a hybrid windowed-attention / residual-convolution
segmentation network, two multimodal self-supervised pretraining
objectives, supervised zone fine-tuning, the zone-to-front
post-processing chain, pooled mean-distance-error evaluation with
significance tests, and a tiled ensemble inference stack with
uncertainty maps. A synthetic glacier-scene generator makes every
stage runnable end to end without external data.
"""

__version__ = "0.1.0"
