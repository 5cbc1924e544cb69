"""Model configuration.

The default geometry: 16-frame clips of 64x64 RGB, a small depthwise-separable
frame encoder (stem conv to 8 channels, separable blocks to 16/32/64, each
stage stride 2, global average pool), a bidirectional LSTM with 32 units per
direction and a [64, 32] dense head over the two classes.
"""

from dataclasses import dataclass, field

from ..labels import CLASSES_LIST

SEQUENCE_LENGTH = 16
IMAGE_HEIGHT = 64
IMAGE_WIDTH = 64


@dataclass(frozen=True)
class EncoderSpec:
    """Per-frame encoder geometry.

    Stages are [stem, block 0, block 1, ...]; every stage halves the spatial
    resolution. freeze_boundary freezes stages [0, freeze_boundary), so 0
    (default) trains everything from scratch.

    stage_gains are fixed (non-trainable) post-activation multipliers, one
    per stage, and feature_gain scales the pooled features. Without
    normalization layers, stacked stride-2 ReLU stages and global average
    pooling attenuate activation RMS by orders of magnitude; folding the
    correction into constants instead of weights keeps the gradient-to-weight
    ratio healthy for SGD. calibrate_gains() measures them on a probe batch.
    """

    stem_channels: int = 8
    block_channels: tuple = (16, 32, 64)
    freeze_boundary: int = 0
    stage_gains: tuple = None
    feature_gain: float = 1.0

    def __post_init__(self):
        if self.stem_channels < 1:
            raise ValueError("stem_channels must be >= 1")
        if not 0 <= self.freeze_boundary <= 1 + len(self.block_channels):
            raise ValueError("freeze_boundary out of range")
        if self.stage_gains is None:
            object.__setattr__(self, "stage_gains", (1.0,) * self.n_stages)
        if len(self.stage_gains) != self.n_stages:
            raise ValueError(f"need {self.n_stages} stage_gains, got {len(self.stage_gains)}")
        if any(g <= 0 for g in self.stage_gains) or self.feature_gain <= 0:
            raise ValueError("gains must be positive")

    @property
    def n_stages(self):
        return 1 + len(self.block_channels)

    @property
    def feature_dim(self):
        return self.block_channels[-1] if self.block_channels else self.stem_channels


@dataclass(frozen=True)
class ModelConfig:
    seq_len: int = SEQUENCE_LENGTH
    image_h: int = IMAGE_HEIGHT
    image_w: int = IMAGE_WIDTH
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    lstm_units: int = 32
    dense_units: tuple = (64, 32)
    dropout_rate: float = 0.3
    num_classes: int = len(CLASSES_LIST)

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.lstm_units < 1:
            raise ValueError("lstm_units must be >= 1")
        if self.seq_len < 1:
            raise ValueError("seq_len must be >= 1")
        min_side = 2 ** self.encoder.n_stages
        if self.image_h < min_side or self.image_w < min_side:
            raise ValueError(
                f"{self.image_h}x{self.image_w} frames too small for "
                f"{self.encoder.n_stages} stride-2 stages"
            )

    @property
    def feature_dim(self):
        return self.encoder.feature_dim

    def to_dict(self):
        return {
            "seq_len": self.seq_len,
            "image_h": self.image_h,
            "image_w": self.image_w,
            "encoder": {
                "stem_channels": self.encoder.stem_channels,
                "block_channels": list(self.encoder.block_channels),
                "freeze_boundary": self.encoder.freeze_boundary,
                "stage_gains": list(self.encoder.stage_gains),
                "feature_gain": self.encoder.feature_gain,
            },
            "lstm_units": self.lstm_units,
            "dense_units": list(self.dense_units),
            "dropout_rate": self.dropout_rate,
            "num_classes": self.num_classes,
        }

    @classmethod
    def from_dict(cls, d):
        enc = d.get("encoder", {})
        return cls(
            seq_len=d["seq_len"],
            image_h=d["image_h"],
            image_w=d["image_w"],
            encoder=EncoderSpec(
                stem_channels=enc["stem_channels"],
                block_channels=tuple(enc["block_channels"]),
                freeze_boundary=enc.get("freeze_boundary", 0),
                stage_gains=tuple(enc["stage_gains"]) if "stage_gains" in enc else None,
                feature_gain=enc.get("feature_gain", 1.0),
            ),
            lstm_units=d["lstm_units"],
            dense_units=tuple(d["dense_units"]),
            dropout_rate=d["dropout_rate"],
            num_classes=d["num_classes"],
        )


def tiny_config(dropout_rate=0.0):
    """Small geometry used by gradient checks: T=2, 8x8 frames, D=4, H=3."""
    return ModelConfig(
        seq_len=2,
        image_h=8,
        image_w=8,
        encoder=EncoderSpec(stem_channels=2, block_channels=(4,)),
        lstm_units=3,
        dense_units=(5,),
        dropout_rate=dropout_rate,
    )
