from .checkpoint import checkpoint_id, load_checkpoint, save_checkpoint
from .config import (
    CLASSES_LIST,
    IMAGE_HEIGHT,
    IMAGE_WIDTH,
    SEQUENCE_LENGTH,
    EncoderSpec,
    ModelConfig,
    tiny_config,
)
from .ops import (
    bilstm_forward,
    calibrate_gains,
    cross_entropy,
    encoder_forward,
    head_forward,
    loss_and_grads,
    lstm_cell_step,
    model_backward,
    model_forward,
    softmax,
)
from .params import (
    HeadParams,
    LSTMCellParams,
    ModelParams,
    count_params,
    head_view,
    init_params,
    lstm_cell,
    param_shapes,
)

__all__ = [
    "CLASSES_LIST",
    "IMAGE_HEIGHT",
    "IMAGE_WIDTH",
    "SEQUENCE_LENGTH",
    "EncoderSpec",
    "ModelConfig",
    "tiny_config",
    "ModelParams",
    "LSTMCellParams",
    "HeadParams",
    "param_shapes",
    "init_params",
    "count_params",
    "lstm_cell",
    "head_view",
    "calibrate_gains",
    "encoder_forward",
    "lstm_cell_step",
    "bilstm_forward",
    "head_forward",
    "model_forward",
    "model_backward",
    "loss_and_grads",
    "softmax",
    "cross_entropy",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_id",
]
