from .adam import AdamState, adam_step
from .checkpoint import load_checkpoint, save_checkpoint
from .lstm import LstmLayerParams, LstmStack, backward, forward, init_params, mse_grad, mse_loss
from .train import EpochLog, TrainConfig, TrainResult, predict, train, write_log

__all__ = [
    "AdamState", "adam_step", "load_checkpoint", "save_checkpoint", "LstmLayerParams",
    "LstmStack", "backward", "forward", "init_params", "mse_grad", "mse_loss", "EpochLog",
    "TrainConfig", "TrainResult", "predict", "train", "write_log",
]
