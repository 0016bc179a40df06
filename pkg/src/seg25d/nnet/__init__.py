from .adam import OptState, adam_step
from .loss import dice_loss
from .serialize import load_params, save_params
from .train import TrainConfig, predict_volume, train, train_volumes
from .unet import UNetConfig, count_params, init_params, unet_backward, unet_forward

__all__ = [
    "OptState", "adam_step", "dice_loss", "load_params", "save_params", "TrainConfig",
    "predict_volume", "train", "train_volumes", "UNetConfig", "count_params", "init_params",
    "unet_backward", "unet_forward",
]
