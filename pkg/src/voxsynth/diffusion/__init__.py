from .schedule import (
    DEFAULT_BETA_END,
    DEFAULT_BETA_START,
    DEFAULT_TIMESTEPS,
    NoiseSchedule,
    build_schedule,
    forward_diffuse,
    forward_diffuse_batch,
    make_condition_input,
    simple_loss,
)
from .embedding import TimeEmbedding
from .denoiser import (
    ConvDenoiser,
    EpsilonPredictor,
    LinearEpsilonPredictor,
    OracleEpsilonPredictor,
    ZeroEpsilonPredictor,
)
from .training import Adam, TrainConfig, TrainResult, desk_defaults, full_scale_defaults, train
from .sampling import sample
from .gradcheck import finite_difference_gradcheck
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "DEFAULT_BETA_END",
    "DEFAULT_BETA_START",
    "DEFAULT_TIMESTEPS",
    "NoiseSchedule",
    "build_schedule",
    "forward_diffuse",
    "forward_diffuse_batch",
    "make_condition_input",
    "simple_loss",
    "TimeEmbedding",
    "ConvDenoiser",
    "EpsilonPredictor",
    "LinearEpsilonPredictor",
    "OracleEpsilonPredictor",
    "ZeroEpsilonPredictor",
    "Adam",
    "TrainConfig",
    "TrainResult",
    "desk_defaults",
    "full_scale_defaults",
    "train",
    "sample",
    "finite_difference_gradcheck",
    "load_checkpoint",
    "save_checkpoint",
]
