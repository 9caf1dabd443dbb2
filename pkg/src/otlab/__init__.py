"""Neural optimal-transport lab.

Smoothed semi-dual max-min training of a transport map / potential pair
on synthetic distributions, exact discrete-OT oracles, and the
d_cost / d_target evaluation protocol.
"""

__version__ = "0.1.0"

from .autodiff import Tensor, grad, stop_recording
from .errors import (
    ConfigError,
    ContractError,
    OtlabError,
    ReferenceUnavailable,
    ShapeError,
    SinkhornError,
    TrainingDiverged,
)
from .datasets import SyntheticDataset, make_pair, reference_conditional, reference_w2sq, sample
from .metrics import MetricReport, evaluate
from .nn import AdamState, IcnnParams, MlpParams, adam_step, icnn_potential, mlp_forward
from .oracle import w2sq_assignment, w2sq_bruteforce, w2sq_gaussian, w2sq_sinkhorn
from .smoothing import NoiseSchedule, level_at, perturb, perturb_level
from .trainer import (
    ModelPair,
    TrainerConfig,
    TrainHistory,
    map_loss,
    otm_config,
    otm_s_config,
    otp_config,
    potential_loss,
    train,
    transport,
)

__all__ = [
    "Tensor",
    "OtlabError",
    "ConfigError",
    "ContractError",
    "ShapeError",
    "ReferenceUnavailable",
    "SinkhornError",
    "TrainingDiverged",
    "grad",
    "stop_recording",
    "SyntheticDataset",
    "make_pair",
    "sample",
    "reference_w2sq",
    "reference_conditional",
    "MetricReport",
    "evaluate",
    "MlpParams",
    "IcnnParams",
    "AdamState",
    "adam_step",
    "mlp_forward",
    "icnn_potential",
    "w2sq_bruteforce",
    "w2sq_assignment",
    "w2sq_sinkhorn",
    "w2sq_gaussian",
    "NoiseSchedule",
    "level_at",
    "perturb",
    "perturb_level",
    "ModelPair",
    "TrainerConfig",
    "TrainHistory",
    "train",
    "transport",
    "potential_loss",
    "map_loss",
    "otp_config",
    "otm_config",
    "otm_s_config",
]
