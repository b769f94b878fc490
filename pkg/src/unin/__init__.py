"""Heterogeneous trajectory prediction with category-aware graph attention,
neighborhood-fusion convolution, and a Gaussian-mixture output head."""

from .errors import (
    CheckpointError,
    ConfigError,
    ContractError,
    DatasetError,
    MaskError,
    NumericError,
    ParseError,
    ShapeError,
    UninError,
)
from .numerics import ParamSet, Tensor
from .predictor import GMMParams, ModelConfig, TrajectoryPredictor, train
from .trajdata import GeneratorConfig, Scenario, build_stc_graph, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "ConfigError",
    "ContractError",
    "DatasetError",
    "GMMParams",
    "GeneratorConfig",
    "MaskError",
    "ModelConfig",
    "NumericError",
    "ParamSet",
    "ParseError",
    "Scenario",
    "ShapeError",
    "Tensor",
    "TrajectoryPredictor",
    "UninError",
    "build_stc_graph",
    "generate_synthetic",
    "train",
    "__version__",
]
