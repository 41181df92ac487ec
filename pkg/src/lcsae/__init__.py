"""lcsae: an online ensemble of niched neural autoencoders evolved by an
accuracy-based classifier system, with a global-EA baseline mode."""

from .config import ExperimentConfig, load_config, parse_config
from .kernels import BACKEND as kernel_backend
from .xcsf import Classifier, Population

__version__ = "0.1.0"

__all__ = [
    "Classifier",
    "ExperimentConfig",
    "Population",
    "kernel_backend",
    "load_config",
    "parse_config",
    "__version__",
]
