from .builder import ExperimentConfig, build_experiment
from .core import ApiError, ExperimentService
from .store import Store

__all__ = ["ApiError", "ExperimentConfig", "ExperimentService", "Store", "build_experiment"]
