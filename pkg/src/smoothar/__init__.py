"""Two-stage randomized-smoothing autoregressive density estimation.

Fit a masked autoregressive model to a noise-smoothed copy of the data, then
invert the smoothing with either a learned conditional model or a single
gradient step.
"""

__version__ = "0.1.0"

from .datasets import Dataset, DatasetSpec  # noqa: F401
from .errors import (  # noqa: F401
    ContractError, DomainError, ParseError, ShapeError, TrainingDiverged,
)
from .made import MadeConfig, MadeModel, made_init  # noqa: F401
from .mol import MoLParams  # noqa: F401
from .smoothing import SmoothingKernel  # noqa: F401
from .training import TrainConfig, TwoStageModel  # noqa: F401
