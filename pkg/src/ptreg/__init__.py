"""Partial trace regression: learning PSD-to-PSD linear maps via low-rank Kraus decompositions."""

from .cpmap import (ChoiMatrix, KrausLayer, NotCompletelyPositiveError, StinespringForm, apply,
                    apply_stinespring, choi, kraus_from_choi, kraus_rank, to_stinespring)
from .model import StackedModel, forward, reeig
from .train import Dataset, TrainConfig, TrainLog, fit

__version__ = "0.1.0"
