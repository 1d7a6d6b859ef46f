"""Elevator passenger-flow anomaly capture at desk scale.

Seeded trip simulation -> snapshot-pair flow reconstruction -> windowed
feature vectors -> two-round isolation-forest detection -> human review loop
with persistent exclusions.
"""

from . import features, iforest, matching, pipeline, simulate, storage
from .errors import ConfigurationError, DataError, HarnessError

__all__ = [
    "features", "iforest", "matching", "pipeline", "simulate", "storage",
    "ConfigurationError", "DataError", "HarnessError",
]

__version__ = "0.1.0"
