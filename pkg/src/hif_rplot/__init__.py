"""Recurrence-plot based high-impedance fault detection.

Synthetic differential-current generation, feature extraction and ranking,
Ricker-CWT recurrence matrices and a two-stage classifier cascade.
"""

from hif_rplot.errors import ConfigError, DataError

__version__ = "0.1.0"

__all__ = ["ConfigError", "DataError", "__version__"]
