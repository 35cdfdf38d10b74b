"""Gaze-guided human motion forecasting.

Forecasts future body poses from observed poses plus eye-gaze (or
head-direction) time series: a 1D-CNN gaze predictor, a gaze-pose graph
fusion step, and a DCT-domain residual graph convolutional network,
together with training, evaluation, and synthetic-data tooling.
"""

from .backend import backend_name
from .tensor import Tape, Tensor

__version__ = "0.1.0"

__all__ = ["Tape", "Tensor", "backend_name", "__version__"]
