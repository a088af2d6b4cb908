"""Federated learning simulator with sharpness-aware local training and
sharpness-weighted aggregation."""

from fedism._core import *  # noqa: F401,F403
from fedism._core import __version__  # noqa: F401
