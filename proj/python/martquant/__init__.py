"""Primal and dual quantization of probability measures, optimal and martingale transport."""

from ._martquant import *  # noqa: F401,F403
from ._martquant import fixtures  # noqa: F401

__version__ = "0.1.0"
