"""Certification and estimation of weighted Poincaré and Hardy inequality constants."""

__version__ = "0.1.0"

from . import criteria, fastdiff, hardy_construct, optimal_search, quad, weights  # noqa: E402
from .errors import *  # noqa: E402,F401,F403

__all__ = ["__version__", "criteria", "fastdiff", "hardy_construct", "optimal_search", "quad",
           "weights"]
