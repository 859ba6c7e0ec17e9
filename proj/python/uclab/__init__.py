"""Numerical checks of quantitative strong unique continuation."""

from ._uclab import *  # noqa: F401,F403
from ._uclab import UclabError, run_cli

__version__ = "0.1.0"
__all__ = [name for name in dir() if not name.startswith("_")]
