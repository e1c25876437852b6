"""CAR model fitting and optimal prediction under asymmetric loss."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
