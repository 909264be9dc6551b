"""Bell-scenario analysis for {[3 3 3][3 3 3]}: local polytope, seesaw, moment relaxations."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
