"""Exact Monte Carlo for lambda-biased walks in a refreshing bond-percolation environment."""

from ._dynperc import *  # noqa: F401,F403
from ._dynperc import __version__  # noqa: F401
