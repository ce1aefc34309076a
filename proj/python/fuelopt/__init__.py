"""Fuel-constrained optimal execution: log-Laplace value fields, optimal
liquidation strategies, closed-form bounds, and Monte Carlo cross-checks."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc

__doc__ = _core_doc
