"""TCCT forecasting toolkit python bindings."""

from ._tcct import *  # noqa: F401,F403
from ._tcct import __doc__ as _doc

__doc__ = _doc
