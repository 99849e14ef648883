"""Multi-view 3D face reconstruction toolkit (C++ core bindings)."""

from ._dfmvr import *  # noqa: F401,F403
from ._dfmvr import __doc__  # noqa: F401

__version__ = "0.1.0"
