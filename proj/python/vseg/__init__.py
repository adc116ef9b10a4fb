"""Template-curve image segmentation with LDDMM geodesic shooting and varifold losses."""

from ._vseg import *  # noqa: F401,F403
from ._vseg import Error

__all__ = [name for name in dir() if not name.startswith("_")]
