"""Invariant metrics on planar domains: Green's functions, conformal charts,
boundary expansions and defining-function normal forms."""

__version__ = "0.1.0"

from .geometry import BoundaryCurve, BoundaryPoint, PlanarDomain  # noqa: E402
from .jets import RealJet, normalize_planar, normalize_scv  # noqa: E402
from .metrics import caratheodory, kobayashi, suita  # noqa: E402

__all__ = [
    "BoundaryCurve",
    "BoundaryPoint",
    "PlanarDomain",
    "RealJet",
    "caratheodory",
    "kobayashi",
    "normalize_planar",
    "normalize_scv",
    "suita",
]
