"""Invariant densities, transfer operators, and linear-response diagnostics
for one-dimensional chaotic maps."""

__version__ = "0.1.0"

from .maps import (  # noqa: F401
    AffineTent,
    CircleMap,
    Family,
    LogisticMap,
    PerturbedCircleMap,
    TentMap,
    VectorField,
    critical_orbit,
    eval_deriv,
    eval_map,
    inverse_branches,
    orbit_stats,
)
