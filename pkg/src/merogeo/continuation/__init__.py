"""Analytic continuation of complex ODEs along paths in the plane."""

from .paths import Arc, PathSpec, Segment
from .core import (
    BranchLike, Completed, ContinuationFailure, DomainExit, Logarithmic, ODESystem,
    PoleLike, Removable, SingularStop, StepStats, TraceRecord, Undetermined,
    integrate_along,
)
from .analysis import (
    ClassifyOptions, Converged, NoLimit, NoReturn, ReturnsAfter, chordal,
    classify_singularity, displacement_is_stationary, fit_pole_order,
    monodromy_probe, radial_limit,
)

__all__ = [
    "Arc", "PathSpec", "Segment", "ODESystem", "TraceRecord", "StepStats",
    "Completed", "SingularStop", "DomainExit", "ContinuationFailure",
    "Removable", "PoleLike", "BranchLike", "Logarithmic", "Undetermined",
    "integrate_along", "monodromy_probe", "ReturnsAfter", "NoReturn",
    "displacement_is_stationary", "radial_limit", "Converged", "NoLimit",
    "chordal", "fit_pole_order", "classify_singularity", "ClassifyOptions",
]
