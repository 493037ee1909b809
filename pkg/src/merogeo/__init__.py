"""Geodesics of meromorphic warped-product metrics by complex analytic continuation."""

__version__ = "0.1.0"

from .expr import Pole, evaluate, eval_jet, parse, render
from .metric import (
    MetricSpec, christoffel_generic, christoffel_warped, flat_spec, is_metrically_ordinary,
)
from .continuation import PathSpec, classify_singularity, integrate_along, monodromy_probe
from .geodesic import GeodesicState, first_integrals, trace_geodesic
from .quad import QuadBranch, closed_form_geodesic_u1
from .coercivity import EsempioSpec, check_esempio_coercive, incompleteness_probe

__all__ = [
    "__version__", "Pole", "parse", "render", "evaluate", "eval_jet", "MetricSpec",
    "flat_spec", "christoffel_warped", "christoffel_generic", "is_metrically_ordinary",
    "PathSpec", "integrate_along", "monodromy_probe", "classify_singularity",
    "GeodesicState", "first_integrals", "trace_geodesic", "QuadBranch",
    "closed_form_geodesic_u1", "EsempioSpec", "check_esempio_coercive", "incompleteness_probe",
]
