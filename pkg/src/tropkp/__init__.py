"""Tropical limits of Riemann theta functions and the KP solutions they produce."""

from .graph_core import CurveError, TropicalCurve, cycle_basis, genus, parse_tropical_curve
from .tropical_period import period_matrix, symbolic_period_matrix
from .tropical_theta import delaunay_set, maximal_elements, tropical_theta
from .riemann_theta import PrecisionError, theta
from .component_data import ComponentData, ComponentDataError, build_component_data
from .degeneration import assemble_family, convergence_report, limit_lhs, mixture_rhs
from .tau_kp import TauSpec, kp_residual, tau_component, tau_family, tau_limit, u_from_tau
from .bundled import EXAMPLES, load_example

__version__ = "0.1.0"

__all__ = [
    "CurveError", "TropicalCurve", "cycle_basis", "genus", "parse_tropical_curve",
    "period_matrix", "symbolic_period_matrix",
    "delaunay_set", "maximal_elements", "tropical_theta",
    "PrecisionError", "theta",
    "ComponentData", "ComponentDataError", "build_component_data",
    "assemble_family", "convergence_report", "limit_lhs", "mixture_rhs",
    "TauSpec", "kp_residual", "tau_component", "tau_family", "tau_limit", "u_from_tau",
    "EXAMPLES", "load_example",
]
