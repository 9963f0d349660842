"""Numerical geometrothermodynamics built on Taylor jets and Levi-Civita curvature."""

from .errors import CatalogError, DegenerateMetricError, DomainError, GtdError, ParseError
from .expr import SystemDefinition, get_system, parse
from .gtd import GtdKind, equilibrium_metric, equilibrium_metric_field, phase_metric
from .manifold import MetricField, flatness_report, riemann
from .phase import LegendreSpec, PhasePoint

__all__ = [
    "CatalogError",
    "DegenerateMetricError",
    "DomainError",
    "GtdError",
    "GtdKind",
    "LegendreSpec",
    "MetricField",
    "ParseError",
    "PhasePoint",
    "SystemDefinition",
    "equilibrium_metric",
    "equilibrium_metric_field",
    "flatness_report",
    "get_system",
    "parse",
    "phase_metric",
    "riemann",
]

__version__ = "0.1.0"
