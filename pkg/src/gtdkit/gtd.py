"""
Legendre-invariant phase-space metrics and the metrics they induce on the
equilibrium manifold, plus the classical Hessian (Weinhold / Ruppeiner)
metrics.

All three phase-space families share the shape::

    G = Theta (x) Theta + 1/2 h_ab (dE^a (x) dI^b + dI^b (x) dE^a)

with ``h_ab = (sum_c xi_c E^c I^c) chi_ab`` for kinds I (chi = delta) and
II (chi = diag(-1, 1, ..., 1)), and ``h_ab = delta_ab (E^a I^a)^(2k+1)``
(no sum) for kind III.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import jets
from .errors import DomainError, GtdError
from .expr import SystemDefinition
from .manifold import MetricField
from .phase import CoordinateMap, LegendreSpec, PhasePoint, contact_form, transform_metric

VARIANTS = ("I", "II", "III")


class DegenerateBlockWarning(UserWarning):
    """The h-block of a phase-space metric vanishes at the requested point."""


@dataclass(frozen=True)
class GtdKind:
    variant: str
    k: int = 0
    xi: Optional[tuple] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if int(self.k) != self.k:
            raise ValueError("k must be an integer")
        object.__setattr__(self, "k", int(self.k))
        if self.xi is not None:
            object.__setattr__(self, "xi", tuple(float(x) for x in self.xi))

    def xi_vector(self, n) -> np.ndarray:
        if self.xi is None:
            return np.ones(n)
        if len(self.xi) != n:
            raise ValueError(f"xi has {len(self.xi)} entries, system has {n} variables")
        return np.array(self.xi)

    def chi_vector(self, n) -> np.ndarray:
        chi = np.ones(n)
        if self.variant == "II":
            chi[0] = -1.0
        return chi

    @property
    def exponent(self) -> int:
        return 2 * self.k + 1

    def label(self):
        return f"III(k={self.k})" if self.variant == "III" else self.variant


def _weight(e, i, exponent):
    prod = e * i
    if exponent < 0 and jets.value_of(prod) == 0.0:
        raise DomainError("E^a I^a = 0 where the kind-III weight has a negative power")
    return jets.pow_int(prod, exponent)


def h_block(kind: GtdKind, E: Sequence, I: Sequence) -> list:
    """``h_ab`` as a nested list; entries may be floats or jets."""
    n = len(E)
    if kind.variant == "III":
        w = [_weight(E[a], I[a], kind.exponent) for a in range(n)]
        return [[w[a] if a == b else 0.0 for b in range(n)] for a in range(n)]
    xi = kind.xi_vector(n)
    chi = kind.chi_vector(n)
    lam = sum(float(xi[c]) * E[c] * I[c] for c in range(n))
    return [[lam * float(chi[a]) if a == b else 0.0 for b in range(n)] for a in range(n)]


def phase_metric(kind: GtdKind, point) -> np.ndarray:
    """The ``(2n+1) x (2n+1)`` matrix of ``G`` at a phase point."""
    if not isinstance(point, PhasePoint):
        point = PhasePoint.from_array(point)
    n = point.n
    theta = contact_form(point)
    G = np.outer(theta, theta)
    h = np.array(h_block(kind, point.E, point.I), dtype=float)
    if kind.variant != "III" and not np.any(h):
        warnings.warn(f"h-block of G^{kind.label()} vanishes at {point}", DegenerateBlockWarning, stacklevel=2)
    G[1 : n + 1, n + 1 :] += 0.5 * h
    G[n + 1 :, 1 : n + 1] += 0.5 * h.T
    return G


# -- equilibrium embedding ---------------------------------------------------


class EquilibriumEmbedding:
    """``E -> (Phi(E), E, I(E))`` with ``I_a = dPhi/dE^a``."""

    def __init__(self, system: SystemDefinition):
        self.system = system

    @property
    def n(self):
        return self.system.n

    def potential_jet(self, seeds):
        phi = self.system.potential_value(seeds)
        if not isinstance(phi, jets.Jet):
            phi = jets.Jet.constant(phi, seeds[0].nvars, seeds[0].order)
        return phi

    def image(self, E) -> PhasePoint:
        self.system.check_domain(E)
        phi = self.potential_jet(jets.seed(E, 1))
        return PhasePoint(phi.value, E, phi.gradient())

    def jacobian(self, E) -> np.ndarray:
        """``d Z^A / d E^b``, shape ``(2n+1, n)``."""
        self.system.check_domain(E)
        phi = self.potential_jet(jets.seed(E, 2))
        n = self.n
        J = np.zeros((2 * n + 1, n))
        J[0] = phi.gradient()
        J[1 : n + 1] = np.eye(n)
        J[n + 1 :] = phi.hessian()
        return J

    def pullback_form(self, omega: np.ndarray, E) -> np.ndarray:
        return self.jacobian(E).T @ np.asarray(omega, dtype=float)

    def pullback_metric(self, G: np.ndarray, E) -> np.ndarray:
        J = self.jacobian(E)
        return J.T @ np.asarray(G, dtype=float) @ J

    def first_law_residual(self, E) -> np.ndarray:
        """Pullback of the contact form; zero on a correct embedding."""
        return self.pullback_form(contact_form(self.image(E)), E)


def _derivatives(system, seeds):
    phi = system.potential_value(seeds)
    if not isinstance(phi, jets.Jet):
        phi = jets.Jet.constant(phi, seeds[0].nvars, seeds[0].order)
    n = system.n
    d1 = [phi.derivative(a) for a in range(n)]
    d2 = [[d1[a].derivative(b) for b in range(n)] for a in range(n)]
    return d1, d2


def _equilibrium_components(kind: GtdKind, system: SystemDefinition):
    n = system.n

    def components(seeds):
        system.check_domain(seeds)
        d1, d2 = _derivatives(system, seeds)
        order = d2[0][0].order
        E = [s.truncate(order) for s in seeds]
        I = [d.truncate(order) for d in d1]
        h = h_block(kind, E, I)
        # g_ab = 1/2 (h_ac Phi_cb + h_bc Phi_ca); h is diagonal
        return [[0.5 * (h[a][a] + h[b][b]) * d2[a][b] for b in range(n)] for a in range(n)]

    return components


def equilibrium_metric_field(kind: GtdKind, system: SystemDefinition) -> MetricField:
    return MetricField(
        system.n,
        _equilibrium_components(kind, system),
        seed_order=4,
        name=f"g^{kind.label()}[{system.name}]",
    )


def equilibrium_metric(kind: GtdKind, system: SystemDefinition, E) -> np.ndarray:
    """Induced metric ``g = phi^*(G)`` in the extensive coordinates."""
    system.check_domain(E)
    comps = _equilibrium_components(kind, system)(jets.seed(E, 2))
    return np.array([[jets.value_of(c) for c in row] for row in comps])


def hessian_metric_field(system: SystemDefinition, sign: float = 1.0) -> MetricField:
    n = system.n

    def components(seeds):
        system.check_domain(seeds)
        _, d2 = _derivatives(system, seeds)
        return [[sign * d2[a][b] for b in range(n)] for a in range(n)]

    return MetricField(n, components, seed_order=4, name=f"hessian[{system.name}]")


def hessian_metric(system: SystemDefinition, E) -> np.ndarray:
    system.check_domain(E)
    return system.potential_value(jets.seed(E, 2)).hessian()


def _require_potential(system, name, metric):
    if system.potential != name:
        raise GtdError(f"{metric} metric needs a {name}-representation system; {system.name} uses {system.potential}")


def ruppeiner(system: SystemDefinition, E) -> np.ndarray:
    """``-d^2 S``; positive definite for a stable system."""
    _require_potential(system, "S", "Ruppeiner")
    return -hessian_metric(system, E)


def weinhold(system: SystemDefinition, E) -> np.ndarray:
    """``+d^2 U``."""
    _require_potential(system, "U", "Weinhold")
    return hessian_metric(system, E)


def potential_metric_field(system: SystemDefinition, which: str) -> MetricField:
    """MetricField for ``hessian``, ``weinhold`` or ``ruppeiner``."""
    if which == "hessian":
        return hessian_metric_field(system, 1.0)
    if which == "weinhold":
        _require_potential(system, "U", "Weinhold")
        return hessian_metric_field(system, 1.0)
    if which == "ruppeiner":
        _require_potential(system, "S", "Ruppeiner")
        return hessian_metric_field(system, -1.0)
    raise ValueError(f"unknown potential metric {which!r}")


@dataclass
class ConformalReport:
    max_residual: float
    max_inversion_error: float
    states: int


def conformal_residual(entropy_system: SystemDefinition, energy_system: SystemDefinition, states) -> ConformalReport:
    """Check ``Ruppeiner = Weinhold / T`` as line elements.

    ``entropy_system`` is ``S(U, x...)`` and ``energy_system`` is
    ``U(S, x...)``, sharing the trailing variables. The Ruppeiner metric is
    carried into ``(S, x...)`` coordinates with the Jacobian of
    ``U(S, x...)`` and compared with ``weinhold / (dU/dS)``. The energy
    file's inversion is cross-checked by root-finding ``S(U, x) = S0``.
    """
    n = entropy_system.n
    worst = worst_inv = 0.0
    count = 0
    for state in states:
        state = np.asarray(state, dtype=float)
        u0, rest = state[0], state[1:]
        s0 = jets.value_of(entropy_system.potential_value(list(state)))
        energy_point = np.concatenate(([s0], rest))
        u_jet = energy_system.potential_value(jets.seed(energy_point, 2))
        u_root = brentq(
            lambda u: jets.value_of(entropy_system.potential_value([u, *rest])) - s0,
            u0 / 16,
            u0 * 16,
            xtol=1e-15,
            rtol=4 * np.finfo(float).eps,
        )
        worst_inv = max(worst_inv, abs(u_jet.value - u_root) / abs(u_root), abs(u_jet.value - u0) / abs(u0))
        J = np.eye(n)
        J[0] = u_jet.gradient()  # d(U, x)/d(S, x)
        rup = J.T @ ruppeiner(entropy_system, state) @ J
        temperature = J[0, 0]
        wein = weinhold(energy_system, energy_point) / temperature
        worst = max(worst, float(np.abs(rup - wein).max()))
        count += 1
    return ConformalReport(worst, worst_inv, count)


# -- Legendre invariance -------------------------------------------------------


def legendre_invariance_residual(kind: GtdKind, spec: LegendreSpec, point) -> float:
    """Max componentwise gap between ``G`` and its Legendre-transported copy."""
    cmap = CoordinateMap.legendre(spec)
    transported = transform_metric(cmap, lambda zt: phase_metric(kind, zt), point)
    return float(np.abs(transported - phase_metric(kind, point)).max())


def legendre_invariance_check(kind: GtdKind, spec: LegendreSpec, points) -> float:
    """Largest residual over ``points``; see :func:`legendre_invariance_residual`."""
    return max(legendre_invariance_residual(kind, spec, p) for p in points)
