"""
Diagnostics built on the geometry engine.

* the explicit kind-III phase-space map ``F = Phi``,
  ``X^a = (E^a)^(2k+2) / (2k+2)``, ``Y^a = (I^a)^(2k+2) / (2k+2)`` and its
  deformed contact-form weights;
* flatness of the control manifold ``sum_a (E^a I^a)^(2k+1) dE^a dI^a``;
* a symmetry witness for ``dY_a/dX^b`` on the equilibrium image and line
  integration of the resulting Hessian potential;
* Pontryagin-type curvature obstructions to a Hessian structure;
* Taylor remainders of the fundamental equation (fluctuation check);
* curvature scans for singularities.

For ``k = -1`` the power map degenerates; the logarithmic branch
``X = ln E``, ``Y = ln I`` has the same differentials and is used instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from . import jets
from .errors import DomainError, GtdError
from .expr import SystemDefinition
from .gtd import EquilibriumEmbedding, GtdKind, equilibrium_metric, equilibrium_metric_field, hessian_metric
from .manifold import MetricField, curvature_from_derivatives, flatness_report, riemann
from .phase import CoordinateMap, PhasePoint, contact_form, transform_form, transform_metric

DEFORMATION_VARIANTS = ("paper", "corrected")


def _power_coordinate(x, k):
    if k == -1:
        return jets.ln(x)
    p = 2 * k + 2
    return jets.pow_int(x, p) / p


def _inverse_power_coordinate(X, k):
    if k == -1:
        return np.exp(X)
    p = 2 * k + 2
    return (p * np.asarray(X, dtype=float)) ** (1.0 / p)


def _require_positive(values, what):
    if np.any(np.asarray(values, dtype=float) <= 0.0):
        raise DomainError(f"{what} must be positive (principal real branch)")


def gtd3_coordinates(k: int, E, I):
    """``(X, Y)`` for given extensive and intensive values."""
    _require_positive(E, "E")
    _require_positive(I, "I")
    X = np.array([_power_coordinate(float(e), k) for e in E])
    Y = np.array([_power_coordinate(float(i), k) for i in I])
    return X, Y


@dataclass(frozen=True)
class Gtd3Map:
    k: int
    n: int
    variant: str = "corrected"

    def __post_init__(self):
        if self.variant not in DEFORMATION_VARIANTS:
            raise ValueError(f"variant must be one of {DEFORMATION_VARIANTS}")

    def coordinate_map(self) -> CoordinateMap:
        n, k = self.n, self.k

        def fn(z):
            E, I = z[1 : n + 1], z[n + 1 :]
            return [z[0], *(_power_coordinate(e, k) for e in E), *(_power_coordinate(i, k) for i in I)]

        return CoordinateMap(n, fn, name=f"gtd3(k={k})")

    def weights(self, X, Y) -> np.ndarray:
        """Deformation factors ``f_a``; the "corrected" variant carries an extra ``2k+2``."""
        k = self.k
        if k == -1:
            raise GtdError("deformation weights are undefined for k = -1")
        p = 2 * k + 2
        XY = np.asarray(X, dtype=float) * np.asarray(Y, dtype=float)
        f = p ** (-(2 * k + 1) / (k + 1)) * XY ** (-(2 * k + 1) / p)
        return f * p if self.variant == "corrected" else f


def _phase_array(point):
    return point.as_array() if isinstance(point, PhasePoint) else np.asarray(point, dtype=float)


@dataclass
class ResidualReport:
    max_residual: float
    per_point: np.ndarray = field(repr=False)

    def as_dict(self):
        return {"max_residual": self.max_residual, "points": int(self.per_point.shape[0])}


def deformed_contacto_residual(k: int, variant: str, points) -> ResidualReport:
    """Gap between ``Theta`` and the pullback of ``f_0 dF - f_a Y_a dX^a``.

    ``per_point[p]`` holds the signed componentwise difference
    (pullback minus ``Theta``) over ``(dPhi, dE^a, dI_a)``.
    """
    rows = []
    for point in points:
        z = _phase_array(point)
        n = (z.size - 1) // 2
        _require_positive(z[1:], "E and I")
        m = Gtd3Map(k, n, variant)
        cmap = m.coordinate_map()
        image = cmap(z)
        X, Y = image[1 : n + 1], image[n + 1 :]
        fa = m.weights(X, Y)
        target = np.concatenate(([1.0], -fa * Y, np.zeros(n)))  # f_0 = 1
        rows.append(transform_form(cmap, target, z) - contact_form(z))
    per_point = np.array(rows)
    return ResidualReport(float(np.abs(per_point).max()), per_point)


def condition33_residual(k: int, points) -> float:
    """Pullback of ``delta_ab dX^a dY^b`` against ``(E^a I^a)^(2k+1) dE^a dI^a``."""
    worst = 0.0
    for point in points:
        z = _phase_array(point)
        n = (z.size - 1) // 2
        _require_positive(z[1:], "E and I")
        cmap = Gtd3Map(k, n).coordinate_map()
        dim = 2 * n + 1
        flat = np.zeros((dim, dim))
        for a in range(n):
            flat[1 + a, 1 + n + a] = flat[1 + n + a, 1 + a] = 0.5
        pulled = transform_metric(cmap, flat, z)
        expected = np.zeros((dim, dim))
        E, I = z[1 : n + 1], z[n + 1 :]
        for a in range(n):
            w = (E[a] * I[a]) ** (2 * k + 1)
            expected[1 + a, 1 + n + a] = expected[1 + n + a, 1 + a] = 0.5 * w
        worst = max(worst, float(np.abs(pulled - expected).max()))
    return worst


def control_metric_field(k: int, n: int) -> MetricField:
    """``sum_a (E^a I^a)^(2k+1) dE^a dI^a`` on coordinates ``(E^1..E^n, I^1..I^n)``."""
    exponent = 2 * k + 1

    def components(s):
        out = [[0.0] * (2 * n) for _ in range(2 * n)]
        for a in range(n):
            prod = s[a] * s[n + a]
            if jets.value_of(prod) == 0.0 and exponent < 0:
                raise DomainError("E^a I^a = 0 on the control manifold")
            w = 0.5 * jets.pow_int(prod, exponent)
            out[a][n + a] = out[n + a][a] = w
        return out

    return MetricField(2 * n, components, seed_order=2, name=f"control(k={k}, n={n})")


def control_flatness(k: int, n: int, grid, tol: float = 1e-8):
    return flatness_report(control_metric_field(k, n), grid, tol)


# -- Hessian witness -----------------------------------------------------------


def witness_matrix(k: int, system: SystemDefinition, E) -> np.ndarray:
    """``M_ab = dY_a/dX^b = (I^a)^(2k+1) Phi_ab (E^b)^-(2k+1)`` on the equilibrium image."""
    E = np.asarray(E, dtype=float)
    _require_positive(E, "E")
    I = np.asarray(EquilibriumEmbedding(system).image(E).I)
    _require_positive(I, "I(E)")
    H = hessian_metric(system, E)
    p = 2 * k + 1
    return (I**p)[:, None] * H * (E ** (-p))[None, :]


def hessian_witness(k: int, system: SystemDefinition, E) -> float:
    """Asymmetry of ``dY/dX``; zero certifies a scalar potential in X coordinates."""
    M = witness_matrix(k, system, E)
    return float(np.abs(M - M.T).max())


def gtd3_metric_in_x(k: int, system: SystemDefinition, E) -> np.ndarray:
    """Kind-III equilibrium metric rewritten in the ``X`` coordinates."""
    E = np.asarray(E, dtype=float)
    _require_positive(E, "E")
    g = equilibrium_metric(GtdKind("III", k), system, E)
    dXdE = E ** (2 * k + 1)
    return g / np.outer(dXdE, dXdE)


def _y_of_x(k, system, X):
    E = _inverse_power_coordinate(X, k)
    I = np.asarray(EquilibriumEmbedding(system).image(E).I)
    _require_positive(I, "I(E)")
    return np.array([_power_coordinate(float(i), k) for i in I])


def recover_hessian_potential(k: int, system: SystemDefinition, X0, X1, axis_order=None, intervals: int = 400) -> float:
    """``F(X1) - F(X0)`` by integrating ``Y . dX`` along axis-parallel segments.

    Composite Simpson per segment; ``axis_order`` picks which coordinate moves
    first (default 0, 1, ...).
    """
    X0 = np.asarray(X0, dtype=float)
    X1 = np.asarray(X1, dtype=float)
    n = X0.size
    order = range(n) if axis_order is None else axis_order
    current = X0.copy()
    total = 0.0
    for a in order:
        if X1[a] == current[a]:
            continue
        ts = np.linspace(current[a], X1[a], intervals + 1)
        vals = []
        for t in ts:
            x = current.copy()
            x[a] = t
            vals.append(_y_of_x(k, system, x)[a])
        total += simpson(vals, x=ts)
        current[a] = X1[a]
    return float(total)


# -- Pontryagin obstructions ---------------------------------------------------


def _antisymmetrize(T):
    out = np.zeros_like(T)
    for perm in permutations(range(4)):
        inversions = sum(1 for i in range(4) for j in range(i + 1, 4) if perm[i] > perm[j])
        out += (-1) ** inversions * np.transpose(T, perm)
    return out / 24.0


@dataclass
class ObstructionReport:
    p1_max: float
    p2_max: float
    curvature_scale: float
    p1_relative: float
    p2_relative: float
    dim: int

    def as_dict(self):
        return {
            "p1_max": self.p1_max,
            "p2_max": self.p2_max,
            "curvature_scale": self.curvature_scale,
            "p1_relative": self.p1_relative,
            "p2_relative": self.p2_relative,
            "dim": self.dim,
        }


def _relative(value, scale, power):
    if scale == 0.0:
        return 0.0 if value == 0.0 else math.inf
    return value / scale**power


def pontryagin_obstructions(metric: MetricField, point) -> ObstructionReport:
    """Antisymmetrised quadratic and cubic curvature contractions.

    Evaluated in an orthonormal frame so that ``p1_relative`` and
    ``p2_relative`` do not depend on coordinate scaling.
    """
    bundle = riemann(metric, point)
    g = bundle.metric
    lam, V = np.linalg.eigh(g)
    frame = V / np.sqrt(np.abs(lam))[None, :]
    s = np.sign(lam)
    R = np.einsum("abcd,ai,bj,ck,dl->ijkl", bundle.riemann, frame, frame, frame, frame)
    # R_{ija}^b, then the two Pontryagin-type densities
    mixed = R * s[None, None, None, :]
    p1 = _antisymmetrize(np.einsum("ijab,klba->ijkl", mixed, mixed))
    B = R * s[None, :, None, None]  # R_k^b_cd
    C = R * s[None, :, None, None] * s[None, None, :, None] * s[None, None, None, :]  # R_l^{dac}
    D = R * s[None, None, :, None]  # R_kc^a_d
    t1 = np.einsum("iajb,kbcd,ldac->ijkl", R, B, C)
    t2 = np.einsum("iajb,kcad,ldbc->ijkl", R, D, C)
    p2 = _antisymmetrize(t1 - 2.0 * t2)
    scale = float(np.abs(R).max())
    p1_max = float(np.abs(p1).max())
    p2_max = float(np.abs(p2).max())
    return ObstructionReport(
        p1_max=p1_max,
        p2_max=p2_max,
        curvature_scale=scale,
        p1_relative=_relative(p1_max, scale, 2),
        p2_relative=_relative(p2_max, scale, 3),
        dim=metric.dim,
    )


# -- fluctuations ------------------------------------------------------------


@dataclass
class FluctuationReport:
    residual: float
    slope: float
    steps: np.ndarray = field(repr=False)
    remainders: np.ndarray = field(repr=False)

    def as_dict(self):
        return {
            "residual": self.residual,
            "slope": self.slope,
            "steps": self.steps.tolist(),
            "remainders": self.remainders.tolist(),
        }


def taylor_remainder(system: SystemDefinition, E, dE) -> float:
    """``Phi(E+dE) - Phi(E) - I.dE - 1/2 dE.H.dE``."""
    E = np.asarray(E, dtype=float)
    dE = np.asarray(dE, dtype=float)
    system.check_domain(E)
    system.check_domain(E + dE)
    jet = system.potential_value(jets.seed(E, 2))
    base = jets.value_of(jet)
    grad = jet.gradient() if isinstance(jet, jets.Jet) else np.zeros(E.size)
    hess = jet.hessian() if isinstance(jet, jets.Jet) else np.zeros((E.size, E.size))
    shifted = jets.value_of(system.potential_value(list(E + dE)))
    return math.fsum([shifted, -base, -float(grad @ dE), -0.5 * float(dE @ hess @ dE)])


def fluctuation_residual(system: SystemDefinition, E, dE, h_min=1e-4, h_max=1e-2, samples=9) -> FluctuationReport:
    """Remainder at ``dE`` plus the log-log slope of the remainder along ``dE``."""
    dE = np.asarray(dE, dtype=float)
    norm = float(np.linalg.norm(dE))
    if norm == 0.0:
        raise ValueError("dE must be nonzero")
    r = taylor_remainder(system, E, dE)
    hs = np.logspace(np.log10(h_min), np.log10(h_max), samples)
    rs = np.array([taylor_remainder(system, E, h * dE / norm) for h in hs])
    if np.all(rs == 0.0):
        slope = math.inf
    else:
        keep = rs != 0.0
        slope = float(np.polyfit(np.log(hs[keep]), np.log(np.abs(rs[keep])), 1)[0])
    return FluctuationReport(r, slope, hs, rs)


# -- singularity scans -----------------------------------------------------------


@dataclass
class ScanPoint:
    index: tuple
    coords: tuple
    scalar: Optional[float] = None
    kretschmann: Optional[float] = None
    det: Optional[float] = None
    flags: list = field(default_factory=list)
    error: Optional[str] = None

    def as_dict(self):
        return {
            "index": list(self.index),
            "coords": list(self.coords),
            "R": self.scalar,
            "K": self.kretschmann,
            "det": self.det,
            "flags": list(self.flags),
            "error": self.error,
        }


def singularity_scan(metric: MetricField, axes: Sequence, threshold: float = 1e4) -> list:
    """Scalar invariants on the tensor-product grid spanned by ``axes``.

    A point is flagged ``"curvature"`` when ``|R| > threshold`` and
    ``"det_sign_change"`` when ``det g`` changes sign towards a grid
    neighbour. Points that fail to evaluate keep their error and the scan
    continues.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    shape = tuple(a.size for a in axes)
    results = {}
    for index in np.ndindex(*shape):
        coords = tuple(float(axes[d][i]) for d, i in enumerate(index))
        sp = ScanPoint(index=index, coords=coords)
        try:
            g, dg, ddg = metric.evaluate(coords)
            sp.det = float(np.linalg.det(g))
            bundle = curvature_from_derivatives(g, dg, ddg)
            sp.scalar = bundle.scalar
            sp.kretschmann = bundle.kretschmann
            if abs(bundle.scalar) > threshold:
                sp.flags.append("curvature")
        except (GtdError, ArithmeticError, ValueError) as exc:
            sp.error = str(exc)
        results[index] = sp
    for index, sp in results.items():
        if sp.det is None:
            continue
        for d in range(len(shape)):
            for step in (-1, 1):
                nb = list(index)
                nb[d] += step
                other = results.get(tuple(nb))
                if other is not None and other.det is not None and sp.det * other.det < 0:
                    if "det_sign_change" not in sp.flags:
                        sp.flags.append("det_sign_change")
    return [results[i] for i in np.ndindex(*shape)]


def gtd_singularity_scan(kind: GtdKind, system: SystemDefinition, axes, threshold: float = 1e4) -> list:
    return singularity_scan(equilibrium_metric_field(kind, system), axes, threshold)


def hessian_det_contour(system: SystemDefinition, first_range, second_values, samples: int = 2001) -> np.ndarray:
    """Points where ``det(Hessian Phi) = 0`` for a two-variable system.

    For each value of the second variable the first variable is sampled on
    ``first_range``; every sign change is refined with Brent's method.
    """
    if system.n != 2:
        raise GtdError("det contour search needs a two-variable system")

    def det(x, y):
        return float(np.linalg.det(system.potential_value(jets.seed([x, y], 2)).hessian()))

    lo, hi = first_range
    xs = np.linspace(lo, hi, samples)
    found = []
    for y in second_values:
        vals = []
        for x in xs:
            try:
                vals.append(det(x, y) if system.in_domain([x, y]) else np.nan)
            except ArithmeticError:
                vals.append(np.nan)
        vals = np.array(vals)
        for i in range(samples - 1):
            a, b = vals[i], vals[i + 1]
            if np.isfinite(a) and np.isfinite(b) and a * b < 0:
                found.append((brentq(lambda x: det(x, y), xs[i], xs[i + 1], xtol=1e-14), y))
    return np.array(found).reshape(-1, 2)


def distance_to_contour(points, contour) -> np.ndarray:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if contour.size == 0:
        return np.full(points.shape[0], np.inf)
    diff = points[:, None, :] - contour[None, :, :]
    return np.sqrt((diff**2).sum(-1)).min(axis=1)
