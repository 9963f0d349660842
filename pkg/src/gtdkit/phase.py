"""
Thermodynamic phase space with coordinates ``Z = (Phi, E^1..E^n, I_1..I_n)``.

Covers the contact form, partial and total Legendre transformations,
covariant transport of 1-forms and metrics along coordinate maps, and the
bracket conditions a candidate map must satisfy to carry the contact form
and the metric into a prescribed shape.

Upper and lower positions of the intensive index are numerically identical
(``I^a = delta^{ab} I_b``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence, Union

import numpy as np

from . import jets
from .errors import DegenerateMetricError, GtdError
from .expr import Expression, evaluate, parse


def coordinate_names(n: int) -> list[str]:
    return ["Phi"] + [f"E{a}" for a in range(1, n + 1)] + [f"I{a}" for a in range(1, n + 1)]


def slot(label: str, n: int) -> int:
    """Position of a coordinate label such as ``"Phi"``, ``"E2"`` or ``"I1"``."""
    names = coordinate_names(n)
    try:
        return names.index(label)
    except ValueError:
        raise KeyError(f"unknown phase-space coordinate {label!r}; expected one of {names}") from None


@dataclass(frozen=True)
class PhasePoint:
    phi: float
    E: tuple
    I: tuple

    def __post_init__(self):
        object.__setattr__(self, "E", tuple(float(x) for x in self.E))
        object.__setattr__(self, "I", tuple(float(x) for x in self.I))
        object.__setattr__(self, "phi", float(self.phi))
        if len(self.E) != len(self.I) or not self.E:
            raise ValueError("E and I must be non-empty and of equal length")

    @property
    def n(self) -> int:
        return len(self.E)

    def as_array(self) -> np.ndarray:
        return np.array((self.phi, *self.E, *self.I))

    @classmethod
    def from_array(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        if z.ndim != 1 or z.size % 2 != 1 or z.size < 3:
            raise ValueError("phase-space vector must have odd length 2n+1 >= 3")
        n = (z.size - 1) // 2
        return cls(z[0], z[1 : n + 1], z[n + 1 :])


def _as_array(point) -> np.ndarray:
    if isinstance(point, PhasePoint):
        return point.as_array()
    return np.asarray(point, dtype=float)


def random_points(n: int, count: int, rng: np.random.Generator, low=-2.0, high=2.0):
    return [PhasePoint.from_array(rng.uniform(low, high, 2 * n + 1)) for _ in range(count)]


# -- Legendre transformations ------------------------------------------------


@dataclass(frozen=True)
class LegendreSpec:
    """Subset ``i`` of ``{1..n}`` whose extensive/intensive pairs are exchanged."""

    n: int
    indices: frozenset = frozenset()

    def __post_init__(self):
        idx = frozenset(int(a) for a in self.indices)
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not idx <= set(range(1, self.n + 1)):
            raise ValueError(f"Legendre indices {sorted(idx)} not a subset of 1..{self.n}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def total(cls, n):
        return cls(n, frozenset(range(1, n + 1)))

    @classmethod
    def identity(cls, n):
        return cls(n, frozenset())

    @classmethod
    def all_specs(cls, n):
        return [cls(n, frozenset(c)) for r in range(n + 1) for c in combinations(range(1, n + 1), r)]

    @property
    def is_total(self):
        return len(self.indices) == self.n

    def label(self):
        return "{" + ",".join(str(a) for a in sorted(self.indices)) + "}"


def _legendre_components(spec: LegendreSpec, z):
    """Tilde coordinates from untilded ones; works on floats or jets."""
    n = spec.n
    phi, E, I = z[0], list(z[1 : n + 1]), list(z[n + 1 :])
    Et, It = list(E), list(I)
    phit = phi
    for a in spec.indices:
        k = a - 1
        Et[k] = I[k]
        It[k] = -E[k]
        phit = phit + Et[k] * It[k]
    return [phit, *Et, *It]


def legendre_apply(spec: LegendreSpec, point) -> PhasePoint:
    """Apply the Legendre transformation selected by ``spec`` to ``point``."""
    z = _as_array(point)
    if z.size != 2 * spec.n + 1:
        raise ValueError("point dimension does not match the Legendre spec")
    return PhasePoint.from_array(np.array(_legendre_components(spec, list(z))))


# -- coordinate maps ---------------------------------------------------------


class CoordinateMap:
    """Map ``Z -> (F, X^a, Y_a)`` on the phase space.

    ``fn`` takes the ``2n+1`` source coordinates (floats or jets) and returns
    the ``2n+1`` target coordinates; it must only use jet-compatible
    arithmetic.
    """

    def __init__(self, n: int, fn: Callable, name: str = ""):
        self.n = n
        self.fn = fn
        self.name = name

    @classmethod
    def from_expressions(cls, n, F, X: Sequence, Y: Sequence, name=""):
        """Build from DSL text (or parsed trees) over ``Phi, E1.., I1..``."""
        exprs = [F, *X, *Y]
        if len(exprs) != 2 * n + 1:
            raise ValueError("need one F, n X and n Y components")
        exprs = [parse(e) if isinstance(e, str) else e for e in exprs]
        names = coordinate_names(n)

        def fn(z):
            env = dict(zip(names, z))
            return [evaluate(e, env) for e in exprs]

        return cls(n, fn, name=name)

    @classmethod
    def identity(cls, n):
        return cls(n, lambda z: list(z), name="identity")

    @classmethod
    def legendre(cls, spec: LegendreSpec):
        return cls(spec.n, lambda z: _legendre_components(spec, z), name=f"legendre{spec.label()}")

    @classmethod
    def linear(cls, matrix, offset=None):
        matrix = np.asarray(matrix, dtype=float)
        dim = matrix.shape[0]
        offset = np.zeros(dim) if offset is None else np.asarray(offset, dtype=float)

        def fn(z):
            return [sum((float(matrix[r, c]) * z[c] for c in range(dim)), float(offset[r])) for r in range(dim)]

        return cls((dim - 1) // 2, fn, name="linear")

    def __call__(self, point) -> np.ndarray:
        z = _as_array(point)
        return np.array([jets.value_of(v) for v in self.fn(list(z))])

    def jacobian(self, point) -> np.ndarray:
        """``J[A, B] = d Zbar^A / d Z^B`` at ``point``."""
        z = _as_array(point)
        out = self.fn(jets.seed(z, 1))
        dim = 2 * self.n + 1
        jac = np.zeros((dim, dim))
        for r, v in enumerate(out):
            if isinstance(v, jets.Jet):
                jac[r] = v.gradient()
        return jac

    def _checked_jacobian(self, point):
        jac = self.jacobian(point)
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > 1e12:
            raise DegenerateMetricError(f"coordinate map Jacobian is singular (cond {cond:.3g})")
        return jac


# -- forms and metrics -------------------------------------------------------


def contact_form(point) -> np.ndarray:
    """Components of ``Theta = dPhi - I_a dE^a`` over ``(dPhi, dE^a, dI_a)``."""
    z = _as_array(point)
    n = (z.size - 1) // 2
    return np.concatenate(([1.0], -z[n + 1 :], np.zeros(n)))


def _contact_form_generic(z):
    n = (len(z) - 1) // 2
    return [1.0] + [-x for x in z[n + 1 :]] + [0.0] * n


def _target(value, image):
    return np.asarray(value(image) if callable(value) else value, dtype=float)


def transform_form(cmap: CoordinateMap, omega, point) -> np.ndarray:
    """Pull a 1-form given in target coordinates back to source components.

    ``omega`` is either the component array at the image point or a callable
    taking the image coordinates.
    """
    jac = cmap._checked_jacobian(point)
    return jac.T @ _target(omega, cmap(point))


def transform_metric(cmap: CoordinateMap, metric, point) -> np.ndarray:
    """Pull a metric given in target coordinates back to source components."""
    jac = cmap._checked_jacobian(point)
    G = _target(metric, cmap(point))
    return jac.T @ G @ jac


def _wedge(a: dict, b: dict) -> dict:
    out = {}
    for ia, ca in a.items():
        for ib, cb in b.items():
            if set(ia) & set(ib):
                continue
            merged = ia + ib
            # sign of the permutation sorting the merged index tuple
            inversions = sum(1 for x in range(len(merged)) for y in range(x + 1, len(merged)) if merged[x] > merged[y])
            key = tuple(sorted(merged))
            out[key] = out.get(key, 0.0) + (-1) ** inversions * ca * cb
    return out


def contact_volume(point, form: Callable = _contact_form_generic) -> float:
    """Coefficient of ``Theta ^ (dTheta)^n / n!`` on ``dZ^0 ^ ... ^ dZ^{2n}``.

    ``form`` maps the coordinates (floats or jets) to the 1-form components.
    Explicit wedge expansion; restricted to n <= 3.
    """
    z = _as_array(point)
    dim = z.size
    n = (dim - 1) // 2
    if n > 3:
        raise GtdError("contact_volume supports n <= 3 only")
    comps = form(jets.seed(z, 1))
    theta = {(A,): jets.value_of(c) for A, c in enumerate(comps) if jets.value_of(c) != 0.0}
    dtheta = {}
    for B, c in enumerate(comps):
        if not isinstance(c, jets.Jet):
            continue
        grad = c.gradient()
        for A in range(dim):
            if A == B or grad[A] == 0.0:
                continue
            # d(w_B dZ^B) = d_A w_B dZ^A ^ dZ^B
            key, sign = ((A, B), 1.0) if A < B else ((B, A), -1.0)
            dtheta[key] = dtheta.get(key, 0.0) + sign * grad[A]
    top = theta
    for _ in range(n):
        top = _wedge(top, dtheta)
    return top.get(tuple(range(dim)), 0.0) / math.factorial(n)


# -- bracket conditions --------------------------------------------------------


def _pair_slots(pair, n):
    A, B = pair
    A = slot(A, n) if isinstance(A, str) else int(A)
    B = slot(B, n) if isinstance(B, str) else int(B)
    return A, B


def round_bracket(cmap: CoordinateMap, pair, point, jac=None) -> float:
    """``(X^a, Y_a)_{Z^A Z^B} = sum_a dX^a/dZ^A dY_a/dZ^B``."""
    n = cmap.n
    A, B = _pair_slots(pair, n)
    jac = cmap.jacobian(point) if jac is None else jac
    X, Y = jac[1 : n + 1], jac[n + 1 :]
    return float(np.dot(X[:, A], Y[:, B]))


def curly_bracket(cmap: CoordinateMap, pair, point, jac=None) -> float:
    """``{X^a, Y_a}_{Z^A Z^B}``: antisymmetrised round bracket."""
    A, B = pair
    jac = cmap.jacobian(point) if jac is None else jac
    return round_bracket(cmap, (A, B), point, jac) - round_bracket(cmap, (B, A), point, jac)


ScalarField = Union[float, str, Expression, Callable]


def _scalar_at(f: ScalarField, point, n) -> float:
    if isinstance(f, (int, float)):
        return float(f)
    if isinstance(f, str):
        f = parse(f)
    if callable(f):
        return float(f(PhasePoint.from_array(_as_array(point))))
    env = dict(zip(coordinate_names(n), _as_array(point)))
    return float(evaluate(f, env))


def _matrix_at(h, point, n) -> np.ndarray:
    if callable(h):
        return np.asarray(h(PhasePoint.from_array(_as_array(point))), dtype=float)
    return np.broadcast_to(np.asarray(h, dtype=float), (n, n))


@dataclass
class ConditionReport:
    """Max-abs residual per condition, taken over all points."""

    residuals: dict
    points: int

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    def as_dict(self):
        return {"residuals": dict(self.residuals), "max_residual": self.max_residual, "points": self.points}


def verify_integrability(cmap: CoordinateMap, f: ScalarField, points) -> ConditionReport:
    """Residuals of ``{X,Y}_{Phi E} = 0``, ``{X,Y}_{Phi I} = 0``, ``{X,Y}_{E^b I^c} = delta_bc / f``."""
    n = cmap.n
    res = {"phi_E": 0.0, "phi_I": 0.0, "E_I": 0.0}
    count = 0
    for p in points:
        count += 1
        jac = cmap.jacobian(p)
        fv = _scalar_at(f, p, n)
        if fv == 0.0:
            raise GtdError("conformal factor f vanishes")
        for b in range(n):
            eb, ib = 1 + b, 1 + n + b
            res["phi_E"] = max(res["phi_E"], abs(curly_bracket(cmap, (0, eb), p, jac)))
            res["phi_I"] = max(res["phi_I"], abs(curly_bracket(cmap, (0, ib), p, jac)))
            for c in range(n):
                target = (1.0 if b == c else 0.0) / fv
                val = curly_bracket(cmap, (eb, 1 + n + c), p, jac)
                res["E_I"] = max(res["E_I"], abs(val - target))
    return ConditionReport(res, count)


def verify_metric_conditions(cmap: CoordinateMap, f: ScalarField, h, points) -> ConditionReport:
    """Residuals of the five round-bracket conditions on a candidate map.

    ``(X,Y)_{Phi Phi}``, ``(X,Y)_{Phi E^b}``, ``(X,Y)_{Phi I^b}`` and
    ``(X,Y)_{E^b E^c}`` must vanish; ``(X,Y)_{E^b I^c}`` must equal
    ``h_bc / 2 - delta_bc / f``. ``h`` is a constant n x n matrix or a
    callable of the phase point.
    """
    n = cmap.n
    res = {"phi_phi": 0.0, "phi_E": 0.0, "phi_I": 0.0, "E_E": 0.0, "E_I": 0.0}
    count = 0
    for p in points:
        count += 1
        jac = cmap.jacobian(p)
        fv = _scalar_at(f, p, n)
        if fv == 0.0:
            raise GtdError("conformal factor f vanishes")
        hm = _matrix_at(h, p, n)
        res["phi_phi"] = max(res["phi_phi"], abs(round_bracket(cmap, (0, 0), p, jac)))
        for b in range(n):
            eb, ib = 1 + b, 1 + n + b
            res["phi_E"] = max(res["phi_E"], abs(round_bracket(cmap, (0, eb), p, jac)))
            res["phi_I"] = max(res["phi_I"], abs(round_bracket(cmap, (0, ib), p, jac)))
            for c in range(n):
                res["E_E"] = max(res["E_E"], abs(round_bracket(cmap, (eb, 1 + c), p, jac)))
                target = 0.5 * hm[b, c] - (1.0 if b == c else 0.0) / fv
                val = round_bracket(cmap, (eb, 1 + n + c), p, jac)
                res["E_I"] = max(res["E_I"], abs(val - target))
    return ConditionReport(res, count)
