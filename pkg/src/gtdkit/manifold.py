"""
Levi-Civita curvature of (pseudo-)Riemannian metrics.

Conventions::

    Gamma^a_{bc} = 1/2 g^{ad} (d_b g_{dc} + d_c g_{bd} - d_d g_{bc})
    R^a_{bcd}    = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
                   + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}
    Ric_{bd}     = R^a_{bad},    R = g^{bd} Ric_{bd}

With these signs the unit 2-sphere has R = +2.

Array layout: ``dg[c, a, b] = d_c g_ab`` and ``ddg[c, d, a, b] = d_c d_d g_ab``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import jets
from .errors import DegenerateMetricError

MAX_CONDITION = 1e12


class MetricField:
    """A metric given by component functions that accept jets.

    Parameters
    ----------
    dim : int
        Manifold dimension.
    components : callable
        ``components(seeds) -> (dim, dim)`` nested sequence of jets or floats,
        where ``seeds`` are jets of the coordinates of order ``seed_order``.
        Each returned jet must still carry order >= 2.
    seed_order : int, optional
        Order of the seed jets handed to ``components``. Metrics built from
        second derivatives of a potential need 4.
    """

    def __init__(self, dim: int, components: Callable, seed_order: int = 2, name: str = ""):
        self.dim = dim
        self.components = components
        self.seed_order = seed_order
        self.name = name

    def evaluate(self, point):
        """Return ``(g, dg, ddg)`` at ``point``."""
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dim,):
            raise ValueError(f"expected a point of dimension {self.dim}")
        seeds = jets.seed(point, self.seed_order)
        comps = self.components(seeds)
        n = self.dim
        g = np.empty((n, n))
        dg = np.empty((n, n, n))
        ddg = np.empty((n, n, n, n))
        for a in range(n):
            for b in range(n):
                c = comps[a][b]
                if isinstance(c, jets.Jet):
                    if c.order < 2:
                        raise ValueError("metric component jets must have order >= 2")
                    g[a, b] = c.value
                    dg[:, a, b] = c.gradient()
                    ddg[:, :, a, b] = c.hessian()
                else:
                    g[a, b] = float(c)
                    dg[:, a, b] = 0.0
                    ddg[:, :, a, b] = 0.0
        return g, dg, ddg

    def matrix(self, point):
        return self.evaluate(point)[0]

    def linear_pullback(self, A) -> "MetricField":
        """Same metric in coordinates ``y`` with ``x = A @ y``."""
        return _LinearPullback(self, np.asarray(A, dtype=float))


class _LinearPullback(MetricField):
    def __init__(self, base, A):
        super().__init__(base.dim, None, base.seed_order, name=f"{base.name}*A")
        self.base = base
        self.A = A

    def evaluate(self, point):
        A = self.A
        g, dg, ddg = self.base.evaluate(A @ np.asarray(point, dtype=float))
        g2 = A.T @ g @ A
        dg2 = np.einsum("ec,eij,ia,jb->cab", A, dg, A, A)
        ddg2 = np.einsum("ec,fd,efij,ia,jb->cdab", A, A, ddg, A, A)
        return g2, dg2, ddg2


def inverse(g):
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise DegenerateMetricError(f"metric condition number {cond:.3g} exceeds {MAX_CONDITION:.0e}")
    return np.linalg.inv(g)


@dataclass
class CurvatureBundle:
    metric: np.ndarray
    inverse: np.ndarray
    christoffel: np.ndarray  # [a, b, c] = Gamma^a_{bc}
    riemann_up: np.ndarray  # [a, b, c, d] = R^a_{bcd}
    riemann: np.ndarray  # [a, b, c, d] = R_{abcd}
    ricci: np.ndarray
    scalar: float
    kretschmann: float
    ricci_squared: float

    def riemann_all_up(self):
        gi = self.inverse
        return np.einsum("ai,bj,ck,dl,ijkl->abcd", gi, gi, gi, gi, self.riemann)

    def symmetry_defect(self) -> float:
        """Largest violation of the algebraic Riemann symmetries and first Bianchi identity."""
        r = self.riemann
        bianchi = r + np.transpose(r, (0, 2, 3, 1)) + np.transpose(r, (0, 3, 1, 2))
        return float(
            max(
                np.abs(r + np.transpose(r, (1, 0, 2, 3))).max(),
                np.abs(r + np.transpose(r, (0, 1, 3, 2))).max(),
                np.abs(r - np.transpose(r, (2, 3, 0, 1))).max(),
                np.abs(bianchi).max(),
            )
        )


def christoffel_from_derivatives(g, dg, ginv=None):
    if ginv is None:
        ginv = inverse(g)
    low = 0.5 * (np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (1, 2, 0)) - dg)
    # low[d, b, c] = 1/2 (d_b g_dc + d_c g_bd - d_d g_bc)
    return np.einsum("ad,dbc->abc", ginv, low), low


def curvature_from_derivatives(g, dg, ddg) -> CurvatureBundle:
    """Full curvature bundle from the metric and its first two derivatives."""
    g = 0.5 * (g + g.T)
    ginv = inverse(g)
    gamma, low = christoffel_from_derivatives(g, dg, ginv)
    # d_e low[d, b, c]
    dlow = 0.5 * (
        np.transpose(ddg, (0, 2, 1, 3)) + np.transpose(ddg, (0, 2, 3, 1)) - ddg
    )
    dginv = -np.einsum("af,efh,hd->ead", ginv, dg, ginv)
    dgamma = np.einsum("ad,edbc->eabc", ginv, dlow) + np.einsum("ead,dbc->eabc", dginv, low)
    rup = (
        np.einsum("cadb->abcd", dgamma)
        - np.einsum("dacb->abcd", dgamma)
        + np.einsum("ace,edb->abcd", gamma, gamma)
        - np.einsum("ade,ecb->abcd", gamma, gamma)
    )
    rlow = np.einsum("ae,ebcd->abcd", g, rup)
    ricci = np.einsum("abad->bd", rup)
    scalar = float(np.einsum("bd,bd->", ginv, ricci))
    rall = np.einsum("ai,bj,ck,dl,ijkl->abcd", ginv, ginv, ginv, ginv, rlow)
    kretschmann = float(np.einsum("abcd,abcd->", rlow, rall))
    ricci_up = ginv @ ricci @ ginv
    ricci_squared = float(np.einsum("ab,ab->", ricci, ricci_up))
    return CurvatureBundle(
        metric=g,
        inverse=ginv,
        christoffel=gamma,
        riemann_up=rup,
        riemann=rlow,
        ricci=ricci,
        scalar=scalar,
        kretschmann=kretschmann,
        ricci_squared=ricci_squared,
    )


def christoffel(metric: MetricField, point) -> np.ndarray:
    g, dg, _ = metric.evaluate(point)
    return christoffel_from_derivatives(0.5 * (g + g.T), dg)[0]


def riemann(metric: MetricField, point) -> CurvatureBundle:
    return curvature_from_derivatives(*metric.evaluate(point))


def finite_difference_derivatives(matrix_fn: Callable, point, step: float = 1e-4):
    """Metric derivatives by central differences of ``matrix_fn(point) -> g``.

    Used as an independent check of the jet route.
    """
    point = np.asarray(point, dtype=float)
    n = point.size
    g0 = np.asarray(matrix_fn(point), dtype=float)
    m = g0.shape[0]
    dg = np.empty((n, m, m))
    ddg = np.empty((n, n, m, m))
    e = np.eye(n) * step
    for c in range(n):
        gp = matrix_fn(point + e[c])
        gm = matrix_fn(point - e[c])
        dg[c] = (gp - gm) / (2 * step)
        ddg[c, c] = (gp - 2 * g0 + gm) / step**2
        for d in range(c + 1, n):
            val = (
                matrix_fn(point + e[c] + e[d])
                - matrix_fn(point + e[c] - e[d])
                - matrix_fn(point - e[c] + e[d])
                + matrix_fn(point - e[c] - e[d])
            ) / (4 * step**2)
            ddg[c, d] = ddg[d, c] = val
    return g0, dg, ddg


@dataclass
class FlatnessReport:
    flat: bool
    max_abs_scalar: float
    max_kretschmann: float
    max_invariant: float
    tol: float
    points: int
    worst_point: Optional[tuple] = None

    def as_dict(self):
        return {
            "flat": self.flat,
            "max_abs_scalar": self.max_abs_scalar,
            "max_kretschmann": self.max_kretschmann,
            "max_invariant": self.max_invariant,
            "tol": self.tol,
            "points": self.points,
            "worst_point": None if self.worst_point is None else list(self.worst_point),
        }


def invariant_size(bundle: CurvatureBundle) -> float:
    """max(|R|, sqrt|K|, sqrt|Ric^2|): zero exactly on flat metrics."""
    return max(
        abs(bundle.scalar),
        np.sqrt(abs(bundle.kretschmann)),
        np.sqrt(abs(bundle.ricci_squared)),
    )


def flatness_report(metric: MetricField, grid: Sequence, tol: float = 1e-8) -> FlatnessReport:
    max_r = max_k = max_inv = 0.0
    worst = None
    count = 0
    for point in grid:
        bundle = riemann(metric, point)
        count += 1
        max_r = max(max_r, abs(bundle.scalar))
        max_k = max(max_k, abs(bundle.kretschmann))
        size = invariant_size(bundle)
        if worst is None or size > max_inv:
            max_inv = size
            worst = tuple(float(x) for x in point)
    return FlatnessReport(
        flat=bool(max_inv <= tol),
        max_abs_scalar=float(max_r),
        max_kretschmann=float(max_k),
        max_invariant=float(max_inv),
        tol=tol,
        points=count,
        worst_point=worst,
    )


def grid_points(bounds: Sequence[tuple], counts) -> np.ndarray:
    """Cartesian grid; ``bounds`` is ``[(lo, hi), ...]``, counts per axis or one int."""
    if np.isscalar(counts):
        counts = [int(counts)] * len(bounds)
    axes = [np.linspace(lo, hi, int(c)) for (lo, hi), c in zip(bounds, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


# -- fixtures used by calibration checks -----------------------------------


def euclidean(dim: int) -> MetricField:
    eye = np.eye(dim)
    return MetricField(dim, lambda s: eye.tolist(), name=f"euclidean{dim}")


def round_sphere(radius: float = 1.0) -> MetricField:
    """``r^2 (dtheta^2 + sin^2 theta dphi^2)`` in (theta, phi)."""

    def comps(s):
        theta = s[0]
        sin = jets.sin(theta)
        return [[radius**2 + 0.0 * theta, 0.0], [0.0, radius**2 * sin * sin]]

    return MetricField(2, comps, name="sphere")
