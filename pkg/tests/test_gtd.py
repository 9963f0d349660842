import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gtdkit.errors import DomainError, GtdError
from gtdkit.expr import catalog_names, get_system
from gtdkit.gtd import (
    DegenerateBlockWarning,
    EquilibriumEmbedding,
    GtdKind,
    conformal_residual,
    equilibrium_metric,
    equilibrium_metric_field,
    hessian_metric,
    legendre_invariance_check,
    phase_metric,
    potential_metric_field,
    ruppeiner,
    weinhold,
)
from gtdkit.manifold import flatness_report, grid_points
from gtdkit.phase import LegendreSpec, PhasePoint, random_points

INTERIOR = {
    "ideal_gas": [1.3, 0.8],
    "ideal_gas_energy": [1.1, 1.7],
    "van_der_waals": [2.0, 3.0],
    "rn_black_hole": [2.0, 0.5],
    "multicomponent_ideal_gas": [1.2, 0.9, 1.1, 0.7],
    "multicomponent_ideal_gas_energy": [2.0, 1.3, 0.8, 1.1],
}


def test_interior_points_cover_catalog():
    assert sorted(INTERIOR) == catalog_names()


def test_phase_metric_kind_three_example():
    G = phase_metric(GtdKind("III", 0), PhasePoint(0.0, (2.0,), (3.0,)))
    assert G.tolist() == [[1.0, -3.0, 0.0], [-3.0, 9.0, 3.0], [0.0, 3.0, 0.0]]


def test_degenerate_block_is_flagged():
    with pytest.warns(DegenerateBlockWarning):
        G = phase_metric(GtdKind("I"), PhasePoint(1.0, (0.0, 2.0), (5.0, 0.0)))
    assert np.all(G[1:3, 3:] == 0.0)


@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=5, max_size=5))
def test_kind_two_flips_first_row_of_h(z):
    p = PhasePoint.from_array(np.array(z))
    if abs(z[1] * z[3] + z[2] * z[4]) < 1e-6:
        return
    d = phase_metric(GtdKind("II"), p) - phase_metric(GtdKind("I"), p)
    lam = z[1] * z[3] + z[2] * z[4]
    expected = np.zeros((5, 5))
    expected[1, 3] = expected[3, 1] = -lam
    assert np.allclose(d, expected, atol=1e-12)


def test_negative_power_guard():
    with pytest.raises(DomainError):
        phase_metric(GtdKind("III", -1), PhasePoint(0.0, (0.0,), (1.0,)))


def test_ideal_gas_equilibrium_metrics():
    ig = get_system("ideal_gas")
    assert np.allclose(equilibrium_metric(GtdKind("II"), ig, [1, 1]), np.diag([3.75, -2.5]))
    assert np.allclose(equilibrium_metric(GtdKind("I"), ig, [1, 1]), np.diag([-3.75, -2.5]))
    assert np.allclose(equilibrium_metric(GtdKind("III", 0), ig, [1, 1]), np.diag([-2.25, -1.0]))


def test_hessian_and_classical_metrics():
    ig = get_system("ideal_gas")
    assert np.allclose(hessian_metric(ig, [1, 1]), np.diag([-1.5, -1.0]))
    R = ruppeiner(ig, [1, 1])
    assert np.allclose(R, np.diag([1.5, 1.0]))
    assert np.all(np.linalg.eigvalsh(R) > 0)
    with pytest.raises(GtdError):
        weinhold(ig, [1, 1])
    with pytest.raises(GtdError):
        potential_metric_field(ig, "weinhold")


def test_conformal_relation(rng):
    states = np.column_stack([rng.uniform(0.5, 3.0, 20), rng.uniform(0.5, 3.0, 20)])
    rep = conformal_residual(get_system("ideal_gas"), get_system("ideal_gas_energy"), states)
    assert rep.states == 20
    assert rep.max_residual <= 1e-10
    assert rep.max_inversion_error <= 1e-12


def test_conformal_relation_multicomponent(rng):
    states = rng.uniform(0.6, 2.0, (5, 4))
    rep = conformal_residual(
        get_system("multicomponent_ideal_gas"), get_system("multicomponent_ideal_gas_energy"), states
    )
    assert rep.max_residual <= 1e-10


@pytest.mark.parametrize("variant", ["I", "II"])
def test_total_legendre_invariance(variant, rng):
    pts = random_points(2, 100, rng)
    assert legendre_invariance_check(GtdKind(variant), LegendreSpec.total(2), pts) <= 1e-10


@pytest.mark.parametrize("k", [-1, 0, 1])
@pytest.mark.parametrize("spec", LegendreSpec.all_specs(2), ids=lambda s: s.label())
def test_partial_legendre_invariance_kind_three(k, spec, rng):
    pts = [PhasePoint.from_array(np.concatenate(([rng.uniform(-2, 2)], rng.uniform(0.3, 2.0, 4)))) for _ in range(100)]
    assert legendre_invariance_check(GtdKind("III", k), spec, pts) <= 1e-10


def test_partial_legendre_on_kind_one_is_not_invariant(rng):
    # measured, not gated: the invariance claim for I is total-only
    res = legendre_invariance_check(GtdKind("I"), LegendreSpec(2, frozenset({1})), random_points(2, 20, rng))
    assert res > 1e-3


@pytest.mark.parametrize("name", sorted(INTERIOR))
@pytest.mark.parametrize("kind", [GtdKind("I"), GtdKind("II"), GtdKind("III", 0), GtdKind("III", 1)], ids=lambda k: k.label())
def test_equilibrium_metric_is_pullback(name, kind):
    system = get_system(name)
    E = INTERIOR[name]
    emb = EquilibriumEmbedding(system)
    pulled = emb.pullback_metric(phase_metric(kind, emb.image(E)), E)
    g = equilibrium_metric(kind, system, E)
    assert np.abs(pulled - g).max() <= 1e-12 * max(1.0, np.abs(g).max())


@pytest.mark.parametrize("name", sorted(INTERIOR))
def test_first_law_holds_on_embedding(name):
    assert np.abs(EquilibriumEmbedding(get_system(name)).first_law_residual(INTERIOR[name])).max() <= 1e-14


@pytest.mark.parametrize("variant", ["I", "II"])
def test_ideal_gas_flatness(variant):
    field = equilibrium_metric_field(GtdKind(variant), get_system("ideal_gas"))
    rep = flatness_report(field, grid_points([(0.5, 2.0), (0.5, 2.0)], 20))
    assert rep.flat and rep.max_abs_scalar <= 1e-8 and rep.max_kretschmann <= 1e-8


def test_xi_weights():
    ig = get_system("ideal_gas")
    g = equilibrium_metric(GtdKind("I", xi=(2.0, 1.0)), ig, [1, 1])
    # Lambda = 2 * 3/2 + 1 = 4
    assert np.allclose(g, 4 * np.diag([-1.5, -1.0]))
    with pytest.raises(ValueError):
        equilibrium_metric(GtdKind("I", xi=(1.0,)), ig, [1, 1])


def test_kind_validation():
    with pytest.raises(ValueError):
        GtdKind("IV")
    with pytest.raises(ValueError):
        GtdKind("III", 0.5)


def test_van_der_waals_is_curved():
    from gtdkit.manifold import riemann

    b = riemann(equilibrium_metric_field(GtdKind("II"), get_system("van_der_waals")), [2.0, 3.0])
    assert abs(b.scalar) > 1e-3
    assert b.symmetry_defect() <= 1e-9
