import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtdkit import jets
from gtdkit.errors import CatalogError, DomainError, ParseError
from gtdkit.expr import (
    Binary,
    catalog_names,
    evaluate,
    get_system,
    load_system,
    parse,
    to_text,
    variables,
)

IDEAL_GAS = b"""
name = "ideal_gas"
potential = "S"
variables = ["U", "V"]
equation = "3/2*ln(U)+ln(V)"
"""


def test_ideal_gas_expression_vanishes_at_unit_point():
    assert evaluate(parse("3/2*ln(U)+ln(V)"), {"U": 1.0, "V": 1.0}) == 0.0


def test_incomplete_power_reports_offset():
    with pytest.raises(ParseError) as info:
        parse("U^")
    assert info.value.offset == 2


def test_product_with_exp():
    assert evaluate(parse("(V-1)*exp(S)"), {"S": 0.0, "V": 2.0}) == 1.0


def test_cube():
    assert evaluate(parse("x^3"), {"x": 2.0}) == 8.0


def test_ln_of_zero_is_domain_error():
    with pytest.raises(DomainError):
        evaluate(parse("ln(U)"), {"U": 0.0})


def test_bilinear_over_jets():
    u, v = jets.seed([2.0, 3.0], 2)
    out = evaluate(parse("U*V"), {"U": u, "V": v})
    assert out.value == 6.0
    assert out.partial((1, 1)) == 1.0


@pytest.mark.parametrize(
    "text, offset",
    [("", 0), ("1+", 2), ("foo(2)", 0), ("(1", 2), ("2 3", 2), ("$", 0)],
)
def test_syntax_errors_carry_offsets(text, offset):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.offset == offset


def test_scientific_notation_and_unbound_variable():
    assert evaluate(parse("1.5e-3*2"), {}) == pytest.approx(3e-3)
    with pytest.raises(DomainError):
        evaluate(parse("x+1"), {})


def test_division_by_zero():
    with pytest.raises(DomainError):
        evaluate(parse("1/(x-1)"), {"x": 1.0})


def test_variables_collects_names():
    assert variables(parse("a*ln(b)+c^2-a")) == {"a", "b", "c"}


def test_load_ideal_gas():
    s = load_system(IDEAL_GAS)
    assert s.n == 2
    assert s.variables == ("U", "V")
    assert s.potential == "S"


def test_duplicate_variable_rejected():
    with pytest.raises(CatalogError, match="duplicate"):
        load_system(IDEAL_GAS.replace(b'["U", "V"]', b'["U", "U"]'))


def test_missing_field_rejected():
    with pytest.raises(CatalogError, match="equation"):
        load_system(b'name = "x"\npotential = "S"\nvariables = ["U"]\n')


def test_undeclared_variable_rejected():
    with pytest.raises(CatalogError):
        load_system(IDEAL_GAS.replace(b"ln(V)", b"ln(W)"))


def test_van_der_waals_domain():
    s = get_system("van_der_waals")
    assert s.n == 2
    assert [c.text for c in s.domain] == ["V-1 > 0", "U+3/V > 0"]
    assert s.in_domain([1.0, 2.0])
    assert not s.in_domain([1.0, 0.5])
    with pytest.raises(DomainError):
        s.check_domain([1.0, 0.9])


def test_van_der_waals_caloric_equation():
    # dS/dU = 1/T with U = 3/2 T - a/V in reduced units a = 3
    import sympy as sp

    U, V = sp.symbols("U V", positive=True)
    S = sp.Rational(3, 2) * sp.log(U + 3 / V) + sp.log(V - 1)
    T = 1 / sp.diff(S, U)
    assert sp.simplify(U - (sp.Rational(3, 2) * T - 3 / V)) == 0
    P = T * sp.diff(S, V)
    assert sp.simplify(P - (T / (V - 1) - 3 / V**2)) == 0


def test_catalog_complete():
    names = catalog_names()
    for expected in ("ideal_gas", "van_der_waals", "rn_black_hole", "multicomponent_ideal_gas"):
        assert expected in names
    for name in names:
        assert get_system(name).name == name


def test_unknown_system():
    with pytest.raises(CatalogError, match="unknown system"):
        get_system("no_such_system")


def test_catalog_env_override(tmp_path, monkeypatch):
    (tmp_path / "toy.toml").write_bytes(IDEAL_GAS.replace(b'"ideal_gas"', b'"toy"'))
    monkeypatch.setenv("GTD_CATALOG_DIR", str(tmp_path))
    assert catalog_names() == ["toy"]
    assert get_system("toy").n == 2


# -- properties --------------------------------------------------------------

names = st.sampled_from(["a", "b", "c"])


def _trees():
    leaves = st.one_of(
        st.floats(min_value=0.1, max_value=9.0, allow_nan=False).map(lambda x: f"{x:.3g}"),
        names,
    )

    def extend(children):
        binary = st.tuples(children, st.sampled_from("+-*/"), children).map(lambda t: f"({t[0]}{t[1]}{t[2]})")
        power = st.tuples(children, st.integers(0, 3)).map(lambda t: f"{t[0]}^{t[1]}")
        funcs = st.tuples(st.sampled_from(["ln", "exp", "sqrt"]), children).map(lambda t: f"{t[0]}({t[1]})")
        neg = children.map(lambda c: f"-{c}")
        return st.one_of(binary, power, funcs, neg)

    return st.recursive(leaves, extend, max_leaves=8)


@given(_trees())
@settings(max_examples=200, deadline=None)
def test_pretty_print_round_trip(text):
    tree = parse(text)
    assert parse(to_text(tree)) == tree


@given(_trees(), st.tuples(*[st.floats(0.2, 3.0)] * 3))
@settings(max_examples=200, deadline=None)
def test_real_and_jet_values_agree(text, point):
    tree = parse(text)
    env = dict(zip("abc", point))
    try:
        real = evaluate(tree, env)
    except (DomainError, OverflowError):
        return
    seeds = jets.seed(point, 3)
    try:
        jet = evaluate(tree, dict(zip("abc", seeds)))
    except (DomainError, OverflowError):
        return
    if not math.isfinite(real):
        return
    assert jets.value_of(jet) == pytest.approx(real, rel=1e-15, abs=1e-300)


@given(st.tuples(*[st.floats(-5, 5, allow_nan=False)] * 3))
def test_subtraction_is_left_associative(t):
    env = dict(zip("abc", t))
    assert evaluate(parse("a-b-c"), env) == evaluate(parse("(a-b)-c"), env)


@given(st.tuples(*[st.floats(0.5, 2.0)] * 3))
def test_power_is_right_associative(t):
    env = dict(zip("abc", t))
    assert evaluate(parse("a^b^c"), env) == evaluate(parse("a^(b^c)"), env)
    assert isinstance(parse("a^b^c"), Binary) and parse("a^b^c").right == parse("b^c")


def test_unary_minus_binds_looser_than_power():
    assert evaluate(parse("-2^2"), {}) == -4.0
