import math

import pytest
from hypothesis import given, strategies as st

from amv.bounds import (
    A,
    B,
    Bl,
    C,
    Delta_I,
    Delta_IIA,
    G,
    Gamma,
    L_C,
    L_G,
    M,
    add,
    bezout_bound,
    bound_report,
    const,
    digit_cap,
    grz_class,
    iterate,
    iterate_Bl,
    mul,
    power,
    reevaluate,
    var,
)
from amv.errors import InputError

GAMMA = (0, 2, 2, 3, 1, 1, 1)


def values(vec):
    return tuple(e.value for e in vec)


# single-step functions

def test_order_bound_convention():
    assert M(1, 1).value == 2 * 1 * math.comb(2, 1) == 4
    assert M(1, 2).value == 2 * 2 * math.comb(3, 1) == 12


@given(st.integers(1, 4), st.integers(1, 4))
def test_order_bound_monotone(n, d):
    assert M(n, d).value <= M(n + 1, d).value
    assert M(n, d).value <= M(n, d + 1).value


def test_degree_bound_exact():
    assert G(2, 3, 1).value == 6 ** 16 == 2821109907456


def test_single_blowup_map():
    assert values(Bl(GAMMA)) == (1, 4, 2, 6 ** 16, 3, 2, 1)


def test_empty_iteration_is_identity():
    assert values(iterate_Bl(GAMMA, 0)["truth"]) == GAMMA


def test_negative_iteration_rejected():
    with pytest.raises(InputError):
        iterate_Bl(GAMMA, -1)


def test_generator_law_values():
    assert L_G(2, 3).value == 9
    assert L_C(1, 1, 2).value == 3
    assert A(2, 3, 1, mubar=2).value == math.factorial(2) * 3 * 3 == 18
    assert B(2, 3, 1, mubar=2).value == 2 * 3 * 3
    assert C(1, 1, 1).value == math.comb(M(1, 1).value + 1, 1)


def test_passages_keep_and_drop_entries():
    g = (5, 3, 2, 2, 4, 2, 1)
    di, dii = Delta_I(g), Delta_IIA(g)
    assert di.m.value == 1
    assert dii.q.value == 2
    assert di.r.value == dii.r.value == 5


def test_bezout_examples():
    assert bezout_bound(2, 3).value == 9
    assert bezout_bound(4, 1).value == 1


def test_conics_meet_in_at_most_four_points():
    # resultant oracle: two generic conics intersect in <= 4 points
    import sympy
    x, y = sympy.symbols("x y")
    f = x ** 2 + 3 * x * y - y ** 2 + 2 * x - 1
    g = 2 * x ** 2 - x * y + y ** 2 - 3 * y + 2
    res = sympy.Poly(sympy.resultant(f, g, y), x)
    assert res.degree() <= bezout_bound(2, 2).value == 4


# recursion and complexity classes

def test_base_case_entries():
    g = Gamma(0, (7, 3, 0, 2, 1, 1, 1))
    assert g.r.value == 7 + 1
    assert g.n.value == 2 * 3


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_complexity_class_of_recursion(m):
    assert grz_class(Gamma(m, (0, 3, m, 2, 1, 1, 1))) == m + 3


def test_primitive_recursion_adds_one_class():
    # body acts on the seven data-vector variables; entry 0 counts steps
    names = ("r", "n", "m", "d", "l", "q", "mu")
    body = (add(var("r"), 1),) + tuple(var(v) for v in names[1:])
    e = iterate(body, const(4), tuple(const(0) for _ in names), 0)
    assert e.value == 4
    assert e.grz == 2
    assert mul(2, 3).grz == 2
    assert power(2, 3).grz == 3


def test_reevaluation_matches_stored_value():
    e = G(2, 3, 1)
    assert reevaluate(e) == e.value


def test_digit_cap_leaves_large_values_symbolic():
    with digit_cap(10):
        e = G(3, 5, 2)
        assert e.value is None
        assert e.digits() > 10
    assert G(3, 5, 2).value == 20 ** 32


# closed form of the iterated blow-up map

@pytest.mark.parametrize("t", range(1, 7))
def test_closed_form_flags(t):
    res = iterate_Bl((0, 2, 2, 3, 1, 1, 1), t)
    flags = res["flags"]
    for name in ("r", "n", "m", "mu"):
        assert flags[name] == "match"
    assert flags["q"] == "mismatch"
    assert flags["l"] == ("match" if t == 1 else "mismatch")
    truth = res["truth"]
    assert truth.l.value == 1 + (2 ** t - 1) * 2
    assert truth.q.value == 2 ** (t * (t - 1) // 2) * 2 ** t


def test_report_records_discrepancies():
    rep = bound_report((0, 2, 1, 3, 1, 1, 1)).to_json()
    assert rep["schema"] == "amv1"
    assert rep["grz_class"]["Gamma"] == 4
    assert any("closed form disagrees" in n for n in rep["notes"])
