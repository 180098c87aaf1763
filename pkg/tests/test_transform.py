from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from amv.chart import AffineMarkedIdeal, Chart, compute_data_vector, is_defined_over, single_chart_ideal, validate
from amv.errors import InadmissibleCentre, InputError
from amv.poly import SparsePoly, parse_poly
from amv.transform import (
    CentreSpec,
    ChartCentre,
    G_bound,
    blowup_affine_marked_ideal,
    blowup_chart,
    controlled_transform,
    coordinate_blowup_substitution,
    update_divisors,
)

from conftest import SYMS, from_sympy, to_sympy

x1, x2 = SYMS[0], SYMS[1]


def P(text, n=2):
    return parse_poly(text, n)


def origin_centre():
    return CentreSpec({"a0b0": ChartCentre([P("x1"), P("x2")])})


# controlled transforms in coordinate charts

def test_cusp_controlled_transform_mu_two():
    # oracle: sympy substitution y -> x*y and cancellation of x^2
    expected = from_sympy(sympy.cancel(((x1 * x2) ** 2 - x1 ** 3) / x1 ** 2), 2)
    sub = coordinate_blowup_substitution(2, [0, 1], 0)
    assert controlled_transform([P("x2^2-x1^3")], 2, 0, sub) == [expected]
    assert expected == P("x2^2-x1")


def test_cusp_controlled_transform_mu_one():
    expected = from_sympy(sympy.cancel(((x1 * x2) ** 2 - x1 ** 3) / x1), 2)
    sub = coordinate_blowup_substitution(2, [0, 1], 0)
    assert controlled_transform([P("x2^2-x1^3")], 1, 0, sub) == [expected]
    assert expected == P("x1*(x2^2-x1)")


def test_order_deficit_is_inadmissible():
    sub = coordinate_blowup_substitution(2, [0, 1], 0)
    with pytest.raises(InadmissibleCentre):
        controlled_transform([P("x1")], 2, 0, sub)


def test_chart_index_must_be_in_centre():
    with pytest.raises(InputError):
        coordinate_blowup_substitution(3, [0, 1], 2)


@given(st.integers(1, 3), st.data())
def test_controlled_transform_is_exact(mu, data):
    # generators built inside (x1, x2)^mu, so every chart divides exactly
    n = 3
    terms = data.draw(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2),
                                         st.integers(-4, 4).filter(bool)), min_size=1, max_size=4))
    g = SparsePoly.zero(n)
    for a, b, c, k in terms:
        if a + b >= mu:
            g = g + SparsePoly.monomial((a, b, c), k)
    if not g:
        return
    for i0 in (0, 1):
        sub = coordinate_blowup_substitution(n, [0, 1], i0)
        (q,) = controlled_transform([g], mu, i0, sub)
        pullback = to_sympy(g).subs({SYMS[j]: to_sympy(s) for j, s in enumerate(sub)}, simultaneous=True)
        assert sympy.expand(to_sympy(q) * SYMS[i0] ** mu - pullback) == 0


# chart form

def test_cusp_origin_blowup_chart_equations():
    T = single_chart_ideal([P("x2^2-x1^3")], 2, 1)
    ch = blowup_chart(T.charts[0], ChartCentre([P("x1"), P("x2")]), 1, 1, new_tag=0)
    assert ch.nvars == 4
    assert ch.num_X_eqns == 2
    assert ch.params_u[:2] == [P("x2-x1*x4", 4), P("x1-x3", 4)]
    assert ch.E_list == [(2, 0)]


def test_chart_index_on_X_equation_is_empty():
    c = Chart(0, 0, 3, SparsePoly.one(3), [P("x3", 3), P("x1", 3), P("x2", 3)], 1, [], [P("x1^2", 3)])
    ch = blowup_chart(c, ChartCentre([P("x3", 3), P("x1", 3)]), 1, 1, new_tag=0)
    assert ch.empty


def test_centre_equal_to_X_leaves_no_strict_transform():
    T = single_chart_ideal([], 2, 1)
    T2 = blowup_affine_marked_ideal(T, CentreSpec({"a0b0": ChartCentre([])}))
    assert [c for c in T2.charts if not c.empty] == []


def test_divisor_bookkeeping():
    params = [P("x1", 3), P("x2", 3)]
    # axis divisor outside the centre is unchanged
    assert update_divisors([(2, 0)], params, 1, 3, 1) == [(2, 0), (3, 1)]
    # a divisor among the centre parameters moves to its avatar x_{j+n}
    assert update_divisors([(1, 0)], params, 1, 3, 1) == [(4, 0), (3, 1)]
    # in its own chart it has no strict transform
    assert update_divisors([(0, 0)], params, 1, 3, 1) == [(3, 1)]


# whole marked ideals

def test_cusp_origin_blowup_within_single_step_bound():
    T = single_chart_ideal([P("x2^2-x1^3")], 2, 1)
    T2 = blowup_affine_marked_ideal(T, origin_centre())
    assert len(T2.charts) == 2
    r, n, m, d, l, q, mu = compute_data_vector(T).as_tuple()
    dv = compute_data_vector(T2).as_tuple()
    bound = (r + 1, 2 * n, m, G_bound(n, d, mu), l + n, n * q, mu)
    assert all(a <= b for a, b in zip(dv, bound))
    assert dv[1] == 2 * n and dv[0] == r + 1


def test_blowup_output_is_defined_over_input():
    T = single_chart_ideal([P("x2^2-x1^3")], 2, 1)
    T2 = blowup_affine_marked_ideal(T, origin_centre())
    maps = {cid: old for cid, (old, _) in T2.history[-1].children.items()}
    assert is_defined_over(T2, T, maps)
    assert validate(T2).ok


def test_empty_centre_is_identity():
    T = single_chart_ideal([P("x2^2-x1^3")], 2, 1)
    assert blowup_affine_marked_ideal(T, CentreSpec({})) is T


def test_centre_outside_cosupport_rejected():
    T = single_chart_ideal([P("x2^2-x1^3")], 2, 2)
    with pytest.raises(InadmissibleCentre):
        blowup_affine_marked_ideal(T, CentreSpec({"a0b0": ChartCentre([P("x1")])}))


def test_single_step_degree_bound_value():
    assert G_bound(2, 3, 1) == 6 ** 16
