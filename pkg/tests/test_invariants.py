import itertools
import time
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from amv.chart import Chart, plane_chart
from amv.errors import ConsistencyError, InputError
from amv.invariants import (
    BOTTOM,
    InvariantVector,
    L_C,
    L_G,
    boundary_ideal,
    capped_law_bound,
    coefficient_ideal,
    companion_ideal,
    compare_inv,
    count_E_through,
    derivative_ideal,
    local,
    log_derivation_basis,
    maximal_contact_candidates,
    monomial_J,
    monomial_J_bruteforce,
    monomial_residual_split,
    mu_along,
    mu_at,
    power_generators,
    residual_order_at,
    weighted_sum,
)
from amv.poly import INF, SparsePoly, parse_poly

from conftest import poly_strategy

ORIGIN = [Fraction(0), Fraction(0)]


def P(text, n=2):
    return parse_poly(text, n)


def primitive_set(polys):
    return {p.primitive() for p in polys if p}


# mu-values

def test_cusp_mu_values_at_origin():
    assert mu_at(local([P("x2^2-x1^3")], 2, 1), ORIGIN) == 2
    assert mu_at(local([P("x2^2-x1^3")], 2, 2), ORIGIN) == 1


def test_zero_ideal_mu_is_infinite():
    assert mu_at(local([], 2, 1), ORIGIN) == INF


def test_point_outside_chart_rejected():
    m = local([P("x1")], 2, 1)
    m.chart.f_loc = P("x1")
    with pytest.raises(InputError):
        mu_at(m, ORIGIN)


def test_mu_along_divisors():
    assert mu_along(local([P("x1^3*x2^2")], 2, 4, E_vars=[0, 1]), 0) == Fraction(3, 4)
    assert mu_along(local([P("x2^2-x1^3")], 2, 1, E_vars=[0, 1]), 1) == 0
    # minimum exponent 2 over control 2
    assert mu_along(local([P("x1^2*x2^2+x1^3*x2^5")], 2, 2, E_vars=[0]), 0) == 1


# monomial and residual parts

def test_pure_monomial_split():
    exps, res = monomial_residual_split(local([P("x1^3*x2^2")], 2, 1, E_vars=[0, 1]))
    assert exps == [3, 2] and res == [SparsePoly.one(2)]


def test_split_without_common_factor():
    exps, res = monomial_residual_split(local([P("x2^2-x1^3")], 2, 1, E_vars=[0]))
    assert exps == [0] and res == [P("x2^2-x1^3")]


def test_split_of_two_generators():
    # per-variable minimum exponents 2 and 1
    exps, res = monomial_residual_split(local([P("x1^2*x2^2"), P("x1^3*x2")], 2, 1, E_vars=[0, 1]))
    assert exps == [2, 1]
    assert res == [P("x2"), P("x1")]


def test_residual_order_two_routes():
    m = local([P("x1^3*x2^2")], 2, 4, E_vars=[0, 1])
    assert residual_order_at(m, ORIGIN) == 0
    assert residual_order_at(local([P("x2^2-x1^3")], 2, 1), ORIGIN) == 2
    assert residual_order_at(local([], 2, 1), ORIGIN) == INF


@given(st.integers(0, 3), st.integers(0, 3), poly_strategy(2, max_deg=3), st.integers(-2, 2), st.integers(-2, 2))
def test_residual_order_routes_agree(a, b, p, u, v):
    # residual_order_at raises if the two routes differ
    if not p:
        return
    g = P("x1") ** a * P("x2") ** b * p
    m = local([g], 2, 2, E_vars=[0, 1])
    val = residual_order_at(m, [Fraction(u), Fraction(v)])
    assert val >= 0


# companion ideal

def test_hidden_monomial_companion():
    m = local([P("x1^2*(x2^2-x1)")], 2, 3, E_vars=[0])
    c = companion_ideal(m)
    # (R, 1) + (x1^2, 2) as one marked ideal of control lcm(1, 2) = 2
    assert c.control == 2
    assert primitive_set(c.gens) == primitive_set([P("(x2^2-x1)^2"), P("x1^2")])


def test_companion_without_divisors_is_the_ideal():
    c = companion_ideal(local([P("x2^2-x1^3")], 2, 1))
    assert c.gens == [P("x2^2-x1^3")] and c.control == 2


def test_companion_of_pure_monomial_is_an_error():
    with pytest.raises(InputError):
        companion_ideal(local([P("x1^3")], 2, 2, E_vars=[0]))


# derivations

def test_plane_basis_is_partials():
    ops = log_derivation_basis(plane_chart([], 2))
    assert [op.coeffs for op in ops] == [[SparsePoly.one(2), SparsePoly.zero(2)],
                                         [SparsePoly.zero(2), SparsePoly.one(2)]]


def test_log_basis_along_divisor():
    ops = log_derivation_basis(plane_chart([], 2, E_vars=[0]))
    assert ops[0].coeffs == [P("x1"), SparsePoly.zero(2)]
    assert ops[1].coeffs == [SparsePoly.zero(2), SparsePoly.one(2)]


def test_basis_for_curved_parameters():
    # adjugate of [[1, 0], [2 x1, 1]] is [[1, 0], [-2 x1, 1]]
    c = Chart(0, 0, 2, SparsePoly.one(2), [P("x1"), P("x2+x1^2")], 0, [], [])
    ops = log_derivation_basis(c)
    assert ops[0].coeffs == [SparsePoly.one(2), P("-2*x1")]
    assert ops[1].coeffs == [SparsePoly.zero(2), SparsePoly.one(2)]
    u2 = P("x2+x1^2")
    assert ops[0](u2) == SparsePoly.zero(2)
    assert ops[1](u2) == SparsePoly.one(2)


def test_first_derivative_ideal_of_cusp():
    out = derivative_ideal([P("x2^2-x1^3")], log_derivation_basis(plane_chart([], 2)))
    assert out == [P("x2^2-x1^3"), P("-3*x1^2"), P("2*x2")]


def test_constants_pruned():
    out = derivative_ideal([SparsePoly.const(2, 5)], log_derivation_basis(plane_chart([], 2)), prune=True)
    assert out == [SparsePoly.const(2, 5)]


def test_order_one_element_after_mu_minus_one_steps():
    basis = log_derivation_basis(plane_chart([], 2))
    out = derivative_ideal([P("x1^3+x2^4")], basis, j=2, prune=True)
    origin = [0, 0]
    assert min(g.order_at(origin) for g in out) == 1


@given(st.lists(poly_strategy(3, max_deg=3), min_size=1, max_size=3), st.integers(1, 3))
def test_derivative_count_and_degree_laws(gens, j):
    gens = [g for g in gens if g] or [P("x1", 3)]
    basis = log_derivation_basis(plane_chart([], 3, E_vars=[0]))
    out = derivative_ideal(gens, basis, j=j)
    assert len(out) == (len(basis) + 1) ** j * len(gens)
    d1 = max(g.degree() for g in gens)
    assert max([g.degree() for g in out if g] or [0]) <= d1


# coefficient ideal

def test_coefficient_ideal_identity_case():
    m = local([P("x2^2-x1^3")], 2, 1)
    c = coefficient_ideal(m)
    assert c.control == 1 and c.gens == [P("x2^2-x1^3")]


def test_cusp_coefficient_ideal_control_two():
    c = coefficient_ideal(local([P("x2^2-x1^3")], 2, 2), reduce=False)
    assert c.control == 2
    got = primitive_set(c.gens)
    for want in ("x2^2-x1^3", "9*x1^4", "4*x2^2", "6*x1^2*x2"):
        assert P(want).primitive() in got


def test_zero_coefficient_ideal():
    c = coefficient_ideal(local([], 2, 3))
    assert c.gens == [] and c.control == 6


def test_weighted_sum_control_and_powers():
    gens, L = weighted_sum([([P("x1")], 2), ([P("x2")], 3)])
    assert L == 6
    assert gens == [P("x1^3"), P("x2^2")]


def test_power_generators_counts_multisets():
    assert len(power_generators([P("x1"), P("x2"), P("x1+x2+1")], 2)) == 6


# boundary ideal

def test_boundary_singletons():
    gens, b = boundary_ideal([0, 1], 1, 2, 2)
    assert gens == [P("x1^2*x2^2")] and b == 2


def test_boundary_full_subset():
    gens, b = boundary_ideal([0, 1], 2, 1, 2)
    assert gens == [P("x1"), P("x2")] and b == 1


def test_boundary_empty_product_is_unit():
    assert boundary_ideal([0, 1], 0, 3, 2)[0] == [SparsePoly.one(2)]


def test_divisors_through_point():
    E = [(0, 0), (1, 1)]
    assert count_E_through([0, 0], E) == 2
    assert count_E_through([1, 0], E) == 1
    # a point only on a divisor born after the original ones
    assert count_E_through([1, 1, 0], [(2, 5)], original_only=True, original_limit=2) == 0


# maximal contact

def test_cusp_maximal_contact_is_y():
    cands = maximal_contact_candidates([P("x2^2-x1^3")], 2)
    assert cands[0].u == P("2*x2") and cands[0].locus == SparsePoly.const(2, 2)


def test_order_one_generator_is_its_own_hypersurface():
    (c,) = maximal_contact_candidates([P("x1")], 1)
    assert c.u == P("x1")


def test_circle_gives_both_directions():
    us = {c.u for c in maximal_contact_candidates([P("x1^2+x2^2")], 2)}
    assert us == {P("2*x1"), P("2*x2")}


# monomial centre selector

def test_monomial_J_examples():
    assert monomial_J((3, 2), 4) == (0, 1)
    assert monomial_J((5,), 4) == (0,)
    # {1,2} beats {3}: (1,1,0) > (0,0,1)
    assert monomial_J((2, 2, 3), 3) == (0, 1)


def test_monomial_J_outside_cosupport():
    with pytest.raises(InputError):
        monomial_J((1, 1), 3)


def test_monomial_J_exhaustive_against_bitmask_enumeration():
    start = time.time()
    checked = 0
    for length in range(1, 6):
        for alpha in itertools.product(range(7), repeat=length):
            for mu in range(1, min(12, sum(alpha)) + 1):
                assert monomial_J(alpha, mu) == monomial_J_bruteforce(alpha, mu)
                checked += 1
    assert checked > 100000
    assert time.time() - start < 300


# invariant ordering

def test_infinite_tail_beats_zero_tail():
    assert compare_inv(InvariantVector((2, 0, INF)), InvariantVector((2, 0, 0))) == 1


def test_first_entry_decides():
    assert compare_inv(InvariantVector((1, 0, 0)), InvariantVector((2, 0, 0))) == -1


def test_older_divisors_win_on_ties():
    a = InvariantVector((0,), Fraction(1), (0, 1))
    b = InvariantVector((0,), Fraction(1), (2,))
    assert compare_inv(a, b) == 1


def test_bottom_is_least():
    assert compare_inv(BOTTOM, InvariantVector((Fraction(1, 2), 0, 0))) == -1


def test_invariant_shape_validated():
    with pytest.raises(InputError):
        InvariantVector((1, 0))
    with pytest.raises(InputError):
        InvariantVector((1, 0, 2))


@given(st.sets(st.integers(0, 5), min_size=1), st.sets(st.integers(0, 5), min_size=1))
def test_tag_order_is_delta_lex(s, t):
    delta = lambda S: tuple(1 if k in S else 0 for k in range(6))
    a = InvariantVector((0,), Fraction(1), tuple(sorted(s)))
    b = InvariantVector((0,), Fraction(1), tuple(sorted(t)))
    expected = (delta(s) > delta(t)) - (delta(s) < delta(t))
    assert compare_inv(a, b) == expected


# law bounds

def test_law_bound_values():
    assert L_G(2, 3) == 9
    assert L_C(1, 1, 2) == 3


def test_capped_bounds_agree_when_small_and_cap_when_huge():
    assert capped_law_bound("L_G", 2, 3) == 9
    assert capped_law_bound("L_C", 3, 3, 2) == L_C(3, 3, 2)
    assert capped_law_bound("L_C", 2, 60, 3) is None
