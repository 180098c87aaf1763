from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from amv.chart import (
    AffineMarkedIdeal,
    Chart,
    DataVector,
    adjugate,
    chart_id,
    compute_data_vector,
    determinant,
    identity_transition,
    in_cosupport_at,
    is_defined_over,
    parse_chart_id,
    plane_chart,
    sample_points,
    single_chart_ideal,
    validate,
)
from amv.errors import InputError
from amv.poly import SparsePoly, parse_poly

from conftest import SYMS, poly_strategy, to_sympy


def P(text, n=2):
    return parse_poly(text, n)


def cusp(mu=1):
    return single_chart_ideal([P("x2^2-x1^3")], 2, mu)


# data vectors

def test_cusp_data_vector():
    # Psi = {x, y, y^2 - x^3, f_loc = 1}, largest degree 3
    assert compute_data_vector(cusp()).as_tuple() == (0, 2, 2, 3, 4, 1, 1)


def test_zero_ideal_data_vector_ignores_generators():
    dv = compute_data_vector(single_chart_ideal([], 2, 1))
    assert (dv.d, dv.l) == (1, 3)


def test_two_identical_charts_double_q():
    a = plane_chart([P("x2^2-x1^3")], 2, alpha=0)
    b = plane_chart([P("x2^2-x1^3")], 2, alpha=1)
    T = AffineMarkedIdeal([a, b], [identity_transition(a, b), identity_transition(b, a)], 1)
    assert compute_data_vector(T).as_tuple() == (0, 2, 2, 3, 4, 2, 1)


def test_data_vector_rejects_m_above_n():
    with pytest.raises(InputError):
        DataVector(0, 1, 2, 1, 1, 1, 1)


def test_chart_ids_round_trip():
    assert parse_chart_id(chart_id(3, 7)) == (3, 7)
    with pytest.raises(InputError):
        parse_chart_id("c3")


# validation

def test_cusp_chart_validates():
    rep = validate(cusp(), thorough=True)
    assert rep.ok, rep.failures()


def test_non_regular_parameters_fail_jacobian_clause():
    # Jacobian row (2 x1, 0) vanishes on x1 = 0, which meets U
    c = Chart(0, 0, 2, SparsePoly.one(2), [P("x1^2"), P("x2")], 0, [], [P("x2")])
    rep = validate(AffineMarkedIdeal([c], [], 1))
    assert [f[0] for f in rep.failures()] == ["4"]


def test_localization_can_repair_parameters():
    c = Chart(0, 0, 2, P("x1"), [P("x1^2"), P("x2")], 0, [], [P("x2")])
    assert validate(AffineMarkedIdeal([c], [], 1)).ok


def test_parameter_divisible_by_divisor_fails():
    c = Chart(0, 0, 2, SparsePoly.one(2), [P("x1"), P("x1*x2+x2")], 0, [(1, 0)], [])
    rep = validate(AffineMarkedIdeal([c], [], 1))
    assert not rep.ok


def test_overlap_disagreement_detected():
    a = plane_chart([P("x2^2-x1^3")], 2, alpha=0)
    b = plane_chart([SparsePoly.one(2)], 2, alpha=1)
    T = AffineMarkedIdeal([a, b], [identity_transition(a, b)], 1)
    assert validate(T, thorough=True).ok is False


# defined over

def test_identity_is_defined_over_itself():
    T = cusp()
    assert is_defined_over(T, T, {c.id: c.id for c in T.charts})


def test_mismatched_control_not_defined_over():
    assert not is_defined_over(cusp(2), cusp(1), {"a0b0": "a0b0"})


# linear algebra and cosupport

@given(st.lists(poly_strategy(2, max_deg=2, max_terms=3), min_size=9, max_size=9))
def test_determinant_and_adjugate_match_sympy(entries):
    mat = [entries[0:3], entries[3:6], entries[6:9]]
    ref = sympy.Matrix([[to_sympy(p) for p in row] for row in mat])
    assert to_sympy(determinant(mat)) == sympy.expand(ref.det())
    adj = adjugate(mat)
    ref_adj = ref.adjugate()
    for i in range(3):
        for j in range(3):
            assert to_sympy(adj[i][j]) == sympy.expand(ref_adj[i, j])


def test_cusp_cosupport_membership():
    c = cusp().charts[0]
    assert in_cosupport_at(c, c.gens, 1, [Fraction(0), Fraction(0)])
    assert in_cosupport_at(c, c.gens, 1, [Fraction(1), Fraction(1)])
    assert not in_cosupport_at(c, c.gens, 2, [Fraction(1), Fraction(1)])
    assert in_cosupport_at(c, c.gens, 2, [Fraction(0), Fraction(0)])
    assert not in_cosupport_at(c, c.gens, 1, [Fraction(1), Fraction(0)])


def test_sample_points_are_seeded_and_avoid():
    f = P("x1*x2")
    a = sample_points(2, 10, seed=4, avoid=[f])
    assert a == sample_points(2, 10, seed=4, avoid=[f])
    assert all(f.evaluate(p) for p in a)
    assert a != sample_points(2, 10, seed=5, avoid=[f])
