
import pytest
from hypothesis import given, settings, strategies as st

from amv.chart import in_cosupport_at, sample_points
from amv.driver import (
    HypCentre,
    MONOMIAL_YEAR_GUARD,
    _centre_json,
    export_leaves,
    resolve,
    step_IIB_monomial,
)
from amv.errors import BudgetExceeded, InputError, YearLimitExceeded
from amv.poly import parse_poly


def P(text, n=2):
    return parse_poly(text, n)


def run(gens, n, mu, **kw):
    tree = resolve([P(g, n) for g in gens], n, mu, check_monotone=True, **kw)
    return tree, export_leaves(tree.final_leaves, tree.mu, tree.years)


def assert_cosupport_empty(T, samples=12):
    for c in T.charts:
        if c.empty:
            continue
        for pt in sample_points(c.nvars, samples, seed=1, avoid=[c.f_loc]):
            assert not in_cosupport_at(c, c.gens, T.mu, pt)


# end-to-end runs

def test_cusp_takes_eight_years():
    tree, (T, snc) = run(["x2^2-x1^3"], 2, 1)
    assert tree.years == 8
    assert snc
    assert [r.label for r in tree.nodes] == ["BASE", "BASE", "IIB", "ZERO", "IIB", "IIB", "IIB", "IIB"]
    assert tree.nodes[1].path.startswith("IIA>I-B")
    assert all(r.monotonicity["violations"] == [] for r in tree.nodes)
    assert not tree.laws.violations()
    assert_cosupport_empty(T)


def test_first_centre_of_cusp_is_the_origin():
    tree, _ = run(["x2^2-x1^3"], 2, 1)
    (centre,) = tree.nodes[0].centres.values()
    assert list(centre) == [0, 1]


@pytest.mark.parametrize("gens,n,mu,E,years", [
    (["x1^2*(x2^2-x1)"], 2, 3, [0], 2),
    (["x1^3"], 1, 2, [], 1),
    (["x1*x2", "x2^3"], 2, 2, [], 1),
    (["x1*x2"], 2, 1, [0, 1], 2),
])
def test_small_cases(gens, n, mu, E, years):
    tree, (T, snc) = run(gens, n, mu, E_vars=E)
    assert tree.years == years
    assert snc
    assert_cosupport_empty(T)


def test_unit_ideal_needs_no_blowup():
    tree, (T, snc) = run(["1"], 2, 1)
    assert tree.years == 0 and snc and len(T.charts) == 1


def test_zero_ideal_blows_up_everything():
    tree, (T, snc) = run([], 2, 1)
    assert tree.years == 1 and snc and T.charts == []


def test_year_limit_is_enforced():
    with pytest.raises(YearLimitExceeded):
        resolve([P("x2^2-x1^3")], 2, 1, year_limit=1)


def test_nested_controls_hit_the_power_budget():
    # nested coefficient controls grow like lcm(1..k); the power expansion is refused
    with pytest.raises(BudgetExceeded):
        resolve([P("x1^2*x2^3+x3^5", 3)], 3, 2)


def test_bad_control_rejected():
    with pytest.raises(InputError):
        resolve([P("x1")], 2, 0)


def test_runs_are_deterministic():
    a, _ = run(["x2^2-x1^3"], 2, 1, seed=3)
    b, _ = run(["x2^2-x1^3"], 2, 1, seed=3)
    assert [r.to_json(True) for r in a.nodes] == [r.to_json(True) for r in b.nodes]


def test_hypersurface_centre_rendering():
    S = HypCentre(P("x1+x2^2"))
    assert list(S) == []
    assert _centre_json(S) == [P("x1+x2^2").to_str()]
    assert _centre_json([0, 2]) == ["x1", "x3"]


# monomial case by exponent arithmetic

def test_monomial_two_variable_example():
    steps = step_IIB_monomial((3, 2), 4)
    assert steps[0].centre == (0, 1)
    first = {k: d for _, k, d in steps[0].charts}
    # x1-chart: x1^(3+2-4) x2^2 has order 3 < 4 and is done
    assert sum(first[0].values()) == 3
    # x2-chart keeps x1^3 and needs one more year
    assert sum(first[1].values()) == 4
    assert len(steps) == 2


def test_monomial_three_ones_with_control_two():
    steps = step_IIB_monomial((1, 1, 1), 2)
    first = {k: d for _, k, d in steps[0].charts}
    assert sum(first[0].values()) == 2 and sum(first[1].values()) == 2
    assert len(steps) == 3


def test_monomial_single_variable():
    (step,) = step_IIB_monomial((5,), 4)
    assert step.centre == (0,) and step.drops == [4]


def test_monomial_bad_input():
    with pytest.raises(InputError):
        step_IIB_monomial((1, -1), 1)
    with pytest.raises(YearLimitExceeded):
        step_IIB_monomial((3, 3, 3), 2, year_limit=1)
    assert MONOMIAL_YEAR_GUARD >= 100_000


def lineage_depths(alpha, mu):
    """Final charts as (exponents, number of blow-ups on their lineage)."""
    charts = [(dict(enumerate(alpha)), 0)]
    for step in step_IIB_monomial(alpha, mu):
        children = {}
        for idx, _, d in step.charts:
            children.setdefault(idx, []).append(d)
        new = []
        for i, (c, depth) in enumerate(charts):
            if i in children:
                new.extend((d, depth + 1) for d in children[i])
            else:
                new.append((c, depth))
        charts = new
    return charts


@settings(max_examples=80)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=4), st.data())
def test_each_lineage_is_bounded_by_the_exponent_sum(alpha, data):
    if sum(alpha) == 0:
        return
    mu = data.draw(st.integers(1, sum(alpha)))
    steps = step_IIB_monomial(alpha, mu)
    for step in steps:
        assert all(p >= 1 for p in step.drops)
        assert all(e >= 0 for _, _, d in step.charts for e in d.values())
    for exps, depth in lineage_depths(alpha, mu):
        assert sum(exps.values()) < mu
        assert depth <= sum(alpha) - mu + 1
