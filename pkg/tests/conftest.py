import os
from fractions import Fraction

import pytest
import sympy
from hypothesis import HealthCheck, settings, strategies as st

from amv.poly import SparsePoly

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")

settings.register_profile("amv", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("amv")

SYMS = sympy.symbols("x1:13")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


# sympy is the independent oracle; it is used only in tests

def to_sympy(p):
    expr = sympy.Integer(0)
    for e, c in p.terms.items():
        m = sympy.Rational(c.numerator, c.denominator)
        for v, k in enumerate(e):
            if k:
                m *= SYMS[v] ** k
        expr += m
    return sympy.expand(expr)


def from_sympy(expr, nvars):
    poly = sympy.Poly(sympy.expand(expr), *SYMS[:nvars])
    terms = {}
    for mon, c in poly.terms():
        c = sympy.Rational(c)
        terms[tuple(mon)] = Fraction(int(c.p), int(c.q))
    return SparsePoly(nvars, terms)


def poly_strategy(nvars, max_deg=3, max_terms=4, coeff=5):
    exps = st.tuples(*[st.integers(0, max_deg) for _ in range(nvars)]).filter(lambda e: sum(e) <= max_deg)
    coeffs = st.integers(-coeff, coeff).filter(bool)
    return st.dictionaries(exps, coeffs, max_size=max_terms).map(
        lambda d: SparsePoly(nvars, {e: Fraction(c) for e, c in d.items()}))


@pytest.fixture
def fixtures_dir():
    return FIXTURES
