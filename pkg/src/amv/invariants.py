"""Pointwise and chartwise invariants of marked ideals.

Orders at points and along divisors, the monomial/residual factorization,
companion, derivative, coefficient and boundary ideals, maximal-contact
candidates, the monomial centre selector and the invariant ordering.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from typing import List, Optional, Tuple

from .chart import Chart, adjugate, jacobian, order_on_X_at, plane_chart
from .errors import BudgetExceeded, ConsistencyError, InputError
from .ideal import groebner, max_order
from .poly import INF, SparsePoly, monomials_of_degree


@dataclass
class MarkedIdealLocal:
    chart: Chart
    gens: List[SparsePoly]
    control: int

    @property
    def nvars(self):
        return self.chart.nvars


def local(gens, nvars, control, E_vars=()):
    """MarkedIdealLocal on the plane chart with coordinate divisors E_vars."""
    return MarkedIdealLocal(plane_chart(gens, nvars, E_vars), list(gens), control)


@dataclass(frozen=True)
class InvariantVector:
    """(nu_1, s_1, ..., nu_q, s_q, nu_{q+1}) plus mu-value and the tags in J.

    The empty entry tuple is the minimal value used off the cosupport."""

    entries: Tuple = ()
    mu_val: object = None
    J: Tuple = ()

    def __post_init__(self):
        if self.entries and len(self.entries) % 2 == 0:
            raise InputError("invariant must have odd length")
        if self.entries and self.entries[-1] not in (0, INF):
            raise InputError("terminal entry must be 0 or inf")

    def key(self):
        # J holds divisor tags; negating the sorted tags makes plain tuple
        # comparison the delta-lex order with older divisors first
        mu = -1 if self.mu_val is None else self.mu_val
        return (tuple(self.entries), mu, tuple(-t for t in sorted(self.J)))

    def __lt__(self, other):
        return self.key() < other.key()

    def __le__(self, other):
        return self.key() <= other.key()

    def __gt__(self, other):
        return self.key() > other.key()

    def __ge__(self, other):
        return self.key() >= other.key()

    def to_json(self):
        return {
            "entries": [_num_json(v) for v in self.entries],
            "mu": None if self.mu_val is None else _num_json(self.mu_val),
            "J": list(self.J),
        }


def _num_json(v):
    if v == INF:
        return "inf"
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


BOTTOM = InvariantVector()


def compare_inv(a, b):
    """-1, 0 or 1.  Entries lexicographically (a proper prefix is smaller),
    then mu-value, then J in delta-lex order (older divisors first)."""
    ka, kb = a.key(), b.key()
    return (ka > kb) - (ka < kb)


# orders

def _check_point(m, a):
    if len(a) != m.chart.nvars:
        raise InputError("point dimension mismatch")
    if not m.chart.f_loc.evaluate(a):
        raise InputError("point lies outside the chart's open set")


def order_of_ideal_at(m, a):
    gens = [g for g in m.gens if g]
    if not gens:
        return INF
    if m.chart.num_X_eqns:
        o = order_on_X_at(m.chart, gens, a, cap=64)
        if o is None:
            raise InputError("parameters degenerate at point")
        return o
    return min(g.order_at(a) for g in gens)


def mu_at(m, a):
    _check_point(m, a)
    o = order_of_ideal_at(m, a)
    return INF if o == INF else Fraction(o, m.control)


def _E_index(m, H):
    for v, _ in m.chart.E_list:
        if v == H:
            return v
    raise InputError(f"x{H + 1} is not an E-coordinate of the chart")


def mu_along(m, H, a=None):
    v = _E_index(m, H)
    gens = [g for g in m.gens if g]
    if not gens:
        return INF
    return Fraction(min(g.order_along(v) for g in gens), m.control)


def monomial_residual_split(m):
    """(exponents over E in E_list order, residual generators)."""
    gens = [g for g in m.gens if g]
    if not gens:
        raise InputError("monomial/residual split of the zero ideal")
    n = m.chart.nvars
    exps = [min(g.order_along(v) for g in gens) for v, _ in m.chart.E_list]
    mono = [0] * n
    for (v, _), e in zip(m.chart.E_list, exps):
        mono[v] += e
    div = SparsePoly.monomial(mono)
    residual = [g.exact_div(div) for g in gens]
    if [r * div for r in residual] != gens:
        raise ConsistencyError("split-recombine check failed")
    for (v, _) in m.chart.E_list:
        if min(r.order_along(v) for r in residual) != 0:
            raise ConsistencyError("residual still divisible by an E-coordinate")
    return exps, residual


def residual_order_at(m, a):
    """ord_a R / mu, computed by both routes, which must agree."""
    _check_point(m, a)
    gens = [g for g in m.gens if g]
    if not gens:
        return INF
    exps, residual = monomial_residual_split(m)
    route1 = Fraction(min(r.order_at(a) for r in residual), m.control)
    through = sum(e for (v, _), e in zip(m.chart.E_list, exps) if a[v] == 0)
    route2 = mu_at(m, a) - Fraction(through, m.control)
    if route1 != route2:
        raise ConsistencyError(f"residual order routes disagree: {route1} vs {route2}")
    return route1


def weighted_sum(parts):
    """(I_1, b_1) + ... as one marked ideal: control L = lcm(b_i),
    generators of sum I_i^(L/b_i).  Zero parts are ignored."""
    parts = [(list(g), b) for g, b in parts if any(g)]
    if not parts:
        return [], 1
    L = 1
    for _, b in parts:
        L = L * b // math.gcd(L, b)
    out = []
    for gens, b in parts:
        out.extend(power_generators([g for g in gens if g], L // b))
    return out, L


MAX_POWER_PRODUCTS = 200_000


def _count_products(l, k):
    """Number of multisets of size k from l generators, or None when it
    clearly exceeds MAX_POWER_PRODUCTS.  The budget bounds count * k, the
    number of multiplications power_generators performs."""
    if l == 1:
        return 1 if k <= MAX_POWER_PRODUCTS else None
    if k > MAX_POWER_PRODUCTS:
        return None
    return math.comb(l + k - 1, k)


def power_generators(gens, k):
    """Generators of (gens)^k: products over multisets of size k."""
    if k == 0:
        return [SparsePoly.one(gens[0].nvars)] if gens else []
    count = _count_products(len(gens), k)
    if count is None or count * k > MAX_POWER_PRODUCTS:
        # controls grow factorially with nesting depth; refuse rather than hang
        raise BudgetExceeded(MAX_POWER_PRODUCTS, f"products in a power of {len(gens)} generators to exponent {k}")
    out = []
    seen = set()
    for combo in combinations_with_replacement(range(len(gens)), k):
        p = gens[combo[0]]
        for i in combo[1:]:
            p = p * gens[i]
        key = p.primitive()
        if key not in seen:
            seen.add(key)
            out.append(p)
    return out


def companion_ideal(m, ordR=None):
    """G(I): (R, ordR) + (M, mu - ordR) if ordR < mu, else (R, ordR)."""
    exps, residual = monomial_residual_split(m)
    if ordR is None:
        ordR = max_order(residual, m.chart.f_loc, locus=_cosupp_gens(m))
    if ordR == 0:
        raise InputError("residual order 0: monomial case, companion undefined")
    n = m.chart.nvars
    if ordR >= m.control:
        return MarkedIdealLocal(m.chart, list(residual), ordR)
    mono = [0] * n
    for (v, _), e in zip(m.chart.E_list, exps):
        mono[v] += e
    M = SparsePoly.monomial(mono)
    gens, L = weighted_sum([(residual, ordR), ([M], m.control - ordR)])
    return MarkedIdealLocal(m.chart, gens, L)


def _cosupp_gens(m):
    from .ideal import cosupport_ideal
    return cosupport_ideal([g for g in m.gens if g], m.control)


# derivations

@dataclass
class Derivation:
    coeffs: List[SparsePoly]  # over d/dx_1 .. d/dx_n
    label: str = ""

    def __call__(self, p):
        out = SparsePoly.zero(p.nvars)
        for i, c in enumerate(self.coeffs):
            if c:
                d = p.partial(i)
                if d:
                    out = out + c * d
        return out


def log_derivation_basis(c):
    """Generators of the logarithmic derivations of a chart: d'_{u_j} from
    the adjugate of the parameter Jacobian, x_v d_{x_v} for E-coordinate
    parameters, and u_i d'_{u_j} for the X equations u_i."""
    n = c.nvars
    jt = [list(col) for col in zip(*jacobian(c.params_u, n))]
    adj = adjugate(jt)
    if not any(p for row in adj for p in row):
        raise InputError("degenerate parameter Jacobian")
    evars = set(c.E_vars())
    ops = []
    for j in range(c.num_X_eqns, n):
        u = c.params_u[j]
        v = _coordinate_index(u)
        is_E = v is not None and v in evars
        prime = [adj[j][i] for i in range(n)]
        if is_E:
            ops.append(Derivation([u * q for q in prime], f"x{v + 1}*d/dx{v + 1}"))
        else:
            ops.append(Derivation(prime, f"d'/du{j + 1}"))
    for i in range(c.num_X_eqns):
        for j in range(n):
            prime = [adj[j][k] for k in range(n)]
            ops.append(Derivation([c.params_u[i] * q for q in prime], f"u{i + 1}*d'/du{j + 1}"))
    return ops


def _coordinate_index(u):
    """v if u == x_v, else None."""
    if u.is_monomial() and u.degree() == 1:
        (e, c), = u.terms.items()
        if c == 1:
            return e.index(1)
    return None


def derivative_ideal(gens, basis, j=1, prune=False, chart_degree=None):
    """Formal generator list of D^j(gens): previous list followed by every
    operator applied to every generator (zeros kept unless prune)."""
    cur = list(gens)
    n = len(basis)
    l0 = len(cur)
    d1 = max([g.degree() for g in gens if g] or [0])
    d2 = chart_degree
    if d2 is None:
        d2 = max([1] + [c.degree() for op in basis for c in op.coeffs if c] + [1])
    for step in range(1, j + 1):
        nxt = list(cur)
        for g in cur:
            for op in basis:
                nxt.append(op(g) if g else SparsePoly.zero(g.nvars))
        cur = nxt
        if len(cur) != (n + 1) ** step * l0:
            raise ConsistencyError("derivative generator count law violated")
        nv = gens[0].nvars if gens else 0
        deg = max([g.degree() for g in cur if g] or [0])
        bound = d1 + step * nv * (d2 - 1) if d2 >= 1 else d1
        if deg > max(bound, d1):
            raise ConsistencyError(f"derivative degree law violated: {deg} > {bound}")
    if prune:
        return prune_zeros(cur)
    return cur


def prune_zeros(gens):
    out = []
    seen = set()
    for g in gens:
        if g:
            k = g.primitive()
            if k not in seen:
                seen.add(k)
                out.append(g)
    return out


def coefficient_ideal(m, basis=None, reduce=True):
    """C(I) with control mu!: generators of sum_j (D^j I)^(mu!/(mu - j))."""
    mu = m.control
    if mu < 1:
        raise InputError("coefficient ideal needs control >= 1")
    gens = [g for g in m.gens if g]
    ctrl = math.factorial(mu)
    if not gens:
        return MarkedIdealLocal(m.chart, [], ctrl)
    if mu == 1:
        return MarkedIdealLocal(m.chart, list(gens), 1)
    if basis is None:
        basis = log_derivation_basis(m.chart)
    level = groebner(gens) if reduce else gens
    out = []
    for j in range(mu):
        if j:
            level = derivative_ideal(level, basis, 1, prune=True)
            if reduce:
                level = groebner(level)
        if any(g.is_constant() for g in level):
            level = [SparsePoly.one(level[0].nvars)]
        out.extend(power_generators(level, ctrl // (mu - j)))
    out = prune_zeros(out)
    if reduce:
        out = groebner(out)
    return MarkedIdealLocal(m.chart, out, ctrl)


def L_G(l, mu):
    return l ** mu + 1


def L_C(l, mu, n):
    f = math.factorial(mu)
    return mu * (n + 1) ** f * l ** f


LAW_CAP_DIGITS = 40


def _log10_L_G(l, mu):
    return mu * math.log10(max(l, 1))


def _log10_L_C(l, mu, n):
    # log10 of mu! without forming it; lgamma stays finite for any realistic mu
    log_f = math.lgamma(mu + 1) / math.log(10)
    if log_f > 6:
        return math.inf
    return math.log10(max(mu, 1)) + 10 ** log_f * math.log10((n + 1) * max(l, 1))


def capped_law_bound(name, *args):
    """Exact L_G or L_C when it has at most LAW_CAP_DIGITS digits, else None.

    None means the bound exceeds 10**LAW_CAP_DIGITS, which no generator
    count can reach, so callers treat the law as satisfied."""
    exact, est = {"L_G": (L_G, _log10_L_G), "L_C": (L_C, _log10_L_C)}[name]
    if est(*args) > LAW_CAP_DIGITS + 1:
        return None
    return exact(*args)


def boundary_ideal(E_vars, s, control, nvars):
    """prod over s-subsets L of E of sum_{H in L} x_H^control."""
    E_vars = list(E_vars)
    if not 0 <= s <= len(E_vars):
        raise InputError("s out of range")
    if s == 0:
        return [SparsePoly.one(nvars)], control
    subsets = list(combinations(E_vars, s))
    gens = {}
    for choice in _choices(subsets):
        e = [0] * nvars
        for v in choice:
            e[v] += control
        gens[tuple(e)] = SparsePoly.monomial(e)
    # keep only minimal monomials
    keys = list(gens)
    minimal = [k for k in keys if not any(o != k and all(a <= b for a, b in zip(o, k)) for o in keys)]
    return [gens[k] for k in sorted(minimal, reverse=True)], control


def _choices(subsets):
    if not subsets:
        yield ()
        return
    first, rest = subsets[0], subsets[1:]
    for v in first:
        for tail in _choices(rest):
            yield (v,) + tail


def count_E_through(a, E_list, original_only=False, original_limit=None):
    """Number of E-coordinates vanishing at a (optionally only tags < limit)."""
    count = 0
    for v, tag in E_list:
        if original_only and original_limit is not None and tag >= original_limit:
            continue
        if a[v] == 0:
            count += 1
    return count


# maximal contact

@dataclass
class Candidate:
    u: SparsePoly
    locus: SparsePoly  # d^b g_i, nonvanishing on the candidate's open set
    i: int
    b: tuple


def maximal_contact_candidates(residual_gens, mubar, E_vars=None, free_vars=None):
    """u = d^a g_i with |b| = mubar and a = b with its first nonzero entry
    decremented; ordered by (i, b) with b lexicographically ascending."""
    if mubar < 1:
        raise InputError("maximal contact needs mubar >= 1")
    gens = [g for g in residual_gens if g]
    if not gens:
        raise InputError("no generators")
    n = gens[0].nvars
    free = list(range(n)) if free_vars is None else sorted(free_vars)
    out = []
    for i, g in enumerate(gens):
        bs = monomials_of_degree(len(free), mubar)
        for bf in sorted(bs):
            b = [0] * n
            for pos, k in zip(free, bf):
                b[pos] = k
            db = g.partial_multi(b)
            if not db:
                continue
            a = list(b)
            first = next(j for j, k in enumerate(a) if k)
            a[first] -= 1
            u = g.partial_multi(a)
            if E_vars and any(u.order_along(v) > 0 for v in E_vars):
                continue
            out.append(Candidate(u, db, i, tuple(b)))
    if not out:
        raise ConsistencyError("no maximal contact candidate; residual order is wrong")
    return out


# monomial case

def _delta(subset, length):
    return tuple(1 if i in subset else 0 for i in range(length))


def monomial_J(alpha, mu):
    """Max (delta-lex, older divisors first) subset I with
    0 <= sum_I alpha - mu < alpha_k for all k in I.  0-based indices."""
    if sum(alpha) < mu:
        raise InputError("point is not in the cosupport (sum alpha < mu)")
    best = None
    n = len(alpha)
    for r in range(1, n + 1):
        for sub in combinations(range(n), r):
            t = sum(alpha[k] for k in sub) - mu
            if t < 0 or any(t >= alpha[k] for k in sub):
                continue
            d = _delta(sub, n)
            if best is None or d > best[0]:
                best = (d, sub)
    if best is None:
        raise ConsistencyError("no admissible subset in the monomial case")
    return best[1]


def monomial_J_bruteforce(alpha, mu):
    """Independent check: enumerate bit masks, compare as integers with the
    oldest divisor as the most significant bit."""
    n = len(alpha)
    best_mask = -1
    for mask in range(1, 1 << n):
        sub = [k for k in range(n) if mask >> (n - 1 - k) & 1]
        t = sum(alpha[k] for k in sub) - mu
        if t >= 0 and all(t < alpha[k] for k in sub):
            best_mask = max(best_mask, mask)
    return tuple(k for k in range(n) if best_mask >> (n - 1 - k) & 1)
