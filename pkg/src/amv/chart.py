"""Affine marked ideals: charts, transition maps, data vectors and the
clause-by-clause validation report."""

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

from .errors import InputError
from .ideal import is_empty_on_chart
from .poly import RationalMapEntry, SparsePoly


@dataclass
class Chart:
    alpha: int
    beta: int
    nvars: int
    f_loc: SparsePoly
    params_u: List[SparsePoly]
    num_X_eqns: int
    E_list: List[Tuple[int, int]]  # (variable index, birth tag)
    gens: List[SparsePoly]
    # coordinates of this chart as rational functions of the root chart's
    # coordinates; used only to produce sample points on X
    param_map: Optional[List[RationalMapEntry]] = None
    root_id: Optional[str] = None
    empty: bool = False

    @property
    def id(self):
        return chart_id(self.alpha, self.beta)

    @property
    def x_eqns(self):
        return self.params_u[: self.num_X_eqns]

    @property
    def dim_X(self):
        return self.nvars - self.num_X_eqns

    def E_vars(self):
        return [v for v, _ in self.E_list]

    def E_tags(self):
        return [t for _, t in self.E_list]

    def degree(self):
        polys = self.params_u + self.gens + [self.f_loc]
        return max([p.degree() for p in polys if p] or [0])

    def is_cosupport_empty(self, mu):
        if self.empty:
            return True
        cos = cosupport_on_X(self, self.gens, mu)
        return is_empty_on_chart(cos, self.f_loc)


def cosupport_on_X(chart, gens, mu):
    """Generators of an ideal whose zero set in U is cosupp(gens|X, mu).

    Uses the derivations tangent to X built from the adjugate of the
    parameter Jacobian; they preserve I_X, so iterating them on a basis of
    I + I_X is sound wherever the Jacobian determinant is a unit."""
    from .ideal import cosupport_ideal, groebner
    gens = [g for g in gens if g]
    xe = list(chart.x_eqns)
    if not gens:
        return xe
    if mu <= 0:
        return xe + [SparsePoly.zero(chart.nvars)]
    if not xe:
        return cosupport_ideal(gens, mu)
    ops, _ = tangent_derivations(chart)
    cur = groebner(gens + xe)
    for _ in range(mu - 1):
        if any(g.is_constant() for g in cur):
            break
        nxt = list(cur)
        for g in cur:
            for op in ops:
                q = apply_derivation(op, g)
                if q:
                    nxt.append(q)
        cur = groebner(nxt)
    return cur


def chart_id(alpha, beta):
    return f"a{alpha}b{beta}"


def parse_chart_id(text):
    if not (text.startswith("a") and "b" in text):
        raise InputError(f"bad chart id {text!r}")
    a, b = text[1:].split("b", 1)
    return int(a), int(b)


@dataclass
class TransitionMap:
    source: str
    target: str
    entries: List[RationalMapEntry]

    def apply(self, point):
        return [e.evaluate(point) for e in self.entries]


@dataclass
class AffineMarkedIdeal:
    charts: List[Chart]
    transitions: List[TransitionMap]
    mu: int
    history: list = field(default_factory=list)

    def chart(self, cid):
        for c in self.charts:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def transition(self, source, target):
        for t in self.transitions:
            if t.source == source and t.target == target:
                return t
        return None


@dataclass(frozen=True)
class DataVector:
    r: int
    n: int
    m: int
    d: int
    l: int
    q: int
    mu: int

    def as_tuple(self):
        return (self.r, self.n, self.m, self.d, self.l, self.q, self.mu)

    def __post_init__(self):
        if any(v < 0 for v in self.as_tuple()):
            raise InputError("data vector entries must be nonnegative")
        if self.m > self.n:
            raise InputError("data vector needs m <= n")


def compute_data_vector(T):
    charts = [c for c in T.charts if not c.empty]
    if not charts:
        return DataVector(len(T.history), 0, 0, 0, 0, 0, T.mu)
    n = max(c.nvars for c in charts)
    m = max(c.nvars - c.num_X_eqns for c in charts)
    d = 0
    l = 0
    for c in charts:
        psi = list(c.params_u) + [g for g in c.gens if g] + [c.f_loc]
        l = max(l, len(psi))
        # transition numerators and denominators count for d but not for l
        for t in T.transitions:
            if t.source == c.id:
                for e in t.entries:
                    psi.extend([e.num, e.den])
        d = max([d] + [p.degree() for p in psi if p])
    return DataVector(len(T.history), n, m, d, l, len(charts), T.mu)


# sampling

def random_rational(rng, span=9):
    num = rng.randint(-span, span)
    if rng.random() < 0.25:
        return Fraction(num, rng.randint(2, 5))
    return Fraction(num)


def sample_points(nvars, count, seed=0, avoid=()):
    """Deterministic pseudo-random rational points avoiding V(p) for p in avoid."""
    rng = random.Random(seed)
    out = []
    tries = 0
    while len(out) < count and tries < 50 * count + 100:
        tries += 1
        pt = [random_rational(rng) for _ in range(nvars)]
        if all(p.evaluate(pt) for p in avoid):
            out.append(pt)
    return out


def sample_on_chart(chart, count, seed=0, root_nvars=None):
    """Points of X ∩ U, obtained from the chart's parametrization if known."""
    if chart.param_map is None:
        if chart.num_X_eqns:
            return None
        return sample_points(chart.nvars, count, seed, avoid=[chart.f_loc])
    n0 = root_nvars if root_nvars is not None else chart.param_map[0].num.nvars
    rng = random.Random(seed)
    out = []
    tries = 0
    while len(out) < count and tries < 50 * count + 100:
        tries += 1
        base = [random_rational(rng) for _ in range(n0)]
        try:
            pt = [e.evaluate(base) for e in chart.param_map]
        except ZeroDivisionError:
            continue
        if chart.f_loc.evaluate(pt) and all(not u.evaluate(pt) for u in chart.x_eqns):
            out.append(pt)
    return out


# order along X, via derivations tangent to X

def jacobian(polys, nvars):
    return [[p.partial(j) for j in range(nvars)] for p in polys]


def determinant(mat):
    """Determinant of a square matrix of SparsePoly (fraction-free expansion)."""
    n = len(mat)
    if n == 0:
        return None
    if n == 1:
        return mat[0][0]
    nv = mat[0][0].nvars
    total = SparsePoly.zero(nv)
    for j in range(n):
        if not mat[0][j]:
            continue
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = mat[0][j] * determinant(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def adjugate(mat):
    n = len(mat)
    nv = mat[0][0].nvars
    if n == 1:
        return [[SparsePoly.one(nv)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(mat) if k != i]
            c = determinant(minor)
            adj[j][i] = c if (i + j) % 2 == 0 else -c
    return adj


def tangent_derivations(chart):
    """Derivations d'_{u_j} (j beyond the X equations) as coefficient vectors
    over the ambient partials, with the Jacobian determinant."""
    jac = jacobian(chart.params_u, chart.nvars)
    # rows: params, columns: variables; d'_{u_j} = sum_i adj[i][j] d_{x_i}
    jt = [list(col) for col in zip(*jac)]  # (d u_j / d x_i) indexed [i][j]
    adj = adjugate(jt)
    det = determinant(jt)
    ops = []
    for j in range(chart.num_X_eqns, chart.nvars):
        ops.append([adj[j][i] for i in range(chart.nvars)])
    return ops, det


def apply_derivation(op, p):
    out = SparsePoly.zero(p.nvars)
    for c, i in zip(op, range(p.nvars)):
        if c:
            d = p.partial(i)
            if d:
                out = out + c * d
    return out


def order_on_X_at(chart, gens, point, cap):
    """min over gens of ord_point(g|X), computed with tangent derivations;
    returns cap if the order is at least cap."""
    if not chart.num_X_eqns:
        return min((g.order_at(point) for g in gens), default=float("inf"))
    ops, det = tangent_derivations(chart)
    if not det.evaluate(point):
        return None
    layer = [g for g in gens if g]
    if not layer:
        return float("inf")
    for k in range(cap):
        if any(g.evaluate(point) for g in layer):
            return k
        layer = [q for g in layer for op in ops for q in [apply_derivation(op, g)] if q]
        if not layer:
            return float("inf")
    return cap


def in_cosupport_at(chart, gens, mu, point):
    o = order_on_X_at(chart, gens, point, mu)
    if o is None:
        return None
    return o >= mu


# validation

class ValidationReport:
    def __init__(self):
        self.items = []  # (clause, chart id or '*', status, detail)

    def add(self, clause, where, status, detail=""):
        self.items.append((clause, where, status, detail))

    @property
    def ok(self):
        return all(s != "fail" for _, _, s, _ in self.items)

    def failures(self):
        return [i for i in self.items if i[2] == "fail"]

    def as_dict(self):
        return [
            {"clause": c, "chart": w, "status": s, "detail": d} for c, w, s, d in self.items
        ]


def validate(T, samples=25, seed=0, thorough=False):
    rep = ValidationReport()
    if samples < 1:
        raise InputError("samples must be >= 1")
    ids = set()
    for c in T.charts:
        cid = c.id
        if cid in ids:
            rep.add("1", cid, "fail", "duplicate chart id")
        ids.add(cid)
        # (1) U is the complement of V(f)
        rep.add("1", cid, "pass" if c.f_loc else "fail", "f_loc nonzero" if c.f_loc else "f_loc is zero")
        # (2) X cut out by the first n - m parameters
        ok2 = 0 <= c.num_X_eqns <= c.nvars and len(c.params_u) == c.nvars
        rep.add("2", cid, "pass" if ok2 else "fail", f"{len(c.params_u)} params, {c.num_X_eqns} X equations")
        # (3) E entries are coordinates
        vs = c.E_vars()
        ok3 = all(0 <= v < c.nvars for v in vs) and len(set(vs)) == len(vs)
        rep.add("3", cid, "pass" if ok3 else "fail", f"E = {c.E_list}")
        # (4) regular system, transversality
        rep.add("4", cid, *_check_params(c))
        # gens live in the right ring
        ok5 = all(g.nvars == c.nvars for g in c.gens)
        rep.add("5", cid, "pass" if ok5 else "fail", f"{len(c.gens)} generators")
    # (5) overlap cosupport agreement, (6) transitions invertible
    by_id = {c.id: c for c in T.charts}
    for t in T.transitions:
        a, b = by_id.get(t.source), by_id.get(t.target)
        if a is None or b is None:
            rep.add("6", f"{t.source}->{t.target}", "fail", "unknown chart")
            continue
        back = T.transition(t.target, t.source)
        pts = sample_on_chart(a, samples, seed)
        if pts is None:
            rep.add("5", f"{t.source}->{t.target}", "untestable", "no parametrization of X")
            continue
        agree = used = 0
        inv_ok = True
        for p in pts:
            try:
                q = t.apply(p)
            except ZeroDivisionError:
                continue
            if not b.f_loc.evaluate(q):
                continue
            used += 1
            ca = in_cosupport_at(a, a.gens, T.mu, p)
            cb = in_cosupport_at(b, b.gens, T.mu, q)
            if ca is None or cb is None or ca == cb:
                agree += 1
            if back is not None:
                try:
                    if back.apply(q) != list(p):
                        inv_ok = False
                except ZeroDivisionError:
                    pass
        rep.add("5", f"{t.source}->{t.target}", "pass" if agree == used else "fail",
                f"{agree}/{used} sampled points agree")
        rep.add("6", f"{t.source}->{t.target}", "pass" if inv_ok else "fail",
                f"inverse checked on {used} samples" if back else "no reverse map given")
    rep.add("7", "*", "pass" if isinstance(T.mu, int) and T.mu >= 0 else "fail", f"mu = {T.mu}")
    if thorough:
        _thorough_overlaps(T, rep)
    return rep


def _check_params(c):
    if len(c.params_u) != c.nvars:
        return "fail", "parameter list length differs from nvars"
    evars = set(c.E_vars())
    for k, u in enumerate(c.params_u):
        if not u:
            return "fail", f"parameter {k + 1} is zero"
        is_coord = u.is_monomial() and u.degree() == 1
        if is_coord:
            continue
        for v in evars:
            if u.order_along(v) > 0:
                return "fail", f"parameter {k + 1} is a multiple of E-coordinate x{v + 1}"
    jt = [list(col) for col in zip(*jacobian(c.params_u, c.nvars))]
    det = determinant(jt)
    if not det:
        return "fail", "Jacobian determinant vanishes identically"
    if det.is_constant():
        return "pass", "Jacobian determinant is a nonzero constant"
    on_X = [det] + list(c.x_eqns)
    if is_empty_on_chart(on_X, c.f_loc):
        return "pass", "Jacobian determinant has no zero on X ∩ U"
    return "fail", f"Jacobian determinant {det.to_str()} vanishes somewhere on X ∩ U"


def _thorough_overlaps(T, rep):
    """Exact overlap agreement for charts sharing the same ambient space
    (identity transitions): compare saturated cosupport ideals."""
    from .ideal import ideals_equal_on
    for t in T.transitions:
        if not all(e.is_polynomial() for e in t.entries):
            rep.add("5*", f"{t.source}->{t.target}", "untestable", "rational transition")
            continue
        a, b = T.chart(t.source), T.chart(t.target)
        ident = all(e.as_poly() == SparsePoly.var(a.nvars, i) for i, e in enumerate(t.entries)) \
            if a.nvars == b.nvars else False
        if not ident:
            rep.add("5*", f"{t.source}->{t.target}", "untestable", "non-identity transition")
            continue
        f = a.f_loc * b.f_loc
        ca = cosupport_on_X(a, a.gens, T.mu)
        cb = cosupport_on_X(b, b.gens, T.mu)
        eq = ideals_equal_on(ca, cb, f)
        rep.add("5*", f"{t.source}->{t.target}", "pass" if eq else "fail", "saturated ideals compared")


def is_defined_over(T1, T0, index_maps, samples=25, seed=0):
    """index_maps: chart id of T1 -> chart id of T0."""
    if T1.mu != T0.mu:
        return False
    by0 = {c.id: c for c in T0.charts}
    by1 = {c.id: c for c in T1.charts}
    for cid1, cid0 in index_maps.items():
        c1, c0 = by1.get(cid1), by0.get(cid0)
        if c1 is None or c0 is None or c0.nvars > c1.nvars:
            return False
        pts = sample_on_chart(c1, samples, seed)
        if pts is None:
            continue
        for p in pts:
            proj = p[: c0.nvars]
            if any(u.evaluate(proj) for u in c0.x_eqns):
                return False
    # projections commute with transitions
    for t1 in T1.transitions:
        s0, t0 = index_maps.get(t1.source), index_maps.get(t1.target)
        if s0 is None or t0 is None:
            continue
        c1 = by1[t1.source]
        n_s, n_t = by0[s0].nvars, by0[t0].nvars
        tr0 = None if s0 == t0 else T0.transition(s0, t0)
        if s0 != t0 and tr0 is None:
            continue
        pts = sample_on_chart(c1, samples, seed + 1) or []
        for p in pts:
            try:
                img = t1.apply(p)[:n_t]
                base = p[:n_s] if tr0 is None else tr0.apply(p[:n_s])
            except ZeroDivisionError:
                continue
            if img != list(base):
                return False
    return True


def identity_transition(a, b):
    n = a.nvars
    return TransitionMap(a.id, b.id, [RationalMapEntry(SparsePoly.var(n, i)) for i in range(n)])


def plane_chart(gens, nvars, E_vars=(), f_loc=None, alpha=0, beta=0):
    """Convenience: X = ambient affine space with coordinate parameters."""
    return Chart(
        alpha=alpha,
        beta=beta,
        nvars=nvars,
        f_loc=f_loc if f_loc is not None else SparsePoly.one(nvars),
        params_u=SparsePoly.gens(nvars),
        num_X_eqns=0,
        E_list=[(v, t) for t, v in enumerate(E_vars)],
        gens=list(gens),
        param_map=[RationalMapEntry(SparsePoly.var(nvars, i)) for i in range(nvars)],
    )


def single_chart_ideal(gens, nvars, mu, E_vars=()):
    return AffineMarkedIdeal([plane_chart(gens, nvars, E_vars)], [], mu, [])
