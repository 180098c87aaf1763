"""Groebner-basis oracle: Buchberger, membership certificates, emptiness on
localized charts, generator rewriting and maximal order on a cosupport."""

import os
from fractions import Fraction
from itertools import combinations

from .errors import BudgetExceeded, ConsistencyError, InadmissibleCentre, InputError
from .poly import SparsePoly, monomials_of_degree, order_key

DEFAULT_BUDGET = 10 ** 6


def default_budget():
    env = os.environ.get("AMV_BUDGET_GB_STEPS")
    if env:
        try:
            val = int(env)
        except ValueError:
            raise InputError(f"AMV_BUDGET_GB_STEPS must be an integer, got {env!r}")
        if val <= 0:
            raise InputError("AMV_BUDGET_GB_STEPS must be positive")
        return val
    return DEFAULT_BUDGET


class Budget:
    """Counts reduction steps for one Groebner run."""

    def __init__(self, limit=None):
        self.limit = default_budget() if limit is None else limit
        self.steps = 0

    def tick(self, k=1):
        self.steps += k
        if self.steps > self.limit:
            raise BudgetExceeded(self.limit)


class IdealBasis:
    def __init__(self, generators, monomial_order="degrevlex", is_groebner=False):
        self.generators = list(generators)
        self.monomial_order = monomial_order
        self.is_groebner = is_groebner
        if self.generators:
            n = self.generators[0].nvars
            if any(g.nvars != n for g in self.generators):
                raise InputError("generators live in different rings")

    @property
    def nvars(self):
        return self.generators[0].nvars if self.generators else 0

    def is_unit(self):
        """True iff the ideal is the whole ring (basis must be Groebner)."""
        return any(g and g.is_constant() for g in self.generators)

    def __repr__(self):
        gens = ", ".join(g.to_str() for g in self.generators)
        return f"IdealBasis([{gens}], {self.monomial_order!r}, gb={self.is_groebner})"


# internal elements: mutable-free records for the Buchberger loop

class _Elem:
    __slots__ = ("terms", "lm", "lc", "rep")

    def __init__(self, terms, key, rep=None):
        self.terms = terms
        self.lm = max(terms, key=key)
        self.lc = terms[self.lm]
        self.rep = rep


def _divides(a, b):
    return all(x <= y for x, y in zip(a, b))


def _lcm(a, b):
    return tuple(max(x, y) for x, y in zip(a, b))


def _sub_scaled_shift(p, g, shift, q):
    """p -= q * x^shift * g (in place on dict p)."""
    for e, c in g.items():
        m = tuple(x + y for x, y in zip(e, shift))
        v = p.get(m, 0) - q * c
        if v:
            p[m] = v
        else:
            p.pop(m, None)


def _rep_update(rep, g_rep, shift, q, nvars):
    mono = SparsePoly.monomial(shift, q)
    return [r + mono * gr for r, gr in zip(rep, g_rep)]


def _reduce(terms, basis, key, budget, rep=None, nvars=0, full=True):
    """Normal form of `terms` modulo basis elements.  If rep is given (a
    cofactor vector), it is updated so that terms_in = rem + sum rep_i gen_i
    stays true; the returned rep is the accumulated quotient."""
    p = dict(terms)
    rem = {}
    while p:
        lm = max(p, key=key)
        c = p[lm]
        for g in basis:
            if _divides(g.lm, lm):
                shift = tuple(x - y for x, y in zip(lm, g.lm))
                q = c / g.lc
                _sub_scaled_shift(p, g.terms, shift, q)
                if rep is not None:
                    rep = _rep_update(rep, g.rep, shift, q, nvars)
                budget.tick()
                break
        else:
            if not full:
                rem.update(p)
                return rem, rep
            rem[lm] = c
            del p[lm]
    return rem, rep


def _drop_monomial_multiples(elems):
    """Remove elements every term of which is divisible by a monomial element;
    they lie in the ideal the monomials generate."""
    monos = []
    for el in elems:
        if len(el.terms) == 1 and not any(_divides(m, el.lm) for m in monos):
            monos = [m for m in monos if not _divides(el.lm, m)] + [el.lm]
    if not monos:
        return elems
    out, kept = [], set()
    for el in elems:
        if len(el.terms) == 1:
            if el.lm in monos and el.lm not in kept:
                kept.add(el.lm)
                out.append(el)
        elif not all(any(_divides(m, e) for m in monos) for e in el.terms):
            out.append(el)
    return out


def _buchberger(polys, order, budget, track=False, stop_on_unit=False):
    key = order_key(order)
    polys = [p for p in polys if p]
    if not polys:
        return []
    nvars = polys[0].nvars
    k = len(polys)
    elems = []
    for i, p in enumerate(polys):
        rep = None
        if track:
            rep = [SparsePoly.zero(nvars) for _ in range(k)]
            rep[i] = SparsePoly.one(nvars)
        elems.append(_Elem(dict(p.terms), key, rep))
    elems = _drop_monomial_multiples(elems)
    if all(len(el.terms) == 1 for el in elems):
        # S-polynomials of monomials vanish, so the minimal ones are a basis
        return _interreduce(elems, key, budget, track, nvars, k)

    basis = []
    pairs = []

    def add(el):
        # Gebauer-Moeller style update, kept simple: chain criterion on pairs
        j = len(basis)
        basis.append(el)
        for i in range(j):
            pairs.append((i, j))

    for el in elems:
        if stop_on_unit and not any(el.lm):
            return [el]
        add(el)

    done = set()
    while pairs:
        # normal selection strategy: smallest lcm first
        pairs.sort(key=lambda ij: key(_lcm(basis[ij[0]].lm, basis[ij[1]].lm)), reverse=True)
        i, j = pairs.pop()
        gi, gj = basis[i], basis[j]
        lcm = _lcm(gi.lm, gj.lm)
        done.add((i, j))
        # product criterion
        if all(a == 0 or b == 0 for a, b in zip(gi.lm, gj.lm)):
            continue
        # chain criterion
        skip = False
        for t, gt in enumerate(basis):
            if t in (i, j) or not _divides(gt.lm, lcm):
                continue
            if (min(i, t), max(i, t)) in done and (min(j, t), max(j, t)) in done:
                skip = True
                break
        if skip:
            continue
        si = tuple(a - b for a, b in zip(lcm, gi.lm))
        sj = tuple(a - b for a, b in zip(lcm, gj.lm))
        s = {}
        _sub_scaled_shift(s, gi.terms, si, -1 / gi.lc)
        _sub_scaled_shift(s, gj.terms, sj, 1 / gj.lc)
        rep = None
        if track:
            rep = [SparsePoly.zero(nvars) for _ in range(k)]
            rep = _rep_update(rep, gi.rep, si, 1 / gi.lc, nvars)
            rep = _rep_update(rep, gj.rep, sj, -1 / gj.lc, nvars)
        budget.tick()
        if not s:
            continue
        if track:
            # s = sum rep*gens ; reduce: s = rem + quot, so rem = s - quot
            quot = [SparsePoly.zero(nvars) for _ in range(k)]
            rem, quot = _reduce(s, basis, key, budget, quot, nvars)
            if rem:
                rep = [a - b for a, b in zip(rep, quot)]
        else:
            rem, _ = _reduce(s, basis, key, budget)
        if rem:
            el = _Elem(rem, key, rep)
            if stop_on_unit and not any(el.lm):
                return [el]
            add(el)
    return _interreduce(basis, key, budget, track, nvars, k)


def _interreduce(basis, key, budget, track, nvars, k):
    # drop elements whose leading monomial is divisible by another's
    keep = []
    for i, g in enumerate(basis):
        redundant = False
        for j, h in enumerate(basis):
            if i == j:
                continue
            if _divides(h.lm, g.lm) and (h.lm != g.lm or j < i):
                redundant = True
                break
        if not redundant:
            keep.append(g)
    out = []
    for i, g in enumerate(keep):
        others = keep[:i] + keep[i + 1:]
        if track:
            quot = [SparsePoly.zero(nvars) for _ in range(k)]
            rem, quot = _reduce(g.terms, others, key, budget, quot, nvars)
            rep = [a - b for a, b in zip(g.rep, quot)]
        else:
            rem, _ = _reduce(g.terms, others, key, budget)
            rep = None
        el = _Elem(rem, key, rep)
        inv = 1 / el.lc
        el.terms = {e: c * inv for e, c in el.terms.items()}
        if track:
            el.rep = [r.scale(inv) for r in el.rep]
        el.lc = Fraction(1)
        out.append(el)
    out.sort(key=lambda el: key(el.lm), reverse=True)
    return out


def buchberger(b, budget=None, stop_on_unit=False):
    """Reduced Groebner basis of b (monic, sorted by decreasing leading term)."""
    if isinstance(b, (list, tuple)):
        b = IdealBasis(b)
    if b.is_groebner:
        return b
    bud = budget if isinstance(budget, Budget) else Budget(budget)
    gens = [g for g in b.generators if g]
    if not gens:
        return IdealBasis([], b.monomial_order, True)
    nvars = gens[0].nvars
    elems = _buchberger(gens, b.monomial_order, bud, stop_on_unit=stop_on_unit)
    if stop_on_unit and len(elems) == 1 and not any(elems[0].lm):
        return IdealBasis([SparsePoly.one(nvars)], b.monomial_order, True)
    return IdealBasis(
        [SparsePoly(nvars, el.terms, _trusted=True) for el in elems], b.monomial_order, True
    )


def groebner(gens, order="degrevlex", budget=None):
    return buchberger(IdealBasis(gens, order), budget).generators


def normal_form(f, gb):
    """Remainder of f modulo a Groebner basis."""
    key = order_key(gb.monomial_order)
    nvars = f.nvars
    elems = [_Elem(dict(g.terms), key) for g in gb.generators if g]
    rem, _ = _reduce(f.terms, elems, key, Budget())
    return SparsePoly(nvars, rem, _trusted=True)


def is_member(f, gens, budget=None):
    if not f:
        return True
    gb = buchberger(IdealBasis(gens), budget)
    return not normal_form(f, gb)


def is_groebner_basis(b):
    """Direct S-polynomial test."""
    key = order_key(b.monomial_order)
    gens = [g for g in b.generators if g]
    elems = [_Elem(dict(g.terms), key) for g in gens]
    bud = Budget()
    for gi, gj in combinations(elems, 2):
        lcm = _lcm(gi.lm, gj.lm)
        s = {}
        _sub_scaled_shift(s, gi.terms, tuple(a - b for a, b in zip(lcm, gi.lm)), -1 / gi.lc)
        _sub_scaled_shift(s, gj.terms, tuple(a - b for a, b in zip(lcm, gj.lm)), 1 / gj.lc)
        rem, _ = _reduce(s, elems, key, bud)
        if rem:
            return False
    return True


class MembershipResult:
    def __init__(self, member, cofactors=None, normal_form=None):
        self.member = member
        self.cofactors = cofactors
        self.normal_form = normal_form

    def __bool__(self):
        return self.member

    def __repr__(self):
        if self.member:
            return f"MembershipResult(member, cofactors={[c.to_str() for c in self.cofactors]})"
        return f"MembershipResult(not member, normal_form={self.normal_form.to_str()})"


def membership_with_cofactors(f, b, budget=None):
    """Certificate f = sum h_k g_k over the ORIGINAL generators of b, or the
    nonzero normal form when f is not in the ideal."""
    if isinstance(b, (list, tuple)):
        b = IdealBasis(b)
    gens = list(b.generators)
    nvars = f.nvars
    k = len(gens)
    if not f:
        return MembershipResult(True, [SparsePoly.zero(nvars)] * k)
    live = [i for i, g in enumerate(gens) if g]
    if not live:
        return MembershipResult(False, normal_form=f)
    bud = budget if isinstance(budget, Budget) else Budget(budget)
    key = order_key(b.monomial_order)
    elems = _buchberger([gens[i] for i in live], b.monomial_order, bud, track=True)
    quot = [SparsePoly.zero(nvars) for _ in live]
    rem, quot = _reduce(f.terms, elems, key, bud, quot, nvars)
    if rem:
        return MembershipResult(False, normal_form=SparsePoly(nvars, rem, _trusted=True))
    cof = [SparsePoly.zero(nvars) for _ in range(k)]
    for pos, i in enumerate(live):
        cof[i] = quot[pos]
    check = SparsePoly.zero(nvars)
    for h, g in zip(cof, gens):
        check = check + h * g
    if check != f:
        raise ConsistencyError("membership certificate failed re-expansion")
    return MembershipResult(True, cof)


def is_empty_on_chart(b, f_loc=None, budget=None):
    """True iff V(b) does not meet {f_loc != 0} (Rabinowitsch test)."""
    gens = list(b.generators) if isinstance(b, IdealBasis) else list(b)
    gens = [g for g in gens if g]
    if not gens:
        return False
    if any(g.is_constant() for g in gens):
        return True
    n = gens[0].nvars
    if f_loc is None or f_loc.is_constant():
        if f_loc is not None and not f_loc:
            raise InputError("f_loc must be nonzero")
        gb = buchberger(IdealBasis(gens), budget, stop_on_unit=True)
        return gb.is_unit()
    if n + 1 > 12:
        raise InputError("no room for the localization variable")
    ext = [g.embed(n + 1) for g in gens]
    z = SparsePoly.var(n + 1, n)
    ext.append(SparsePoly.one(n + 1) - z * f_loc.embed(n + 1))
    gb = buchberger(IdealBasis(ext), budget, stop_on_unit=True)
    return gb.is_unit()


def saturate(gens, f, budget=None):
    """Generators of (gens) : f^infinity via elimination of a new variable."""
    gens = [g for g in gens if g]
    if not gens:
        return []
    n = gens[0].nvars
    if f.is_constant():
        return groebner(gens, budget=budget)
    ext = [SparsePoly.var(n + 1, n) * f.embed(n + 1) - 1] + [g.embed(n + 1) for g in gens]
    # block order eliminating the new variable, moved to the front
    moved = [_move_last_first(p) for p in ext]
    gb = buchberger(IdealBasis(moved, ("block", 1)), budget)
    out = []
    for g in gb.generators:
        if not any(e[0] for e in g.terms):
            out.append(SparsePoly(n, {e[1:]: c for e, c in g.terms.items()}, _trusted=True))
    return out


def _move_last_first(p):
    n = p.nvars
    return SparsePoly(n, {(e[-1],) + e[:-1]: c for e, c in p.terms.items()}, _trusted=True)


def ideals_equal_on(gens_a, gens_b, f_loc=None, budget=None):
    """Equality of the ideals after localizing at f_loc."""
    n = (gens_a or gens_b)[0].nvars if (gens_a or gens_b) else 0
    if f_loc is None:
        f_loc = SparsePoly.one(n)
    sa = saturate(gens_a, f_loc, budget) if any(gens_a) else []
    sb = saturate(gens_b, f_loc, budget) if any(gens_b) else []
    return all(is_member(g, sb, budget) if sb else not g for g in sa) and all(
        is_member(g, sa, budget) if sa else not g for g in sb
    )


# generator rewriting (certificate that a centre lies in the cosupport)

class RewriteCertificate:
    def __init__(self, entries, bound, bound_ok):
        self.entries = entries  # one dict per generator
        self.bound = bound
        self.bound_ok = bound_ok

    def modified_generators(self, ubar):
        """The monomial-in-ubar parts gbar_i = sum h_ia ubar^a."""
        out = []
        for ent in self.entries:
            n = ent["g"].nvars
            acc = SparsePoly.zero(n)
            for a, h in ent["h_centre"].items():
                m = h
                for u, k in zip(ubar, a):
                    if k:
                        m = m * u ** k
                acc = acc + m
            out.append(acc)
        return out


def rewrite_bound(n, d, mu):
    return d * (2 * d * mu) ** (2 ** (n + 1))


def rewrite_generators(g, center_params, ambient_params, mu, f_loc=None, r_cap=8, budget=None):
    """Write g_i f^{r_i} = sum_a h_ia ubar^a + sum_j h_ij u_j with |a| = mu.

    center_params are the ubar cutting the centre inside X, ambient_params
    the u_j cutting out X.  Raises InadmissibleCentre if no r <= r_cap works.
    """
    g = list(g)
    if not g:
        return RewriteCertificate([], 0, True)
    n = g[0].nvars
    if f_loc is None:
        f_loc = SparsePoly.one(n)
    ubar = list(center_params)
    uX = list(ambient_params)
    alphas = monomials_of_degree(len(ubar), mu) if ubar else ([()] if mu == 0 else [])
    mon_gens = []
    for a in alphas:
        m = SparsePoly.one(n)
        for u, k in zip(ubar, a):
            if k:
                m = m * u ** k
        mon_gens.append(m)
    basis = IdealBasis(mon_gens + uX)
    d = max([p.degree() for p in g + ubar + uX + [f_loc] if p] or [0])
    bound = rewrite_bound(n, d, mu)
    entries = []
    bound_ok = True
    for gi in g:
        cert = None
        f_pow = SparsePoly.one(n)
        for r in range(0, r_cap + 1):
            target = gi * f_pow
            res = membership_with_cofactors(target, basis, budget)
            if res.member:
                cert = (r, res.cofactors)
                break
            f_pow = f_pow * f_loc
            if f_loc.is_constant():
                break
        if cert is None:
            raise InadmissibleCentre(
                f"inadmissible centre: generator {gi.to_str()} is not in the {mu}-th power"
                f" of the centre ideal (tried f_loc powers up to {r_cap})"
            )
        r, cof = cert
        h_centre = {a: cof[i] for i, a in enumerate(alphas) if cof[i]}
        h_X = {j: cof[len(alphas) + j] for j in range(len(uX)) if cof[len(alphas) + j]}
        degs = [r] + [h.degree() for h in cof if h]
        if max(degs) > bound:
            bound_ok = False
        entries.append({"g": gi, "r": r, "h_centre": h_centre, "h_X": h_X})
    if not bound_ok:
        raise ConsistencyError("rewrite certificate exceeds the effective degree bound")
    return RewriteCertificate(entries, bound, bound_ok)


# derivative ideals and maximal order

def derivative_step(gens, deriv_vars=None, prune=True):
    """gens together with all first partials (in deriv_vars)."""
    gens = [g for g in gens if g] if prune else list(gens)
    if not gens:
        return []
    n = gens[0].nvars
    dv = range(n) if deriv_vars is None else deriv_vars
    out = list(gens)
    for g in gens:
        for j in dv:
            p = g.partial(j)
            if p or not prune:
                out.append(p)
    return out


def derivative_power(gens, k, deriv_vars=None, budget=None):
    """Groebner basis of D^k(gens)."""
    cur = groebner([g for g in gens if g], budget=budget)
    for _ in range(k):
        if any(g.is_constant() for g in cur):
            break
        cur = groebner(derivative_step(cur, deriv_vars), budget=budget)
    return cur


def cosupport_ideal(gens, control, deriv_vars=None, budget=None):
    """Ideal whose zero set is {ord >= control}: D^{control-1}(gens)."""
    if control <= 0:
        n = gens[0].nvars if gens else 0
        return [SparsePoly.zero(n)] if n else []
    return derivative_power(gens, control - 1, deriv_vars, budget)


def max_order(gens, f_loc=None, locus=(), deriv_vars=None, budget=None, cap=None):
    """Largest k with V(D^{k-1}(gens) + locus) nonempty on {f_loc != 0}.

    Returns 0 when V(gens + locus) is already empty and INF-like large
    values are prevented by `cap` (raises ConsistencyError if reached)."""
    gens = [g for g in gens if g]
    locus = [g for g in locus if g]
    if not gens:
        raise InputError("max_order needs a nonzero generator")
    cur = groebner(gens, budget=budget)
    k = 0
    while True:
        if is_empty_on_chart(cur + locus, f_loc, budget):
            return k
        k += 1
        if cap is not None and k > cap:
            raise ConsistencyError(f"order exceeded cap {cap}")
        cur = groebner(derivative_step(cur, deriv_vars), budget=budget)


def max_order_on_cosupport(chart, gens, budget=None):
    """Maximal order of gens over the chart's U (ambient partial derivatives)."""
    eqs = list(chart.params_u[: chart.num_X_eqns])
    return max_order(gens, chart.f_loc, locus=eqs, budget=budget)
