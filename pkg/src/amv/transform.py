"""Blowing up affine marked ideals chart by chart.

Two representations are supported.  The chart form follows the doubling
construction: a chart in K^n blown up along a centre with n - k parameters
becomes a chart in K^(2n-k) cut out by the blow-up equations.  The
coordinate form (used by the resolution driver) blows up a coordinate
subspace by the monomial substitution x_j -> x_i0 * x_j.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional

from .chart import (
    AffineMarkedIdeal,
    Chart,
    TransitionMap,
    compute_data_vector,
    determinant,
    is_defined_over,
    jacobian,
)
from .errors import ConsistencyError, DivisionError, InadmissibleCentre, InputError
from .ideal import rewrite_generators
from .poly import RationalMapEntry, SparsePoly, compose_rational


@dataclass
class ChartCentre:
    """Centre inside one chart: params u_1..u_{n-k}; the first num_X_eqns of
    them are the chart's own X equations.  f_sub localizes further."""

    params: List[SparsePoly]
    f_sub: Optional[SparsePoly] = None


@dataclass
class CentreSpec:
    per_chart: Dict[str, Optional[ChartCentre]] = field(default_factory=dict)

    def for_chart(self, cid):
        return self.per_chart.get(cid)

    def is_empty(self):
        return not any(self.per_chart.values())


@dataclass
class BlowupRecord:
    centre: object
    children: Dict[str, object]  # new chart id -> (old chart id, i0 or None)
    invariant: object = None
    year: int = 0
    step: str = ""


def G_bound(n, d, mu):
    return (2 * d * mu) ** (2 ** (n + 2))


# coordinate form

def coordinate_blowup_substitution(nvars, centre_vars, i0):
    """Images of x_0..x_{n-1} in the i0-chart of the blow-up of V(x_S)."""
    if i0 not in centre_vars:
        raise InputError("chart index must be one of the centre variables")
    xi = SparsePoly.var(nvars, i0)
    return [
        xi * SparsePoly.var(nvars, j) if (j in centre_vars and j != i0) else SparsePoly.var(nvars, j)
        for j in range(nvars)
    ]


def controlled_transform(gens, mu, exc_index, substitution, modified=None):
    """Pullbacks of the generators divided exactly by x_exc^mu.

    `modified`, if given, replaces gens by the rewritten generators
    (monomial-in-centre form) before pulling back."""
    src = modified if modified is not None else gens
    out = []
    for g in src:
        if not g:
            out.append(g)
            continue
        pb = g.compose(substitution)
        exc = SparsePoly.var(pb.nvars, exc_index, mu)
        try:
            q = pb.exact_div(exc)
        except DivisionError:
            raise InadmissibleCentre(
                f"inadmissible centre: pullback of {g.to_str()} is not divisible by"
                f" the exceptional divisor to the power {mu}"
            )
        if q * exc != pb:
            raise ConsistencyError("controlled transform failed re-multiplication check")
        out.append(q)
    return out


# chart form

def update_divisors(E_list, centre_params, i0, n, new_tag):
    """E' after blowing up in the i0-chart (1-based i0).

    Divisors that are centre parameters u_j = x_v are converted to the new
    coordinate x_{j+n}; the one equal to u_i0 has empty strict transform in
    this chart.  The new exceptional divisor x_{i0+n} is appended last."""
    out = []
    as_param = {}
    for j, u in enumerate(centre_params, start=1):
        if u.is_monomial() and u.degree() == 1:
            (e, c), = u.terms.items()
            if c == 1:
                as_param[e.index(1)] = j
    for v, tag in E_list:
        j = as_param.get(v)
        if j is None:
            out.append((v, tag))
        elif j != i0:
            out.append((j + n - 1, tag))
    out.append((i0 + n - 1, new_tag))
    return out


def _completion(params, nvars, old_n):
    """Pick old coordinates completing `params` to a regular system."""
    need = nvars - len(params)
    for combo in combinations(range(old_n), need):
        cand = params + [SparsePoly.var(nvars, i) for i in combo]
        jt = [list(col) for col in zip(*jacobian(cand, nvars))]
        if determinant(jt):
            return cand
    raise ConsistencyError("could not complete blown-up parameters to a regular system")


def blowup_chart(c, centre, i0, mu, new_tag, alpha=None, beta=None, r_cap=8):
    """Blow up one chart in the u_i0-chart (1-based i0); returns a Chart,
    flagged empty when i0 indexes an equation of X."""
    params = list(centre.params)
    n = c.nvars
    nk = len(params)
    nx = c.num_X_eqns
    if not 1 <= i0 <= nk:
        raise InputError(f"i0={i0} out of range 1..{nk}")
    if nk < nx or any(params[j] != c.params_u[j] for j in range(nx)):
        raise InputError("centre parameters must start with the chart's X equations")
    k = n - nk
    if k > n - nx:
        raise InputError("centre dimension exceeds dim X")
    n2 = 2 * n - k
    alpha = c.alpha if alpha is None else alpha
    beta = c.beta if beta is None else beta
    f_sub = centre.f_sub if centre.f_sub is not None else c.f_loc
    if i0 <= nx:
        return Chart(alpha, beta, n2, f_sub.embed(n2), [], 0, [], [], empty=True)
    up = [u.embed(n2) for u in params]
    xnew = [SparsePoly.var(n2, n + j) for j in range(nk)]  # x_{j+n}, j = 1..nk
    ui0 = up[i0 - 1]
    eqs = []
    for j in range(1, nk + 1):
        if j != i0:
            eqs.append(up[j - 1] - ui0 * xnew[j - 1])
    eqs.append(ui0 - xnew[i0 - 1])
    for j in range(1, nx + 1):
        eqs.append(xnew[j - 1])
    completing = [xnew[j - 1] for j in range(nx + 1, nk + 1)]
    new_params = _completion(eqs + completing, n2, n)

    # controlled transform through the modified generators
    cert = rewrite_generators(
        [g for g in c.gens if g], params[nx:], params[:nx], mu, c.f_loc, r_cap=r_cap
    )
    new_gens = []
    for ent in cert.entries:
        acc = SparsePoly.zero(n2)
        for a, h in ent["h_centre"].items():
            term = h.embed(n2)
            for pos, e in enumerate(a):
                j = nx + 1 + pos
                if e and j != i0:
                    term = term * xnew[j - 1] ** e
            acc = acc + term
        new_gens.append(acc)
    if any(not g for g in c.gens):
        new_gens.append(SparsePoly.zero(n2))

    E_new = update_divisors(c.E_list, params, i0, n, new_tag)
    pm = _lift_entries(c, centre, i0, c.param_map) if c.param_map is not None else None
    return Chart(
        alpha=alpha,
        beta=beta,
        nvars=n2,
        f_loc=f_sub.embed(n2),
        params_u=new_params,
        num_X_eqns=len(eqs),
        E_list=E_new,
        gens=new_gens,
        param_map=pm,
        root_id=c.root_id or c.id,
    )


def _lift_entries(chart_b_old, centre_b, i0b, first):
    """Coordinates of the new chart over B given images of B's old coordinates."""
    nk = len(centre_b.params)
    nx = chart_b_old.num_X_eqns
    u_img = [compose_rational(u, first) for u in centre_b.params]
    nv = first[0].num.nvars
    out = list(first)
    for j in range(1, nk + 1):
        if j <= nx:
            out.append(RationalMapEntry(SparsePoly.zero(nv)))
        elif j == i0b:
            out.append(u_img[i0b - 1])
        else:
            a, b = u_img[j - 1], u_img[i0b - 1]
            out.append(RationalMapEntry(a.num * b.den, a.den * b.num))
    return out


def blowup_affine_marked_ideal(T, centre, check=True, samples=10, seed=0):
    """Blow up every chart met by the centre; returns the new AffineMarkedIdeal."""
    if centre is None or (isinstance(centre, CentreSpec) and centre.is_empty()):
        return T
    gamma = compute_data_vector(T)
    new_tag = 1 + max([t for c in T.charts for _, t in c.E_list] or [-1])
    next_alpha = 1 + max(c.alpha for c in T.charts)
    charts = []
    origin = {}  # new id -> (old chart, i0 or None)
    for c in T.charts:
        cc = centre.for_chart(c.id)
        if cc is None:
            nc = Chart(next_alpha, c.beta, c.nvars, c.f_loc, list(c.params_u), c.num_X_eqns,
                       list(c.E_list), list(c.gens), c.param_map, c.root_id, c.empty)
            next_alpha += 1
            charts.append(nc)
            origin[nc.id] = (c, None)
            continue
        for i0 in range(c.num_X_eqns + 1, len(cc.params) + 1):
            nc = blowup_chart(c, cc, i0, T.mu, new_tag, alpha=next_alpha, beta=c.beta)
            next_alpha += 1
            if nc.empty:
                continue
            charts.append(nc)
            origin[nc.id] = (c, i0)
    transitions = []
    for a in charts:
        for b in charts:
            if a is b:
                continue
            ca, ia = origin[a.id]
            cb, ib = origin[b.id]
            if ca.id == cb.id:
                first = [RationalMapEntry(SparsePoly.var(a.nvars, i)) for i in range(ca.nvars)]
            else:
                old = T.transition(ca.id, cb.id)
                if old is None:
                    continue
                first = [
                    RationalMapEntry(e.num.embed(a.nvars), e.den.embed(a.nvars)) for e in old.entries
                ]
            if ib is None:
                entries = first
            else:
                entries = _lift_entries(cb, centre.for_chart(cb.id), ib, first)
            transitions.append(TransitionMap(a.id, b.id, entries))
    rec = BlowupRecord(
        centre=centre,
        children={cid: (o.id, i0) for cid, (o, i0) in origin.items()},
        year=len(T.history) + 1,
    )
    out = AffineMarkedIdeal(charts, transitions, T.mu, list(T.history) + [rec])
    if check:
        check_blowup_laws(T, out, centre, gamma, samples, seed)
    return out


def check_blowup_laws(T, out, centre, gamma=None, samples=10, seed=0):
    """Degree law, chart-count law and defined-over; raises ConsistencyError."""
    gamma = gamma or compute_data_vector(T)
    g2 = compute_data_vector(out)
    d = gamma.d
    for cc in centre.per_chart.values():
        if cc is not None:
            d = max([d] + [u.degree() for u in cc.params if u])
    if g2.d > G_bound(gamma.n, d, gamma.mu):
        raise ConsistencyError(f"degree law violated: {g2.d} > G({gamma.n},{d},{gamma.mu})")
    if g2.q > max(gamma.n, 1) * gamma.q:
        raise ConsistencyError(f"chart-count law violated: {g2.q} > {gamma.n}*{gamma.q}")
    maps = {cid: old for cid, (old, _) in out.history[-1].children.items()}
    if not is_defined_over(out, T, maps, samples, seed):
        raise ConsistencyError("blow-up output is not defined over its input")
    return g2
