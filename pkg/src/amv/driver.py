"""Resolution driver.

Works on compact leaf charts: every leaf is a copy of affine n-space with
an open set f_loc != 0, a list of divisors (tag, h) and a stack of frame
states.  A frame is one level of the recursion: its ambient Y is the
coordinate subspace V(x_p : p in P) and its ideal is stored as a list of
(generators, control) components with generators free of the P variables.
Blow-ups of coordinate centres use the monomial substitution, so the number
of variables never grows; divisors are materialized as extra coordinates
only when a leaf is exported to the chart model.
"""

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Tuple

from .chart import AffineMarkedIdeal, Chart, DataVector, chart_id, determinant, jacobian
from .errors import ConsistencyError, InputError, UnsupportedError, YearLimitExceeded
from .ideal import cosupport_ideal, groebner, is_empty_on_chart, max_order
from .invariants import (
    BOTTOM,
    Derivation,
    InvariantVector,
    capped_law_bound,
    compare_inv,
    derivative_ideal,
    maximal_contact_candidates,
    monomial_J,
    prune_zeros,
    weighted_sum,
)
from .poly import INF, RationalMapEntry, SparsePoly
from .transform import G_bound, controlled_transform, coordinate_blowup_substitution

DEFAULT_YEAR_LIMIT = 200
LABELS = ("BASE", "ZERO", "I-A", "I-B", "IIA", "IIB")


# frames and leaves

@dataclass
class Frame:
    fid: int
    kind: str  # "II" (general marked ideal) or "I" (maximal order)
    thr: int  # divisors with tag >= thr belong to this frame's E
    label: str
    E0: frozenset = frozenset()  # "I" frames: tags counted by s


@dataclass(frozen=True)
class FrameState:
    P: frozenset
    comps: tuple  # ((gens tuple, control), ...)

    def gens(self):
        return [g for gs, _ in self.comps for g in gs if g]


class Leaf:
    _serial = 0

    def __init__(self, name, n, f_loc, E, frames, parent=None, to_parent=None, from_parent=None,
                 year=0, factors=()):
        self.name = name
        self.n = n
        self.f_loc = f_loc
        self.E = tuple(E)
        self.frames = dict(frames)
        self.parent = parent
        self.to_parent = to_parent  # parent coordinates as functions of ours
        self.from_parent = from_parent  # our coordinates as functions of the parent's
        self.year = year
        # polynomials that may appear as common factors in composed maps
        self.factors = tuple(factors)
        self.serial = Leaf._serial
        Leaf._serial += 1

    def __repr__(self):
        return f"Leaf({self.name})"

    def copy(self, name, **kw):
        d = dict(n=self.n, f_loc=self.f_loc, E=self.E, frames=self.frames, parent=self,
                 to_parent=_identity(self.n), from_parent=_identity(self.n), year=self.year,
                 factors=self.factors)
        d.update(kw)
        return Leaf(name, **d)

    def free_vars(self, P):
        return [v for v in range(self.n) if v not in P]

    def ancestors(self):
        out = [self]
        while out[-1].parent is not None:
            out.append(out[-1].parent)
        return out


def _identity(n):
    return [RationalMapEntry(SparsePoly.var(n, i)) for i in range(n)]


def _coord_index(h):
    """v if h is a nonzero multiple of x_v."""
    if h.is_monomial() and h.degree() == 1:
        (e, _), = h.terms.items()
        return e.index(1)
    return None


def order_along_poly(g, h):
    """Largest e with h^e | g (g nonzero, h nonconstant)."""
    v = _coord_index(h)
    if v is not None:
        return g.order_along(v)
    e = 0
    cur = g
    while True:
        try:
            q = cur.exact_div(h)
        except Exception:
            return e
        if q * h != cur:
            return e
        cur = q
        e += 1


def split_over(gens, hs):
    """Exponents of the divisors hs and the residual generators."""
    gens = [g for g in gens if g]
    exps = [min(order_along_poly(g, h) for g in gens) for h in hs]
    mono = SparsePoly.one(gens[0].nvars)
    for h, e in zip(hs, exps):
        if e:
            mono = mono * h ** e
    res = [g.exact_div(mono) for g in gens]
    if any(r * mono != g for r, g in zip(res, gens)):
        raise ConsistencyError("split-recombine check failed")
    return exps, res, mono


def _partials(n, free):
    ops = []
    for v in free:
        coeffs = [SparsePoly.zero(n)] * n
        coeffs[v] = SparsePoly.one(n)
        ops.append(Derivation(coeffs, f"d/dx{v + 1}"))
    return ops


def _numerator_sub(g, v, rest, c):
    """Numerator of g with x_v -> (x_v - rest)/c, times c^deg_v(g)."""
    if c.is_constant():
        n = g.nvars
        img = [SparsePoly.var(n, i) for i in range(n)]
        img[v] = (SparsePoly.var(n, v) - rest).scale(Fraction(1) / c.constant_term())
        return g.compose(img)
    parts = g.coefficients_in(v)
    D = max(parts)
    xv = SparsePoly.var(g.nvars, v)
    out = SparsePoly.zero(g.nvars)
    for k, coeff in parts.items():
        out = out + coeff * (xv - rest) ** k * c ** (D - k)
    return out


def _normalize(p):
    return p.primitive() if p else p


def _cancel(entry, factors):
    """Cancel common variable and known factors from num/den."""
    num, den = entry.num, entry.den
    if den.is_constant():
        return entry
    n = num.nvars
    cands = [SparsePoly.var(n, i) for i in range(n)] + [f for f in factors if not f.is_constant()]
    changed = True
    while changed:
        changed = False
        for f in cands:
            if den.is_constant():
                break
            try:
                a, b = num.exact_div(f), den.exact_div(f)
            except Exception:
                continue
            if a * f == num and b * f == den:
                num, den = a, b
                changed = True
    if den.is_constant():
        return RationalMapEntry(num.scale(Fraction(1) / den.constant_term()))
    return RationalMapEntry(num, den)


class HypCentre:
    """Centre given by one non-coordinate divisor of the ambient space."""

    def __init__(self, h):
        self.h = h

    def __iter__(self):
        return iter(())

    def __repr__(self):
        return f"V({self.h.to_str()})"


# per-step bookkeeping

@dataclass
class LawLog:
    entries: list = field(default_factory=list)

    def record(self, name, value, bound):
        # bound None: too large to form, see capped_law_bound
        ok = bound is None or value <= bound
        self.entries.append((name, value, bound, ok))
        if not ok:
            raise ConsistencyError(f"{name} law violated: {value} > {bound}")

    def violations(self):
        return [e for e in self.entries if not e[3]]

    def count(self, name):
        return sum(1 for e in self.entries if e[0] == name)


@dataclass
class YearRecord:
    year: int
    label: str
    path: str
    centres: Dict[str, list]
    leaves: list
    data_vector: tuple
    invariants: list = field(default_factory=list)
    monotonicity: dict = field(default_factory=dict)

    def to_json(self, with_invariants=False):
        d = {
            "year": self.year,
            "step": self.label,
            "path": self.path,
            "centres": {k: _centre_json(vs) for k, vs in sorted(self.centres.items())},
            "charts": [leaf.name for leaf in self.leaves],
            "data_vector": list(self.data_vector),
        }
        if with_invariants:
            d["invariants"] = self.invariants
            d["monotonicity"] = self.monotonicity
        return d


def _centre_json(S):
    if isinstance(S, HypCentre):
        return [S.h.to_str()]
    return [f"x{v + 1}" for v in S]


@dataclass
class ResolutionTree:
    root: object
    nodes: List[YearRecord]
    final_leaves: list
    mu: int
    laws: LawLog
    notes: list = field(default_factory=list)

    @property
    def years(self):
        return len(self.nodes)

    def final(self):
        """The final leaves as an AffineMarkedIdeal."""
        return export_leaves(self.final_leaves, self.mu, self.years)[0]

    def final_snc(self):
        """True when the final divisors are certified normal crossings."""
        return export_leaves(self.final_leaves, self.mu, self.years)[1]

    def centre_sequence(self):
        return [(r.label, r.path, r.centres) for r in self.nodes]


# the driver

class Resolver:
    def __init__(self, gens, nvars, mu, E_vars=(), f_loc=None, year_limit=DEFAULT_YEAR_LIMIT,
                 check_monotone=False, samples=25, seed=0, check_overlaps=False, emit_invariants=False):
        if mu < 1:
            raise InputError("control must be positive")
        if nvars < 1:
            raise InputError("need at least one variable")
        self.n = nvars
        self.mu = mu
        self.year = 0
        self.year_limit = year_limit
        self.tag_count = len(E_vars)
        self.stack: List[Frame] = []
        self.fid = 0
        self.records: List[YearRecord] = []
        self.laws = LawLog()
        self.check_monotone = check_monotone
        self.samples = samples
        self.rng = random.Random(seed)
        self.check_overlaps = check_overlaps
        self.emit_invariants = emit_invariants
        self.notes = []
        # leaves are never mutated, so per-(leaf serial, frame) results
        # can be reused across iterations
        self._cos_cache = {}
        self._active_cache = {}
        self._split_cache = {}
        self._strata_cache = {}
        f_loc = f_loc if f_loc is not None else SparsePoly.one(nvars)
        E = [(t, SparsePoly.var(nvars, v)) for t, v in enumerate(E_vars)]
        top = self._push("II", 0, "IIA")
        gens = tuple(g for g in gens)
        root = Leaf("c0", nvars, f_loc, E, {top.fid: FrameState(frozenset(), ((gens, mu),))})
        self.root = root
        self.leaves = [root]

    # frame stack

    def _push(self, kind, thr, label, E0=frozenset()):
        f = Frame(self.fid, kind, thr, label, E0)
        self.fid += 1
        self.stack.append(f)
        return f

    def _pop(self, frame):
        assert self.stack[-1] is frame
        self.stack.pop()
        self.leaves = [self._drop_frame(leaf, frame) for leaf in self.leaves]

    def _drop_frame(self, leaf, frame):
        if frame.fid not in leaf.frames:
            return leaf
        frames = {k: v for k, v in leaf.frames.items() if k != frame.fid}
        new = Leaf(leaf.name, leaf.n, leaf.f_loc, leaf.E, frames, leaf.parent, leaf.to_parent,
                   leaf.from_parent, leaf.year, leaf.factors)
        return new

    def path(self):
        return ">".join(f.label for f in self.stack)

    # cosupport

    def cosupp_gens(self, leaf, frame):
        key = (leaf.serial, frame.fid)
        if key in self._cos_cache:
            return self._cos_cache[key]
        st = leaf.frames[frame.fid]
        free = leaf.free_vars(st.P)
        out = [SparsePoly.var(leaf.n, p) for p in sorted(st.P)]
        for gens, b in st.comps:
            gens = [g for g in gens if g]
            if gens:
                out.extend(groebner(cosupport_ideal(gens, b, deriv_vars=free)))
        self._cos_cache[key] = out
        return out

    def active(self, leaf, frame):
        if frame.fid not in leaf.frames:
            return False
        key = (leaf.serial, frame.fid)
        if key not in self._active_cache:
            self._active_cache[key] = not is_empty_on_chart(self.cosupp_gens(leaf, frame), leaf.f_loc)
        return self._active_cache[key]

    def E_on(self, leaf, st, thr=None, tags=None):
        """(index in leaf.E, tag, h|_Y) for divisors of the frame that are
        nonconstant on Y."""
        out = []
        for i, (t, h) in enumerate(leaf.E):
            if thr is not None and t < thr:
                continue
            if tags is not None and t not in tags:
                continue
            hy = h.restrict(st.P)
            if hy.is_constant():
                continue
            out.append((i, t, hy))
        return out

    # main entry

    def run(self):
        top = self.stack[0]
        self.step_II(top)
        for leaf in self.leaves:
            if self.active(leaf, top):
                raise ConsistencyError(f"cosupport not empty on {leaf.name} at the end")
        return ResolutionTree(self.root, self.records, self.leaves, self.mu, self.laws, self.notes)

    def step_II(self, F):
        prev = None
        while True:
            A = [leaf for leaf in self.leaves if self.active(leaf, F)]
            if not A:
                return
            P_size = len(A[0].frames[F.fid].P)
            if P_size == self.n:
                self.blow_up("BASE", {leaf.name: sorted(leaf.frames[F.fid].P) for leaf in A})
                continue
            zero = [leaf for leaf in A if not leaf.frames[F.fid].gens()]
            if zero:
                self.blow_up("ZERO", {leaf.name: sorted(leaf.frames[F.fid].P) for leaf in zero})
                continue
            splits = {}
            ordR = 0
            for leaf in A:
                key = (leaf.serial, F.fid)
                if key not in self._split_cache:
                    st = leaf.frames[F.fid]
                    (gens, b), = st.comps
                    Es = self.E_on(leaf, st, thr=F.thr)
                    exps, R, M = split_over(gens, [h for _, _, h in Es])
                    o = max_order(R, leaf.f_loc, locus=self.cosupp_gens(leaf, F),
                                  deriv_vars=leaf.free_vars(st.P))
                    self._split_cache[key] = (exps, R, M, b, o)
                exps, R, M, b, o = self._split_cache[key]
                splits[leaf.name] = (exps, R, M, b)
                ordR = max(ordR, o)
            if ordR == 0:
                self.step_IIB(F, A, splits)
                continue
            if prev is not None and ordR >= prev:
                raise ConsistencyError(f"residual order did not drop: {prev} -> {ordR}")
            prev = ordR
            E0 = frozenset(t for leaf in A for _, t, _ in self.E_on(leaf, leaf.frames[F.fid], thr=F.thr))
            G = self._push("I", F.thr, "IIA", E0)
            new_leaves = []
            for leaf in self.leaves:
                if leaf.name in splits:
                    exps, R, M, b = splits[leaf.name]
                    comps = [(tuple(R), ordR)]
                    if ordR < b:
                        comps.append(((M,), b - ordR))
                    self.laws.record("companion_count", sum(len(g) for g, _ in comps),
                                     capped_law_bound("L_G", len(R), b))
                    st = leaf.frames[F.fid]
                    frames = dict(leaf.frames)
                    frames[G.fid] = FrameState(st.P, tuple(comps))
                    leaf = Leaf(leaf.name, leaf.n, leaf.f_loc, leaf.E, frames, leaf.parent, leaf.to_parent,
                                leaf.from_parent, leaf.year, leaf.factors)
                new_leaves.append(leaf)
            self.leaves = new_leaves
            self.step_I(G)
            self._pop(G)

    def _s_max(self, leaf, G):
        st = leaf.frames[G.fid]
        Es = self.E_on(leaf, st, tags=G.E0)
        cos = self.cosupp_gens(leaf, G)
        dimY = self.n - len(st.P)
        for r in range(min(len(Es), dimY), 0, -1):
            for sub in combinations(Es, r):
                if not is_empty_on_chart(cos + [h for _, _, h in sub], leaf.f_loc):
                    return r
        return 0

    def _boundary(self, leaf, P, tags, s):
        """Generators of the product over s-subsets L of the divisors in
        `tags` of the ideal (h_H : H in L), restricted to V(x_p : p in P).
        Divisors missing Y give a unit factor; a subset of divisors all
        containing Y makes the whole product zero (returns [])."""
        hs = []
        for t, h in leaf.E:
            if t not in tags:
                continue
            hy = h.restrict(sorted(P))
            if hy and hy.is_constant():
                continue
            hs.append(hy)
        gens = [SparsePoly.one(leaf.n)]
        for sub in combinations(hs, s):
            fac = [h for h in sub if h]
            if not fac:
                return []
            gens = groebner(prune_zeros([g * h for g in gens for h in fac]))
        return gens

    def step_I(self, G):
        prev_s = None
        while True:
            A = [leaf for leaf in self.leaves if self.active(leaf, G)]
            if not A:
                return
            s = max(self._s_max(leaf, G) for leaf in A)
            if prev_s is not None and s >= prev_s:
                raise ConsistencyError(f"boundary count did not drop: {prev_s} -> {s}")
            prev_s = s
            G.label = "I-A" if s == 0 else f"I-B(s={s})"
            J = self._push("II", self.tag_count, "IIA")
            new_leaves = []
            for leaf in self.leaves:
                if leaf in A:
                    new_leaves.extend(self._enter_maximal_contact(leaf, G, J, s))
                else:
                    new_leaves.append(leaf)
            self.leaves = new_leaves
            self.step_II(J)
            self._pop(J)

    def _locus_s(self, leaf, G, s):
        st = leaf.frames[G.fid]
        cos = self.cosupp_gens(leaf, G)
        if s == 0:
            return cos
        return groebner(cos + self._boundary(leaf, st.P, G.E0, s))

    def _enter_maximal_contact(self, leaf, G, J, s):
        """Leaves replacing `leaf`, with the frame J set up where needed."""
        locus = self._locus_s(leaf, G, s)
        if is_empty_on_chart(locus, leaf.f_loc):
            return [leaf]
        st = leaf.frames[G.fid]
        (K0, b0) = st.comps[0]
        free = leaf.free_vars(st.P)
        cands = maximal_contact_candidates(list(K0), b0, free_vars=free)
        taken = self._all_P(leaf)
        for cand in cands:
            if not is_empty_on_chart(locus + [cand.locus], leaf.f_loc):
                continue
            mc = self._linear_var(leaf, cand.u, taken, locus)
            if mc is None:
                continue
            v, c, rest = mc
            pieces = self.make_coordinate(leaf, cand.u, v, c, rest, locus)
            main = pieces[0]
            main = self._install_J(main, G, J, v, s)
            return [main] + pieces[1:]
        # no single candidate works on the whole leaf: cover by candidate loci
        usable = []
        for cand in cands:
            mc = self._linear_var(leaf, cand.u, taken, locus + [cand.locus], require_unit=False)
            if mc is not None:
                usable.append(cand)
        if not usable:
            raise UnsupportedError(
                f"no maximal-contact candidate on {leaf.name} is linear in a free coordinate")
        out = []
        cover = [c.locus for c in usable] + [r for r in locus if not r.is_constant()]
        for k, h in enumerate(cover):
            piece = leaf.copy(f"{leaf.name}/l{k + 1}", f_loc=leaf.f_loc * h, factors=leaf.factors + (h,))
            if k < len(usable):
                out.extend(self._enter_maximal_contact(piece, G, J, s))
            else:
                out.append(piece)
        self.notes.append(f"{leaf.name}: maximal contact needed a cover by {len(cover)} opens")
        return out

    def _all_P(self, leaf):
        taken = set()
        for st in leaf.frames.values():
            taken |= set(st.P)
        return taken

    def _linear_var(self, leaf, u, taken, locus, require_unit=True):
        """(v, c, rest) with u = c x_v + rest, v free, c a unit on the locus."""
        best = None
        for v in range(leaf.n):
            if v in taken or u.degree_in(v) != 1:
                continue
            parts = u.coefficients_in(v)
            c = parts[1]
            rest = parts.get(0, SparsePoly.zero(u.nvars))
            if c.is_constant():
                return v, c, rest
            if best is None and is_empty_on_chart(locus + [c], leaf.f_loc):
                best = (v, c, rest)
        return best

    def make_coordinate(self, leaf, u, v, c, rest, locus):
        """Change coordinates so that u becomes x_v.  A non-constant
        coefficient c is inverted by localizing; the rest of the leaf is
        covered by the opens r != 0 for r in the locus ideal."""
        n = leaf.n

        def sub(g):
            if not g:
                return g
            g = _numerator_sub(g, v, rest, c)
            if not c.is_constant():
                # c is a unit on the new leaf
                k = order_along_poly(g, c)
                if k:
                    g = g.exact_div(c ** k)
            return g
        frames = {}
        for fid, st in leaf.frames.items():
            comps = tuple((tuple(_normalize(sub(g)) for g in gens), b) for gens, b in st.comps)
            frames[fid] = FrameState(st.P, comps)
        E = []
        for t, h in leaf.E:
            h2 = _normalize(sub(h))
            if h2.is_constant():
                continue
            E.append((t, h2))
        f2 = sub(leaf.f_loc)
        xv = SparsePoly.var(n, v)
        to_parent = _identity(n)
        if c.is_constant():
            to_parent[v] = RationalMapEntry((xv - rest).scale(Fraction(1) / c.constant_term()))
            f_new = f2
        else:
            to_parent[v] = RationalMapEntry(xv - rest, c)
            f_new = f2 * c
        from_parent = _identity(n)
        from_parent[v] = RationalMapEntry(u)
        main = Leaf(f"{leaf.name}'", n, f_new, E, frames, leaf, to_parent, from_parent, leaf.year,
                    leaf.factors + ((c,) if not c.is_constant() else ()))
        out = [main]
        if not c.is_constant():
            for k, r in enumerate(locus):
                if r.is_constant():
                    continue
                out.append(leaf.copy(f"{leaf.name}/r{k + 1}", f_loc=leaf.f_loc * r,
                                     factors=leaf.factors + (r,)))
            self.notes.append(f"{leaf.name}: coordinate change localized by {c.to_str()}")
        return out

    def _install_J(self, leaf, G, J, v, s):
        st = leaf.frames[G.fid]
        free = leaf.free_vars(st.P)
        P2 = st.P | {v}
        basis = _partials(leaf.n, free)
        parts = []
        for gens, b in st.comps:
            level = [g for g in gens if g]
            for j in range(b):
                if j:
                    level = derivative_ideal(level, basis, 1, prune=True, chart_degree=1)
                    level = groebner(level)
                restricted = prune_zeros([g.restrict([v]) for g in level])
                if restricted:
                    parts.append((restricted, b - j))
        if s > 0:
            bnd = self._boundary(leaf, P2, G.E0, s)
            if bnd:
                parts.append((bnd, 1))
        gens, L = weighted_sum(parts)
        gens = groebner(gens) if gens else []
        l_in = len([g for g in st.comps[0][0] if g])
        self.laws.record("coefficient_count", len(gens),
                         capped_law_bound("L_C", max(l_in, 1), st.comps[0][1], self.n))
        frames = dict(leaf.frames)
        frames[J.fid] = FrameState(P2, ((tuple(gens), L),))
        return Leaf(leaf.name, leaf.n, leaf.f_loc, leaf.E, frames, leaf.parent, leaf.to_parent,
                    leaf.from_parent, leaf.year, leaf.factors)

    # monomial case

    def step_IIB(self, F, A, splits):
        best = None
        achieved = {}
        for leaf in A:
            found = self._strata(leaf, F, splits[leaf.name])
            for tags in found:
                achieved.setdefault(leaf.name, set()).add(tags)
                key = tuple(-t for t in tags)
                if best is None or key > best[0]:
                    best = (key, tags)
        if best is None:
            raise ConsistencyError("monomial case without a cosupport stratum")
        tags = best[1]
        self._IIB_apply(F, A, tags, achieved)

    def _strata(self, leaf, F, split):
        """monomial_J values (as tag tuples) over the divisor strata of the
        leaf that meet the cosupport."""
        ckey = (leaf.serial, F.fid)
        if ckey in self._strata_cache:
            return self._strata_cache[ckey]
        found = []
        st = leaf.frames[F.fid]
        exps, R, M, b = split
        Es = self.E_on(leaf, st, thr=F.thr)
        base = [SparsePoly.var(leaf.n, p) for p in sorted(st.P)]
        for r in range(1, len(Es) + 1):
            for sub in combinations(range(len(Es)), r):
                alpha = [exps[i] for i in sub]
                if sum(alpha) < b:
                    continue
                others = SparsePoly.one(leaf.n)
                for i in range(len(Es)):
                    if i not in sub:
                        others = others * Es[i][2]
                if is_empty_on_chart(base + [Es[i][2] for i in sub], leaf.f_loc * others):
                    continue
                Jl = monomial_J(alpha, b)
                found.append(tuple(sorted(Es[sub[k]][1] for k in Jl)))
        self._strata_cache[ckey] = found
        return found

    def _IIB_apply(self, F, A, tags, achieved):
        centres = {}
        new_leaves = []
        for leaf in self.leaves:
            if leaf not in A:
                new_leaves.append(leaf)
                continue
            st = leaf.frames[F.fid]
            Es = {t: (i, h) for i, t, h in self.E_on(leaf, st, thr=F.thr)}
            if tags not in achieved.get(leaf.name, ()):
                new_leaves.append(leaf)
                continue
            base = [SparsePoly.var(leaf.n, p) for p in sorted(st.P)]
            if is_empty_on_chart(base + [Es[t][1] for t in tags], leaf.f_loc):
                new_leaves.append(leaf)
                continue
            pieces = [leaf]
            for t in tags:
                cur = pieces[0]
                st = cur.frames[F.fid]
                hy = dict((tt, h) for _, tt, h in self.E_on(cur, st, thr=F.thr))[t]
                if _coord_index(hy) is not None:
                    continue
                locus = groebner(base + [dict((tt, h) for _, tt, h in self.E_on(cur, st, thr=F.thr))[x]
                                         for x in tags])
                mc = self._linear_var(cur, hy, self._all_P(cur), locus)
                if mc is None and len(tags) == 1 and not st.P:
                    # a divisor of the ambient space: the blow-up is the
                    # identity and only relabels the divisor
                    break
                if mc is None:
                    raise UnsupportedError(f"divisor {hy.to_str()} is not linear in a free coordinate")
                v, c, rest = mc
                made = self.make_coordinate(cur, hy, v, c, rest, locus)
                pieces = made + pieces[1:]
            main = pieces[0]
            st = main.frames[F.fid]
            Es2 = dict((tt, h) for _, tt, h in self.E_on(main, st, thr=F.thr))
            if any(_coord_index(Es2[t]) is None for t in tags):
                S = HypCentre(Es2[tags[0]])
            else:
                S = sorted(set(st.P) | {_coord_index(Es2[t]) for t in tags})
            centres[main.name] = S
            new_leaves.extend(pieces)
        self.leaves = new_leaves
        F_label = F.label
        F.label = "IIB"
        try:
            self.blow_up("IIB", centres)
        finally:
            F.label = F_label

    # blowing up

    def blow_up(self, label, centres):
        if not centres:
            raise ConsistencyError("empty centre")
        self.year += 1
        if self.year > self.year_limit:
            raise YearLimitExceeded(self.year_limit)
        tag = self.tag_count
        self.tag_count += 1
        before = list(self.leaves)
        q_before = len(before)
        new_leaves = []
        children = []
        for leaf in before:
            S = centres.get(leaf.name)
            if S is None:
                new_leaves.append(leaf)
                continue
            if isinstance(S, HypCentre):
                child = self._blow_up_hyp(leaf, S.h, tag)
                new_leaves.append(child)
                children.append((child, leaf, S, None))
                continue
            for i0 in S:
                child = self._blow_up_leaf(leaf, S, i0, tag)
                new_leaves.append(child)
                children.append((child, leaf, S, i0))
        self.leaves = new_leaves
        self.laws.record("chart_count", len(new_leaves), max(self.n, 1) * q_before)
        dv_before = leaves_data_vector(before, self.mu, self.year - 1)
        dv = leaves_data_vector(new_leaves, self.mu, self.year)
        self.laws.record("degree", dv.d, G_bound(dv_before.n, max(dv_before.d, 1), self.mu))
        path = ">".join([f.label for f in self.stack[:-1]] + [label])
        rec = YearRecord(self.year, label, path,
                         {k: (v if isinstance(v, HypCentre) else list(v)) for k, v in centres.items()},
                         list(new_leaves), dv.as_tuple())
        if self.check_monotone or self.emit_invariants:
            self._monotonicity(rec, children, before)
        if self.check_overlaps:
            self._overlap_check(before, centres)
        self.records.append(rec)

    def _blow_up_leaf(self, leaf, S, i0, tag):
        n = leaf.n
        sub = coordinate_blowup_substitution(n, S, i0)
        f2 = leaf.f_loc.compose(sub)
        E = []
        xi = SparsePoly.var(n, i0)
        for t, h in leaf.E:
            h2 = h.compose(sub)
            k = order_along_poly(h2, xi)
            if k:
                h2 = h2.exact_div(xi ** k)
            if h2.is_constant():
                continue
            if is_empty_on_chart([h2], f2):
                continue
            E.append((t, _normalize(h2)))
        E.append((tag, xi))
        frames = {}
        for fr in self.stack:
            st = leaf.frames.get(fr.fid)
            if st is None or i0 in st.P:
                continue
            comps = []
            for gens, b in st.comps:
                comps.append((tuple(controlled_transform(list(gens), b, i0, sub)), b))
            frames[fr.fid] = FrameState(st.P, tuple(comps))
        to_parent = [RationalMapEntry(p) for p in sub]
        from_parent = _identity(n)
        for j in S:
            if j != i0:
                from_parent[j] = RationalMapEntry(SparsePoly.var(n, j), xi)
        return Leaf(f"{leaf.name}.{i0 + 1}", n, f2, E, frames, leaf, to_parent, from_parent, self.year,
                    leaf.factors)

    def _blow_up_hyp(self, leaf, hc, tag):
        """Blow-up along the smooth hypersurface hc = 0: the identity map,
        with the ideal divided by hc^b and the divisor retagged."""
        E = [(t, h) for t, h in leaf.E if h != hc] + [(tag, hc)]
        frames = {}
        for fr in self.stack:
            st = leaf.frames.get(fr.fid)
            if st is None:
                continue
            if st.P:
                raise ConsistencyError("hypersurface centre below the top level")
            comps = []
            for gens, b in st.comps:
                out = []
                for g in gens:
                    q = g.exact_div(hc ** b) if g else g
                    if q * hc ** b != g:
                        raise ConsistencyError("controlled transform is not exact")
                    out.append(q)
                comps.append((tuple(out), b))
            frames[fr.fid] = FrameState(st.P, tuple(comps))
        return Leaf(f"{leaf.name}.h", leaf.n, leaf.f_loc, E, frames, leaf, _identity(leaf.n),
                    _identity(leaf.n), self.year, leaf.factors)

    # checks

    def _sample_point(self, leaf, fixed=None):
        for _ in range(200):
            p = [Fraction(self.rng.randint(-9, 9), self.rng.randint(1, 5)) for _ in range(leaf.n)]
            if fixed:
                for k, val in fixed.items():
                    p[k] = Fraction(val)
            if leaf.f_loc.evaluate(p):
                return p
        return None

    def _monotonicity(self, rec, children, before):
        over = off = 0
        viol = []
        samples = []
        per_child = max(1, -(-self.samples // max(len(children), 1)))
        for child, parent, S, i0 in children:
            pts = []
            if i0 is None:
                for k in range(per_child):
                    p = self._sample_point(child)
                    if p is not None:
                        pts.append((p, S.h.evaluate(p) == 0))
            # the chart origin over the centre, points on the exceptional
            # divisor and on its intersections with other divisors, and
            # points off the divisor
            origin = {v: 0 for v in range(child.n)}
            for p in ([self._sample_point(child, origin)] if i0 is not None else []):
                if p is not None:
                    pts.append((p, True))
            for k in range(per_child if i0 is not None else 0):
                fixed = {i0: 0}
                for t, h in child.E:
                    v = _coord_index(h)
                    if v is not None and self.rng.random() < 0.5:
                        fixed[v] = 0
                p = self._sample_point(child, fixed)
                if p is not None:
                    pts.append((p, True))
                p = self._sample_point(child)
                if p is not None:
                    pts.append((p, p[i0] == 0))
            for p, on in pts:
                q = [e.evaluate(p) for e in child.to_parent]
                a = self.inv_at(child, p)
                b = self.inv_at(parent, q)
                c = compare_inv(a, b)
                if on:
                    over += 1
                    if c >= 0:
                        viol.append({"chart": child.name, "point": [str(x) for x in p],
                                     "after": a.to_json(), "before": b.to_json()})
                else:
                    off += 1
                    if c != 0:
                        viol.append({"chart": child.name, "point": [str(x) for x in p],
                                     "after": a.to_json(), "before": b.to_json(), "off": True})
                if len(samples) < 8:
                    samples.append({"chart": child.name, "point": [str(x) for x in p],
                                    "inv": a.to_json(), "over_centre": on})
        rec.monotonicity = {"over": over, "off": off, "violations": viol}
        rec.invariants = samples
        if self.check_monotone and viol:
            raise ConsistencyError(f"invariant monotonicity violated in year {rec.year}: {viol[0]}")

    def inv_at(self, leaf, p):
        """Pointwise invariant with the current frame stack supplying the
        divisor thresholds and the original-divisor sets; levels below the
        stack are continued virtually at the point."""
        top = self.stack[0]
        st0 = leaf.frames[top.fid]
        gens = [g for g in st0.comps[0][0] if g]
        b = st0.comps[0][1]
        E = [(t, h) for t, h in leaf.E]
        P = set()
        p = list(p)
        entries = []
        depth = 0
        n = leaf.n
        while True:
            if not gens:
                entries.append(INF)
                return InvariantVector(tuple(entries))
            o = min(g.order_at(p) for g in gens)
            if o < b:
                if depth == 0:
                    return BOTTOM
                raise ConsistencyError("virtual continuation left the cosupport")
            iiframe = self.stack[2 * depth] if 2 * depth < len(self.stack) else None
            iframe = self.stack[2 * depth + 1] if 2 * depth + 1 < len(self.stack) else None
            thr = iiframe.thr if iiframe is not None else None
            Es = []
            if thr is not None:
                for t, h in E:
                    if t >= thr:
                        hy = h.restrict(sorted(P))
                        if not hy.is_constant():
                            Es.append((t, hy))
            exps, R, M = split_over(gens, [h for _, h in Es])
            oR = min(r.order_at(p) for r in R)
            if oR == 0:
                through = [k for k, (t, h) in enumerate(Es) if h.evaluate(p) == 0]
                alpha = [exps[k] for k in through]
                entries.append(0)
                if sum(alpha) < b:
                    raise ConsistencyError("monomial point outside the cosupport")
                Jl = monomial_J(alpha, b)
                return InvariantVector(tuple(entries), Fraction(sum(alpha), b),
                                       tuple(sorted(Es[through[k]][0] for k in Jl)))
            entries.append(Fraction(oR, b))
            comps = [(R, oR)]
            if oR < b:
                comps.append(([M], b - oR))
            E0 = iframe.E0 if iframe is not None else frozenset(t for t, _ in Es)
            through0 = [(t, h.restrict(sorted(P))) for t, h in E if t in E0]
            through0 = [(t, h) for t, h in through0 if h.evaluate(p) == 0]
            s = len(through0)
            entries.append(s)
            free = [v for v in range(n) if v not in P]
            cands = maximal_contact_candidates(R, oR, free_vars=free)
            chosen = None
            for cand in cands:
                if cand.locus.evaluate(p) == 0:
                    continue
                for v in free:
                    if cand.u.degree_in(v) != 1:
                        continue
                    parts = cand.u.coefficients_in(v)
                    if parts[1].evaluate(p) != 0:
                        chosen = (cand.u, v, parts[1], parts.get(0, SparsePoly.zero(n)))
                        break
                if chosen:
                    break
            if chosen is None:
                raise UnsupportedError("no linear maximal-contact candidate at the sample point")
            u, v, c, rest = chosen
            if u.evaluate(p) != 0:
                raise ConsistencyError("maximal contact does not pass through the point")
            sub = lambda g: _numerator_sub(g, v, rest, c) if g else g
            comps = [([sub(g) for g in gs], bb) for gs, bb in comps]
            E = [(t, sub(h)) for t, h in E]
            through0 = [(t, sub(h)) for t, h in through0]
            p = list(p)
            p[v] = Fraction(0)
            P = P | {v}
            basis = _partials(n, free)
            parts = []
            for gs, bb in comps:
                level = [g for g in gs if g]
                for j in range(bb):
                    if j:
                        level = derivative_ideal(level, basis, 1, prune=True, chart_degree=1)
                    restricted = prune_zeros([g.restrict([v]) for g in level])
                    if restricted:
                        parts.append((restricted, bb - j))
            if s > 0:
                parts.append(([h.restrict(sorted(P)) for _, h in through0], 1))
            gens, b = weighted_sum(parts)
            gens = [g for g in gens if g]
            depth += 1

    def _overlap_check(self, before, centres):
        """Centres of overlapping leaves agree: sampled points of each
        centre that map into another leaf land in that leaf's centre."""
        by = {leaf.name: leaf for leaf in before}
        for a_name, S in centres.items():
            A = by[a_name]
            for B in before:
                if B is A:
                    continue
                T = leaf_transition(A, B)
                if T is None:
                    continue
                SB = centres.get(B.name)
                for _ in range(4):
                    p = self._sample_point(A, {v: 0 for v in S})
                    if p is None:
                        continue
                    try:
                        q = [e.evaluate(p) for e in T]
                    except ZeroDivisionError:
                        continue
                    if not B.f_loc.evaluate(q):
                        continue
                    if SB is None or any(q[v] != 0 for v in SB):
                        raise ConsistencyError(
                            f"centre of {A.name} is not matched on the overlap with {B.name}")


def leaf_transition(A, B):
    """Coordinates of B as rational functions of A's, through the lowest
    common ancestor; None when either path uses a map that is not defined
    symbolically."""
    anc_a = A.ancestors()
    anc_b = B.ancestors()
    ids_b = {id(x): k for k, x in enumerate(anc_b)}
    lca_k = next((k for k, x in enumerate(anc_a) if id(x) in ids_b), None)
    if lca_k is None:
        return None
    n = A.n
    factors = tuple(set(A.factors) | set(B.factors))
    # up: LCA coordinates in terms of A's
    cur = _identity(n)
    for leaf in anc_a[:lca_k]:
        cur = [_cancel(_compose_entry(e, cur), factors) for e in leaf.to_parent]
    # down: B's coordinates in terms of the LCA's
    path = anc_b[: ids_b[id(anc_a[lca_k])]]
    for leaf in reversed(path):
        cur = [_cancel(_compose_entry(e, cur), factors) for e in leaf.from_parent]
    return cur


def _compose_entry(entry, mapping):
    num = entry.num.substitute(mapping)
    den = entry.den.substitute(mapping)
    return RationalMapEntry(num.num * den.den, num.den * den.num)


# export and data vectors

def _is_plain_coord(h):
    v = _coord_index(h)
    return v is not None and h.terms[next(iter(h.terms))] == 1


def leaf_charts(leaf, beta, gens, start=0):
    """Chart-model view of a leaf as a list of charts plus an snc flag.

    The leaf is covered by opens, one per divisor stratum S and choice of
    completing coordinates: on such an open only the divisors of S are
    present, they are coordinates (a divisor that is not a coordinate gets
    an extra variable w with the X equation w - h), and the Jacobian of the
    parameters is a unit.  The flag is True when these opens are certified
    to cover every point of the leaf, which is the normal crossings
    property of the divisors."""
    n = leaf.n
    charts = []
    ok = True
    E = list(leaf.E)
    strata = []
    for r in range(0, min(len(E), n) + 1):
        for S in combinations(range(len(E)), r):
            rest = SparsePoly.one(n)
            for i in range(len(E)):
                if i not in S:
                    rest = rest * E[i][1]
            f_S = leaf.f_loc * rest
            if is_empty_on_chart([E[i][1] for i in S], f_S):
                continue
            strata.append((S, f_S))
    for S, f_S in strata:
        extra = [i for i in S if not _is_plain_coord(E[i][1])]
        k = len(extra)
        N = n + k
        wvar = {i: n + j for j, i in enumerate(extra)}
        eqs = [SparsePoly.var(N, wvar[i]) - E[i][1].embed(N) for i in extra]
        E_list = []
        div_params = []
        used = set()
        for i in S:
            v = wvar[i] if i in wvar else _coord_index(E[i][1])
            E_list.append((v, E[i][0]))
            div_params.append(SparsePoly.var(N, v))
            used.add(v)
        free = [v for v in range(n) if v not in used]
        need = N - k - len(S)
        sub_w = [SparsePoly.var(n, v) for v in range(n)] + [E[i][1] for i in extra]
        dets = []
        for C in combinations(free, need):
            params = eqs + div_params + [SparsePoly.var(N, v) for v in C]
            jt = [list(col) for col in zip(*jacobian(params, N))]
            det = determinant(jt)
            if not det:
                continue
            det_x = det.compose(sub_w)
            if not det_x:
                continue
            E_list.sort(key=lambda e: e[1])
            f_chart = f_S.embed(N) if det.is_constant() else f_S.embed(N) * det
            charts.append(Chart(start + len(charts), beta, N, f_chart, params, k, list(E_list),
                                [g.embed(N) for g in gens], None, chart_id(0, 0)))
            dets.append(det_x)
            if det.is_constant() or is_empty_on_chart([E[i][1] for i in S] + dets, f_S):
                break
        if not dets or not is_empty_on_chart([E[i][1] for i in S] + dets, f_S):
            ok = False
    return charts, ok


def _rank_ok(polys, N):
    # generic-point rank of the Jacobian equals the number of polys
    rng = random.Random(len(polys))
    pt = [Fraction(rng.randint(1, 97), rng.randint(1, 13)) for _ in range(N)]
    rows = [[p.partial(j).evaluate(pt) for j in range(N)] for p in polys]
    return _rank(rows) == len(polys)


def _rank(rows):
    rows = [list(r) for r in rows]
    r = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c] / rows[r][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


def export_leaves(leaves, mu, year, top_fid=0):
    """(AffineMarkedIdeal, snc flag) for the given leaves."""
    charts = []
    ok = True
    for leaf in leaves:
        st = leaf.frames.get(top_fid)
        gens = [g for g in st.comps[0][0] if g] if st else []
        cs, good = leaf_charts(leaf, year, gens, start=len(charts))
        charts.extend(cs)
        ok = ok and good
    return AffineMarkedIdeal(charts, [], mu, [None] * year), ok


def leaves_data_vector(leaves, mu, year, top_fid=0):
    """(r, n, m, d, l, q, mu) of the exported charts; l counts parameters,
    nonzero generators and f_loc."""
    n_max = m_max = d = l = 0
    for leaf in leaves:
        k = sum(1 for t, h in leaf.E if _coord_index(h) is None or h.terms[next(iter(h.terms))] != 1)
        N = leaf.n + k
        n_max = max(n_max, N)
        m_max = max(m_max, leaf.n)
        st = leaf.frames.get(top_fid)
        gens = [g for g in st.comps[0][0] if g] if st else []
        polys = gens + [leaf.f_loc] + [h for _, h in leaf.E]
        d = max([d] + [p.degree() for p in polys if p])
        for e in (leaf.to_parent or []):
            d = max(d, e.num.degree() if e.num else 0, e.den.degree() if e.den else 0)
        l = max(l, N + len(gens) + 1)
    return DataVector(year, n_max, m_max, d, l, len(leaves), mu)


def resolve(gens, nvars, mu, E_vars=(), **kw):
    """Run the driver; returns a ResolutionTree."""
    return Resolver(gens, nvars, mu, E_vars, **kw).run()


def resolver_for(T, **kw):
    """Resolver for a chart-model input: one chart with X the ambient space,
    coordinate parameters and coordinate divisors."""
    if len(T.charts) != 1:
        raise UnsupportedError("the driver accepts single-chart inputs")
    c = T.charts[0]
    if c.num_X_eqns:
        raise UnsupportedError("the driver accepts charts whose X is the ambient space")
    if any(not (u.is_monomial() and u.degree() == 1) for u in c.params_u):
        raise UnsupportedError("the driver accepts charts whose parameters are the coordinates")
    E_vars = [v for v, _ in sorted(c.E_list, key=lambda e: e[1])]
    return Resolver(list(c.gens), c.nvars, T.mu, E_vars, f_loc=c.f_loc, **kw)


def resolve_affine(T, **kw):
    return resolver_for(T, **kw).run()


# the monomial case as pure exponent arithmetic

MONOMIAL_YEAR_GUARD = 100_000

@dataclass
class MonomialStep:
    centre: tuple  # divisor tags
    charts: list  # (chart index before, k, exponents after)
    drops: list  # p values over the centre


def step_IIB_monomial(alpha, mu, year_limit=None):
    """Resolve x^alpha with control mu on coordinate divisors by exponent
    rewriting.  Returns the list of MonomialStep records."""
    alpha = [int(a) for a in alpha]
    if mu < 1 or any(a < 0 for a in alpha):
        raise InputError("need mu >= 1 and nonnegative exponents")
    charts = [dict(enumerate(alpha))]  # tag -> exponent
    next_tag = len(alpha)
    steps = []
    # termination is guaranteed; the limit only guards against regressions
    limit = year_limit if year_limit is not None else MONOMIAL_YEAR_GUARD
    while True:
        live = [c for c in charts if sum(c.values()) >= mu]
        if not live:
            return steps
        if len(steps) >= limit:
            raise YearLimitExceeded(limit)
        best = None
        for c in live:
            tags = sorted(c)
            for r in range(1, len(tags) + 1):
                for sub in combinations(tags, r):
                    a = [c[t] for t in sub]
                    if sum(a) < mu:
                        continue
                    Jl = monomial_J(a, mu)
                    J = tuple(sorted(sub[k] for k in Jl))
                    key = tuple(-t for t in J)
                    if best is None or key > best[0]:
                        best = (key, J)
        J = best[1]
        new = []
        recs = []
        drops = []
        for idx, c in enumerate(charts):
            if not all(t in c for t in J):
                new.append(c)
                continue
            total = sum(c[t] for t in J) - mu
            for k in J:
                d = {t: e for t, e in c.items() if t != k}
                d[next_tag] = total
                new.append(d)
                p = c[k] - total
                drops.append(p)
                recs.append((idx, k, dict(d)))
        charts = new
        next_tag += 1
        steps.append(MonomialStep(J, recs, drops))
