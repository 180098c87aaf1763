"""Sparse multivariate polynomials over the rationals.

A polynomial is an immutable map from exponent tuples to nonzero Fractions.
Variables are indexed from 0 internally and printed as x1..xn.
"""

import math
import re
from fractions import Fraction
from itertools import product as _cartesian

from .errors import DimensionError, DivisionError, InputError

MAX_NVARS = 12
INF = math.inf


class _NegInf:
    """Degree of the zero polynomial.  Compares below every integer and
    refuses arithmetic so it can never leak into a bound formula."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NEG_INF"

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("NEG_INF")

    def _no_arith(self, *_):
        raise TypeError("arithmetic on the degree of the zero polynomial")

    __add__ = __radd__ = __sub__ = __rsub__ = __mul__ = __rmul__ = _no_arith


NEG_INF = _NegInf()


def _frac(c):
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, str)):
        return Fraction(c)
    raise TypeError(f"coefficient must be int, str or Fraction, got {type(c).__name__}")


# monomial orders: each returns a sort key, larger key = larger monomial

def degrevlex_key(e):
    return (sum(e), tuple(-x for x in reversed(e)))


def lex_key(e):
    return e


def block_key(k):
    def key(e):
        return (degrevlex_key(e[:k]), degrevlex_key(e[k:]))
    key.__name__ = f"block{k}"
    return key


def order_key(order):
    """Resolve an order name ('degrevlex', 'lex', 'block:k') or a callable."""
    if callable(order):
        return order
    if order == "degrevlex":
        return degrevlex_key
    if order == "lex":
        return lex_key
    if isinstance(order, str) and order.startswith("block"):
        return block_key(int(order.split(":", 1)[1]))
    if isinstance(order, tuple) and order[0] == "block":
        return block_key(order[1])
    raise InputError(f"unknown monomial order {order!r}")


class SparsePoly:
    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars, terms=None, _trusted=False):
        if not 0 <= nvars <= MAX_NVARS:
            raise DimensionError(f"nvars={nvars} outside 0..{MAX_NVARS}")
        self.nvars = nvars
        self._hash = None
        if terms is None:
            self.terms = {}
        elif _trusted:
            self.terms = terms
        else:
            clean = {}
            for e, c in terms.items():
                e = tuple(e)
                if len(e) != nvars:
                    raise DimensionError(f"exponent {e} has length != {nvars}")
                if any(x < 0 for x in e):
                    raise InputError(f"negative exponent in {e}")
                c = _frac(c)
                if c:
                    clean[e] = clean.get(e, 0) + c
                    if not clean[e]:
                        del clean[e]
            self.terms = clean

    # constructors

    @classmethod
    def zero(cls, nvars):
        return cls(nvars, {}, _trusted=True)

    @classmethod
    def const(cls, nvars, c):
        c = _frac(c)
        return cls(nvars, {(0,) * nvars: c} if c else {}, _trusted=True)

    @classmethod
    def one(cls, nvars):
        return cls.const(nvars, 1)

    @classmethod
    def var(cls, nvars, i, power=1):
        if not 0 <= i < nvars:
            raise DimensionError(f"variable index {i} out of range for nvars={nvars}")
        e = [0] * nvars
        e[i] = power
        return cls(nvars, {tuple(e): Fraction(1)}, _trusted=True)

    @classmethod
    def monomial(cls, exps, c=1):
        c = _frac(c)
        return cls(len(exps), {tuple(exps): c} if c else {}, _trusted=True)

    @classmethod
    def gens(cls, nvars):
        return [cls.var(nvars, i) for i in range(nvars)]

    # basic queries

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self):
        return not self.terms or (len(self.terms) == 1 and not any(next(iter(self.terms))))

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def degree(self):
        if not self.terms:
            return NEG_INF
        return max(sum(e) for e in self.terms)

    def degree_in(self, j):
        if not self.terms:
            return NEG_INF
        return max(e[j] for e in self.terms)

    def min_degree(self):
        if not self.terms:
            return INF
        return min(sum(e) for e in self.terms)

    def support(self):
        """Indices of variables that actually occur."""
        used = set()
        for e in self.terms:
            used.update(i for i, x in enumerate(e) if x)
        return used

    def is_monomial(self):
        return len(self.terms) == 1

    def leading(self, order="degrevlex"):
        """(exponent, coefficient) of the leading term."""
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        key = order_key(order)
        e = max(self.terms, key=key)
        return e, self.terms[e]

    def sorted_terms(self, order="degrevlex"):
        key = order_key(order)
        return sorted(self.terms.items(), key=lambda t: key(t[0]), reverse=True)

    def content(self):
        """Positive rational g with self/g having coprime integer coefficients."""
        if not self.terms:
            return Fraction(0)
        nums = [c.numerator for c in self.terms.values()]
        dens = [c.denominator for c in self.terms.values()]
        g = math.gcd(*nums)
        lcm = 1
        for d in dens:
            lcm = lcm * d // math.gcd(lcm, d)
        return Fraction(g, lcm)

    def primitive(self, order="degrevlex"):
        """Integer-coefficient associate with positive leading coefficient."""
        if not self.terms:
            return self
        c = self.content()
        _, lc = self.leading(order)
        if lc < 0:
            c = -c
        return self.scale(1 / c)

    def monic(self, order="degrevlex"):
        if not self.terms:
            return self
        _, lc = self.leading(order)
        return self.scale(1 / lc)

    # arithmetic

    def _check(self, other):
        if self.nvars != other.nvars:
            raise DimensionError(f"nvars mismatch: {self.nvars} vs {other.nvars}")

    def _coerce(self, other):
        if isinstance(other, SparsePoly):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return SparsePoly.const(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return SparsePoly(self.nvars, out, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly(self.nvars, {e: -c for e, c in self.terms.items()}, _trusted=True)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = _frac(c)
        if not c:
            return SparsePoly.zero(self.nvars)
        return SparsePoly(self.nvars, {e: v * c for e, v in self.terms.items()}, _trusted=True)

    def mul_term(self, exp, c):
        """Multiply by the single term c * x^exp."""
        if not c:
            return SparsePoly.zero(self.nvars)
        return SparsePoly(
            self.nvars,
            {tuple(a + b for a, b in zip(e, exp)): v * c for e, v in self.terms.items()},
            _trusted=True,
        )

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, SparsePoly):
            return NotImplemented
        self._check(other)
        if len(self.terms) > len(other.terms):
            a, b = other.terms, self.terms
        else:
            a, b = self.terms, other.terms
        out = {}
        for e1, c1 in a.items():
            for e2, c2 in b.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                s = out.get(e, 0) + c1 * c2
                if s:
                    out[e] = s
                else:
                    del out[e]
        return SparsePoly(self.nvars, out, _trusted=True)

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("power must be a natural number")
        result = SparsePoly.one(self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def exact_div(self, other):
        """Quotient q with self == q*other, or DivisionError."""
        other = self._coerce(other)
        if not other.terms:
            raise ZeroDivisionError("division by the zero polynomial")
        if len(other.terms) == 1:
            (m, c), = other.terms.items()
            out = {}
            for e, v in self.terms.items():
                d = tuple(x - y for x, y in zip(e, m))
                if min(d, default=0) < 0:
                    raise DivisionError("nonzero remainder in exact division")
                out[d] = v / c
            return SparsePoly(self.nvars, out, _trusted=True)
        lm, lc = other.leading()
        rem = self
        q = {}
        while rem.terms:
            e, c = rem.leading()
            d = tuple(x - y for x, y in zip(e, lm))
            if min(d) < 0:
                raise DivisionError("nonzero remainder in exact division")
            t = c / lc
            q[d] = t
            rem = rem - other.mul_term(d, t)
        return SparsePoly(self.nvars, q, _trusted=True)

    def divides(self, other):
        try:
            other.exact_div(self)
            return True
        except DivisionError:
            return False

    # equality / hashing

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.terms == SparsePoly.const(self.nvars, other).terms
        if not isinstance(other, SparsePoly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    # calculus and orders

    def partial(self, j):
        if not 0 <= j < self.nvars:
            raise DimensionError(f"variable index {j} out of range")
        out = {}
        for e, c in self.terms.items():
            k = e[j]
            if k:
                d = e[:j] + (k - 1,) + e[j + 1:]
                out[d] = c * k
        return SparsePoly(self.nvars, out, _trusted=True)

    def partial_multi(self, b):
        """Apply d^b = prod_j (d/dx_j)^{b_j}."""
        p = self
        for j, k in enumerate(b):
            for _ in range(k):
                p = p.partial(j)
                if not p.terms:
                    return p
        return p

    def order_along(self, j):
        """Largest e with x_j^e | self (INF for zero)."""
        if not self.terms:
            return INF
        return min(e[j] for e in self.terms)

    order_along_coordinate = order_along

    def shift_var(self, i, a):
        """self with x_i replaced by x_i + a (Horner in x_i)."""
        a = _frac(a)
        if not a or not self.terms:
            return self
        buckets = {}
        for e, c in self.terms.items():
            rest = e[:i] + (0,) + e[i + 1:]
            buckets.setdefault(e[i], {})[rest] = c
        top = max(buckets)
        acc = {}
        for k in range(top, -1, -1):
            # acc <- acc * (x_i + a) + c_k
            nxt = {}
            for e, c in acc.items():
                up = e[:i] + (e[i] + 1,) + e[i + 1:]
                nxt[up] = nxt.get(up, 0) + c
                nxt[e] = nxt.get(e, 0) + c * a
            for e, c in buckets.get(k, {}).items():
                nxt[e] = nxt.get(e, 0) + c
            acc = {e: c for e, c in nxt.items() if c}
        return SparsePoly(self.nvars, acc, _trusted=True)

    def taylor_shift(self, point):
        if len(point) != self.nvars:
            raise DimensionError("point dimension does not match nvars")
        p = self
        for i, a in enumerate(point):
            p = p.shift_var(i, a)
        return p

    def order_at(self, point):
        """Least total degree of a term of self(x + point); INF for zero."""
        if not self.terms:
            return INF
        return self.taylor_shift(point).min_degree()

    order_at_point = order_at

    def evaluate(self, point):
        if len(point) != self.nvars:
            raise DimensionError("point dimension does not match nvars")
        pt = [_frac(a) for a in point]
        total = Fraction(0)
        for e, c in self.terms.items():
            t = c
            for a, k in zip(pt, e):
                if k:
                    t *= a ** k
            total += t
        return total

    # substitution

    def compose(self, images, nvars=None):
        """Polynomial substitution x_i -> images[i]."""
        if len(images) != self.nvars:
            raise DimensionError("substitution length does not match nvars")
        if nvars is None:
            nvars = images[0].nvars if images else 0
        powers = [{} for _ in images]

        def pw(i, k):
            cache = powers[i]
            if k not in cache:
                cache[k] = images[i] ** k
            return cache[k]

        acc = {}
        for e, c in self.terms.items():
            t = SparsePoly.const(nvars, c)
            for i, k in enumerate(e):
                if k:
                    t = t * pw(i, k)
            for m, v in t.terms.items():
                s = acc.get(m, 0) + v
                if s:
                    acc[m] = s
                else:
                    acc.pop(m, None)
        return SparsePoly(nvars, acc, _trusted=True)

    def substitute(self, mapping):
        """Rational substitution x_i -> num_i/den_i, returned over a common denominator."""
        if len(mapping) != self.nvars:
            raise DimensionError("substitution length does not match nvars")
        nv = mapping[0].num.nvars if mapping else 0
        for m in mapping:
            if not m.den.terms:
                raise ZeroDivisionError("zero denominator in substitution")
        # group variables by identical denominators so the common denominator stays small
        den_groups = {}
        for i, m in enumerate(mapping):
            if m.den.is_constant():
                continue
            den_groups.setdefault(m.den, []).append(i)
        num_images = []
        for i, m in enumerate(mapping):
            c = m.den.constant_term() if m.den.is_constant() else None
            num_images.append(m.num.scale(1 / c) if c is not None else m.num)
        # degree in each distinct denominator = max over terms of combined exponents
        den_top = {d: max((sum(e[i] for i in idx) for e in self.terms), default=0)
                   for d, idx in den_groups.items()}
        num = SparsePoly.zero(nv)
        npow = [{} for _ in mapping]
        dpow = {d: {} for d in den_groups}

        def npw(i, k):
            if k not in npow[i]:
                npow[i][k] = num_images[i] ** k
            return npow[i][k]

        def dpw(d, k):
            if k not in dpow[d]:
                dpow[d][k] = d ** k
            return dpow[d][k]

        for e, c in self.terms.items():
            t = SparsePoly.const(nv, c)
            for i, k in enumerate(e):
                if k:
                    t = t * npw(i, k)
            for d, idx in den_groups.items():
                used = sum(e[i] for i in idx)
                if den_top[d] - used:
                    t = t * dpw(d, den_top[d] - used)
            num = num + t
        den = SparsePoly.one(nv)
        for d in den_groups:
            if den_top[d]:
                den = den * dpw(d, den_top[d])
        g = den.content()
        return RationalMapEntry(num.scale(1 / g), den.scale(1 / g))

    # variable bookkeeping

    def embed(self, nvars, positions=None):
        """Re-index into a ring with `nvars` variables; variable i goes to positions[i]."""
        if positions is None:
            positions = list(range(self.nvars))
        out = {}
        for e, c in self.terms.items():
            ne = [0] * nvars
            for i, k in enumerate(e):
                if k:
                    ne[positions[i]] += k
            out[tuple(ne)] = c
        return SparsePoly(nvars, out, _trusted=True)

    def restrict(self, zero_vars):
        """Set the listed variables to 0."""
        zs = list(zero_vars)
        if not zs:
            return self
        return SparsePoly(
            self.nvars,
            {e: c for e, c in self.terms.items() if not any(e[j] for j in zs)},
            _trusted=True,
        )

    def coefficients_in(self, j):
        """Map k -> coefficient of x_j^k (a polynomial free of x_j)."""
        out = {}
        for e, c in self.terms.items():
            rest = e[:j] + (0,) + e[j + 1:]
            out.setdefault(e[j], {})[rest] = c
        return {k: SparsePoly(self.nvars, t, _trusted=True) for k, t in out.items()}

    # text

    def __repr__(self):
        return f"SparsePoly({self.nvars}, {self.to_str()!r})"

    def __str__(self):
        return self.to_str()

    def to_str(self, names=None):
        """Human-readable form, e.g. 'x2^2 - x1^3'."""
        if names is None:
            names = [f"x{i + 1}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = " * ".join(
                names[i] if k == 1 else f"{names[i]}^{k}" for i, k in enumerate(e) if k
            )
            mag = abs(c)
            if not mono:
                body = _fmt_frac(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{_fmt_frac(mag)}*{mono}"
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        head = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        return head + "".join(f" {s} {b}" for s, b in parts[1:])

    def to_canonical(self):
        """Lossless form: 'c * x1^e1 ... xn^en' terms joined by ' + '."""
        if not self.terms:
            return "0"
        out = []
        for e, c in self.sorted_terms():
            exps = " ".join(f"x{i + 1}^{k}" for i, k in enumerate(e))
            out.append(f"{_fmt_frac(c)} * {exps}" if exps else _fmt_frac(c))
        return " + ".join(out)


def _fmt_frac(c):
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


class RationalMapEntry:
    """A quotient num/den of polynomials with den not identically zero."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        if den is None:
            den = SparsePoly.one(num.nvars)
        if not den.terms:
            raise ZeroDivisionError("RationalMapEntry with zero denominator")
        num._check(den)
        self.num = num
        self.den = den

    @property
    def numerator(self):
        return self.num

    @property
    def denominator(self):
        return self.den

    def is_polynomial(self):
        return self.den.is_constant()

    def as_poly(self):
        if not self.den.is_constant():
            return self.num.exact_div(self.den)
        return self.num.scale(1 / self.den.constant_term())

    def evaluate(self, point):
        d = self.den.evaluate(point)
        if not d:
            raise ZeroDivisionError("denominator vanishes at point")
        return self.num.evaluate(point) / d

    def __eq__(self, other):
        if not isinstance(other, RationalMapEntry):
            return NotImplemented
        return self.num * other.den == other.num * self.den

    def __hash__(self):
        return hash(self.num.nvars)

    def __repr__(self):
        return f"RationalMapEntry({self.num.to_str()!r}, {self.den.to_str()!r})"


def compose_rational(p, mapping):
    """Substitute a list of RationalMapEntry into a RationalMapEntry or polynomial."""
    if isinstance(p, SparsePoly):
        return p.substitute(mapping)
    n = p.num.substitute(mapping)
    d = p.den.substitute(mapping)
    return RationalMapEntry(n.num * d.den, n.den * d.num)


# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")


def _tokenize(text):
    pos = 0
    toks = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise InputError(f"cannot parse polynomial near {text[pos:pos + 12]!r}")
        num, name, op = m.groups()
        if num is not None:
            toks.append(("num", int(num)))
        elif name is not None:
            toks.append(("name", name))
        else:
            toks.append(("op", "^" if op == "**" else op))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return toks


def parse_poly(text, nvars=None, names=None):
    """Parse either the canonical form or ordinary notation.

    Variables are x1..xn, or the entries of `names` if given.  When nvars is
    omitted it is inferred from the highest variable index seen (canonical
    text lists every variable, so the round trip is lossless).
    """
    toks = _tokenize(text)
    if names is not None:
        index = {nm: i for i, nm in enumerate(names)}
        if nvars is None:
            nvars = len(names)
    else:
        index = None
        seen = [int(t[1][1:]) for t in toks if t[0] == "name" and re.fullmatch(r"x\d+", t[1])]
        if nvars is None:
            nvars = max(seen, default=0)
    pos = [0]

    def peek():
        return toks[pos[0]] if pos[0] < len(toks) else (None, None)

    def take():
        t = peek()
        pos[0] += 1
        return t

    def var_index(name):
        if index is not None:
            if name not in index:
                raise InputError(f"unknown variable {name!r}")
            return index[name]
        m = re.fullmatch(r"x(\d+)", name)
        if not m or not 1 <= int(m.group(1)) <= nvars:
            raise InputError(f"unknown variable {name!r} (expected x1..x{nvars})")
        return int(m.group(1)) - 1

    def expr():
        sign = 1
        if peek() == ("op", "-"):
            take()
            sign = -1
        elif peek() == ("op", "+"):
            take()
        acc = term().scale(sign)
        while peek() in (("op", "+"), ("op", "-")):
            _, op = take()
            t = term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def starts_factor(t):
        return t[0] in ("num", "name") or t == ("op", "(")

    def term():
        acc = power()
        while True:
            t = peek()
            if t == ("op", "*"):
                take()
                acc = acc * power()
            elif t == ("op", "/"):
                take()
                d = power()
                if not d.is_constant() or not d:
                    raise InputError("division only by nonzero constants")
                acc = acc.scale(1 / d.constant_term())
            elif t[0] is not None and starts_factor(t):
                acc = acc * power()
            else:
                return acc

    def power():
        base = atom()
        if peek() == ("op", "^"):
            take()
            kind, val = take()
            if kind != "num":
                raise InputError("exponent must be a natural number")
            base = base ** val
        return base

    def atom():
        kind, val = take()
        if kind == "num":
            return SparsePoly.const(nvars, val)
        if kind == "name":
            return SparsePoly.var(nvars, var_index(val))
        if (kind, val) == ("op", "("):
            inner = expr()
            if take() != ("op", ")"):
                raise InputError("unbalanced parentheses")
            return inner
        if (kind, val) == ("op", "-"):
            return -power()
        raise InputError(f"unexpected token {val!r}")

    if not toks:
        raise InputError("empty polynomial text")
    result = expr()
    if pos[0] != len(toks):
        raise InputError(f"trailing input in polynomial {text!r}")
    return result


def poly_from_str(text, nvars):
    return parse_poly(text, nvars=nvars)


def product(polys, nvars):
    out = SparsePoly.one(nvars)
    for p in polys:
        out = out * p
    return out


def monomials_of_degree(nvars, deg):
    """All exponent tuples of total degree `deg` (lex-descending)."""
    if nvars == 0:
        return [()] if deg == 0 else []
    out = []
    for first in range(deg, -1, -1):
        for rest in monomials_of_degree(nvars - 1, deg - first):
            out.append((first,) + rest)
    return out


def exponent_vectors_below(bounds):
    return list(_cartesian(*[range(b + 1) for b in bounds]))
