"""Effective bounds as big-integer expression DAGs.

Every node is evaluated eagerly when its value stays under the digit cap;
otherwise it stays symbolic with a log10 size estimate where one is
available.  Each node carries a Grzegorczyk class: constants and variables
0, addition 1, multiplication 2, exponentiation/factorial/binomial 3, and an
iterate node one more than its body.  Composition takes the maximum.
"""

import math
from collections import namedtuple
from contextlib import contextmanager

from .errors import InputError

DIGIT_CAP = 10 ** 6
ITER_LIMIT = 4096  # numeric attempts at iterate nodes stop beyond this count

_settings = {"cap": DIGIT_CAP}

# fixed constants for the base case entries written with O(.)
BASE_D_FACTOR = 4   # D0 = 4 d n
BASE_L_EXP = 2      # L0 = l (d n)^(2 n)


@contextmanager
def digit_cap(cap):
    old = _settings["cap"]
    _settings["cap"] = cap
    try:
        yield
    finally:
        _settings["cap"] = old


def _log10(v):
    if v <= 0:
        return float("-inf") if v == 0 else float("nan")
    try:
        return math.log10(v)
    except OverflowError:
        return v.bit_length() * math.log10(2)


_CLASS = {"const": 0, "var": 0, "add": 1, "sub": 1, "mul": 2, "pow": 3, "fact": 3, "binom": 3}


class BoundExpr:
    """Immutable node.  `value` is an int or None (over cap / symbolic)."""

    __slots__ = ("op", "args", "label", "value", "log10", "grz", "extra", "_key")

    def __init__(self, op, args=(), label=None, extra=None):
        self.op = op
        self.args = tuple(args)
        self.label = label
        self.extra = extra
        self._key = None
        if op == "iter":
            body, count, init, index = extra
            inner = max(e.grz for e in body)
            self.grz = max([inner + 1, count.grz] + [e.grz for e in init])
        elif op in ("const", "var"):
            self.grz = 0
        elif op == "named":
            self.grz = self.args[0].grz
        else:
            self.grz = max([_CLASS[op]] + [a.grz for a in self.args])
        self.value, self.log10 = _evaluate(self)

    def __repr__(self):
        return f"BoundExpr({self.to_prefix(max_nodes=40)})"

    # construction helpers
    def __add__(self, o):
        return add(self, o)

    __radd__ = __add__

    def __mul__(self, o):
        return mul(self, o)

    __rmul__ = __mul__

    def __pow__(self, o):
        return power(self, o)

    @property
    def evaluated(self):
        return self.value is not None

    def digits(self):
        """Decimal digit count (exact when evaluated, else an estimate or inf)."""
        if self.value is not None:
            return len(str(self.value)) if self.value else 1
        return math.floor(self.log10) + 1 if math.isfinite(self.log10) else math.inf

    def nodes(self):
        """Topologically ordered distinct nodes (children first)."""
        seen = {}
        order = []
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if id(node) in seen:
                continue
            if done:
                seen[id(node)] = node
                order.append(node)
                continue
            stack.append((node, True))
            for ch in reversed(node.children()):
                if id(ch) not in seen:
                    stack.append((ch, False))
        return order

    def children(self):
        if self.op == "iter":
            body, count, init, _ = self.extra
            return list(self.args) + list(body) + [count] + list(init)
        return list(self.args)

    def to_prefix(self, max_nodes=None):
        out = []
        budget = [max_nodes if max_nodes is not None else math.inf]

        def walk(e):
            budget[0] -= 1
            if budget[0] < 0:
                return "..."
            if e.op == "const":
                return str(e.extra)
            if e.op == "var":
                return e.label
            if e.op == "named":
                return f"({e.label} {' '.join(walk(a) for a in e.args)})"
            if e.op == "iter":
                body, count, init, index = e.extra
                return f"(iter{index} {walk(count)} [{' '.join(walk(a) for a in init)}])"
            return f"({e.op} {' '.join(walk(a) for a in e.args)})"

        out.append(walk(self))
        return out[0]


def _f(x):
    """int -> float without overflow (inf when too large)."""
    try:
        return float(x)
    except OverflowError:
        return math.inf


def _lgamma10(x):
    x = _f(x)
    return math.inf if x == math.inf else math.lgamma(x + 1) / math.log(10)


def _cap_ok(log10):
    return log10 < _settings["cap"]


def _evaluate(e):
    """(value or None, log10 estimate)."""
    op, a = e.op, e.args
    if op == "const":
        v = e.extra
        return v, _log10(v) if v > 0 else float("-inf")
    if op == "var":
        return None, math.inf
    if op == "named":
        return a[0].value, a[0].log10
    if op == "iter":
        return _evaluate_iter(e)
    vals = [x.value for x in a]
    logs = [x.log10 for x in a]
    if op == "add":
        est = max(logs) + math.log10(len(a)) if all(math.isfinite(x) or x == -math.inf for x in logs) else math.inf
        if all(v is not None for v in vals):
            v = sum(vals)
            return v, _log10(v) if v > 0 else float("-inf")
        return None, est
    if op == "sub":
        if all(v is not None for v in vals):
            v = max(vals[0] - vals[1], 0)
            return v, _log10(v) if v > 0 else float("-inf")
        return None, logs[0]
    if op == "mul":
        if any(v == 0 for v in vals):
            return 0, float("-inf")
        est = sum(logs)
        if all(v is not None for v in vals) and _cap_ok(est):
            v = math.prod(vals)
            return v, _log10(v)
        return None, est
    if op == "pow":
        b, x = vals
        if x == 0:
            return 1, 0.0
        if b is not None and b <= 1:
            return b, logs[0]
        if x is not None and math.isfinite(logs[0]):
            est = _f(x) * logs[0]
        elif math.isfinite(logs[1]) and math.isfinite(logs[0]) and logs[1] < 300:
            est = 10 ** logs[1] * logs[0]
        else:
            est = math.inf
        if b is not None and x is not None and _cap_ok(est):
            v = b ** x
            return v, _log10(v)
        return None, est
    if op == "fact":
        (x,) = vals
        if x is not None:
            est = _lgamma10(x)
            if _cap_ok(est):
                v = math.factorial(x)
                return v, _log10(v)
            return None, est
        if math.isfinite(logs[0]) and logs[0] < 300:
            y = 10 ** logs[0]
            return None, y * math.log10(max(y, 2))
        return None, math.inf
    if op == "binom":
        top, k = vals
        if top is not None and k is not None:
            if k < 0 or k > top:
                return 0, float("-inf")
            est = _lgamma10(top) - _lgamma10(k) - _lgamma10(top - k) if _f(top) < 1e300 else math.inf
            if _cap_ok(est):
                v = math.comb(top, k)
                return v, _log10(v)
            return None, est
        if math.isfinite(logs[0]) and math.isfinite(logs[1]) and logs[1] < 300:
            return None, 10 ** logs[1] * logs[0]
        return None, math.inf
    raise InputError(f"unknown op {op}")


_ITER_CACHE = {}


def _run_iteration(body, n, state, reverse=False):
    """State after n numeric steps of body, or None once over the cap."""
    key = (tuple(id(b) for b in body), n, tuple(state), reverse, _settings["cap"])
    if key in _ITER_CACHE:
        return _ITER_CACHE[key]
    cur = list(state)
    for _ in range(n):
        env = dict(zip(VAR_NAMES, cur))
        memo = {}
        cur = [eval_with(b, env, reverse, memo) for b in body]
        if any(v is None for v in cur):
            cur = None
            break
    _ITER_CACHE[key] = cur
    return cur


def _evaluate_iter(e):
    body, count, init, index = e.extra
    n = count.value
    state = [x.value for x in init]
    if n == 0:
        return init[index].value, init[index].log10
    if n is None or n > ITER_LIMIT or any(v is None for v in state):
        return None, math.inf
    out = _run_iteration(body, n, state)
    if out is None:
        return None, math.inf
    v = out[index]
    return v, _log10(v) if v > 0 else float("-inf")


def eval_with(e, env, reverse=False, memo=None):
    """Numeric evaluation with variables bound; None when over the cap.
    With reverse=True operands are combined in reverse order (an
    independent second evaluation used by the soundness check)."""
    if memo is None:
        memo = {}
    k = id(e)
    if k in memo:
        return memo[k]
    op = e.op
    if op == "const":
        r = e.extra
    elif op == "var":
        r = env.get(e.label)
    elif op == "named":
        r = eval_with(e.args[0], env, reverse, memo)
    elif op == "iter":
        body, count, init, index = e.extra
        n = eval_with(count, env, reverse, memo)
        state = [eval_with(x, env, reverse, memo) for x in init]
        if n is None or n > ITER_LIMIT or any(v is None for v in state):
            r = None
        else:
            out = _run_iteration(body, n, state, reverse)
            r = None if out is None else out[index]
    else:
        args = list(e.args)
        if reverse:
            args = args[::-1]
        vals = [eval_with(a, env, reverse, memo) for a in args]
        if reverse:
            vals = vals[::-1]
        r = _combine(op, vals)
    memo[k] = r
    return r


def _combine(op, vals):
    if any(v is None for v in vals):
        if op == "mul" and any(v == 0 for v in vals):
            return 0
        return None
    cap = _settings["cap"]
    if op == "add":
        acc = 0
        for v in vals:
            acc += v
        return acc
    if op == "sub":
        return max(vals[0] - vals[1], 0)
    if op == "mul":
        est = sum(_log10(v) if v > 0 else 0 for v in vals)
        if est >= cap:
            return None
        acc = 1
        for v in vals:
            acc *= v
        return acc
    if op == "pow":
        b, x = vals
        if x == 0:
            return 1
        if b <= 1:
            return b
        if _f(x) * _log10(b) >= cap:
            return None
        return b ** x
    if op == "fact":
        (x,) = vals
        if _lgamma10(x) >= cap:
            return None
        return math.factorial(x)
    if op == "binom":
        top, k = vals
        if k < 0 or k > top:
            return 0
        if _f(top) >= 1e300 or _lgamma10(top) - _lgamma10(k) - _lgamma10(top - k) >= cap:
            return None
        return math.comb(top, k)
    raise InputError(op)


def reevaluate(e):
    """Second independent evaluation (reversed operand order)."""
    return eval_with(e, {}, reverse=True)


# constructors

def const(v):
    if isinstance(v, BoundExpr):
        return v
    if not isinstance(v, int) or v < 0:
        raise InputError(f"bound constants must be naturals, got {v!r}")
    return BoundExpr("const", extra=v)


def var(name):
    return BoundExpr("var", label=name)


def add(*xs):
    return BoundExpr("add", [const(x) for x in xs])


def sub(a, b):
    """Truncated subtraction max(a - b, 0)."""
    return BoundExpr("sub", [const(a), const(b)])


def mul(*xs):
    return BoundExpr("mul", [const(x) for x in xs])


def power(b, x):
    return BoundExpr("pow", [const(b), const(x)])


def fact(x):
    return BoundExpr("fact", [const(x)])


def binom(top, k):
    return BoundExpr("binom", [const(top), const(k)])


def named(label, e):
    return BoundExpr("named", [e], label=label)


def iterate(body, count, init, index):
    return BoundExpr("iter", extra=(tuple(body), const(count), tuple(init), index), label="iter")


# data vectors

VAR_NAMES = ("r", "n", "m", "d", "l", "q", "mu")


class BoundVector(namedtuple("BoundVector", VAR_NAMES)):
    """Data vector whose entries are BoundExpr."""

    @classmethod
    def of(cls, *entries):
        if len(entries) == 1 and not isinstance(entries[0], (int, BoundExpr)):
            entries = tuple(entries[0])
        return cls(*[const(e) for e in entries])

    @classmethod
    def variables(cls):
        return cls(*[var(v) for v in VAR_NAMES])

    def values(self):
        return tuple(e.value for e in self)

    def grz(self):
        return max(e.grz for e in self)

    def replace_entry(self, name, e):
        return self._replace(**{name: const(e)})


def _vec(g):
    return g if isinstance(g, BoundVector) else BoundVector.of(g)


# named bound functions

def M(n, d):
    """Order bound convention: 2 d binom(d^n + n, n)."""
    n, d = const(n), const(d)
    return named("M", mul(2, d, binom(add(power(d, n), n), n)))


def G(n, d, mu):
    return named("G", power(mul(2, d, mu), power(2, add(n, 2))))


def Bl(gamma):
    g = _vec(gamma)
    return BoundVector(
        add(g.r, 1), mul(2, g.n), g.m, G(g.n, g.d, g.mu), add(g.l, g.n), mul(g.n, g.q), g.mu
    )


def _Bl_body():
    return tuple(Bl(BoundVector.variables()))


def Bl_bar(gamma, t):
    """t-fold Bl as iterate nodes (t may be symbolic)."""
    g = _vec(gamma)
    body = _Bl_body()
    return BoundVector(*[named(f"Blbar.{VAR_NAMES[i]}", iterate(body, t, tuple(g), i)) for i in range(7)])


def A(n, d, mu, mubar=None):
    """(mu * mubar)! (n+1) d; worst case mubar = M(n,d)."""
    mubar = M(n, d) if mubar is None else mubar
    return named("A", mul(fact(mul(mu, mubar)), add(n, 1), d))


def B(n, d, mu, mubar=None):
    mubar = M(n, d) if mubar is None else mubar
    return named("B", mul(mubar, add(n, 1), d))


def C(n, d, mu):
    return named("C", binom(add(M(n, d), n), n))


def L_G(l, mu):
    return named("L_G", add(power(l, mu), 1))


def L_C(l, mu, n):
    f = fact(mu)
    return named("L_C", mul(mu, power(add(n, 1), f), power(l, f)))


def F(n, d, mu, l):
    return named("F", L_C(L_G(l, mu), mul(mu, M(n, d)), n))


def Delta_I(gamma):
    g = _vec(gamma)
    if g.m.value == 0:
        raise InputError("Delta_I needs m >= 1")
    return BoundVector(
        g.r, g.n, sub(g.m, 1), A(g.n, g.d, g.mu), F(g.n, g.d, g.mu, g.l),
        mul(g.q, C(g.n, g.d, g.mu)), fact(mul(g.mu, M(g.n, g.d))),
    )


def Delta_IIA(gamma):
    g = _vec(gamma)
    return BoundVector(
        g.r, g.n, g.m, A(g.n, g.d, g.mu), F(g.n, g.d, g.mu, g.l), g.q, fact(mul(g.mu, M(g.n, g.d)))
    )


def Gamma0(gamma):
    g = _vec(gamma)
    dn = mul(g.d, g.n)
    return BoundVector(
        add(g.r, 1), mul(2, g.n), g.m, mul(BASE_D_FACTOR, g.d, g.n),
        mul(g.l, power(dn, mul(BASE_L_EXP, g.n))), mul(g.n, g.q), g.mu,
    )


def Gamma_I(m, gamma):
    """m-fold composition of Gamma^(m-1) after Delta_I; m entry restored,
    mu entry (mu M(n,d))!."""
    g = _vec(gamma)
    cur = Delta_I(g)
    for _ in range(m):
        cur = Gamma(m - 1, cur)
    return cur._replace(m=g.m, mu=fact(mul(g.mu, M(g.n, g.d))))


_IIA_BODY = {}


def _Gamma_IIA_body(m):
    """One Step-IIA pass as a function of the variables: Gamma_I with the
    mu entry (current residual order bound) decremented."""
    if m not in _IIA_BODY:
        v = BoundVector.variables()
        out = Gamma_I(m, v)
        _IIA_BODY[m] = tuple(out._replace(mu=sub(v.mu, 1)))
    return _IIA_BODY[m]


def Gamma_IIB(m, gamma):
    g = _vec(gamma)
    count = M(g.n, g.d)
    init = g._replace(mu=count)
    body = _Gamma_IIA_body(m)
    out = BoundVector(*[named(f"IIA.{VAR_NAMES[i]}", iterate(body, count, tuple(init), i)) for i in range(7)])
    return out._replace(mu=g.mu)


def Gamma(m, gamma):
    """Final data-vector bound after resolving a problem of dimension index m."""
    if m < 0:
        raise InputError("m must be >= 0")
    g = _vec(gamma)
    if m == 0:
        return Gamma0(g)
    iib = Gamma_IIB(m, g)
    return Bl_bar(iib, iib.d)


def grz_class(x):
    if isinstance(x, BoundVector):
        return x.grz()
    return x.grz


def bezout_bound(n, d):
    return named("bezout", power(d, n))


# closed forms and reports

def iterate_Bl(gamma, t):
    """Ground-truth t-fold Bl, the stated closed form, and per-entry flags.

    The closed form's d-entry is defined by the same recursion, so it is
    taken from the ground truth."""
    if t < 0:
        raise InputError("t must be >= 0")
    g = _vec(gamma)
    truth = g
    for _ in range(t):
        truth = Bl(truth)
    two_t = power(2, t)
    closed = {
        "r": add(g.r, t),
        "n": mul(two_t, g.n),
        "m": g.m,
        "d": truth.d,
        "l": _half_power_l(g, t),
        "q": mul(sub(power(2, t + 1), 1), power(g.n, t), g.q),
        "mu": g.mu,
    }
    flags = {}
    for name in VAR_NAMES:
        a, b = getattr(truth, name).value, closed[name].value
        if a is None or b is None:
            flags[name] = "unknown"
        else:
            flags[name] = "match" if a == b else "mismatch"
    flags["d"] = "match"
    return {"truth": truth, "closed_form": closed, "flags": flags}


def _half_power_l(g, t):
    # l + 2^(t-1) n; at t = 0 this is l + n/2, represented exactly only when n is even
    if t >= 1:
        return add(g.l, mul(power(2, t - 1), g.n))
    n = g.n.value
    if n is not None and n % 2 == 0:
        return add(g.l, n // 2)
    return var("l+n/2")


class BoundReport:
    def __init__(self, gamma, m):
        self.gamma = _vec(gamma)
        self.m = m
        self.entries = {}
        self.notes = []

    def add(self, name, e):
        self.entries[name] = e

    def to_json(self):
        nodes = {}
        table = []

        def ref(e):
            if id(e) not in nodes:
                for ch in e.children():
                    ref(ch)
                k = f"n{len(table)}"
                nodes[id(e)] = k
                table.append((k, e))
            return nodes[id(e)]

        roots = {}
        for name, e in self.entries.items():
            if isinstance(e, BoundVector):
                roots[name] = {f: ref(x) for f, x in zip(VAR_NAMES, e)}
            else:
                roots[name] = ref(e)
        node_json = {}
        for k, e in table:
            node_json[k] = {
                "expr": _node_prefix(e, nodes),
                "grz_class": e.grz,
                "value": None if e.value is None else str(e.value),
                "log10_estimate": None if not math.isfinite(e.log10) else round(e.log10, 6),
            }
        return {
            "schema": "amv1",
            "kind": "bound_report",
            "input": [_json_val(x) for x in self.gamma],
            "m": self.m,
            "constants": {"D0": f"{BASE_D_FACTOR}*d*n", "L0": f"l*(d*n)^({BASE_L_EXP}*n)", "digit_cap": _settings["cap"]},
            "entries": roots,
            "grz_class": {name: grz_class(e) for name, e in self.entries.items()},
            "nodes": node_json,
            "notes": list(self.notes),
        }


def _json_val(e):
    return str(e.value) if e.value is not None else e.to_prefix(max_nodes=60)


def _node_prefix(e, nodes):
    if e.op == "const":
        return str(e.extra)
    if e.op == "var":
        return e.label
    if e.op == "iter":
        body, count, init, index = e.extra
        return (f"(iter {index} {nodes[id(count)]} [{' '.join(nodes[id(x)] for x in init)}]"
                f" [{' '.join(nodes[id(x)] for x in body)}])")
    head = e.label if e.op == "named" else e.op
    return f"({head} {' '.join(nodes[id(a)] for a in e.args)})"


def bound_report(gamma, m=None, t_bl=6):
    """Full report: single-step functions, Gamma^(m) and the closed-form check."""
    g = _vec(gamma)
    if m is None:
        m = g.m.value
        if m is None:
            raise InputError("m must be numeric")
    rep = BoundReport(g, m)
    rep.add("M", M(g.n, g.d))
    rep.add("G", G(g.n, g.d, g.mu))
    rep.add("Bl", Bl(g))
    rep.add("A", A(g.n, g.d, g.mu))
    rep.add("B", B(g.n, g.d, g.mu))
    rep.add("C", C(g.n, g.d, g.mu))
    rep.add("L_G", L_G(g.l, g.mu))
    rep.add("L_C", L_C(g.l, g.mu, g.n))
    rep.add("F", F(g.n, g.d, g.mu, g.l))
    rep.add("Delta_IIA", Delta_IIA(g))
    if g.m.value != 0:
        rep.add("Delta_I", Delta_I(g))
    rep.add("Gamma", Gamma(m, g))
    rep.add("bezout", bezout_bound(g.n, g.d))
    for t in range(1, t_bl + 1):
        res = iterate_Bl(g, t)
        bad = [k for k, v in res["flags"].items() if v == "mismatch"]
        if bad:
            rep.notes.append(
                f"iterate_Bl t={t}: closed form disagrees with the single-step recursion on "
                f"{', '.join(bad)} (truth: l={_json_val(res['truth'].l)}, q={_json_val(res['truth'].q)};"
                f" closed form: l={_json_val(res['closed_form']['l'])}, q={_json_val(res['closed_form']['q'])})"
            )
    rep.notes.append(
        "Step IIA pass: taken as Gamma_I with the mu entry (residual order bound, initially M(n,d)) "
        "decremented by one per pass; the final mu entry is restored to the input mu"
    )
    return rep
