"""JSON formats (schema "amv1").

Polynomials are written in the canonical text form of SparsePoly.to_str,
rationals as "p/q" and infinity as "inf".  Readers are strict: unknown or
missing fields raise InputError naming the JSON pointer of the problem.
"""

import json
import re

from .chart import AffineMarkedIdeal, Chart, TransitionMap, chart_id, parse_chart_id
from .errors import InputError
from .poly import MAX_NVARS, RationalMapEntry, SparsePoly, parse_poly
from .transform import CentreSpec, ChartCentre

SCHEMA = "amv1"
_COORD = re.compile(r"x(\d+)")


def dumps(obj):
    """Canonical text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def dumps_line(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _fail(ptr, msg):
    raise InputError(f"{ptr or '/'}: {msg}")


def _expect_keys(obj, ptr, required, optional=()):
    if not isinstance(obj, dict):
        _fail(ptr, "expected an object")
    allowed = set(required) | set(optional)
    for k in obj:
        if k not in allowed:
            _fail(f"{ptr}/{k}", "unknown field")
    for k in required:
        if k not in obj:
            _fail(f"{ptr}/{k}", "missing field")


def _expect_int(v, ptr, lo=0):
    if not isinstance(v, int) or isinstance(v, bool) or v < lo:
        _fail(ptr, f"expected an integer >= {lo}")
    return v


def _poly(text, nvars, ptr):
    if not isinstance(text, str):
        _fail(ptr, "expected a polynomial string")
    try:
        return parse_poly(text, nvars)
    except InputError as e:
        _fail(ptr, str(e))


def _header(obj, ptr, kind):
    if obj.get("schema") != SCHEMA:
        _fail(f"{ptr}/schema", f"expected {SCHEMA!r}")
    if obj.get("kind") != kind:
        _fail(f"{ptr}/kind", f"expected {kind!r}")


# polynomials and maps

def entry_to_json(e):
    return {"num": e.num.to_str(), "den": e.den.to_str()}


def entry_from_json(obj, nvars, ptr):
    _expect_keys(obj, ptr, ["num", "den"])
    den = _poly(obj["den"], nvars, f"{ptr}/den")
    if not den:
        _fail(f"{ptr}/den", "zero denominator")
    return RationalMapEntry(_poly(obj["num"], nvars, f"{ptr}/num"), den)


# charts

def chart_to_json(c):
    return {
        "id": c.id,
        "nvars": c.nvars,
        "f_loc": c.f_loc.to_str(),
        "params": [p.to_str() for p in c.params_u],
        "num_X_eqns": c.num_X_eqns,
        "E": [{"coord": f"x{v + 1}", "tag": t} for v, t in c.E_list],
        "gens": [g.to_str() for g in c.gens],
    }


def parse_coordinate(text, nvars, ptr):
    """Index of a coordinate name 'x<i>'; anything else is not a
    coordinate divisor and is rejected."""
    if not isinstance(text, str):
        _fail(ptr, "expected a coordinate name")
    m = _COORD.fullmatch(text.strip())
    if not m or not 1 <= int(m.group(1)) <= nvars:
        _fail(ptr, f"{text!r} is not a coordinate x1..x{nvars}; divisors must be coordinate "
                   "hyperplanes (change coordinates or localize so the divisor becomes one)")
    return int(m.group(1)) - 1


def chart_from_json(obj, ptr):
    _expect_keys(obj, ptr, ["id", "nvars", "f_loc", "params", "num_X_eqns", "E", "gens"])
    n = _expect_int(obj["nvars"], f"{ptr}/nvars", 1)
    if n > MAX_NVARS:
        _fail(f"{ptr}/nvars", f"at most {MAX_NVARS} variables")
    try:
        alpha, beta = parse_chart_id(obj["id"]) if isinstance(obj["id"], str) else (None, None)
    except InputError as e:
        _fail(f"{ptr}/id", str(e))
    if alpha is None:
        _fail(f"{ptr}/id", "expected a chart id 'a<alpha>b<beta>'")
    f_loc = _poly(obj["f_loc"], n, f"{ptr}/f_loc")
    if not f_loc:
        _fail(f"{ptr}/f_loc", "must be nonzero")
    if not isinstance(obj["params"], list):
        _fail(f"{ptr}/params", "expected a list")
    params = [_poly(p, n, f"{ptr}/params/{i}") for i, p in enumerate(obj["params"])]
    k = _expect_int(obj["num_X_eqns"], f"{ptr}/num_X_eqns")
    if k > n:
        _fail(f"{ptr}/num_X_eqns", "more X equations than variables")
    if not isinstance(obj["E"], list):
        _fail(f"{ptr}/E", "expected a list")
    E = []
    for i, e in enumerate(obj["E"]):
        q = f"{ptr}/E/{i}"
        _expect_keys(e, q, ["coord", "tag"])
        E.append((parse_coordinate(e["coord"], n, f"{q}/coord"), _expect_int(e["tag"], f"{q}/tag")))
    if len({v for v, _ in E}) != len(E):
        _fail(f"{ptr}/E", "repeated coordinate")
    if len({t for _, t in E}) != len(E):
        _fail(f"{ptr}/E", "repeated tag")
    if not isinstance(obj["gens"], list):
        _fail(f"{ptr}/gens", "expected a list")
    gens = [_poly(g, n, f"{ptr}/gens/{i}") for i, g in enumerate(obj["gens"])]
    return Chart(alpha, beta, n, f_loc, params, k, E, gens)


def marked_ideal_to_json(T):
    return {
        "schema": SCHEMA,
        "kind": "affine_marked_ideal",
        "mu": T.mu,
        "charts": [chart_to_json(c) for c in T.charts],
        "transitions": [
            {"source": t.source, "target": t.target, "entries": [entry_to_json(e) for e in t.entries]}
            for t in T.transitions
        ],
    }


def marked_ideal_from_json(obj, ptr=""):
    _expect_keys(obj, ptr, ["schema", "kind", "mu", "charts"], ["transitions"])
    _header(obj, ptr, "affine_marked_ideal")
    mu = _expect_int(obj["mu"], f"{ptr}/mu")
    if not isinstance(obj["charts"], list) or not obj["charts"]:
        _fail(f"{ptr}/charts", "expected a nonempty list")
    charts = [chart_from_json(c, f"{ptr}/charts/{i}") for i, c in enumerate(obj["charts"])]
    ids = [c.id for c in charts]
    if len(set(ids)) != len(ids):
        _fail(f"{ptr}/charts", "duplicate chart id")
    by_id = {c.id: c for c in charts}
    transitions = []
    for i, t in enumerate(obj.get("transitions", [])):
        q = f"{ptr}/transitions/{i}"
        _expect_keys(t, q, ["source", "target", "entries"])
        for side in ("source", "target"):
            if t[side] not in by_id:
                _fail(f"{q}/{side}", f"unknown chart {t[side]!r}")
        src, tgt = by_id[t["source"]], by_id[t["target"]]
        if not isinstance(t["entries"], list) or len(t["entries"]) != tgt.nvars:
            _fail(f"{q}/entries", f"expected {tgt.nvars} entries")
        entries = [entry_from_json(e, src.nvars, f"{q}/entries/{j}") for j, e in enumerate(t["entries"])]
        transitions.append(TransitionMap(t["source"], t["target"], entries))
    return AffineMarkedIdeal(charts, transitions, mu)


def parse_input(path):
    """Read and validate an affine marked ideal file."""
    return marked_ideal_from_json(load_json(path))


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file")
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: not valid JSON ({e.msg} at line {e.lineno})")


def load_json_arg(text):
    """A JSON document given inline or as a path."""
    s = text.strip()
    if s.startswith("{") or s.startswith("["):
        try:
            return json.loads(s)
        except json.JSONDecodeError as e:
            raise InputError(f"inline JSON: {e.msg}")
    return load_json(text)


# centres and data vectors

def centre_from_json(obj, T, ptr=""):
    """{"schema", "kind": "centre", "charts": {id: {"params": [...], "f_sub": ...}}}"""
    _expect_keys(obj, ptr, ["schema", "kind", "charts"])
    _header(obj, ptr, "centre")
    if not isinstance(obj["charts"], dict):
        _fail(f"{ptr}/charts", "expected an object keyed by chart id")
    per = {}
    for cid, spec in sorted(obj["charts"].items()):
        q = f"{ptr}/charts/{cid}"
        try:
            c = T.chart(cid)
        except KeyError:
            _fail(q, "unknown chart")
        _expect_keys(spec, q, ["params"], ["f_sub"])
        if not isinstance(spec["params"], list) or not spec["params"]:
            _fail(f"{q}/params", "expected a nonempty list")
        params = [_poly(p, c.nvars, f"{q}/params/{i}") for i, p in enumerate(spec["params"])]
        f_sub = _poly(spec["f_sub"], c.nvars, f"{q}/f_sub") if "f_sub" in spec else None
        per[cid] = ChartCentre(params, f_sub)
    return CentreSpec(per)


def gamma_from_json(obj, ptr=""):
    names = ("r", "n", "m", "d", "l", "q", "mu")
    _expect_keys(obj, ptr, names, ["schema", "kind"])
    if "schema" in obj and obj["schema"] != SCHEMA:
        _fail(f"{ptr}/schema", f"expected {SCHEMA!r}")
    if "kind" in obj and obj["kind"] != "data_vector":
        _fail(f"{ptr}/kind", "expected 'data_vector'")
    vals = tuple(_expect_int(obj[k], f"{ptr}/{k}") for k in names)
    if vals[2] > vals[1]:
        _fail(f"{ptr}/m", "m must not exceed n")
    return vals


def single_chart_json(gens, nvars, mu, E_vars=()):
    """Input document for the common one-chart case with X the ambient space."""
    T = AffineMarkedIdeal(
        [Chart(0, 0, nvars, SparsePoly.one(nvars), [SparsePoly.var(nvars, i) for i in range(nvars)], 0,
               [(v, t) for t, v in enumerate(E_vars)], list(gens))],
        [], mu)
    return marked_ideal_to_json(T)


__all__ = [
    "SCHEMA", "dumps", "dumps_line", "parse_input", "load_json", "load_json_arg",
    "marked_ideal_to_json", "marked_ideal_from_json", "chart_to_json", "chart_from_json",
    "centre_from_json", "gamma_from_json", "single_chart_json", "chart_id",
]
