"""Command-line front end.

    amv resolve <in> -o <out>          history as JSON lines
    amv bounds --gamma <json> | --r .. --mu ..
    amv transform <in> --centre <json> -o <out>
    amv check <in> [--thorough]

Exit codes: 0 success, 2 invalid input, 3 budget or year limit exceeded,
4 internal consistency failure.
"""

import argparse
import os
import sys

from . import __version__
from .bounds import bound_report, digit_cap
from .chart import compute_data_vector, validate
from .driver import DEFAULT_YEAR_LIMIT, export_leaves, resolver_for
from .errors import AmvError, ConsistencyError, InadmissibleCentre, InputError, ResourceError, UnsupportedError
from .io import (
    SCHEMA,
    centre_from_json,
    dumps,
    dumps_line,
    gamma_from_json,
    load_json_arg,
    marked_ideal_to_json,
    parse_input,
)
from .transform import blowup_affine_marked_ideal

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_CONSISTENCY = 0, 2, 3, 4


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _natural(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="amv", description="Resolution of singularities of affine marked ideals.")
    p.add_argument("--version", action="version", version=f"amv {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-o", "--output", help="output file (default: stdout)")
        sp.add_argument("--seed", type=_natural, default=0, help="seed for sample points (default 0)")
        sp.add_argument("--gb-steps", type=_positive, help="Groebner reduction budget "
                        "(overrides AMV_BUDGET_GB_STEPS)")

    r = sub.add_parser("resolve", help="resolve an affine marked ideal")
    r.add_argument("input")
    common(r)
    r.add_argument("--year-limit", type=_positive, default=DEFAULT_YEAR_LIMIT)
    r.add_argument("--emit-invariants", action="store_true", help="add per-year invariant samples")
    r.add_argument("--check-monotone", action="store_true",
                   help="fail (exit 4) if the invariant does not drop over a centre")
    r.add_argument("--samples", type=_positive, default=25)

    b = sub.add_parser("bounds", help="evaluate the effective bounds for a data vector")
    common(b)
    b.add_argument("--gamma", help="data vector as JSON (inline or a path)")
    for name in ("r", "n", "m", "d", "l", "q", "mu"):
        b.add_argument(f"--{name}", type=_natural)
    b.add_argument("--digit-cap", type=_positive, help="largest number of digits evaluated numerically")
    b.add_argument("--t-bl", type=_natural, default=6, help="iterations compared against the closed form")

    t = sub.add_parser("transform", help="blow up along a given centre")
    t.add_argument("input")
    common(t)
    t.add_argument("--centre", required=True, help="centre as JSON (inline or a path)")

    c = sub.add_parser("check", help="validate an affine marked ideal")
    c.add_argument("input")
    common(c)
    c.add_argument("--thorough", action="store_true", help="exact overlap checks by elimination")
    c.add_argument("--samples", type=_positive, default=25)
    return p


class _Out:
    def __init__(self, path):
        self.path = path
        self.parts = []

    def write(self, text):
        self.parts.append(text)

    def close(self):
        data = "".join(self.parts)
        if self.path in (None, "-"):
            sys.stdout.write(data)
        else:
            with open(self.path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(data)


def cmd_resolve(args, out):
    T = parse_input(args.input)
    R = resolver_for(T, year_limit=args.year_limit, seed=args.seed, samples=args.samples,
                     check_monotone=args.check_monotone, emit_invariants=args.emit_invariants)
    out.write(dumps_line({
        "schema": SCHEMA, "kind": "resolution_header", "seed": args.seed,
        "year_limit": args.year_limit, "input": marked_ideal_to_json(T),
        "data_vector": list(compute_data_vector(T).as_tuple()),
    }))
    err = None
    try:
        tree = R.run()
    except AmvError as e:
        err = e
    for rec in R.records:
        d = rec.to_json(with_invariants=args.emit_invariants)
        d["kind"] = "year"
        out.write(dumps_line(d))
    if err is not None:
        out.write(dumps_line({"kind": "error", "type": type(err).__name__, "message": str(err)}))
        raise err
    final, snc = export_leaves(tree.final_leaves, tree.mu, tree.years)
    out.write(dumps_line({
        "kind": "final", "years": tree.years, "snc": snc,
        "cosupport_empty": True,
        "laws": {name: R.laws.count(name) for name in sorted({e[0] for e in R.laws.entries})},
        "notes": list(tree.notes),
        "result": marked_ideal_to_json(final),
    }))
    if not snc:
        raise ConsistencyError("final divisors are not certified normal crossings")
    return EXIT_OK


def cmd_bounds(args, out):
    names = ("r", "n", "m", "d", "l", "q", "mu")
    flags = {k: getattr(args, k) for k in names}
    if args.gamma is not None:
        if any(v is not None for v in flags.values()):
            raise InputError("give the data vector either with --gamma or with flags, not both")
        gamma = gamma_from_json(load_json_arg(args.gamma))
    else:
        missing = [k for k, v in flags.items() if v is None]
        if missing:
            raise InputError(f"missing data vector entries: {', '.join(missing)}")
        gamma = gamma_from_json(flags)
    if gamma[1] < 1 or gamma[3] < 1:
        raise InputError("bounds need n >= 1 and d >= 1")
    if args.digit_cap is not None:
        with digit_cap(args.digit_cap):
            rep = bound_report(gamma, t_bl=args.t_bl).to_json()
    else:
        rep = bound_report(gamma, t_bl=args.t_bl).to_json()
    out.write(dumps(rep))
    return EXIT_OK


def cmd_transform(args, out):
    T = parse_input(args.input)
    centre = centre_from_json(load_json_arg(args.centre), T)
    try:
        T2 = blowup_affine_marked_ideal(T, centre, seed=args.seed)
    except InadmissibleCentre as e:
        # a user-supplied centre outside the cosupport is bad input
        raise InputError(str(e))
    doc = marked_ideal_to_json(T2)
    doc["data_vector"] = list(compute_data_vector(T2).as_tuple())
    out.write(dumps(doc))
    return EXIT_OK


def cmd_check(args, out):
    T = parse_input(args.input)
    rep = validate(T, samples=args.samples, seed=args.seed, thorough=args.thorough)
    out.write(dumps({"schema": SCHEMA, "kind": "validation_report", "ok": rep.ok,
                     "data_vector": list(compute_data_vector(T).as_tuple()), "items": rep.as_dict()}))
    return EXIT_OK if rep.ok else EXIT_INPUT


COMMANDS = {"resolve": cmd_resolve, "bounds": cmd_bounds, "transform": cmd_transform, "check": cmd_check}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors, which is also our input code
        return e.code if isinstance(e.code, int) else EXIT_INPUT
    if args.gb_steps is not None:
        os.environ["AMV_BUDGET_GB_STEPS"] = str(args.gb_steps)
    out = _Out(args.output)
    try:
        code = COMMANDS[args.command](args, out)
    except (InputError, UnsupportedError) as e:
        code = EXIT_INPUT
        print(f"amv: input error: {e}", file=sys.stderr)
    except ResourceError as e:
        code = EXIT_BUDGET
        print(f"amv: {e}", file=sys.stderr)
    except AmvError as e:
        code = EXIT_CONSISTENCY
        print(f"amv: consistency failure: {e}", file=sys.stderr)
    # partial output (history up to a failure) is still written
    if out.parts:
        out.close()
    return code


if __name__ == "__main__":
    sys.exit(main())
