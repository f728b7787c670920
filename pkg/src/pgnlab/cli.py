"""Command line entry point: ``python -m pgnlab <command> ...``.

Exit codes: 0 success, 2 usage error, 3 domain error (budget exceeded,
inadmissible pair, no valid k0, invalid template, ...).
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from ._exact import format_fraction, parse_number
from .constructions import (
    BandTooWide,
    BoundedFunction,
    NoValidK0,
    StepFunction,
    SupViolated,
    build_schedule,
    construction_I,
    construction_II,
    key_gap,
    lemma_key_solve,
    verify_construction_I,
    verify_construction_II,
)
from .dimensions import SystemShape, dimension_report
from .latflow import (
    BudgetExceeded,
    DEFAULT_BUDGET,
    LatticeBasis,
    cusp_occupation,
    flow_lattice,
    h_trajectory,
    occupation_joint,
    scan_Q,
    successive_minima,
)
from .templates import (
    Template,
    TemplateError,
    average_contraction,
    standard_template_seq,
    validate_template,
)

DOMAIN_ERRORS = (BudgetExceeded, TemplateError, NoValidK0, BandTooWide, SupViolated)


class UsageError(Exception):
    pass


# --- parsing helpers ---------------------------------------------------------

def _pair(text):
    try:
        m, n = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected m,n but got {text!r}") from None
    return m, n


def _numbers(text):
    return [parse_number(x) for x in text.split(",") if x.strip()]


def _matrix(text):
    """``"a"``, ``"a,b"`` (one row) or ``"a,b;c,d"`` (rows split by ';')."""
    rows = [[parse_number(x) for x in row.split(",")] for row in text.split(";")]
    if len({len(r) for r in rows}) != 1:
        raise argparse.ArgumentTypeError(f"ragged matrix {text!r}")
    return rows


def _time_grid(text):
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected start:stop:step") from None
    if step <= 0 or b < a:
        raise argparse.ArgumentTypeError("need start <= stop and step > 0")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(n)


def _points(text):
    out = []
    for item in text.split(","):
        t, e = item.split(":")
        out.append((parse_number(t), parse_number(e)))
    return out


def _shape(args):
    weights = _numbers(args.weights) if getattr(args, "weights", None) else None
    try:
        return SystemShape(tuple(args.pairs), weights)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _f(x):
    """Numbers for output: exact rationals as p/q, floats with 12 digits."""
    if isinstance(x, Fraction):
        return format_fraction(x)
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.12g}")
    return x


# --- output -------------------------------------------------------------------

class Output:
    def __init__(self, args):
        self.dir = args.out
        self.format = args.format

    def emit(self, name, text):
        if not text.endswith("\n"):
            text += "\n"
        sys.stdout.write(text)
        if self.dir:
            os.makedirs(self.dir, exist_ok=True)
            with open(os.path.join(self.dir, name), "w") as fh:
                fh.write(text)

    def table(self, name, header, rows):
        """Rows of plain values, as JSON records or CSV."""
        if self.format == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow(["" if v is None else (f"{v:.12g}" if isinstance(v, float) else v) for v in r])
            self.emit(name + ".csv", buf.getvalue())
        else:
            recs = [{h: v for h, v in zip(header, r)} for r in rows]
            self.emit(name + ".json", json.dumps(recs, indent=1))

    def record(self, name, obj):
        if self.format == "csv":
            self.table(name, ["key", "value"],
                       [(k, json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in obj.items()])
        else:
            self.emit(name + ".json", json.dumps(obj, indent=1))


# --- commands -------------------------------------------------------------

def cmd_dim(args, out):
    shape = _shape(args)
    delta = parse_number(args.delta)
    if not 0 < delta <= 1:
        raise UsageError("delta must lie in (0, 1]")
    out.record("dim", dimension_report(shape, delta).as_dict())
    return 0


def cmd_template(args, out):
    if args.tcmd == "standard":
        L = standard_template_seq(_points(args.points), args.m, args.n)
        out.emit("template.json", L.to_json())
        return 0
    with open(args.file) as fh:
        try:
            L = Template.from_json(fh.read())
        except (ValueError, KeyError) as exc:
            raise UsageError(f"bad template file: {exc}") from None
    if args.tcmd == "validate":
        report = validate_template(L)
        if not report:
            out.emit("validate.txt", "valid")
            return 0
        out.emit("validate.txt", "\n".join(str(v) for v in report))
        return 3
    window = None
    if args.window:
        window = tuple(_numbers(args.window))
        if len(window) != 2:
            raise UsageError("window is a,b")
    val = average_contraction(L, window)
    lo, hi = window if window else L.domain
    out.record("rate", {"window": [_f(Fraction(lo)), _f(Fraction(hi))],
                        "delta": _f(val), "value": _f(float(val))})
    return 0


def cmd_construct(args, out):
    shape = _shape(args)
    at = [float(x) for x in _numbers(args.at)]
    if args.kmax is not None:
        kw = {"kmax": args.kmax}
    else:
        # one extra window so 1x1 tents at the window edge are complete
        kw = {"horizon": min(1e12, max(at) + 3 * math.sqrt(max(at)))}
    deltas = _numbers(args.deltas) if args.deltas else None
    sched = build_schedule(shape, mode=args.mode, deltas=deltas, **kw)
    ks = [sched.k_at(x) for x in at]
    for k in ks:
        if k < sched.k0:
            raise NoValidK0(f"window k={k} lies before k0={sched.k0}")
    if args.mode == "I":
        tt = construction_I(sched, ks)
        rep = verify_construction_I(tt, sched, ks)
    else:
        if args.band is None:
            raise UsageError("mode II needs --band")
        tt = construction_II(sched, ks)
        rep = verify_construction_II(tt, sched, ks, parse_number(args.band))
    if out.format == "csv":
        out.emit("report.csv", rep.to_csv())
    else:
        out.emit("report.json", rep.to_json())
    if out.dir and args.save_templates:
        for i, L in enumerate(tt, start=1):
            with open(os.path.join(out.dir, f"factor_{i}.json"), "w") as fh:
                fh.write(L.to_json() + "\n")
    return 0


def _random_unimodular(d, rng):
    while True:
        A = rng.normal(size=(d, d))
        det = np.linalg.det(A)
        if abs(det) > 1e-3:
            break
    if det < 0:
        A[:, 0] = -A[:, 0]
        det = -det
    return A / det ** (1.0 / d)


def cmd_lattice(args, out):
    budget = args.budget
    if args.lcmd == "minima":
        if args.random:
            basis = LatticeBasis(_random_unimodular(args.random, np.random.default_rng(args.seed)))
        elif args.basis:
            basis = LatticeBasis(np.array(_matrix(args.basis), dtype=float))
        else:
            basis = flow_lattice(_matrix(args.theta), args.t)
        lam, Z = successive_minima(basis, budget, return_vectors=True)
        rows = [(k + 1, float(x), math.log(x), " ".join(str(int(z)) for z in Z[k]))
                for k, x in enumerate(lam)]
        out.table("minima", ["k", "lambda", "h", "coefficients"], rows)
        return 0
    if args.lcmd == "traj":
        traj = h_trajectory(_matrix(args.theta), args.m, args.n, args.t, budget,
                            first_only=args.first_only)
        if out.format == "json":
            out.emit("traj.json", json.dumps({"t": [_f(t) for t in traj.grid],
                                              "h": [[_f(h) for h in r] for r in traj.rows]}))
        else:
            out.emit("traj.csv", traj.to_csv())
        return 0
    if args.lcmd == "scan":
        eps, Q = float(parse_number(args.eps)), float(parse_number(args.Q))
        w = scan_Q(_matrix(args.theta), eps, Q, budget)
        if w is None:
            out.emit("scan.txt", "no witness")
        else:
            out.record("scan", {"p": list(w.p), "q": list(w.q), "error": _f(w.error), "qnorm": w.qnorm})
        return 0
    # occupy
    eps_or_r = float(parse_number(args.eps)) if args.eps else None
    if args.cusp is not None:
        if len(args.theta) != 1:
            raise UsageError("cusp occupation takes one --theta")
        val = cusp_occupation(_matrix(args.theta[0]), args.m, args.n, float(parse_number(args.cusp)),
                              args.T, args.step, budget)
        out.record("occupy", {"cusp_occupation": _f(val)})
        return 0
    if eps_or_r is None:
        raise UsageError("joint occupation needs --eps")
    thetas = [_matrix(t) for t in args.theta]
    shape = _shape(args)
    val = occupation_joint(thetas, shape, eps_or_r, args.T, args.step,
                           None if args.exclude is None else args.exclude - 1, budget)
    out.record("occupy", {"occupation": _f(val)})
    return 0


def cmd_lemmakey(args, out):
    with open(args.spec) as fh:
        spec = json.load(fh)
    try:
        fs = []
        for f in spec["functions"]:
            step = StepFunction(tuple(parse_number(str(x)) for x in f.get("breaks", [])),
                                tuple(parse_number(str(x)) for x in f["values"]))
            sup = parse_number(str(f["sup"])) if "sup" in f else step.sup
            fs.append((step, sup))
        sigmas = [parse_number(str(x)) for x in spec["sigmas"]]
        eps = parse_number(str(spec["eps"]))
        t0 = parse_number(str(spec["t0"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad lemmakey spec: {exc}") from None
    funcs = [BoundedFunction(f, Fraction(sup), f.bounded().tail) for f, sup in fs]
    t = lemma_key_solve(funcs, sigmas, eps, t0)
    gap = key_gap(funcs, [Fraction(s) for s in sigmas], Fraction(eps), t)
    out.record("lemmakey", {"t": _f(Fraction(t)), "gap": _f(gap), "holds": gap >= 0})
    return 0


# --- parser -------------------------------------------------------------------

def _global_flags(p, defaults):
    kw = (lambda v: {"default": v}) if defaults else (lambda v: {"default": argparse.SUPPRESS})
    p.add_argument("--out", help="also write outputs into this directory", **kw(None))
    p.add_argument("--format", choices=("json", "csv"), **kw("json"))
    p.add_argument("--seed", type=int, help="seed for randomized inputs", **kw(0))
    p.add_argument("--budget", type=float, help="enumeration cell budget", **kw(DEFAULT_BUDGET))


def build_parser():
    p = argparse.ArgumentParser(prog="pgnlab", description=__doc__.splitlines()[0])
    _global_flags(p, True)
    # the same flags are accepted after the subcommand as well
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, False)
    sub = p.add_subparsers(dest="cmd", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    d = add_parser("dim", help="closed-form dimension values")
    d.add_argument("--pairs", type=_pair, nargs="+", required=True)
    d.add_argument("--weights")
    d.add_argument("--delta", default="1")

    t = sub.add_parser("template", help="template tools")
    tsub = t.add_subparsers(dest="tcmd", required=True)
    tv = tsub.add_parser("validate", parents=[common])
    tv.add_argument("file")
    ts = tsub.add_parser("standard", parents=[common])
    ts.add_argument("--m", type=int, required=True)
    ts.add_argument("--n", type=int, required=True)
    ts.add_argument("--points", required=True, help="t:eps,t:eps,...")
    tr = tsub.add_parser("rate", parents=[common])
    tr.add_argument("file")
    tr.add_argument("--window", help="a,b")

    c = add_parser("construct", help="build and verify a construction")
    c.add_argument("--mode", choices=("I", "II"), default="I")
    c.add_argument("--pairs", type=_pair, nargs="+", required=True)
    c.add_argument("--weights")
    c.add_argument("--deltas")
    c.add_argument("--band")
    c.add_argument("--at", required=True, help="comma-separated window positions T")
    c.add_argument("--kmax", type=int)
    c.add_argument("--save-templates", action="store_true")

    lat = sub.add_parser("lattice", help="lattice flow diagnostics")
    lsub = lat.add_subparsers(dest="lcmd", required=True)
    lm = lsub.add_parser("minima", parents=[common])
    lm.add_argument("--basis", help="rows split by ';'")
    lm.add_argument("--theta", default="0")
    lm.add_argument("--t", type=float, default=0.0)
    lm.add_argument("--random", type=int, metavar="D", help="random unimodular basis of size D")
    lt = lsub.add_parser("traj", parents=[common])
    lt.add_argument("--theta", required=True)
    lt.add_argument("--m", type=int, default=1)
    lt.add_argument("--n", type=int, default=1)
    lt.add_argument("--t", type=_time_grid, required=True, help="start:stop:step")
    lt.add_argument("--first-only", action="store_true")
    ls = lsub.add_parser("scan", parents=[common])
    ls.add_argument("--theta", required=True)
    ls.add_argument("--eps", required=True)
    ls.add_argument("--Q", required=True)
    lo = lsub.add_parser("occupy", parents=[common])
    lo.add_argument("--theta", nargs="+", required=True)
    lo.add_argument("--pairs", type=_pair, nargs="+", default=[(1, 1)])
    lo.add_argument("--weights")
    lo.add_argument("--eps")
    lo.add_argument("--cusp", help="threshold r for lambda_1 < r")
    lo.add_argument("--m", type=int, default=1)
    lo.add_argument("--n", type=int, default=1)
    lo.add_argument("--T", type=float, required=True)
    lo.add_argument("--step", type=float, default=0.01)
    lo.add_argument("--exclude", type=int, help="1-based factor to leave out")

    k = add_parser("lemmakey", help="solve the key inequality for step functions")
    k.add_argument("spec", help="JSON with functions, sigmas, eps, t0")
    return p


COMMANDS = {"dim": cmd_dim, "template": cmd_template, "construct": cmd_construct,
            "lattice": cmd_lattice, "lemmakey": cmd_lemmakey}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Output(args)
    try:
        return COMMANDS[args.cmd](args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
