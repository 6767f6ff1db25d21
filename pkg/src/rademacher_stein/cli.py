"""Command line entry point: ``rademacher-stein <command> ...``.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage error, 3 input error.
Every run writes a JSON report (to ``--report`` or standard output).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from typing import Dict, List, Optional, Sequence

from . import __version__
from . import formats
from .chaos import ChaosDecomposition, compress, decompose_hoeffding, decompose_walsh, first_chaos, to_table
from .contraction import check_estimates, contraction_norms, star
from .engine import RNG_ID, distance, enumerate_expectation, mc_distance
from .errors import RademacherSteinError
from .generators import random_kernel, rng_for
from .malliavin import apply_L, apply_L_inverse, apply_Pt
from .sparse import Cover, fractional_product, scaling_table
from .stein import (
    bound_average,
    bound_double_integral,
    bound_fixed_chaos,
    bound_general,
    bound_sparse_stats,
    bound_two_runs,
    chatterjee_bound,
    parse_weights,
    two_runs_decomposition,
)
from .suite import Check, chain_rule, drift, operators, run_all
from .testfunctions import parse_test_function

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3
MEASURE_LIMIT = 20


class InputError(Exception):
    pass


class Run:
    """Collects rows, inputs and results for the JSON report."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.t0 = time.perf_counter()
        self.inputs: Dict[str, str] = {}
        self.rows: List[dict] = []
        self.result: dict = {}
        self.table: Optional[str] = None

    @property
    def exact(self) -> bool:
        return getattr(self.args, "mode", "float") == "rational"

    def load(self, path: str):
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from exc
        self.inputs[path] = hashlib.sha256(raw).hexdigest()
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc

    def parse(self, path: str, reader, *extra):
        doc = self.load(path)
        try:
            return reader(doc, *extra)
        except (ValueError, TypeError, KeyError, IndexError) as exc:
            raise InputError(f"{path}: {exc}") from exc

    def check(self, id_, label, lhs, rhs, passed, tolerance=0.0, **extra):
        row = Check(id_, label, lhs, rhs, bool(passed), tolerance).to_json()
        row.pop("seed")
        row.update(extra)
        self.rows.append(row)

    def add_checks(self, checks: Sequence[Check]):
        self.rows.extend(c.to_json() for c in checks)

    def set_table(self, header: Sequence[str], rows: Sequence[Sequence]):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(x) for x in r])
        self.table = buf.getvalue()

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.rows)

    def report(self) -> dict:
        return {
            "command": self.argv,
            "version": __version__,
            "environment": {"version": __version__, "rng": RNG_ID, "mode": getattr(self.args, "mode", "float"),
                            "python": sys.version.split()[0]},
            "inputs": self.inputs,
            "rows": self.rows,
            "passed": self.passed,
            "result": self.result,
            "wall_time": time.perf_counter() - self.t0,
        }


def _cell(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _num(x):
    return formats.dump_number(x) if not isinstance(x, float) else x


# ---------------------------------------------------------------------------
# commands


def cmd_decompose(run: Run):
    a = run.args
    d, values = run.parse(a.table, formats.table_from_json, run.exact)
    fn = decompose_walsh if a.method == "walsh" else decompose_hoeffding
    dec = fn(values, d)
    back = to_table(dec, d, exact=run.exact)
    if run.exact:
        err = max((abs(x - y) for x, y in zip(back, values)), default=0)
        ok = err == 0
    else:
        err = max((abs(float(x) - y) for x, y in zip(back, values)), default=0.0)
        ok = err <= a.tol * max(1.0, max(abs(v) for v in values))
    run.check("reconstruction", "F = E F + sum_n J_n(f_n)", err, 0, ok, 0.0 if run.exact else a.tol)
    doc = formats.decomposition_to_json(dec)
    run.result = {"orders": list(dec.orders), "mean": _num(dec.mean)}
    if a.out:
        formats.save(a.out, doc)
    else:
        run.result["decomposition"] = doc


def cmd_contract(run: Run):
    a = run.args
    f = run.parse(a.f, formats.kernel_from_json, run.exact)
    g = run.parse(a.g, formats.kernel_from_json, run.exact)
    h = star(f, g, a.r, a.l)
    n = contraction_norms(f, g, a.r, a.l, exact=run.exact)
    run.result = {"order": h.order, "entries": len(h),
                  "norms": {"full": _num(n.full), "off_diagonal": _num(n.off_diagonal),
                            "diagonal": _num(n.diagonal), "sym_off_diagonal": _num(n.sym_off_diagonal)}}
    doc = formats.kernel_to_json(h)
    if a.out:
        formats.save(a.out, doc)
    else:
        run.result["kernel"] = doc


def cmd_verify_estimates(run: Run):
    a = run.args
    table = []
    for seed in range(a.seeds):
        rng = rng_for(seed, 5)
        n, m = (int(x) for x in rng.integers(1, a.max_order + 1, size=2))
        f = random_kernel(rng, n, a.support, 0.35, run.exact)
        g = random_kernel(rng, m, a.support, 0.35, run.exact)
        for r in check_estimates(f, g).rows:
            table.append([seed, n, m, r.id, r.lhs, r.rhs, r.passed])
            run.check(r.id, f"contraction estimate ({r.relation})", r.lhs, r.rhs, r.passed, 0.0 if run.exact else 1e-10, seed=seed)
    run.set_table(["seed", "n", "m", "id", "lhs", "rhs", "pass"], table)
    run.result = {"instances": a.seeds, "rows": len(table), "failures": sum(not r[-1] for r in table)}


def cmd_operators(run: Run):
    a = run.args
    dec = run.parse(a.dec, formats.decomposition_from_json, run.exact)
    if a.op == "L":
        out = apply_L(dec)
    elif a.op == "Linv":
        out = apply_L_inverse(dec)
    else:
        if a.t is None:
            raise InputError("--t is required for Pt")
        out = apply_Pt(dec, a.t)
    doc = formats.decomposition_to_json(out)
    run.result = {"op": a.op, "orders": list(out.orders)}
    if a.out:
        formats.save(a.out, doc)
    else:
        run.result["decomposition"] = doc


def cmd_verify_malliavin(run: Run):
    a = run.args
    table = []
    for seed in range(a.seeds):
        rows = operators(seed, d=a.d, exact=run.exact) + chain_rule(seed, max_d=a.d) + drift(seed, max_d=min(a.d, 6), exact=run.exact)
        run.add_checks(rows)
        table += [[seed, r.id, r.to_json()["lhs"], r.to_json()["rhs"], r.passed] for r in rows]
    run.set_table(["seed", "identity", "lhs", "rhs", "pass"], table)
    run.result = {"instances": a.seeds, "rows": len(table), "failures": sum(not r[-1] for r in table)}


def _weights_for(spec: str, n: int) -> str:
    kind, _, rest = spec.partition(":")
    kw = [p for p in rest.split(",") if p and not p.startswith("n=")]
    return f"{kind}:" + ",".join([f"n={n}"] + kw)


def _measure(run: Run, dec: ChaosDecomposition, h, bound_total: float, label: str):
    small, _ = compress(dec)
    if small.dimension > MEASURE_LIMIT:
        return None
    dist = distance(small, h)
    run.check("dominance", f"{label}: |E h(F) - E h(Z)| <= bound", dist, bound_total, bound_total >= dist - 1e-9, 1e-9)
    return dist


def _kernel_input(run: Run):
    a = run.args
    if a.kernel:
        return run.parse(a.kernel, formats.kernel_from_json, run.exact)
    if a.dec:
        dec = run.parse(a.dec, formats.decomposition_from_json, run.exact)
        if len(dec.orders) != 1:
            raise InputError("a single-order decomposition is required for this mode")
        return dec.kernel(dec.orders[0])
    raise InputError("--kernel or --dec is required")


def cmd_bound(run: Run):
    a = run.args
    try:
        h = parse_test_function(a.h)
    except (ValueError, KeyError) as exc:
        raise InputError(f"--h: {exc}") from exc
    mode = a.bound_mode
    if a.ns:
        return _bound_rate(run, h)
    if mode == "general":
        if a.dec:
            dec = run.parse(a.dec, formats.decomposition_from_json, False)
            label = "master bound"
        elif a.alpha:
            alpha = parse_weights(a.alpha)
            dec = first_chaos(list(alpha.values), alpha.offset)
            avg = bound_average(alpha, h)
            run.result["average_bound"] = avg
            run.check("average", "Rademacher-average closed form", avg, avg, True)
            label = "master bound (first chaos)"
        else:
            raise InputError("--dec or --alpha is required")
        b = bound_general(dec, h)
        run.result["bound"] = b.to_json()
        run.check("B1", "E|1 - <DF,-DL^-1F>|", b.B1, b.B1, True)
        run.check("B2", "(20/3) E sum_k |D_k L^-1 F| |D_k F|^3", b.B2, b.B2, True)
        if a.measure:
            run.result["measured_distance"] = _measure(run, dec, h, b.total, label)
    elif mode == "fixed-chaos":
        f = _kernel_input(run)
        b = bound_fixed_chaos(f, h)
        run.result["bound"] = b.to_json()
        for k, v in b.breakdown.items():
            run.check(k, "fixed-chaos term", v, v, True)
        if a.measure:
            run.result["measured_distance"] = _measure(run, ChaosDecomposition(f.support_bound, 0, {f.order: f}), h, b.total, "fixed chaos")
    elif mode == "double":
        f = _kernel_input(run)
        if f.order != 2:
            raise InputError("double mode needs an order-2 kernel")
        b = bound_double_integral(f, h)
        run.result["bound"] = {"value": b.value, "star21_variant": b.star21_variant, "diagonal_variant": b.diagonal_variant,
                               "trace_chain": b.trace_chain, "trace": b.trace, "norms": b.norms,
                               "chatterjee": chatterjee_bound(f)}
        run.check("trace_chain", "contraction bound <= trace chain", b.value, b.trace_chain, b.value <= b.trace_chain * (1 + 1e-12))
        if a.measure:
            run.result["measured_distance"] = _measure(run, ChaosDecomposition(f.support_bound, 0, {2: f}), h, b.value, "double integral")
    elif mode == "runs":
        if not a.alpha:
            raise InputError("--alpha is required for runs")
        alpha = parse_weights(a.alpha)
        bound, var = bound_two_runs(alpha, h)
        s2 = sum(float(v) ** 2 for v in alpha.values)
        s11 = sum(float(x) * float(y) for x, y in zip(alpha.values, alpha.values[1:]))
        run.result["bound"] = bound
        run.result["VarG"] = var
        run.check("VarG:squares", "(3/16) sum alpha_i^2", 3 * s2 / 16, 3 * s2 / 16, True)
        run.check("VarG:neighbours", "(1/8) sum alpha_i alpha_{i+1}", s11 / 8, s11 / 8, True)
        run.check("VarG", "Var G_n = (3/16) sum alpha^2 + (1/8) sum alpha_i alpha_{i+1}", var, 3 * s2 / 16 + s11 / 8,
                  math.isclose(var, 3 * s2 / 16 + s11 / 8, rel_tol=1e-12), 1e-12)
        run.check("runs_bound", "weighted 2-runs bound", bound, bound, True)
        if a.measure:
            f, g, _ = two_runs_decomposition(alpha)
            dec = ChaosDecomposition(len(alpha) + 1, 0, {1: f, 2: g})
            run.result["measured_distance"] = _measure(run, dec, h, bound, "2-runs")
    elif mode == "sparse":
        if not a.set:
            raise InputError("--set is required for sparse")
        F = run.parse(a.set, formats.set_from_json)
        stat1, stat2, b = bound_sparse_stats(F, h)
        run.result.update({"stat1": stat1, "stat2": stat2, "card": F.cardinality, "max_star": F.max_star,
                           "sharp": F.sharp, "bound": b.to_json()})
        run.check("stat1", "|F#|^{1/2} / |F|", stat1, stat1, True)
        run.check("stat2", "(max_j |F*_j| / |F|)^{1/4}", stat2, stat2, True)
    if a.out:
        formats.save(a.out, run.report())


def _bound_rate(run: Run, h):
    a = run.args
    rows = []
    for n in a.ns:
        if a.bound_mode == "general":
            alpha = parse_weights(_weights_for(a.alpha or "partial", n))
            dec = first_chaos(list(alpha.values), alpha.offset)
            b = bound_general(dec, h)
            b1, b2, total = b.B1, b.B2, b.total
        elif a.bound_mode == "runs":
            alpha = parse_weights(_weights_for(a.alpha or "ones", n))
            total, _ = bound_two_runs(alpha, h)
            f, g, _ = two_runs_decomposition(alpha)
            dec = ChaosDecomposition(len(alpha) + 1, 0, {1: f, 2: g})
            b1 = b2 = float("nan")
        else:
            raise InputError("--ns rate tables support the general and runs modes")
        dist = _measure(run, dec, h, total, f"n={n}") if a.measure else None
        rows.append([n, b1, b2, total, "" if dist is None else dist])
    run.set_table(["n", "B1", "B2", "total", "measured_distance"], rows)
    run.result["rate"] = [dict(zip(["n", "B1", "B2", "total", "measured_distance"], r)) for r in rows]


def cmd_distance(run: Run):
    a = run.args
    dec = run.parse(a.dec, formats.decomposition_from_json, False)
    try:
        h = parse_test_function(a.h)
    except (ValueError, KeyError) as exc:
        raise InputError(f"--h: {exc}") from exc
    if a.distance_mode == "exact":
        small, _ = compress(dec)
        val = distance(small, h)
        est = {"value": val, "std_error": 0.0, "samples": 1 << small.dimension, "seed": a.seed}
    else:
        est = mc_distance(dec, h, a.samples, a.seed).to_json()
    run.result["estimate"] = est
    if a.out:
        formats.save(a.out, est)


def cmd_sparse_build(run: Run):
    a = run.args
    cover = Cover.parse(a.cover, a.d, a.m)
    F = fractional_product(cover, a.N, a.phi, a.seed)
    run.result = {"d": F.d, "N": F.N, "representatives": len(F), "card": F.cardinality, "max_star": F.max_star}
    if a.out:
        formats.save(a.out, formats.set_to_json(F))
    else:
        run.result["set"] = formats.set_to_json(F)


def cmd_sparse_scale(run: Run):
    a = run.args
    cover = Cover.parse(a.cover, a.d, a.m)
    res = scaling_table(cover, a.Ns, parse_test_function(a.h), a.phi, a.seed)
    cols = ["N", "n", "reps", "card", "max_star", "sharp", "stat1", "stat2", "exact_bound", "B1", "B2"]
    run.set_table(cols, [[r[c] for c in cols] for r in res["rows"]])
    run.result = {"cover": res["cover"], "slopes": res["slopes"], "rows": res["rows"]}
    if len(res["rows"]) >= 2:
        s1 = [r["stat1"] for r in res["rows"]]
        s2 = [r["stat2"] for r in res["rows"]]
        run.check("stat1_decreasing", "|F#|^{1/2}/|F| decreases in N", s1[-1], s1[0], all(x > y for x, y in zip(s1, s1[1:])))
        run.check("stat2_decreasing", "(max|F*|/|F|)^{1/4} decreases in N", s2[-1], s2[0], all(x > y for x, y in zip(s2, s2[1:])))


def cmd_verify_all(run: Run):
    a = run.args
    rows = run_all(a.seeds, d=a.d, exact=True)
    run.add_checks(rows)
    table = [[r.seed, r.id, r.to_json()["lhs"], r.to_json()["rhs"], r.passed] for r in rows]
    run.set_table(["seed", "identity", "lhs", "rhs", "pass"], table)
    fams: Dict[str, List[int]] = {}
    for r in rows:
        fam = r.id.split("[")[0]
        c = fams.setdefault(fam, [0, 0])
        c[0] += 1
        c[1] += int(not r.passed)
    run.result = {"instances": a.seeds, "families": {k: {"checks": v[0], "failures": v[1]} for k, v in fams.items()}}


# ---------------------------------------------------------------------------
# parser


def _ints(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json", help="standard output format")
    common.add_argument("--mode", choices=("float", "rational"), default="float", help="arithmetic")
    common.add_argument("--report", help="write the JSON report here instead of standard output")

    p = argparse.ArgumentParser(prog="rademacher-stein", description="Malliavin-Stein bounds for Rademacher functionals")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("decompose", parents=[common], help="chaos decomposition of a truth table")
    s.add_argument("--table", required=True)
    s.add_argument("--method", choices=("walsh", "hoeffding"), default="walsh")
    s.add_argument("--out")
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("contract", parents=[common], help="star contraction of two kernels")
    s.add_argument("--f", required=True)
    s.add_argument("--g", required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_contract)

    s = sub.add_parser("verify-estimates", parents=[common], help="contraction estimate chains on random kernels")
    s.add_argument("--seeds", type=int, default=100)
    s.add_argument("--max-order", type=int, default=4)
    s.add_argument("--support", type=int, default=8)
    s.add_argument("--out", help="CSV path")
    s.set_defaults(func=cmd_verify_estimates)

    s = sub.add_parser("operators", parents=[common], help="apply L, L^-1 or P_t")
    s.add_argument("--dec", required=True)
    s.add_argument("--op", choices=("L", "Linv", "Pt"), required=True)
    s.add_argument("--t", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_operators)

    s = sub.add_parser("verify-malliavin", parents=[common], help="operator identities on random decompositions")
    s.add_argument("--d", type=int, default=6)
    s.add_argument("--seeds", type=int, default=50)
    s.add_argument("--out", help="CSV path")
    s.set_defaults(func=cmd_verify_malliavin)

    s = sub.add_parser("bound", parents=[common], help="normal-approximation bounds")
    s.add_argument("--bound-mode", "--kind", dest="bound_mode", default="general",
                   choices=("general", "fixed-chaos", "double", "runs", "sparse"))
    s.add_argument("--dec")
    s.add_argument("--kernel")
    s.add_argument("--alpha", help="weights: ones:n=100, partial:n=100, inv:r=50, file:path")
    s.add_argument("--set")
    s.add_argument("--h", default="cos:a=1,b=0")
    s.add_argument("--ns", type=_ints, help="rate table over these n (CSV)")
    s.add_argument("--no-measure", dest="measure", action="store_false", help="skip the enumerated distance")
    s.add_argument("--out", help="also write the report here")
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("distance", parents=[common], help="|E h(F) - E h(Z)|")
    s.add_argument("--dec", required=True)
    s.add_argument("--h", default="cos:a=1,b=0")
    s.add_argument("--distance-mode", "--method", dest="distance_mode", choices=("exact", "mc"), default="exact")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_distance)

    s = sub.add_parser("sparse", help="sparse index sets")
    ss = s.add_subparsers(dest="sparse_command", required=True)
    for name, fn in (("build", cmd_sparse_build), ("scale", cmd_sparse_scale)):
        t = ss.add_parser(name, parents=[common])
        t.add_argument("--d", type=int, default=3)
        t.add_argument("--m", type=int, default=2)
        t.add_argument("--cover", default="1,2;2,3;1,3")
        t.add_argument("--phi", choices=("mixed", "random"), default="mixed")
        t.add_argument("--seed", type=int, default=0)
        t.add_argument("--out")
        if name == "build":
            t.add_argument("--N", type=int, required=True)
        else:
            t.add_argument("--Ns", type=_ints, default=[64, 128, 256, 512, 1024])
            t.add_argument("--h", default="cos:a=1,b=0")
        t.set_defaults(func=fn)

    s = sub.add_parser("verify", help="identity suites")
    vs = s.add_subparsers(dest="verify_command", required=True)
    t = vs.add_parser("all", parents=[common])
    t.add_argument("--d", type=int, default=6)
    t.add_argument("--seeds", type=int, default=200)
    t.add_argument("--out", help="CSV path")
    t.set_defaults(func=cmd_verify_all)
    return p


def _rewrite_mode(argv: List[str]) -> List[str]:
    # `--mode` doubles as the bound kind and the distance method on those commands
    if not argv or argv[0] not in ("bound", "distance"):
        return argv
    out = list(argv)
    for i, tok in enumerate(out[:-1]):
        if tok == "--mode" and out[i + 1] not in ("float", "rational"):
            out[i] = "--bound-mode" if argv[0] == "bound" else "--distance-mode"
    return out


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_rewrite_mode(argv))
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    r = Run(args, argv)
    try:
        args.func(r)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RademacherSteinError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rep = r.report()
    out_csv = getattr(args, "out", None) if r.table is not None else None
    if out_csv:
        with open(out_csv, "w") as fh:
            fh.write(r.table)
    text = json.dumps(rep, indent=1, default=str) + "\n"
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    if args.format == "csv" and r.table is not None:
        sys.stdout.write(r.table)
        if not args.report:
            sys.stderr.write(text)
    elif not args.report:
        sys.stdout.write(text)
    return EXIT_OK if r.passed else EXIT_CHECK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
