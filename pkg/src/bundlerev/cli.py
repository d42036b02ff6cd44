"""Command-line front end: ``bundlerev <subcommand> [options]``.

Exit status is 0 when every reported check passes, 2 when some check fails
and 1 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .approxmech import evaluate_decision, run_approx
from .coretail import (
    build_split,
    core_decomposition_bound,
    core_variance_checks,
    core_welfare_bound_check,
    ly1_check,
    many_max_check,
    tail_bound_check,
)
from .distcore import MarketInstance, load_instance, sum_dists
from .errors import BundleRevError, SizeError
from .gaps import CSV_COLUMNS, KINDS, run_gap_experiment
from .optrev import check_rev_vs_srev, rev_lp
from .pricing import (
    PricingScheme,
    bundle_combine,
    check_brendan,
    check_split,
    random_reserve_check,
    random_reserve_sim,
    shatter,
)
from .reductions import check_cor_bound, check_reduction_ratios
from .reports import Report
from .simplerev import PARTITION_CAP, brev, prev_exact, srev
from .singleitem import monopoly_price

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2
EXACT_RESERVE_CAP = 10**6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def config_hash(args: argparse.Namespace) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "func")}
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()[:12]


def _meta(args) -> dict:
    return {"version": __version__, "seed": args.seed, "config_hash": config_hash(args), "command": args.command}


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _emit(args, payload: dict) -> None:
    text = json.dumps(_plain({"meta": _meta(args), **payload}), indent=2, sort_keys=False) + "\n"
    _write(args, text)


def _write(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _status(reports: list[Report]) -> int:
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def _flatten(prefix: str, obj, out: dict) -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    else:
        out[prefix] = json.dumps(_plain(obj)) if isinstance(obj, (list, tuple)) else obj


def _emit_rows(args, rows: list[dict], columns) -> None:
    buf = io.StringIO()
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    buf.write(f"# generated {stamp}\n")
    buf.write(f"# bundlerev {__version__} seed={args.seed} config={config_hash(args)}\n")
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    _write(args, buf.getvalue())


def _emit_report(args, payload: dict) -> None:
    if args.format == "csv":
        row: dict = {"seed": args.seed}
        _flatten("", payload, row)
        _emit_rows(args, [row], list(row))
    else:
        _emit(args, payload)


def _load(args) -> MarketInstance:
    if not args.instance:
        raise _UsageError("--instance is required")
    return load_instance(args.instance)


class _UsageError(Exception):
    pass


# --- subcommands -------------------------------------------------------------


def cmd_analyze(args) -> int:
    inst = _load(args)
    out: dict = {"label": inst.label, "items": inst.n_items, "buyers": inst.n_buyers}
    s = srev(inst).value
    out["srev"] = s
    try:
        out["brev"] = brev(inst).value
    except SizeError as e:
        out["brev"] = None
        out["brev_reason"] = str(e)
    if inst.n_items <= PARTITION_CAP and out["brev"] is not None:
        p, part = prev_exact(inst)
        out["prev"] = p.value
        out["prev_partition"] = [list(b) for b in part.blocks]
    else:
        out["prev"] = None
        out["prev_reason"] = f"partition enumeration is capped at {PARTITION_CAP} items"
    reports = []
    best = max(s, out["brev"] or 0.0)
    if inst.n_buyers == 1:
        try:
            r = rev_lp(inst).objective
            out["rev"] = r
            out["ratio_rev_max"] = r / best if best > 0 else None
            out["ratio_rev_srev"] = r / s if s > 0 else None
            six = Report("six-max", r <= 6 * best + 1e-6, {})
            reports += [six, check_rev_vs_srev(inst)]
            out["within_6_max"] = six.passed
            out["within_log_srev"] = reports[-1]["within_log_srev"]
        except SizeError as e:
            out["rev"] = None
            out["rev_reason"] = str(e)
    else:
        out["rev"] = None
        out["rev_reason"] = "optimal revenue is only computed for a single buyer"
    _emit_report(args, out)
    return _status(reports)


def cmd_decompose(args) -> int:
    inst = _load(args)
    split = build_split(inst, args.mode, c=args.c, a=args.a)
    reports = [ly1_check(split), core_variance_checks(split), core_welfare_bound_check(split)]
    if inst.n_buyers == 1:
        try:
            reports += [core_decomposition_bound(split), tail_bound_check(split)]
        except SizeError as e:
            reports.append(Report("core-decomposition", True, {}, [f"skipped: {e}"]))
    elif args.c >= 4 * math.sqrt(2):
        reports.append(many_max_check(inst, args.c))
    _emit_report(args, {"split": split.to_dict(), "checks": [r.to_dict() for r in reports]})
    return _status(reports)


def cmd_approx(args) -> int:
    inst = _load(args)
    dec = run_approx(inst, args.epsilon, args.seed)
    out = {"decision": dec.to_dict()}
    reports = []
    try:
        ev = evaluate_decision(dec, inst)
        reports.append(ev)
        out["evaluation"] = ev.to_dict()
    except SizeError as e:
        out["evaluation"] = None
        out["evaluation_reason"] = str(e)
    _emit_report(args, out)
    return _status(reports)


def _scheme_at_floor(dists, i: int, c1: float) -> PricingScheme:
    """Item i alone, priced at its highest support value that still sells with probability >= c1."""
    d = dists[i]
    ok = d.support[d.survival() >= c1 - 1e-12]
    return PricingScheme((i,), float(ok.max()) if ok.size else 0.0)


def cmd_pricing(args) -> int:
    inst = _load(args)
    if inst.is_correlated:
        raise _UsageError("pricing checks need independent item values")
    consumer = inst.buyer_items(0)
    bidders = [sum_dists(inst.buyer_items(j)) for j in range(inst.n_buyers)]
    items = list(range(inst.n_items))
    if args.check == "split":
        rep = check_split(bidders)
    elif args.check == "bundle":
        schemes = [_scheme_at_floor(consumer, i, args.c1) for i in items]
        _, _, rep = bundle_combine(schemes, consumer, args.c1)
    elif args.check == "shatter":
        price = monopoly_price(sum_dists(consumer))[0]
        _, rep = shatter(PricingScheme(tuple(items), price), consumer)
    elif args.check == "brendan":
        rep = check_brendan(consumer, items)
    else:
        pairs = math.prod(b.size for b in bidders) ** 2
        if pairs <= EXACT_RESERVE_CAP:
            rep = random_reserve_check(bidders)
        else:
            _, rep = random_reserve_sim(bidders, args.trials, args.seed)
    _emit_report(args, {"check": args.check, "report": rep.to_dict()})
    return _status([rep])


def cmd_gaps(args) -> int:
    try:
        ns = [int(x) for x in args.ns.split(",") if x.strip()]
    except ValueError:
        raise _UsageError(f"--ns must be a comma-separated list of integers, got {args.ns!r}")
    results = run_gap_experiment(args.kind, ns, args.seed, trials=args.trials)
    if args.format == "json":
        _emit(args, {"kind": args.kind, "rows": [r.to_row() for r in results]})
    else:
        _emit_rows(args, [r.to_row() for r in results], CSV_COLUMNS)
    return EXIT_OK


def cmd_reduce(args) -> int:
    inst = _load(args)
    reports = [check_reduction_ratios(inst)]
    if inst.n_items >= 2:
        reports.append(check_cor_bound(inst))
    _emit_report(args, {"checks": [r.to_dict() for r in reports]})
    return _status(reports)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bundlerev", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bundlerev {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt="json"):
        sp.add_argument("--instance", help="instance JSON file")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default=fmt)
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("analyze", help="SRev, BRev, PRev and Rev of an instance")
    common(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("decompose", help="core/tail split and its inequalities")
    common(sp)
    sp.add_argument("--mode", choices=("uniform", "uniform_a", "adaptive"), default="adaptive")
    sp.add_argument("--c", type=float, default=1.0)
    sp.add_argument("--a", type=float, default=1.0)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("approx", help="sampled separate-vs-bundle decision")
    common(sp)
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.set_defaults(func=cmd_approx)

    sp = sub.add_parser("pricing", help="pricing-mechanism checks")
    common(sp)
    sp.add_argument("--check", choices=("split", "bundle", "shatter", "brendan", "reserve"), required=True)
    sp.add_argument("--c1", type=float, default=0.5)
    sp.add_argument("--trials", type=int, default=10**5)
    sp.set_defaults(func=cmd_pricing)

    sp = sub.add_parser("gaps", help="separation experiments over an n sweep")
    common(sp, fmt="csv")
    sp.add_argument("--kind", choices=KINDS, required=True)
    sp.add_argument("--ns", default="16,64,256")
    sp.add_argument("--trials", type=int, default=10**5)
    sp.set_defaults(func=cmd_gaps)

    sp = sub.add_parser("reduce", help="point-mass-in-sum and symmetrization checks")
    common(sp)
    sp.set_defaults(func=cmd_reduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as e:
        print(f"bundlerev: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (BundleRevError, OSError, json.JSONDecodeError) as e:
        print(f"bundlerev: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
