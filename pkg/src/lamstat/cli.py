"""lamstat command line.

Usage:
    lamstat schedule --schedule sqrt --n-max 100 [--theta doubling]
    lamstat analyze  --input seq.csv --method S_LAMBDA --schedule identity --eps 0.5,0.1
    lamstat qc       --input seq.csv --schedule identity --eps 0.5,0.1
    lamstat generate bit-average --n-max 1000 --seed 3 --out bits.csv
    lamstat simulate example1 --n-max 6 --trials 100000 --seed 7
    lamstat probe    --fn square --domain 0,100 --eps0 1 --n-max 50

Every command writes one JSON report (to --out, to $LAMSTAT_OUT_DIR, or to
stdout). Exit codes: 0 success, 1 INCONCLUSIVE under --strict, 2 bad input.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import generators as gen
from . import report
from .errors import LamstatError
from .files import parse_pairs_file, parse_sequence_file, write_sequence_csv
from .probe import find_nonuniform_witness, modulus_estimate, parse_function
from .quasicauchy import QCVerdict, qc_profile
from .schedules import ScheduleWarning, resolve_lacunary, resolve_schedule
from .summability import (
    DEFAULT_EPSILONS,
    DEFAULT_TAIL,
    DEFAULT_TOLERANCE,
    Method,
    Verdict,
    estimate_limit,
)

OUT_DIR_ENV = "LAMSTAT_OUT_DIR"
DEFAULT_SEED = 0


class InputError(LamstatError):
    pass


def _float_list(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _positive_list(text: str) -> tuple[float, ...]:
    vals = _float_list(text)
    if any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError(f"all values must be positive, got {text!r}")
    return vals


def _domain(text: str) -> tuple[float, float]:
    vals = _float_list(text)
    if len(vals) != 2 or not vals[0] < vals[1]:
        raise argparse.ArgumentTypeError(f"domain must be 'a,b' with a < b, got {text!r}")
    return vals


def _fraction(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1]")
    return v


# ---------------------------------------------------------------------------
# commands; each returns (payload, inconclusive)
# ---------------------------------------------------------------------------


def cmd_schedule(args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ScheduleWarning)
        sched = resolve_schedule(args.schedule, args.n_max or 1, header=args.header)
    payload = {
        "schedule": {
            "name": sched.name,
            "length": len(sched),
            "final": sched.final,
            "values": sched.values.tolist(),
            "window_lo": sched.lows.tolist(),
            "warnings": [str(w.message) for w in caught],
        }
    }
    if args.theta:
        lac = resolve_lacunary(args.theta, len(sched), margin=args.margin)
        payload["lacunary"] = {
            "name": lac.name,
            "cuts": lac.cuts.tolist(),
            "h": lac.h.tolist(),
            "q": lac.q.tolist(),
            "min_q": lac.min_q,
            "margin": lac.margin,
            "regular": lac.regular,
        }
    return payload, False


def _load_input(args):
    if not args.input:
        raise InputError("--input is required")
    return parse_sequence_file(args.input, args.format, header=args.header)


def cmd_analyze(args):
    x = _load_input(args)
    method = Method(args.method)
    sched = lac = None
    if method is Method.S_THETA:
        lac = resolve_lacunary(args.theta or "doubling", len(x), margin=args.margin)
    elif method not in (Method.ST, Method.LIM):
        sched = resolve_schedule(args.schedule, len(x), header=args.header)
    rep = estimate_limit(x, sched, method, args.eps, args.tail, args.tol, lacunary=lac)
    return {"length": len(x), "convergence": rep.to_dict()}, rep.verdict is Verdict.INCONCLUSIVE


def cmd_qc(args):
    x = _load_input(args)
    sched = resolve_schedule(args.schedule, max(1, len(x) - 1), header=args.header)
    diag = qc_profile(x, sched, args.eps, args.tail, args.tol, args.tol)
    return {"length": len(x), "qc": diag.to_dict(with_profiles=not args.summary)}, diag.verdict is QCVerdict.INCONCLUSIVE


def cmd_generate(args):
    rng = np.random.default_rng(args.seed)
    fam = args.family
    n = args.n_max
    extra = {}
    if fam == "bit-average":
        if args.input:
            bits = parse_sequence_file(args.input, args.format, header=args.header).values
        else:
            bits = (rng.random(n) < 0.5).astype(np.int64)
        seq = gen.gen_bit_average(bits)
    elif fam == "interleave":
        x = parse_sequence_file(args.input, args.format, header=args.header) if args.input else None
        anchor = args.anchor
        if x is None:
            x = anchor + 1.0 / np.arange(1, n + 1)
        seq = gen.gen_interleave(x, anchor)
    elif fam == "pair-embedding":
        pairs = parse_pairs_file(args.input) if args.input else gen.sqrt_pairs(n).pairs
        emb = gen.gen_pair_embedding(pairs)
        seq = emb.sequence
        extra["anchor_indices"] = list(emb.anchor_indices)
    elif fam == "sqrt":
        seq = gen.gen_sqrt(n)
    elif fam == "harmonic":
        seq = gen.gen_harmonic(n)
    elif fam == "jump-squares":
        seq = gen.gen_jump_squares(n)
    elif fam == "square-indicator":
        seq = gen.gen_square_indicator(n)
    else:  # argparse restricts choices
        raise InputError(f"unknown family {fam!r}")
    if args.out and Path(args.out).suffix == ".csv":
        write_sequence_csv(seq, args.out)
        args.csv_written = True
    return {"family": fam, "length": len(seq), "values": seq.tolist(), **extra}, False


def cmd_simulate(args):
    if args.exact:
        if args.process == "example1":
            res = gen.exact_survivor_table(args.n_max)
        else:
            res = gen.exact_three_split_table(args.n_max)
    elif args.process == "example1":
        res = gen.simulate_survivor(args.n_max, args.trials, args.seed, workers=args.workers)
    else:
        res = gen.simulate_three_split(args.n_max, args.trials, args.seed, workers=args.workers)
    return {"simulation": res.to_dict()}, False


def cmd_probe(args):
    f = parse_function(args.fn, args.domain)
    rep = find_nonuniform_witness(f, args.eps0, args.n_max, args.grid_step, args.eps, args.tail, args.tol)
    payload = {"witness": rep.to_dict()}
    if args.modulus:
        step = min(args.grid_step, min(args.modulus) / 4)
        table = modulus_estimate(f, args.modulus, step)
        payload["modulus"] = [[d, w] for d, w in table.items()]
    diag = rep.image_diagnostic
    return payload, diag is not None and diag.verdict is QCVerdict.INCONCLUSIVE


COMMANDS = {
    "schedule": cmd_schedule,
    "analyze": cmd_analyze,
    "qc": cmd_qc,
    "generate": cmd_generate,
    "simulate": cmd_simulate,
    "probe": cmd_probe,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lamstat", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="report path (default: $LAMSTAT_OUT_DIR/<command>.json or stdout)")
    common.add_argument("--strict", action="store_true", help="exit 1 when the verdict is INCONCLUSIVE")

    def data_parent(required):
        data = argparse.ArgumentParser(add_help=False)
        data.add_argument("--input", required=required, help="sequence file")
        data.add_argument("--format", choices=("csv", "jsonl"), default="csv")
        data.add_argument("--header", action="store_true", help="first CSV line is a header")
        return data

    data = data_parent(required=True)

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--eps", type=_positive_list, default=DEFAULT_EPSILONS, help="comma-separated epsilon grid")
    grid.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE)
    grid.add_argument("--tail", type=_fraction, default=DEFAULT_TAIL)

    sched = argparse.ArgumentParser(add_help=False)
    sched.add_argument("--schedule", default="identity", help="identity | sqrt | log2 | path to CSV")
    sched.add_argument("--theta", help="lacunary cuts: doubling | k0,k1,... | path")
    sched.add_argument("--margin", type=float, default=0.0, help="lacunary regularity margin")

    p = sub.add_parser("schedule", parents=[common, sched], help="validate and describe a schedule")
    p.add_argument("--n-max", type=int, default=None, help="length for builtin schedules")
    p.add_argument("--header", action="store_true")

    sub.add_parser("analyze", parents=[common, data, sched, grid], help="estimate a limit under one method").add_argument(
        "--method", choices=[m.value for m in Method], default=Method.S_LAMBDA.value
    )
    p = sub.add_parser("qc", parents=[common, data, sched, grid], help="quasi-Cauchy diagnostics")
    p.add_argument("--summary", action="store_true", help="omit per-index density profiles")

    p = sub.add_parser("generate", parents=[common, data_parent(required=False)], help="build a test sequence")
    p.add_argument(
        "family",
        choices=("bit-average", "interleave", "pair-embedding", "sqrt", "harmonic", "jump-squares", "square-indicator"),
    )
    p.add_argument("--n-max", type=int, default=100, help="length (pair count for pair-embedding)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--anchor", type=float, default=0.0, help="anchor value for interleave")

    p = sub.add_parser("simulate", parents=[common], help="run the elimination processes")
    p.add_argument("process", choices=("example1", "example2"))
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--exact", action="store_true", help="exact oracle instead of Monte Carlo")

    p = sub.add_parser("probe", parents=[common, grid], help="search for uniform-continuity witnesses")
    p.add_argument("--fn", required=True, help="square | reciprocal | sin | abs | affine:a,b | table CSV")
    p.add_argument("--domain", type=_domain, default=None, help="a,b")
    p.add_argument("--eps0", type=float, required=True)
    p.add_argument("--n-max", type=int, default=50)
    p.add_argument("--grid-step", type=float, default=1e-3)
    p.add_argument("--modulus", type=_positive_list, default=None, help="also tabulate the modulus at these deltas")
    return parser


def _config(args) -> dict:
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in ("csv_written",):
            continue
        cfg[k] = list(v) if isinstance(v, tuple) else v
    return cfg


def _destination(args) -> Path | None:
    if args.out:
        return Path(args.out)
    env = os.environ.get(OUT_DIR_ENV)
    if env:
        return Path(env) / f"{args.command}.json"
    return None


def _emit(text: str, dest: Path | None):
    if dest is None:
        sys.stdout.write(text)
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text)


def run(argv=None) -> tuple[dict, int]:
    """Parse ``argv``, run one command, write its report; returns (report, exit code)."""
    args = build_parser().parse_args(argv)
    args.csv_written = False
    start = time.perf_counter()
    try:
        payload, inconclusive = COMMANDS[args.command](args)
        code = 1 if args.strict and inconclusive else 0
    except (LamstatError, OSError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        err = {"code": type(exc).__name__, "message": str(msg)}
        if isinstance(exc, LamstatError) and exc.index is not None:
            err["index"] = exc.index
        payload, code = {"error": err}, 2
    doc = report.build(args.command, _config(args), payload, round(time.perf_counter() - start, 6))
    dest = _destination(args)
    if args.csv_written:
        # the CSV went to --out; the report goes to stdout
        dest = None
    _emit(report.dumps(doc), dest)
    if code == 2:
        print(f"lamstat: error: {payload['error']['message']}", file=sys.stderr)
    return doc, code


def main(argv=None) -> int:
    _, code = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
