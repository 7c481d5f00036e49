"""Command-line interface.

Subcommands: ``simulate``, ``sweep``, ``enumerate``, ``fit-threshold``,
``bench``, ``decode-one`` and ``export``.  Every subcommand accepts
``--config FILE`` with flat ``key = value`` lines that supply defaults for
its flags (explicit flags win), and ``--out PATH`` writes results as CSV
when the path ends in ``.csv`` and as JSON otherwise.

Exit codes: 0 on success, 2 for an invalid plan or arguments, 3 when a
budget (trials or enumeration size) ran out before the requested target.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    BudgetExceeded,
    ThresholdFitError,
    benchmark_decode,
    enumerate_mixed,
    enumerate_undecodable,
    fit_threshold,
    linear_scaling,
    read_table,
    write_table,
)
from .clusters import MalformedSyndromeError, jsonl_tracer
from .codes import CheckBasis, CodeError, PauliOp, build_code, build_decoding_graph, compute_syndrome, is_logical_failure
from .decoders import UnionFindDecoder
from .harness import PHENOMENOLOGICAL, InvalidPlan, RunPlan, StopRule, grid, run, sweep
from .noise import NoiseParams, _parse_bool, read_config

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _strs(text: str) -> list[str]:
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _bools(text: str) -> list[bool]:
    return [_parse_bool(v) for v in _strs(text)]


def _flag(parser, name: str, help: str) -> None:
    """A boolean option usable as ``--name``, ``--name false`` or ``name = true`` in a config."""
    parser.add_argument(name, type=_parse_bool, nargs="?", const=True, default=False, help=help)


def _add_common(parser) -> None:
    parser.add_argument("--config", help="key = value file supplying defaults for the flags")
    parser.add_argument("--out", help="result file; .csv for CSV, anything else for JSON")


def _add_decoder(parser, multi: bool = False) -> None:
    if multi:
        parser.add_argument("--decoder", type=_strs, default="uf", help="comma list of uf, iruf, uiuf")
        parser.add_argument("--wg", type=_bools, default="false", help="comma list of booleans")
    else:
        parser.add_argument("--decoder", default="uf", choices=("uf", "iruf", "uiuf"))
        _flag(parser, "--wg", "weighted growth")
    parser.add_argument("--iter-max", type=int, default=1, help="IRUF iterations")


def _add_noise(parser) -> None:
    parser.add_argument("--erasure-rate", type=float, default=0.0)
    parser.add_argument("--meas-error-rate", type=float, default=None, help="default: epsilon")
    _flag(parser, "--reduced-meas", "measurement flips at 2 epsilon / 3 instead of epsilon")
    parser.add_argument("--model", default="code_capacity", choices=("code_capacity", PHENOMENOLOGICAL))
    parser.add_argument("--rounds", type=int, default=None, help="phenomenological rounds (default d + 1)")


def _add_stop(parser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--trials", type=int, default=None, help="fixed trial count (disables adaptive stopping)")
    parser.add_argument("--max-trials", type=int, default=10**9, help="budget for adaptive stopping")
    parser.add_argument("--batch-size", type=int, default=10_000)
    parser.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uiuf", description="Union-find decoders for topological codes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo logical error rate of one setting")
    _add_common(p)
    p.add_argument("--family", default="toric")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--eta", type=float, default=1.0)
    _add_decoder(p)
    _add_noise(p)
    _add_stop(p)

    p = sub.add_parser("sweep", help="Monte Carlo over a grid of settings, resumable")
    _add_common(p)
    p.add_argument("--family", type=_strs, default="toric")
    p.add_argument("--d", type=_ints, default=None, help="comma list")
    p.add_argument("--epsilon", type=_floats, default=None, help="comma list")
    p.add_argument("--eta", type=_floats, default="1", help="comma list")
    _add_decoder(p, multi=True)
    _add_noise(p)
    _add_stop(p)
    p.add_argument("--journal", help="JSONL file of completed cells; rerun to resume")

    p = sub.add_parser("enumerate", help="exhaustive failure counts at fixed Pauli weight")
    _add_common(p)
    p.add_argument("--family", default="rotated_toric")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--weight", type=int, default=None, help="Pauli weight (default: t)")
    p.add_argument("--erasures", type=int, default=0, help="erased qubits per case (mixed sweep)")
    p.add_argument("--decoder", default="uf", choices=("uf", "iruf", "uiuf"))
    _flag(p, "--wg", "weighted growth")
    p.add_argument("--iter-max", type=_ints, default="1", help="comma list of IRUF iteration counts")
    p.add_argument("--budget", type=int, default=10**8, help="largest exhaustive enumeration")
    p.add_argument("--samples", type=int, default=10**6, help="random cases when a mixed sweep exceeds the budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("fit-threshold", help="finite-size scaling fit of a result table")
    _add_common(p)
    p.add_argument("input", nargs="?", help="CSV or JSON result table")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--decoder", default=None, help="only rows with this decoder")
    p.add_argument("--family", default=None, help="only rows with this family")
    p.add_argument("--wg", type=_parse_bool, default=None, help="only rows with this growth setting")

    p = sub.add_parser("bench", help="mean decode time and its scaling with n")
    _add_common(p)
    p.add_argument("--family", default="toric")
    p.add_argument("--d", type=_ints, default="10,20,30", help="comma list")
    p.add_argument("--decoder", type=_strs, default="uf,uiuf", help="comma list")
    _flag(p, "--wg", "weighted growth")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=10**5)
    p.add_argument("--rounds", type=int, default=1, help="syndrome rounds (>1: phenomenological)")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("decode-one", help="decode a single Pauli error and report the correction")
    _add_common(p)
    p.add_argument("--family", default="toric")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--x", type=_ints, default="", help="qubits with X errors")
    p.add_argument("--y", type=_ints, default="", help="qubits with Y errors")
    p.add_argument("--z", type=_ints, default="", help="qubits with Z errors")
    p.add_argument("--erased", type=_ints, default="", help="erased qubits")
    p.add_argument("--decoder", default="uf", choices=("uf", "iruf", "uiuf"))
    _flag(p, "--wg", "weighted growth")
    p.add_argument("--iter-max", type=int, default=1)
    p.add_argument("--trace", help="write a JSONL cluster trace here")

    p = sub.add_parser("export", help="write a code and its decoding graphs as JSON")
    _add_common(p)
    p.add_argument("--family", default="toric")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--rounds", type=int, default=1)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Install the ``--config`` file of ``argv`` as defaults of its subcommand."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    settings = read_config(known.config)
    subparser = parser._subparsers._group_actions[0].choices.get(known.command)
    if subparser is None:
        return
    dests = {a.dest for a in subparser._actions}
    unknown = sorted(set(settings) - dests)
    if unknown:
        raise InvalidPlan(f"unknown keys in {known.config}: {', '.join(unknown)}")
    subparser.set_defaults(**settings)


def _require(args, *names) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise InvalidPlan("missing required setting(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _emit(rows, out) -> None:
    if out:
        write_table(rows if isinstance(rows, list) else [rows], out)
    print(json.dumps(rows, indent=2, default=str))


def _noise(args, epsilon: float, eta: float) -> NoiseParams:
    return NoiseParams(
        epsilon=epsilon,
        eta=eta,
        erasure_rate=args.erasure_rate,
        meas_error_rate=args.meas_error_rate,
        rounds=args.rounds or 1,
        reduced_meas=args.reduced_meas,
    )


def _stop(args) -> StopRule:
    return StopRule(max_trials=args.max_trials, fixed_trials=args.trials, batch_size=args.batch_size)


def cmd_simulate(args) -> int:
    _require(args, "d", "epsilon")
    plan = RunPlan(
        args.family, args.d, _noise(args, args.epsilon, args.eta), args.decoder, args.wg,
        args.iter_max, args.model, args.seed, _stop(args), args.workers,
    )
    stats = run(plan)
    _emit(stats.row(), args.out)
    return EXIT_BUDGET if stats.budget_exhausted else EXIT_OK


def cmd_sweep(args) -> int:
    _require(args, "d", "epsilon")
    plans = grid(
        args.family, args.d, args.epsilon, args.decoder, args.wg, args.eta,
        erasure_rate=args.erasure_rate, meas_error_rate=args.meas_error_rate,
        rounds=args.rounds or 1, reduced_meas=args.reduced_meas,
        iter_max=args.iter_max, model=args.model, seed=args.seed, stop=_stop(args), workers=args.workers,
    )
    for plan in plans:
        plan.resolved()
    rows = sweep(plans, args.journal)
    _emit(rows, args.out)
    if any(r.get("status") != "ok" for r in rows):
        return EXIT_INVALID
    return EXIT_BUDGET if any(r.get("budget_exhausted") for r in rows) else EXIT_OK


def cmd_enumerate(args) -> int:
    _require(args, "d")
    code = build_code(args.family, args.d)
    weight = code.t if args.weight is None else args.weight
    if args.erasures:
        dec = UnionFindDecoder(args.decoder, args.wg, args.iter_max[0]).fit(code)
        res = enumerate_mixed(code, dec, args.erasures, weight, budget=args.budget, samples=args.samples, seed=args.seed)
        rows = [{"family": args.family, "d": args.d, "decoder": args.decoder, "wg": args.wg, **vars(res)}]
    else:
        dec = UnionFindDecoder(args.decoder, args.wg, max(args.iter_max)).fit(code)
        res = enumerate_undecodable(
            code, dec, weight, budget=args.budget, iter_values=args.iter_max, workers=args.workers
        )
        rows = []
        for r in res:
            row = r.to_dict()
            row.update(row.pop("by_type"))
            rows.append(row)
    _emit(rows, args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    _require(args, "input")
    rows = [r for r in read_table(args.input) if r.get("status", "ok") == "ok"]
    if args.decoder is not None:
        rows = [r for r in rows if r["decoder"] == args.decoder]
    if args.family is not None:
        rows = [r for r in rows if r["family"] == args.family]
    if args.wg is not None:
        rows = [r for r in rows if bool(r["wg"]) == args.wg]
    fit = fit_threshold(rows, args.degree)
    _emit(fit.to_dict(), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = []
    for alg in args.decoder:
        for d in args.d:
            dec = UnionFindDecoder(alg, args.wg, rounds=args.rounds)
            res = benchmark_decode(build_code(args.family, d), dec, args.epsilon, args.trials, args.seed)
            rows.append({**vars(res), "variables": res.variables})
    for alg in args.decoder:
        mine = [r for r in rows if r["algorithm"] == alg]
        if len(mine) >= 2:
            slope, intercept, r2 = linear_scaling([r["variables"] for r in mine], [r["mean_time"] for r in mine])
            for r in mine:
                r.update(slope=slope, intercept=intercept, r2=r2)
    _emit(rows, args.out)
    return EXIT_OK


def cmd_decode_one(args) -> int:
    _require(args, "d")
    code = build_code(args.family, args.d)
    error = PauliOp.from_sparse(code.n, x=args.x, y=args.y, z=args.z)
    dec = UnionFindDecoder(args.decoder, args.wg, args.iter_max).fit(code)
    sx = compute_syndrome(code, error, CheckBasis.X)
    sz = compute_syndrome(code, error, CheckBasis.Z)
    if args.trace:
        with open(args.trace, "w") as fh:
            corr = dec.decode(sx, sz, args.erased, trace=jsonl_tracer(fh))
    else:
        corr = dec.decode(sx, sz, args.erased)
    fix = corr.pauli()
    residual = fix * error
    report = {
        "family": args.family,
        "d": args.d,
        "decoder": args.decoder,
        "wg": args.wg,
        "error": str(error),
        "syndrome_x": np.flatnonzero(sx).tolist(),
        "syndrome_z": np.flatnonzero(sz).tolist(),
        "x_fix": sorted(corr.x_fix[0]),
        "z_fix": sorted(corr.z_fix[0]),
        "shared": sorted(corr.erased),
        "residual_weight": residual.weight,
        "syndrome_match": bool(
            (compute_syndrome(code, residual, CheckBasis.X) == 0).all()
            and (compute_syndrome(code, residual, CheckBasis.Z) == 0).all()
        ),
        "logical_failure": is_logical_failure(code, residual),
    }
    _emit(report, args.out)
    return EXIT_OK


def cmd_export(args) -> int:
    _require(args, "d")
    code = build_code(args.family, args.d)
    doc = {
        "code": code.to_dict(),
        "graph_x": build_decoding_graph(code, CheckBasis.X, args.rounds).to_dict(),
        "graph_z": build_decoding_graph(code, CheckBasis.Z, args.rounds).to_dict(),
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "enumerate": cmd_enumerate,
    "fit-threshold": cmd_fit,
    "bench": cmd_bench,
    "decode-one": cmd_decode_one,
    "export": cmd_export,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InvalidPlan, CodeError, ThresholdFitError, MalformedSyndromeError, ValueError, OSError) as exc:
        print(f"invalid plan: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
