"""Command-line experiment runner.

Exit codes: 0 success, 1 acceptance failure (``report`` only), 2 invalid
arguments or unreadable inputs, 3 capacity errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from rholab import __version__, acceptance, mapgraph, oracle, poisson_experiment, seqsim, stats, theory
from rholab.core import CapacityError, DomainError, Params
from rholab.records import (
    InputFileError,
    default_out_dir,
    summary_path,
    write_csv,
    write_jsonl,
    write_summary,
)

DEFAULT_SEED = acceptance.DEFAULT_SEED

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _threshold(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or name not in acceptance.THRESHOLDS:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE with NAME one of {sorted(acceptance.THRESHOLDS)}")
    return name, float(value)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rholab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rholab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, trials=True, x=False, k_default=2):
        sp.add_argument("--m", type=int, required=True, help="alphabet size")
        sp.add_argument("--k", type=int, default=k_default, help="arity")
        if trials:
            sp.add_argument("--trials", type=int, default=10_000)
        if x:
            sp.add_argument("--x", type=float, default=1.0)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--out", type=Path, default=None, help="trial-record file (JSON lines)")
        sp.add_argument("--csv", action="store_true", help="also write a CSV copy of the records")

    common(sub.add_parser("simulate", help="sample (mu, tau, period) from IID symbols"), x=True)
    common(sub.add_parser("hazard", help="simulate with hazard instrumentation (k=2)"))
    sp = sub.add_parser("exhaustive", help="full graph census of random dense maps")
    common(sp, trials=False)
    sp.add_argument("--maps", type=int, default=100)
    sp = sub.add_parser("oracle", help="exact law by enumerating all maps and seeds")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--sequences", action="store_true", help="cross-check against sequence enumeration")
    sp.add_argument("--out", type=Path, default=None)
    common(sub.add_parser("poisson", help="repeated-window count Z against Poisson"), x=True)
    sp = sub.add_parser("theory", help="closed-form reference values")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--x", type=float, default=1.0)
    sp.add_argument("--out", type=Path, default=None)
    sp = sub.add_parser("report", help="run and evaluate the acceptance suite")
    sp.add_argument("--run-dir", type=Path, default=None)
    sp.add_argument("--execute", action=argparse.BooleanOptionalAction, default=True,
                    help="run experiments first (default); --no-execute evaluates existing files")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--determinism-workers", type=int, default=2,
                    help="worker count for the determinism re-run")
    sp.add_argument("--threshold", type=_threshold, action="append", default=[],
                    help="override a tolerance, e.g. c1.ks_D=0.001")
    return p


def _out_path(args, stem: str) -> Path:
    if args.out is not None:
        return args.out
    return default_out_dir() / f"{stem}.jsonl"


def _config(args) -> dict:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
    cfg["subcommand"] = cfg.pop("command")
    return cfg


def _write_records(args, path: Path, columns, keys):
    write_jsonl(path, columns, keys)
    if getattr(args, "csv", False):
        write_csv(path.with_suffix(".csv"), columns, keys)


def cmd_simulate(args, hazard: bool = False) -> int:
    params = Params(args.m, args.k)
    x = getattr(args, "x", 1.0)
    res = seqsim.batch_sample(params, args.trials, args.seed, hazard=hazard, x_threshold=x, workers=args.workers)
    path = _out_path(args, "hazard" if hazard else "simulate")
    keys = ["trial", "mu", "tau", "period"] + (["h_total", "H_final"] if hazard else [])
    _write_records(args, path, res.records, keys)
    payload = {"summary": res.summary.to_dict(), "theory": vars(theory.asymptotic_tau_moments(params))}
    write_summary(summary_path(path), _config(args), payload)
    print(json.dumps(payload["summary"], indent=2))
    return EXIT_OK


def cmd_exhaustive(args) -> int:
    params = Params(args.m, args.k)
    if params.M > mapgraph.DEFAULT_BUDGET:
        raise CapacityError(f"dense map needs {params.M} entries, budget is {mapgraph.DEFAULT_BUDGET}")
    census = mapgraph.batch_analyze(params, args.maps, args.seed, args.workers)
    keys = ["map", "tau_star", "mean_tau", "n_cycles", "frac_seeds_period1", "has_diag_fixed_point"]
    path = _out_path(args, "exhaustive")
    _write_records(args, path, census, keys)
    summary = {
        "maps": args.maps,
        "mean_tau_star": float(np.mean(census["tau_star"])),
        "mean_n_cycles": float(np.mean(census["n_cycles"])),
        "frac_maps_with_diag_fixed_point": float(np.mean(census["has_diag_fixed_point"])),
        "tau_star_threshold_b3": theory.tau_star_threshold(params, 3.0),
        "frac_tau_star_above_threshold": float(np.mean(census["tau_star"] > theory.tau_star_threshold(params, 3.0))),
    }
    write_summary(summary_path(path), _config(args), {"summary": summary})
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_oracle(args) -> int:
    params = Params(args.m, args.k)
    exact = oracle.enumerate_maps_exact(params)
    doc = exact.to_dict()
    if args.sequences:
        seq = oracle.enumerate_sequences_exact(params)
        doc["sequence_oracle_agrees"] = seq == exact.joint
    path = args.out if args.out is not None else default_out_dir() / f"oracle_m{args.m}_k{args.k}.json"
    write_summary(path, _config(args), doc)
    print(json.dumps({key: v for key, v in doc.items() if key != "joint"}, indent=2))
    return EXIT_OK


def cmd_poisson(args) -> int:
    params = Params(args.m, args.k)
    if args.trials < poisson_experiment.MIN_TRIALS:
        raise DomainError(f"--trials must be at least {poisson_experiment.MIN_TRIALS}")
    z = poisson_experiment.batch_Z(params, args.x, args.trials, args.seed, args.workers)
    path = _out_path(args, "poisson")
    _write_records(args, path, z, ["trial", "z"])
    gap = poisson_experiment.gap_from_samples(params, args.x, z["z"])
    write_summary(summary_path(path), _config(args), {"summary": gap.to_dict()})
    print(json.dumps(gap.to_dict(), indent=2))
    return EXIT_OK


def cmd_theory(args) -> int:
    params = Params(args.m, args.k)
    bounds = theory.chen_stein_bounds(params, args.x)
    mom = theory.asymptotic_tau_moments(params)
    doc = {
        **bounds.to_dict(),
        "tau_mean": mom.mean,
        "tau_variance": mom.variance,
        "moments_heuristic": mom.heuristic,
        "exp_tail": theory.exponential_tail(args.x),
        "poisson_p0": stats.poisson_pmf(bounds.lambda_, 0),
        "diag_fixed_point_prob": theory.diag_fixed_point_exact(params.m),
    }
    for key in ("N", "lambda", "b1", "b2"):
        print(f"{key}={doc[key]:.10g}" if isinstance(doc[key], float) else f"{key}={doc[key]}")
    if args.out is not None:
        write_summary(args.out, _config(args), {"theory": doc})
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = args.run_dir if args.run_dir is not None else default_out_dir() / "acceptance"
    if args.execute:
        ctx = acceptance.RunContext(run_dir, args.seed, args.workers)
        for name in acceptance.EXPERIMENTS:
            t0 = time.perf_counter()
            acceptance.run_experiment(name, ctx)
            print(f"ran {name} in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
        acceptance.check_determinism(ctx, args.determinism_workers)
    metrics, det = acceptance.load_metrics(run_dir)
    checks = acceptance.evaluate(metrics, det, dict(args.threshold))
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    write_summary(run_dir / "report.json", _config(args), {
        "checks": [vars(c) for c in checks],
        "passed": not failed,
    })
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "hazard": lambda a: cmd_simulate(a, hazard=True),
    "exhaustive": cmd_exhaustive,
    "oracle": cmd_oracle,
    "poisson": cmd_poisson,
    "theory": cmd_theory,
    "report": cmd_report,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"rholab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except CapacityError as exc:
        print(f"rholab: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (DomainError, seqsim.UnsupportedArityError, InputFileError) as exc:
        print(f"rholab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
