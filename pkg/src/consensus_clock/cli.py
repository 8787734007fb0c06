"""Command-line entry point.

Subcommands:

* params            -- threshold report (p_c, z_star, j0, gamma) as JSON.
* bitcoin-analytic  -- stylized-model constants, mean and tail exponent.
* bitcoin-sim       -- stylized-model ensemble; CSV/JSON/tail artifacts.
* general-sim       -- delayed-growth cycle-count ensemble; CSV/JSON.
* validate          -- cross-module oracle checks; exit 0 iff all pass.

Exit codes: 0 success, 2 usage error, 3 model precondition violated.
The environment variable CONSENSUS_CLOCK_SEED overrides --master-seed.
All JSON is emitted with sorted keys; all CSVs carry a header row.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import bitcoin, growth
from .checks import format_table, run_validation
from .delays import parse_delay_spec
from .errors import ConsensusClockError, PreconditionError, SecurityThresholdError
from .mm1 import BitcoinParams, dominant_pole, tail_exponent, ttc_lt, ttc_mean
from .thresholds import solve_thresholds

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_PRECONDITION = 3


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    options: dict

    def to_json(self) -> str:
        return json.dumps({"subcommand": self.subcommand, "options": self.options},
                          sort_keys=True)


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="consensus-clock",
                                  description="Time-to-consensus analytics and simulation")
    top.add_argument("--json-errors", action="store_true",
                     help="emit errors as JSON on stderr")
    sub = top.add_subparsers(dest="subcommand", required=True)

    pa = sub.add_parser("params", help="threshold report for (p, delay)")
    pa.add_argument("--p", type=float, required=True)
    pa.add_argument("--delay", type=str, required=True)
    pa.add_argument("--tol", type=float, default=1e-12)

    ba = sub.add_parser("bitcoin-analytic", help="stylized-model closed forms")
    ba.add_argument("--p", type=float, required=True)
    ba.add_argument("--q", type=float, required=True)
    ba.add_argument("--rate", type=float, default=0.1)
    ba.add_argument("--grid-csv", type=str, default=None,
                    help="optional CSV of the composite transform on an s grid")

    bs = sub.add_parser("bitcoin-sim", help="stylized-model Monte Carlo ensemble")
    bs.add_argument("--p", type=float, required=True)
    bs.add_argument("--q", type=float, required=True)
    bs.add_argument("--rate", type=float, default=0.1)
    bs.add_argument("--samples", type=int, default=25000)
    bs.add_argument("--master-seed", type=int, default=0)
    bs.add_argument("--stop", choices=["lead-run", "lead-cap"], default="lead-run")
    bs.add_argument("--stop-k", type=int, default=1000)
    bs.add_argument("--stop-eps", type=float, default=1e-10)
    bs.add_argument("--threshold-min", type=float, default=60.0)
    bs.add_argument("--init", choices=["tie", "stationary"], default="tie")
    bs.add_argument("--jobs", type=int, default=0, help="0 = all cores")
    bs.add_argument("--out-dir", type=str, default=".")
    bs.add_argument("--emit", type=str, default="csv,json,tail",
                    help="comma-set of csv,json,tail")

    gs = sub.add_parser("general-sim", help="delayed-growth cycle-count ensemble")
    gs.add_argument("--p", type=float, required=True)
    gs.add_argument("--delay", type=str, required=True)
    gs.add_argument("--samples", type=int, default=10000)
    gs.add_argument("--master-seed", type=int, default=0)
    gs.add_argument("--stop-eps", type=float, default=1e-10)
    gs.add_argument("--jobs", type=int, default=0)
    gs.add_argument("--out-dir", type=str, default=".")
    gs.add_argument("--emit", type=str, default="csv,json",
                    help="comma-set of csv,json,cycles")

    va = sub.add_parser("validate", help="run the cross-module oracle checks")
    va.add_argument("--quick", action="store_true",
                    help="fifth-size samples, doubled tolerances")
    va.add_argument("--master-seed", type=int, default=20180904)
    va.add_argument("--jobs", type=int, default=0)
    return top


def _jobs(value: int) -> int:
    return value if value > 0 else (os.cpu_count() or 1)


def _seed(ns) -> int:
    env = os.environ.get("CONSENSUS_CLOCK_SEED")
    if env is not None:
        return int(env)
    return getattr(ns, "master_seed", 0)


def _config_from_ns(ns) -> RunConfig:
    options = {k: v for k, v in sorted(vars(ns).items())
               if k not in ("subcommand", "json_errors")}
    return RunConfig(subcommand=ns.subcommand, options=options)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return _dispatch(ns)
    except (PreconditionError, SecurityThresholdError) as exc:
        _emit_error(ns, "precondition", exc)
        return EXIT_PRECONDITION
    except ConsensusClockError as exc:
        _emit_error(ns, "error", exc)
        return EXIT_USAGE


def _emit_error(ns, kind: str, exc: Exception) -> None:
    if getattr(ns, "json_errors", False):
        doc = {"error": kind, "message": str(exc)}
        if isinstance(exc, PreconditionError) and exc.p_critical is not None:
            doc["p_critical"] = exc.p_critical
        print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    else:
        print(f"consensus-clock: {kind}: {exc}", file=sys.stderr)


def _dispatch(ns) -> int:
    if ns.subcommand == "params":
        report = solve_thresholds(ns.p, parse_delay_spec(ns.delay), tol=ns.tol)
        print(report.to_json())
        return EXIT_OK

    if ns.subcommand == "bitcoin-analytic":
        bp = BitcoinParams(p=ns.p, q=ns.q, rate_scale=ns.rate)
        doc = {
            "p": bp.p, "q": bp.q, "rate_scale": bp.rate_scale,
            "lam": bp.lam, "mu": bp.mu, "rho": bp.rho, "p_hat": bp.p_hat,
            "theta": bp.theta, "s_star": bp.s_star,
            "s_star_star": dominant_pole(bp),
            "mean_ttc": ttc_mean(bp),
            "tail_exponent": tail_exponent(bp),
        }
        print(json.dumps(doc, sort_keys=True, indent=2))
        if ns.grid_csv:
            import numpy as np
            grid = np.geomspace(1e-3 * bp.rate_scale, 10 * bp.rate_scale, 200)
            with open(ns.grid_csv, "w", encoding="utf-8", newline="") as fh:
                fh.write("s,tau_lt\n")
                for s in grid.tolist():
                    fh.write(f"{s!r},{ttc_lt(bp, s)!r}\n")
        return EXIT_OK

    if ns.subcommand == "bitcoin-sim":
        bp = BitcoinParams(p=ns.p, q=ns.q, rate_scale=ns.rate)
        stop = bitcoin.LeadRun(ns.stop_k) if ns.stop == "lead-run" \
            else bitcoin.LeadCap(ns.stop_eps)
        summary = bitcoin.run_ensemble(bp, ns.samples, _seed(ns), stop=stop,
                                       threshold_min=ns.threshold_min,
                                       init=ns.init, jobs=_jobs(ns.jobs))
        out = Path(ns.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        emit = {e.strip() for e in ns.emit.split(",") if e.strip()}
        if "csv" in emit:
            bitcoin.write_samples_csv(summary, out / "bitcoin_samples.csv")
        if "json" in emit:
            bitcoin.write_summary_json(bp, summary, out / "bitcoin_summary.json")
        if "tail" in emit:
            bitcoin.write_tail_csv(summary, out / "bitcoin_tail.csv")
        print(json.dumps({"mean": summary.mean_ttc, "stderr": summary.stderr,
                          "exceed_frac": summary.exceed_frac, "n": summary.n},
                         sort_keys=True))
        return EXIT_OK

    if ns.subcommand == "general-sim":
        delay = parse_delay_spec(ns.delay)
        ens = growth.ensemble_last_passage(ns.p, delay, ns.samples, _seed(ns),
                                           stop=growth.CycleStop(ns.stop_eps),
                                           jobs=_jobs(ns.jobs))
        out = Path(ns.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        emit = {e.strip() for e in ns.emit.split(",") if e.strip()}
        if "csv" in emit:
            growth.write_t_samples_csv(ens, out / "general_t_samples.csv")
        if "json" in emit:
            growth.write_growth_summary_json(ens, out / "general_summary.json")
        if "cycles" in emit:
            from .streams import replica_rng
            cycles = growth.collect_cycles(ns.p, delay, 10_000,
                                           replica_rng(_seed(ns), 3_000_001))
            growth.write_cycles_csv(cycles, 0, out / "general_cycles.csv")
        print(json.dumps({"slope_fitted": ens.slope_fitted,
                          "gamma_analytic": ens.gamma_analytic,
                          "n": ens.n}, sort_keys=True))
        return EXIT_OK

    if ns.subcommand == "validate":
        rows = run_validation(master_seed=_seed(ns), quick=ns.quick,
                              jobs=_jobs(ns.jobs))
        print(format_table(rows))
        return EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK_FAILED

    raise AssertionError(f"unhandled subcommand {ns.subcommand!r}")


if __name__ == "__main__":
    sys.exit(main())
