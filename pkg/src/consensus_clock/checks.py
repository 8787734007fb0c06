"""Cross-module oracle checks behind the `validate` CLI subcommand.

Each check compares an analytic quantity against an independent Monte Carlo
estimate (or a closed-form identity) and reports name/target/observed/
tolerance. `quick` cuts sample sizes to a fifth and doubles tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bitcoin, growth
from .delays import DelaySpec
from .mm1 import BitcoinParams, busy_lt, ttc_mean
from .renewal import RenewalLaw
from .streams import replica_rng
from .thresholds import gamma_rate, p_critical, z_star


@dataclass(frozen=True)
class CheckRow:
    name: str
    target: float
    observed: float
    tolerance: float
    passed: bool


def _row(name, target, observed, tol, ok=None) -> CheckRow:
    if ok is None:
        ok = abs(observed - target) <= tol
    return CheckRow(name, float(target), float(observed), float(tol), bool(ok))


def run_validation(master_seed: int = 20180904, quick: bool = False,
                   jobs: int = 1, only=None,
                   _z_star_scale: float = 1.0) -> list[CheckRow]:
    """Run the oracle battery; `only` restricts to a set of check names.

    `_z_star_scale` is a fault-injection hook for negative-control tests: it
    perturbs the analytic tilt fed to the gamma-slope target.
    """
    f = 5 if quick else 1
    tol2 = 2.0 if quick else 1.0
    rows: list[CheckRow] = []

    def wanted(name: str) -> bool:
        return only is None or name in only

    if wanted("p_c(unit)"):
        rows.append(_row("p_c(unit)", 0.5, p_critical(DelaySpec.unit()), 1e-9))
    if wanted("p_c(det:2)"):
        rows.append(_row("p_c(det:2)", (math.sqrt(5) - 1) / 2,
                         p_critical(DelaySpec.deterministic(2)), 1e-6))
    if wanted("z*(0.8,det:2)"):
        rows.append(_row("z*(0.8,det:2)", 0.3125,
                         z_star(0.8, DelaySpec.deterministic(2)), 1e-9))
    if wanted("gamma(0.8,det:2)"):
        rows.append(_row("gamma(0.8,det:2)", 0.45,
                         gamma_rate(0.8, DelaySpec.deterministic(2)), 1e-8))

    n = 25_000 // f
    if wanted("ttc-mean-sim"):
        bp = BitcoinParams(p=0.72, q=0.9)
        summ = bitcoin.run_ensemble(bp, n, master_seed, jobs=jobs)
        rows.append(_row("ttc-mean-sim", ttc_mean(bp), summ.mean_ttc,
                         3.0 * summ.stderr * tol2))

    if wanted("busy-oracle"):
        bp_raw = BitcoinParams.from_rates(1.0, 2.0)
        oracle = bitcoin.busy_period_oracle(bp_raw, 1_000_000 // f, (0.5, 1.0, 2.0),
                                            replica_rng(master_seed, 1_000_001))
        worst = max(abs(est - busy_lt(bp_raw, s)) / busy_lt(bp_raw, s)
                    for s, est in zip((0.5, 1.0, 2.0), oracle.lt_estimates))
        rows.append(_row("busy-oracle", 0.0, worst, 0.01 * tol2))

    for p, lo, hi in ((0.84, 0.08, 0.12), (0.89, 0.035, 0.065)):
        name = f"exceed@p={p}"
        if wanted(name):
            pad = (hi - lo) / 2 * (tol2 - 1.0)
            s2 = bitcoin.run_ensemble(BitcoinParams(p=p, q=0.9), n, master_seed,
                                      jobs=jobs)
            rows.append(_row(name, (lo + hi) / 2, s2.exceed_frac,
                             (hi - lo) / 2 + pad))

    if wanted("gamma-slope"):
        delay = DelaySpec.unit()
        p = 0.7
        zs = z_star(p, delay) * _z_star_scale
        j0 = RenewalLaw(p, delay).j0()
        gamma = (1.0 - j0) / (1.0 - j0 * zs)
        ens = growth.ensemble_last_passage(p, delay, 100_000 // f, master_seed,
                                           jobs=jobs)
        rows.append(_row("gamma-slope", math.log(gamma), ens.slope_fitted,
                         0.10 * tol2 * abs(math.log(gamma))))

    if wanted("x-geometric") or wanted("ez*-x"):
        cycles = growth.collect_cycles(0.7, DelaySpec.unit(), 100_000 // f,
                                       replica_rng(master_seed, 2_000_001))
        stats = growth.cycle_statistics(cycles, 0.7, DelaySpec.unit())
        if wanted("x-geometric"):
            rows.append(_row("x-geometric", 1.0, stats.chi2_pvalue, 0.99,
                             ok=stats.chi2_pvalue > 0.01))
        if wanted("ez*-x"):
            rows.append(_row("ez*-x", stats.ez_x_target, stats.ez_x,
                             0.01 * tol2 * stats.ez_x_target))

    if wanted("determinism"):
        bp = BitcoinParams(p=0.72, q=0.9)
        a = bitcoin.run_ensemble(bp, 200, master_seed, jobs=1)
        b = bitcoin.run_ensemble(bp, 200, master_seed, jobs=4)
        rows.append(_row("determinism", 0.0,
                         float(np.max(np.abs(a.taus - b.taus))), 0.0))
    return rows


def format_table(rows: list[CheckRow]) -> str:
    lines = [f"{'check':24s} {'target':>14s} {'observed':>14s} {'tol':>10s}  status"]
    for r in rows:
        lines.append(f"{r.name:24s} {r.target:14.6g} {r.observed:14.6g} "
                     f"{r.tolerance:10.3g}  {'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
