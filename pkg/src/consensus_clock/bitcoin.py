"""Monte Carlo simulator for the stylized two-race model.

Each replica follows the free lead walk W = A - H of the adversarial height
against the honest height, embedded in a Poisson clock of rate lam + mu:
events arrive with exponential gaps, each event is an adversarial step
(W += 1) with probability lam/(lam+mu) and an honest step (W -= 1)
otherwise. The recorded queue path is q = max(W, -1); down-steps at q = -1
leave q in place (pseudo-services extending the honest lead).

The consensus epoch tau_c is the time of the event that resolves the last
state with A >= H -- the start of the final stretch in which the honest
chain leads strictly forever. Replicas start at a tie by default (the
worst-case attacker re-forks at the observed block's parent); a stationary
start drawn from the equilibrium lead law is available as `init="stationary"`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mm1 import BitcoinParams
from .streams import CHUNK, ordered_map, replica_rng

_MAX_EVENTS = 50_000_000


@dataclass(frozen=True)
class LeadRun:
    """Stop after k consecutive events with H > A since the last A >= H event."""
    k: int = 1000


@dataclass(frozen=True)
class LeadCap:
    """Stop once the honest lead d makes the catch-up probability rho^d < eps."""
    eps: float = 1e-10


StopRule = LeadRun | LeadCap


@dataclass(frozen=True)
class StylizedTrace:
    event_times: np.ndarray
    q_path: np.ndarray
    tau_c: float
    stopped_by: str


@dataclass(frozen=True)
class EnsembleSummary:
    n: int
    mean_ttc: float
    stderr: float
    exceed_frac: float
    ecdf: np.ndarray
    master_seed: int
    threshold_min: float
    taus: np.ndarray  # per-replica, in replica order


def _initial_lead(rng: np.random.Generator, rho: float, init: str) -> int:
    if init == "tie":
        return 0
    if init == "stationary":
        # equilibrium lead: -1 w.p. 1-rho (honest ahead), else i w.p. (1-rho) rho^(i+1)
        if rng.random() >= rho:
            return -1
        return int(rng.geometric(1.0 - rho)) - 1
    raise ValueError(f"unknown init {init!r}")


def _replica(bp: BitcoinParams, rng: np.random.Generator, stop: StopRule,
             init: str, record: bool):
    """Core event loop; randomness is consumed in fixed CHUNK-sized blocks."""
    lam, mu, rho = bp.lam, bp.mu, bp.rho
    rate = lam + mu
    up_p = lam / rate
    if isinstance(stop, LeadCap):
        d_kill = max(1, math.ceil(math.log(stop.eps) / math.log(rho)))
        run_k = None
    else:
        d_kill = None
        run_k = stop.k

    w = _initial_lead(rng, rho, init)
    t = 0.0
    tau = 0.0
    prev_state = w          # state whose resolution the next event provides
    lead_run = 1 if w <= -1 else 0
    n_events = 0
    times_out = [] if record else None
    q_out = [] if record else None

    while True:
        gaps = rng.exponential(1.0 / rate, CHUNK)
        ups = rng.random(CHUNK) < up_p
        steps = np.where(ups, 1, -1)
        states = prev_state + np.cumsum(steps)
        times = t + np.cumsum(gaps)

        # find the in-chunk stopping point (exclusive end index)
        end = CHUNK
        if d_kill is not None:
            hit = np.nonzero(states <= -d_kill)[0]
            if hit.size:
                end = int(hit[0]) + 1
        else:
            ge0 = np.nonzero(states[:end] >= 0)[0]
            if ge0.size == 0:
                if lead_run + end >= run_k:
                    end = run_k - lead_run
                    lead_run = run_k
                else:
                    lead_run += end
            else:
                # run before the first violation, runs between, trailing run
                if lead_run + ge0[0] >= run_k:
                    end = run_k - lead_run
                    lead_run = run_k
                else:
                    trigger = None
                    prev = ge0[0]
                    for g in ge0[1:]:
                        if g - prev - 1 >= run_k:
                            trigger = prev + 1 + run_k
                            break
                        prev = g
                    if trigger is None and (end - 1) - ge0[-1] >= run_k:
                        trigger = ge0[-1] + 1 + run_k
                    if trigger is not None:
                        end = int(trigger)
                        lead_run = run_k
                    else:
                        lead_run = (end - 1) - int(ge0[-1])

        states = states[:end]
        times = times[:end]

        # the event at index j resolves the state before it; the last
        # resolution of an A >= H state is the consensus epoch
        resolved = np.empty(end, dtype=bool)
        resolved[0] = prev_state >= 0
        if end > 1:
            resolved[1:] = states[:-1] >= 0
        idx = np.nonzero(resolved)[0]
        if idx.size:
            tau = float(times[idx[-1]])

        if record:
            times_out.append(times)
            q_out.append(np.maximum(states, -1))

        n_events += end
        prev_state = int(states[-1])
        t = float(times[-1])

        stopped = (d_kill is not None and prev_state <= -d_kill) or \
                  (run_k is not None and lead_run >= run_k)
        if stopped:
            break
        if n_events > _MAX_EVENTS:
            raise RuntimeError("replica exceeded the event budget")

    stopped_by = "lead_cap" if d_kill is not None else "lead_run"
    if record:
        return tau, stopped_by, np.concatenate(times_out), np.concatenate(q_out)
    return tau, stopped_by, None, None


def simulate_replica(bp: BitcoinParams, rng: np.random.Generator,
                     stop: StopRule = LeadRun(), init: str = "tie") -> StylizedTrace:
    tau, stopped_by, times, q = _replica(bp, rng, stop, init, record=True)
    return StylizedTrace(event_times=times, q_path=q, tau_c=tau, stopped_by=stopped_by)


def _replica_tau(i: int, bp: BitcoinParams, stop: StopRule, init: str,
                 master_seed: int) -> float:
    return _replica(bp, replica_rng(master_seed, i), stop, init, record=False)[0]


def run_ensemble(bp: BitcoinParams, n: int, master_seed: int,
                 stop: StopRule = LeadRun(), threshold_min: float = 60.0,
                 init: str = "tie", jobs: int = 1) -> EnsembleSummary:
    """n independent replicas with per-replica streams; deterministic for a
    fixed master seed regardless of the worker count."""
    if n < 1:
        raise ValueError("need at least one replica")
    from functools import partial

    one = partial(_replica_tau, bp=bp, stop=stop, init=init,
                  master_seed=master_seed)
    taus = np.array(ordered_map(one, n, jobs=jobs))
    mean = float(taus.mean())
    stderr = float(taus.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return EnsembleSummary(
        n=n, mean_ttc=mean, stderr=stderr,
        exceed_frac=float(np.mean(taus > threshold_min)),
        ecdf=np.sort(taus), master_seed=master_seed,
        threshold_min=threshold_min, taus=taus,
    )


# -- tail statistics ----------------------------------------------------------


def empirical_tail(summary: EnsembleSummary, grid) -> list[tuple[float, float]]:
    """(t, log survival) pairs; grid points with fewer than 10 exceeding
    samples are omitted."""
    taus = summary.ecdf
    if taus.size == 0:
        raise ValueError("empty ensemble")
    out = []
    n = taus.size
    for t in grid:
        exceed = n - int(np.searchsorted(taus, t, side="right"))
        if exceed >= 10:
            out.append((float(t), math.log(exceed / n)))
    return out


def default_tail_grid(summary: EnsembleSummary, points: int = 40) -> np.ndarray:
    pos = summary.ecdf[summary.ecdf > 0]
    lo = float(np.quantile(pos, 0.25))
    hi = float(pos[-10]) if pos.size >= 10 else float(pos[-1])
    return np.linspace(lo, hi, points)


def fit_tail_slope(pairs: list[tuple[float, float]]) -> float:
    """Least-squares slope over the linear regime of a log-survival table.

    Leading points are trimmed while the first point sits more than two
    fit-RMS errors off the line through the remaining ones (the early
    shoulder of the distribution is not part of the exponential regime).
    """
    ts = np.array([t for t, _ in pairs])
    ys = np.array([y for _, y in pairs])
    start = 0
    while len(ts) - start > 5:
        sl, ic = np.polyfit(ts[start + 1:], ys[start + 1:], 1)
        resid = ys[start + 1:] - (sl * ts[start + 1:] + ic)
        rms = float(np.sqrt(np.mean(resid ** 2))) if resid.size else 0.0
        gap = abs(ys[start] - (sl * ts[start] + ic))
        if rms > 0 and gap > 2.0 * rms:
            start += 1
        else:
            break
    sl, _ = np.polyfit(ts[start:], ys[start:], 1)
    return float(sl)


# -- oracles ------------------------------------------------------------------


@dataclass(frozen=True)
class BusyOracleResult:
    lt_estimates: np.ndarray
    mean_length: float
    n_periods: int


def busy_period_oracle(bp: BitcoinParams, n_periods: int, s_values,
                       rng: np.random.Generator) -> BusyOracleResult:
    """Simulate stable busy periods (start at one customer, run to empty)
    and estimate E[exp(-s * length)] for each requested s."""
    rate = bp.lam + bp.mu
    up_p = bp.lam / rate
    level = np.ones(n_periods, dtype=np.int64)
    length = np.zeros(n_periods)
    alive = np.arange(n_periods)
    while alive.size:
        m = alive.size
        length[alive] += rng.exponential(1.0 / rate, m)
        level[alive] += np.where(rng.random(m) < up_p, 1, -1)
        alive = alive[level[alive] > 0]
    s_arr = np.asarray(list(s_values), dtype=float)
    est = np.array([float(np.mean(np.exp(-s * length))) for s in s_arr])
    return BusyOracleResult(lt_estimates=est, mean_length=float(length.mean()),
                            n_periods=n_periods)


def coupled_queue_states(bp: BitcoinParams, n: int, horizon_events: int,
                         rng: np.random.Generator) -> np.ndarray:
    """States of the coupled reflected queue (lengths, >= 0) after a fixed
    number of events, started from the equilibrium law. The reflected queue
    is the measure-preserving companion of the lead walk: arrivals always
    lift it, services at zero are pseudo-services."""
    rho = bp.rho
    up_p = bp.lam / (bp.lam + bp.mu)
    lengths = np.where(rng.random(n) < rho, rng.geometric(1.0 - rho, n), 0).astype(np.int64)
    for _ in range(horizon_events):
        up = rng.random(n) < up_p
        lengths = np.where(up, lengths + 1, np.maximum(lengths - 1, 0))
    return lengths


# -- file emitters ------------------------------------------------------------


def write_samples_csv(summary: EnsembleSummary, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("replica,tau_c_minutes\n")
        for i, tau in enumerate(summary.taus.tolist()):
            fh.write(f"{i},{tau!r}\n")


def write_summary_json(bp: BitcoinParams, summary: EnsembleSummary, path: Path) -> None:
    doc = {
        "p": bp.p, "q": bp.q, "rate_scale": bp.rate_scale,
        "n": summary.n, "mean": summary.mean_ttc, "stderr": summary.stderr,
        "exceed_frac": summary.exceed_frac, "threshold_min": summary.threshold_min,
        "master_seed": summary.master_seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_tail_csv(summary: EnsembleSummary, path: Path, grid=None) -> None:
    pairs = empirical_tail(summary, default_tail_grid(summary) if grid is None else grid)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t_minutes,log_survival\n")
        for t, y in pairs:
            fh.write(f"{t!r},{y!r}\n")
