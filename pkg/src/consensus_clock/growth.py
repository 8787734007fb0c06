"""Simulator for the general delayed-growth model and its queue cycles.

`simulate_heights` runs the exact height recursion

    H_t = max(H_{t-1}, w_t * (1 + H_{t - xi_t})),    A_t = A_{t-1} + 1 - w_t,

with boundary H_t = -1, A_t = -1 for t <= 0 and H_0 = 0, retaining the full
height history. An honest step increments H exactly when its delay reaches
back to the last renewal or earlier, i.e. when xi_t <= (t - last renewal);
the streaming simulators below exploit that equivalent gap form.

Cycle decomposition follows the worst-case-attacker queue: adversarial steps
are arrivals and always lift the queue (an attacker more than one behind
re-forks at the current tip, so its effective deficit never exceeds one),
honest height increments are services, and services at an empty queue are
pseudo-services that bank permanent honest lead. Per cycle n the record
keeps X_n (pseudo-services in the empty period) and Y_n (peak queue length
in the busy period); with S_n the running sum of X, the last cycle index
with S_n - Y_n <= 0 is the cycle count T to consensus.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .delays import DelaySpec
from .errors import InsufficientDataError, PreconditionError
from .renewal import RenewalLaw
from .streams import ordered_map, replica_rng
from .thresholds import p_critical, z_star


@dataclass(frozen=True)
class GrowthTrace:
    h: np.ndarray
    a: np.ndarray
    q: np.ndarray
    horizon: int


@dataclass(frozen=True)
class CycleRecord:
    index: int
    x: int
    y: int
    empty_len: int
    busy_len: int


@dataclass(frozen=True)
class LastPassageResult:
    t_cycles: int
    cycles_run: int
    s_final: int
    stop_margin: float


@dataclass(frozen=True)
class CycleStop:
    """Run cycles until z_star^S < eps, bounding the probability that any
    future cycle could still violate."""
    eps: float = 1e-10


def simulate_heights(p: float, delay: DelaySpec, horizon: int,
                     rng: np.random.Generator, driving=None) -> GrowthTrace:
    """Exact recursion over t = 1..horizon.

    `driving` optionally supplies (omega, xi) arrays for deterministic
    replay in tests; xi entries are ignored on adversarial steps.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if driving is not None:
        omega = np.asarray(driving[0], dtype=np.int64)
        xi = np.asarray(driving[1], dtype=np.int64)
    else:
        omega = (rng.random(horizon) < p).astype(np.int64)
        xi = delay.sample(rng, size=horizon)
    h_hist = np.empty(horizon + 1, dtype=np.int64)
    h_hist[0] = 0
    a = np.empty(horizon, dtype=np.int64)
    a_prev = -1
    for t in range(1, horizon + 1):
        back = t - int(xi[t - 1])
        reach = h_hist[back] if back >= 0 else -1
        if omega[t - 1]:
            h_hist[t] = max(h_hist[t - 1], 1 + reach)
        else:
            h_hist[t] = h_hist[t - 1]
            a_prev += 1
        a[t - 1] = a_prev
    h = h_hist[1:]
    q = np.maximum(a - h, -1)
    return GrowthTrace(h=h, a=a, q=q, horizon=horizon)


def decompose_cycles(trace: GrowthTrace) -> list[CycleRecord]:
    """Split a trace into completed (empty period, busy period) cycles.

    The queue is reconstructed from the trace's arrival and service marks
    under the worst-case-attacker semantics described in the module
    docstring; queue length uses the `q + 1` convention (an empty queue has
    zero customers). Trailing incomplete cycles are discarded; the renewal
    point at t = 0 is not counted as a pseudo-service.
    """
    arrivals = np.diff(np.concatenate(([-1], trace.a))) == 1
    services = np.diff(np.concatenate(([0], trace.h))) == 1
    records = []
    qlen = 0
    x = 0
    y = 0
    empty_len = 0
    busy_len = 0
    index = 1
    for t in range(trace.horizon):
        if arrivals[t]:
            qlen = qlen + 1 if qlen else 1
            busy_len += 1
            y = max(y, qlen)
        elif services[t] and qlen > 0:
            qlen -= 1
            if qlen == 0:
                # post-step length is 0: this step opens the next empty run
                records.append(CycleRecord(index=index, x=x, y=y,
                                           empty_len=empty_len, busy_len=busy_len))
                index += 1
                x = y = busy_len = 0
                empty_len = 1
            else:
                busy_len += 1
        else:
            if qlen == 0:
                empty_len += 1
                if services[t]:
                    x += 1
            else:
                busy_len += 1
    return records


class _StepStream:
    """Chunked per-replica step stream: honest flags and delay draws."""

    def __init__(self, p: float, delay: DelaySpec, rng: np.random.Generator,
                 chunk: int = 1024):
        self.p = p
        self.delay = delay
        self.rng = rng
        self.chunk = chunk
        self._honest = np.empty(0, dtype=bool)
        self._xi = np.empty(0, dtype=np.int64)
        self._pos = 0

    def next(self) -> tuple[bool, int]:
        if self._pos >= self._honest.size:
            self._honest = self.rng.random(self.chunk) < self.p
            self._xi = self.delay.sample(self.rng, size=self.chunk)
            self._pos = 0
        i = self._pos
        self._pos += 1
        return bool(self._honest[i]), int(self._xi[i])


def last_passage_cycles(p: float, delay: DelaySpec, rng: np.random.Generator,
                        stop: CycleStop = CycleStop(),
                        z_star_value: float | None = None) -> LastPassageResult:
    """Run queue cycles until the banked honest lead S makes any future
    violation less likely than stop.eps; return the last violating cycle."""
    zs = z_star(p, delay) if z_star_value is None else z_star_value
    s_cap = max(1, math.ceil(math.log(stop.eps) / math.log(zs)))
    stream = _StepStream(p, delay, rng)
    sp = stream.next  # local alias; the loop below is the hot path
    gap = 0          # steps since the last height renewal (renewal at t=0)
    qlen = 0
    s_total = 0
    s_at_busy_start = 0
    y = 0
    cycles = 0
    t_last = 0
    steps = 0
    while True:
        honest, xi = sp()
        steps += 1
        if steps > 100_000_000:
            raise RuntimeError("cycle run exceeded the step budget")
        gap += 1
        if honest:
            if xi <= gap:
                gap = 0
                if qlen == 0:
                    s_total += 1
                else:
                    qlen -= 1
                    if qlen == 0:
                        cycles += 1
                        if s_at_busy_start - y <= 0:
                            t_last = cycles
                        y = 0
                        if s_total >= s_cap:
                            break
        else:
            if qlen == 0:
                s_at_busy_start = s_total
                qlen = 1
            else:
                qlen += 1
            if qlen > y:
                y = qlen
    return LastPassageResult(t_cycles=t_last, cycles_run=cycles,
                             s_final=s_total, stop_margin=zs ** s_total)


def collect_cycles(p: float, delay: DelaySpec, n_cycles: int,
                   rng: np.random.Generator) -> list[CycleRecord]:
    """Stream complete cycles from a single run (for cycle statistics)."""
    stream = _StepStream(p, delay, rng)
    records = []
    gap = 0
    qlen = 0
    x = y = empty_len = busy_len = 0
    index = 1
    while len(records) < n_cycles:
        honest, xi = stream.next()
        gap += 1
        renew = honest and xi <= gap
        if renew:
            gap = 0
        if not honest:
            qlen = qlen + 1 if qlen else 1
            busy_len += 1
            y = max(y, qlen)
        elif renew and qlen > 0:
            qlen -= 1
            if qlen == 0:
                records.append(CycleRecord(index=index, x=x, y=y,
                                           empty_len=empty_len, busy_len=busy_len))
                index += 1
                x = y = busy_len = 0
                empty_len = 1
            else:
                busy_len += 1
        else:
            if qlen == 0:
                empty_len += 1
                if renew:
                    x += 1
            else:
                busy_len += 1
    return records


def service_arrival_counts(p: float, delay: DelaySpec, n_services: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Adversarial arrivals inside each of n_services full service gaps."""
    return service_gap_pairs(p, delay, n_services, rng)[0]


def service_gap_pairs(p: float, delay: DelaySpec, n_services: int,
                      rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """(arrival counts J, gap lengths R) for n_services full services."""
    stream = _StepStream(p, delay, rng)
    js = np.empty(n_services, dtype=np.int64)
    rs = np.empty(n_services, dtype=np.int64)
    gap = 0
    count = 0
    k = 0
    while k < n_services:
        honest, xi = stream.next()
        gap += 1
        if honest and xi <= gap:
            js[k] = count
            rs[k] = gap
            k += 1
            gap = 0
            count = 0
        elif not honest:
            count += 1
    return js, rs


def optional_stopping_check(p: float, delay: DelaySpec, n_fragments: int,
                            rng: np.random.Generator, upper: int = 5,
                            z_star_value: float | None = None):
    """Busy-period fragments started at queue length 1, absorbed at 0 or at
    level >= upper; returns (mean of z*^-Q at absorption, stderr, target).

    The queue is observed at height-renewal epochs only (the embedded chain),
    where each step moves by J - 1 for a full service's arrival count J.
    """
    zs = z_star(p, delay) if z_star_value is None else z_star_value
    stream = _StepStream(p, delay, rng)
    vals = np.empty(n_fragments, dtype=float)
    k = 0
    gap = 0
    qlen = 0
    tracking = False
    level = 0
    pending = 0
    while k < n_fragments:
        honest, xi = stream.next()
        gap += 1
        renew = honest and xi <= gap
        if renew:
            gap = 0
        if not honest:
            qlen = qlen + 1 if qlen else 1
            if tracking:
                pending += 1
        elif renew and qlen > 0:
            qlen -= 1
            if tracking:
                level = level + pending - 1
                pending = 0
                if level <= 0 or level >= upper:
                    vals[k] = zs ** (-max(level, 0))
                    k += 1
                    tracking = False
            elif qlen == 1:
                tracking = True
                level = 1
                pending = 0
        elif renew and qlen == 0 and tracking:
            tracking = False  # fragment host busy period ended before sampling
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_fragments))
    return mean, se, zs ** -1.0


# -- ensembles ---------------------------------------------------------------


@dataclass(frozen=True)
class GrowthEnsemble:
    p: float
    delay: DelaySpec
    n: int
    t_values: np.ndarray
    survival: list[tuple[int, float]]
    slope_fitted: float
    slope_ci: tuple[float, float]
    gamma_analytic: float
    master_seed: int


def survival_table(t_values: np.ndarray, min_count: int = 100) -> list[tuple[int, float]]:
    n = t_values.size
    out = []
    t = 1
    while True:
        cnt = int((t_values >= t).sum())
        if cnt < min_count:
            break
        out.append((t, math.log(cnt / n)))
        t += 1
    return out


def fit_cycle_slope(table: list[tuple[int, float]]) -> float:
    """Slope of the log survival over its linear regime (leading points are
    trimmed while they sit off the line through the rest; the first cycles
    carry the pre-asymptotic shoulder)."""
    ts = np.array([t for t, _ in table], dtype=float)
    ys = np.array([y for _, y in table])
    start = 0
    while len(ts) - start > 4:
        sl, ic = np.polyfit(ts[start + 1:], ys[start + 1:], 1)
        resid = ys[start + 1:] - (sl * ts[start + 1:] + ic)
        rms = float(np.sqrt(np.mean(resid ** 2)))
        if rms > 0 and abs(ys[start] - (sl * ts[start] + ic)) > 2.0 * rms:
            start += 1
        else:
            break
    sl, _ = np.polyfit(ts[start:], ys[start:], 1)
    return float(sl)


def _replica_t(i: int, p: float, delay: DelaySpec, stop: CycleStop,
               zs: float, master_seed: int) -> int:
    return last_passage_cycles(p, delay, replica_rng(master_seed, i),
                               stop=stop, z_star_value=zs).t_cycles


def ensemble_last_passage(p: float, delay: DelaySpec, n: int, master_seed: int,
                          stop: CycleStop = CycleStop(), jobs: int = 1,
                          bootstrap: int = 200) -> GrowthEnsemble:
    pc = p_critical(delay)
    if p <= pc:
        raise PreconditionError(
            f"p={p} is at or below the security threshold p_c={pc:.9f}",
            p_critical=pc)
    zs = z_star(p, delay)
    j0 = RenewalLaw(p, delay).j0()
    gamma = (1.0 - j0) / (1.0 - j0 * zs)
    from functools import partial

    one = partial(_replica_t, p=p, delay=delay, stop=stop, zs=zs,
                  master_seed=master_seed)
    ts = np.array(ordered_map(one, n, jobs=jobs), dtype=np.int64)
    table = survival_table(ts)
    slope = fit_cycle_slope(table)
    boot_rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(2 ** 31,)))
    boots = []
    for _ in range(bootstrap):
        resampled = ts[boot_rng.integers(0, n, n)]
        tab = survival_table(resampled)
        if len(tab) >= 2:
            boots.append(fit_cycle_slope(tab))
    lo, hi = (float(np.quantile(boots, 0.025)), float(np.quantile(boots, 0.975))) \
        if boots else (float("nan"), float("nan"))
    return GrowthEnsemble(p=p, delay=delay, n=n, t_values=ts, survival=table,
                          slope_fitted=slope, slope_ci=(lo, hi),
                          gamma_analytic=gamma, master_seed=master_seed)


# -- cycle statistics ---------------------------------------------------------


@dataclass(frozen=True)
class CycleStatsReport:
    n_cycles: int
    x_mean: float
    x_mean_target: float
    chi2_stat: float
    chi2_pvalue: float
    ez_x: float
    ez_x_target: float
    py_slope: float
    py_slope_target: float
    xy_corr: float
    corr_bound: float


def cycle_statistics(cycles: list[CycleRecord], p: float,
                     delay: DelaySpec) -> CycleStatsReport:
    """Diagnostics of the (X, Y) cycle functionals against their laws."""
    if len(cycles) < 10_000:
        raise InsufficientDataError(f"need >= 10^4 cycles, got {len(cycles)}")
    from scipy import stats

    xs = np.array([c.x for c in cycles], dtype=np.int64)
    ys = np.array([c.y for c in cycles], dtype=np.int64)
    n = xs.size
    j0 = RenewalLaw(p, delay).j0()
    zs = z_star(p, delay)

    # chi-square of X against the geometric law with success 1 - j0,
    # binning the tail so expected counts stay above 5
    kmax = int(xs.max())
    probs = [(1.0 - j0) * j0 ** k for k in range(kmax + 1)]
    counts = np.bincount(xs, minlength=kmax + 1).astype(float)
    exp = np.array(probs) * n
    cut = len(exp)
    while cut > 1 and exp[cut - 1:].sum() < 5.0:
        cut -= 1
    obs_b = np.concatenate([counts[:cut - 1], [counts[cut - 1:].sum()]])
    exp_b = np.concatenate([exp[:cut - 1], [n - exp[:cut - 1].sum()]])
    chi2 = float(((obs_b - exp_b) ** 2 / exp_b).sum())
    pval = float(stats.chi2.sf(chi2, df=len(obs_b) - 1))

    ez = float(np.mean(zs ** xs))
    ez_target = (1.0 - j0) / (1.0 - j0 * zs)

    levels = np.arange(2, 11)
    py = np.array([(ys >= y).mean() for y in levels])
    keep = py * n >= 10
    slope, _ = np.polyfit(levels[keep], np.log(py[keep]), 1)

    corr = float(np.corrcoef(xs, ys)[0, 1])
    return CycleStatsReport(
        n_cycles=n,
        x_mean=float(xs.mean()), x_mean_target=j0 / (1.0 - j0),
        chi2_stat=chi2, chi2_pvalue=pval,
        ez_x=ez, ez_x_target=ez_target,
        py_slope=float(slope), py_slope_target=math.log(zs),
        xy_corr=corr, corr_bound=4.0 / math.sqrt(n),
    )


# -- file emitters ------------------------------------------------------------


def write_t_samples_csv(ens: GrowthEnsemble, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("replica,t_cycles\n")
        for i, t in enumerate(ens.t_values.tolist()):
            fh.write(f"{i},{t}\n")


def write_cycles_csv(cycles: list[CycleRecord], replica: int, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("replica,cycle,x,y,empty_len,busy_len\n")
        for c in cycles:
            fh.write(f"{replica},{c.index},{c.x},{c.y},{c.empty_len},{c.busy_len}\n")


def write_growth_summary_json(ens: GrowthEnsemble, path: Path) -> None:
    doc = {
        "p": ens.p, "delay": ens.delay.label(), "n": ens.n,
        "gamma_analytic": ens.gamma_analytic,
        "slope_fitted": ens.slope_fitted,
        "slope_ci": list(ens.slope_ci),
        "master_seed": ens.master_seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
