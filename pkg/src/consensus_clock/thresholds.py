"""Scalar fixed points of the delayed-growth model.

Three quantities govern the model's long-run behavior:

* p_c    -- security threshold: unique root of (1-p) E[R_p] = 1.
* z_star -- tilt of the arrivals-per-service count J, the unique z with
            E[z^-(J-1)] = 1, equivalently the root of
            sum_{r>=1} prod_{i=1..r} ((1-p)/z + p P(delay > i)) = p/(1-p).
* gamma  -- cycle-count tail rate (1-j0)/(1-j0*z_star) in (0, 1).

Everything is solved by bisection on brackets guaranteed by monotonicity;
z_star's bracket [(1-p)/p, min(1, (1-p)/(p P(delay=1)))] is treated as closed
because the no-delay case attains its left endpoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .delays import DelaySpec
from .errors import BracketError, DomainError, PreconditionError
from .renewal import P_MAX, P_MIN, RenewalLaw
from .solvers import BisectionResult, bisect_root

_BRACKET_PAD = 1e-6


@dataclass(frozen=True)
class ThresholdReport:
    p: float
    delay: DelaySpec
    p_c: float
    z_star: float
    j0: float
    gamma: float
    solver_iters: int
    residuals: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "p": self.p,
            "delay": self.delay.label(),
            "p_c": self.p_c,
            "z_star": self.z_star,
            "j0": self.j0,
            "gamma": self.gamma,
            "solver_iters": self.solver_iters,
            "residuals": {k: v for k, v in sorted(self.residuals.items())},
        }
        return json.dumps(doc, sort_keys=True, indent=2)


def p_critical(delay: DelaySpec, tol: float = 1e-12) -> float:
    return _p_critical_result(delay, tol).root


def _p_critical_result(delay: DelaySpec, tol: float):
    def f(p: float) -> float:
        return (1.0 - p) * RenewalLaw(p, delay).mean() - 1.0

    lo, hi = P_MIN + _BRACKET_PAD, P_MAX - _BRACKET_PAD
    try:
        return bisect_root(f, lo, hi, tol=tol)
    except BracketError as exc:
        raise BracketError("no threshold in supported range") from exc


def stability_series(p: float, delay: DelaySpec, z: float, eps: float = 1e-14) -> float:
    """F(z) = sum_{r>=1} prod_{i=1..r} ((1-p)/z + p P(delay > i)).

    Terms gain a factor of at most (1-p)/z + p P(delay > i_max) < 1 once i
    clears the delay's effective support, so the remainder is summed against
    that geometric envelope.
    """
    base = (1.0 - p) / z
    total = 0.0
    term = 1.0
    i = 0
    while True:
        i += 1
        factor = base + p * delay.ccdf(i)
        term *= factor
        total += term
        # envelope factor for everything beyond i
        env = base + p * delay.ccdf(i)
        if env < 1.0 and term * env / (1.0 - env) < eps:
            return total + term * env / (1.0 - env)
        if term == 0.0:
            return total
        if i > 10_000_000:
            raise DomainError(f"stability series did not converge at z={z}")


def z_star(p: float, delay: DelaySpec, tol: float = 1e-12) -> float:
    res = _z_star_result(p, delay, tol)
    return res.root


def _z_star_result(p: float, delay: DelaySpec, tol: float):
    p_c = p_critical(delay, tol=max(tol, 1e-12))
    if p <= p_c:
        raise PreconditionError(
            f"p={p} is at or below the security threshold p_c={p_c:.9f}",
            p_critical=p_c)
    rhs = p / (1.0 - p)
    z_lo = (1.0 - p) / p
    q1 = delay.prob_one()
    z_hi = min(1.0, (1.0 - p) / (p * q1)) if q1 > 0 else 1.0

    def f(z: float) -> float:
        return stability_series(p, delay, z) - rhs

    if z_hi - z_lo < tol:
        # no-delay style bracket collapses to the left endpoint
        return BisectionResult(root=z_lo, iterations=0, residual=f(z_lo))
    # F is decreasing in z; the left endpoint may solve the equation exactly
    f_lo = f(z_lo)
    if abs(f_lo) <= max(1e-9, tol * rhs):
        return BisectionResult(root=z_lo, iterations=0, residual=f_lo)
    return bisect_root(f, z_lo, z_hi, tol=tol)


def gamma_rate(p: float, delay: DelaySpec, tol: float = 1e-12) -> float:
    zs = z_star(p, delay, tol)
    j0 = RenewalLaw(p, delay).j0()
    return (1.0 - j0) / (1.0 - j0 * zs)


def j_transform(p: float, delay: DelaySpec, z: float, eps: float = 1e-14) -> float:
    """E[z^-J], the reciprocal-moment transform of arrivals per service.

    Evaluates both the direct series

        sum_r z^(1-r) p P(delay <= r) prod_{i<r} (1 - p + p z P(delay > i))

    and its tilted-renewal resummation (the same series reorganized around
    the law with honest weight pz/(1-p+pz)); the two must agree to 1e-9.
    """
    if z <= 1.0 - p:
        raise DomainError(f"transform diverges for z <= 1-p (z={z}, 1-p={1-p})")
    direct = _j_series_direct(p, delay, z, eps)
    tilted = _j_series_tilted(p, delay, z, eps)
    if abs(direct - tilted) > 1e-9 * max(1.0, abs(direct)):
        raise AssertionError(
            f"transform forms disagree: direct={direct!r}, tilted={tilted!r}")
    return direct


def _j_series_direct(p: float, delay: DelaySpec, z: float, eps: float) -> float:
    total = 0.0
    prefix = 1.0          # z^(1-r) prod_{i<r} (1 - p + p z P(delay > i))
    r = 0
    while True:
        r += 1
        total += prefix * p * delay.cdf(r)
        prefix *= (1.0 - p + p * z * delay.ccdf(r)) / z
        ratio = (1.0 - p + p * z * delay.ccdf(r)) / z
        if ratio < 1.0 and prefix * p / (1.0 - ratio) < eps:
            return total
        if prefix == 0.0:
            return total
        if r > 10_000_000:
            raise DomainError("direct transform series did not converge")


def _j_series_tilted(p: float, delay: DelaySpec, z: float, eps: float) -> float:
    p_hat = p * z / (1.0 - p + p * z)
    scale = (1.0 - p + p * z) / z    # = p / p_hat
    total = 0.0
    prefix = 1.0                     # scale^r prod_{i<r} (1 - p_hat P(delay <= i))
    r = 0
    while True:
        r += 1
        prefix *= scale
        total += prefix * p_hat * delay.cdf(r)
        prefix *= 1.0 - p_hat * delay.cdf(r)
        ratio = scale * (1.0 - p_hat * delay.cdf(r))
        if ratio < 1.0 and prefix * scale * p_hat / (1.0 - ratio) < eps:
            return total
        if prefix == 0.0:
            return total
        if r > 10_000_000:
            raise DomainError("tilted transform series did not converge")


def solve_thresholds(p: float, delay: DelaySpec, tol: float = 1e-12) -> ThresholdReport:
    pc_res = _p_critical_result(delay, tol)
    zs_res = _z_star_result(p, delay, tol)
    j0 = RenewalLaw(p, delay).j0()
    gamma = (1.0 - j0) / (1.0 - j0 * zs_res.root)
    if not 0.0 < gamma < 1.0:
        raise AssertionError(f"gamma out of (0,1): {gamma}")
    return ThresholdReport(
        p=p, delay=delay,
        p_c=pc_res.root, z_star=zs_res.root, j0=j0, gamma=gamma,
        solver_iters=pc_res.iterations + zs_res.iterations,
        residuals={"p_c": pc_res.residual, "z_star": zs_res.residual},
    )
