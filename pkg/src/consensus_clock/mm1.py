"""Closed-form analytics of the stylized two-race model.

The height race embeds into a Poisson clock of rate lam + mu, where
lam = (scaled) adversarial rate and mu = (scaled) honest effective rate.
The adversary's lead is then a birth-death walk, and everything of interest
is expressed through the M/M/1 busy-period transform

    B(s) = (lam + mu + s - sqrt((lam + mu + s)^2 - 4 lam mu)) / (2 lam),

real for s >= -s_star with s_star = (sqrt(mu) - sqrt(lam))^2.

Two Laplace transforms of the time to consensus are provided:

* ttc_lt            -- the composite form assembled from the cycle
                       transforms (kappa-factored and rational-over-D
                       variants, which agree to 1e-9). Its denominator D has
                       a simple dominant root at -s_star_star found by
                       `dominant_pole`.
* ttc_excursion_lt  -- the form obtained directly from the excursion
                       decomposition of the free lead walk, namely
                       (1 - rho) B / (1 - rho B^2) for a race started at a
                       tie. This is the variant that matches ensemble
                       simulation, and it is the one `ttc_mean` derives from.

The two disagree away from s = 0; the excursion form is authoritative for
means and distributional statements, the composite form for the documented
pole/denominator identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError, SecurityThresholdError
from .solvers import bisect_root

DEFAULT_RATE_SCALE = 0.1  # combined events per minute


@dataclass(frozen=True)
class BitcoinParams:
    """Parameters of the stylized model: honest step probability p, instant
    landing probability q, and the physical clock rate lam + mu."""

    p: float
    q: float
    rate_scale: float = DEFAULT_RATE_SCALE

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must be in (0,1), got {self.p}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must be in (0,1], got {self.q}")
        if self.rate_scale <= 0.0:
            raise ValueError("rate_scale must be positive")
        if self.p * self.q <= 1.0 - self.p:
            raise SecurityThresholdError(
                f"need p*q > 1-p for consensus to be reachable "
                f"(p*q={self.p * self.q:.6f}, 1-p={1.0 - self.p:.6f})")
        rt = busy_lt(self, -self.s_star)
        if abs(rt - self.rho ** -0.5) > 1e-9:
            raise AssertionError("busy transform boundary identity violated")

    @classmethod
    def from_rates(cls, lam: float, mu: float) -> "BitcoinParams":
        """Raw-rate constructor for unit tests: lam, mu set directly."""
        if not 0.0 < lam < mu:
            raise SecurityThresholdError(f"need 0 < lam < mu, got {lam}, {mu}")
        return cls(p=mu / (lam + mu), q=1.0, rate_scale=lam + mu)

    @property
    def lam(self) -> float:
        total = (1.0 - self.p) + self.p * self.q
        return self.rate_scale * (1.0 - self.p) / total

    @property
    def mu(self) -> float:
        total = (1.0 - self.p) + self.p * self.q
        return self.rate_scale * self.p * self.q / total

    @property
    def rho(self) -> float:
        return (1.0 - self.p) / (self.p * self.q)

    @property
    def p_hat(self) -> float:
        return self.mu / (self.lam + self.mu)

    @property
    def theta(self) -> float:
        return 2.0 * self.p_hat * (1.0 - self.p_hat)

    @property
    def s_star(self) -> float:
        return (self.lam + self.mu) - 2.0 * math.sqrt(self.lam * self.mu)


# -- component transforms ----------------------------------------------------


def busy_lt(bp: BitcoinParams, s: float) -> float:
    """Busy-period transform B(s); domain s >= -s_star.

    The discriminant is evaluated in the factored form
    (s + s_star)(s + (sqrt(lam)+sqrt(mu))^2), which is exact at the branch
    point instead of cancelling there.
    """
    lam, mu = bp.lam, bp.mu
    t = lam + mu + s
    disc = (s + bp.s_star) * (s + (math.sqrt(lam) + math.sqrt(mu)) ** 2)
    if disc < -1e-12 * (lam + mu) ** 2:
        raise DomainError(f"s={s} below -s_star={-bp.s_star}: transform leaves the reals")
    return (t - math.sqrt(max(disc, 0.0))) / (2.0 * lam)


def cycle_lt(bp: BitcoinParams, s: float) -> float:
    """Stable cycle transform: idle Exp(lam) then a busy period."""
    return bp.lam / (bp.lam + s) * busy_lt(bp, s)


def residual_lt(bp: BitcoinParams, s: float) -> float:
    """Equilibrium residual busy period (mu-lam)(1-B(s))/s, with the
    removable singularity at 0 evaluated analytically."""
    lam, mu = bp.lam, bp.mu
    if abs(s) < 1e-10 * bp.rate_scale:
        # series: 1 - s*mu/(mu-lam)^2 + O(s^2), avoiding cancellation
        return 1.0 - s * mu / (mu - lam) ** 2
    return (mu - lam) * (1.0 - busy_lt(bp, s)) / s


def unstable_cycle_lt(bp: BitcoinParams, s: float) -> float:
    """Finite cycle of the reversed (unstable) race, conditioned finite."""
    return bp.mu / (bp.mu + s) * busy_lt(bp, s)


def kappa_lt(bp: BitcoinParams, s: float) -> float:
    """One finite reversed cycle plus its trailing stable cycles."""
    ph = bp.p_hat
    denom = 1.0 - ph * cycle_lt(bp, s)
    if abs(denom) < 1e-12:
        raise DomainError(f"kappa has a pole near s={s}")
    return (1.0 - ph) * unstable_cycle_lt(bp, s) / denom


def denominator_d(bp: BitcoinParams, s: float) -> float:
    """Denominator D(s) of the composite transform's rational form."""
    lam, mu, rho, ph = bp.lam, bp.mu, bp.rho, bp.p_hat
    b = busy_lt(bp, s)
    return (lam + s) * (mu + s) - lam * ph * b * (mu * (1.0 + rho * rho) + (1.0 + rho) * s)


def ttc_lt(bp: BitcoinParams, s: float) -> float:
    """Composite-form transform of the time to consensus.

    Evaluated both as the kappa-factored product and as the expanded
    rational form over D(s); the two must agree to 1e-9. Domain is
    s > -s_star_star (the dominant root of D).
    """
    if s < 0.0 and s <= -dominant_pole(bp) + 1e-15:
        raise DomainError(f"s={s} at or beyond the dominant pole")
    lam, mu, rho, ph = bp.lam, bp.mu, bp.rho, bp.p_hat
    b = busy_lt(bp, s)
    mix = rho * residual_lt(bp, s) + 1.0 - rho
    factored = mix * (1.0 - rho) / (1.0 - rho * kappa_lt(bp, s))
    expanded = mix * (1.0 - rho) * (mu + s) * (lam + s - lam * ph * b) / denominator_d(bp, s)
    if abs(factored - expanded) > 1e-9 * max(1.0, abs(factored)):
        raise AssertionError(
            f"composite transform forms disagree at s={s}: {factored!r} vs {expanded!r}")
    return factored


def ttc_excursion_lt(bp: BitcoinParams, s: float, init: str = "tie") -> float:
    """Excursion-form transform of the time to consensus.

    For a race started at a tie the closed form is (1-rho) B / (1 - rho B^2):
    the walk runs through a geometric number of lead/deficit excursion pairs
    (each pair transforming as B^2) plus the final resolving excursion. For
    the stationary start the tie form is mixed over the equilibrium lead.
    """
    rho = bp.rho
    b = busy_lt(bp, s)
    denom = 1.0 - rho * b * b
    if denom <= 0.0:
        raise DomainError(f"s={s} at or beyond the excursion-form singularity -s_star")
    tie = (1.0 - rho) * b / denom
    if init == "tie":
        return tie
    if init == "stationary":
        # empty w.p. 1-rho: resolve immediately w.p. 1-rho, else re-enter at a
        # tie after a conditioned catch-up excursion; lead i >= 0 w.p.
        # (1-rho) rho^(i+1): i descent excursions then the tie form.
        from_empty = (1.0 - rho) + rho * b * tie
        lead_mix = (1.0 - rho) * rho / (1.0 - rho * b) * tie
        return (1.0 - rho) * from_empty + lead_mix
    raise ValueError(f"unknown init {init!r}")


def ttc_mean(bp: BitcoinParams, init: str = "tie") -> float:
    """Mean time to consensus in minutes.

    Computed as minus the derivative at 0 of the excursion-form transform by
    central differences with one Richardson step, and cross-checked against
    the closed-form mean (for the tie start, (lam+mu)/(mu-lam)^2); the two
    must agree to 0.1%. The numerical derivative is returned.
    """
    h = 1e-5 * bp.rate_scale

    def deriv(step: float) -> float:
        f = lambda s: ttc_excursion_lt(bp, s, init=init)
        return -(f(step) - f(-step)) / (2.0 * step)

    d1, d2 = deriv(h), deriv(h / 2.0)
    fd = (4.0 * d2 - d1) / 3.0
    lam, mu, rho = bp.lam, bp.mu, bp.rho
    m_tie = (lam + mu) / (mu - lam) ** 2
    if init == "tie":
        closed = m_tie
    else:
        m_b = 1.0 / (mu - lam)
        closed = ((1.0 - rho) * rho * (m_b + m_tie)
                  + rho * m_tie
                  + rho * rho * m_b / (1.0 - rho))
    if abs(fd - closed) > 1e-3 * closed:
        raise AssertionError(
            f"numerical and closed-form means disagree: {fd!r} vs {closed!r}")
    return fd


# -- dominant pole of the composite form -------------------------------------


def pole_function_g(bp: BitcoinParams, x: float) -> float:
    """Rescaled denominator g(x) = 2 D((lam+mu) x) / (lam+mu)^2 in closed form."""
    th = bp.theta
    rad = (1.0 + x) ** 2 - 2.0 * th
    if rad < -1e-12:
        raise DomainError(f"x={x} outside the real domain of g")
    return x * x + th * x + 2.0 * th - 1.0 + (1.0 + x - th) * math.sqrt(max(rad, 0.0))


@lru_cache(maxsize=256)
def dominant_pole(bp: BitcoinParams, tol: float = 1e-12) -> float:
    """Location s_star_star > 0 of the composite transform's dominant pole.

    Bisection for the unique root of g on [sqrt(2 theta) - 1, 0]; the
    endpoint signs g(lo) < 0 < g(0) are asserted, as is 0 < s** < s_star.
    """
    th = bp.theta
    lo = math.sqrt(2.0 * th) - 1.0
    hi = 0.0
    g = lambda x: pole_function_g(bp, x)
    if not (g(lo) < 0.0 < g(hi)):
        raise AssertionError(
            f"pole bracket signs violated: g({lo})={g(lo)}, g(0)={g(hi)}")
    res = bisect_root(g, lo, hi, tol=tol)
    s2 = -(bp.lam + bp.mu) * res.root
    if not 0.0 < s2 < bp.s_star:
        raise AssertionError(f"dominant pole {s2} outside (0, s_star={bp.s_star})")
    return s2


def tail_exponent(bp: BitcoinParams) -> float:
    """Dominant-pole decay rate s_star_star (per minute) of the composite
    transform; the composite-form tail prediction is c * exp(-s** x)."""
    return dominant_pole(bp)
