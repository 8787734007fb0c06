"""Law of the honest inter-renewal time under delay and adversarial thinning.

The chain's honest height increments form a renewal process whose
inter-renewal gap R has tail

    P(R > r) = prod_{i=1..r} (1 - p + p * P(delay > i))
             = prod_{i=1..r} (1 - p * P(delay <= i)),

where p is the per-step honest probability. The module also provides the
geometric domination offset r_p (the gap is sandwiched between Geom(1-p) and
Geom(1-p) + r_p) and the no-arrival weight j0 = E[p^R1], where R1 is the gap
law of the undiluted (p = 1) chain.

All series are truncated by their geometric envelopes, never by a fixed term
count, so the truncation error is controlled for every (p, delay) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .delays import DelaySpec

P_MIN, P_MAX = 0.01, 0.999


@dataclass(frozen=True)
class RenewalLaw:
    p: float
    delay: DelaySpec
    truncation_eps: float = 1e-14

    def __post_init__(self):
        # 0.999 itself is admitted; the formulas only degenerate at p = 1
        if not P_MIN < self.p <= P_MAX:
            raise ValueError(f"p must lie in ({P_MIN}, {P_MAX}], got {self.p}")
        if self.truncation_eps <= 0:
            raise ValueError("truncation_eps must be positive")

    # -- law ----------------------------------------------------------------

    def tail(self, r: int) -> float:
        """P(R > r), the exact product over i = 1..r."""
        if r <= 0:
            return 1.0
        out = 1.0
        for i in range(1, r + 1):
            out *= 1.0 - self.p * self.delay.cdf(i)
            if out == 0.0:
                break
        return out

    def pmf(self, r: int) -> float:
        """P(R = r) = p * P(delay <= r) * prod_{i<r}(1 - p * P(delay <= i))."""
        if r < 1:
            return 0.0
        return self.tail(r - 1) * self.p * self.delay.cdf(r)

    def domination_offset(self) -> int:
        """Offset r_p with Geom(1-p) <= R <= Geom(1-p) + r_p stochastically."""
        excess = self.delay.mean() - 1.0
        if excess <= 0.0:
            return 0
        return math.ceil(self.p * excess / abs((1.0 - self.p) * math.log1p(-self.p)))

    def mean(self) -> float:
        return self._mean_with_bound()[0]

    def _mean_with_bound(self) -> tuple[float, float]:
        """Sum of tails, truncated when the geometric envelope of the
        remaining mass drops below truncation_eps; returns (mean, bound).

        Once r clears the delay's support, the remaining tails are exactly
        geometric with ratio 1-p and are summed in closed form, so the
        reported bound is conservative.
        """
        p, eps = self.p, self.truncation_eps
        rp = self.domination_offset()
        smax = self.delay.support_max()
        total = 0.0
        tail = 1.0
        r = 0
        while True:
            if smax is not None and r >= smax:
                # exact geometric remainder: tails r+1, r+2, ... shrink by 1-p
                return total + tail * (1.0 + (1.0 - p) / p), 0.0
            total += tail
            r += 1
            tail *= 1.0 - p * self.delay.cdf(r)
            # remaining sum <= sum_{r' >= r} (1-p)^(r'-rp) = (1-p)^(r-rp)/p
            bound = (1.0 - p) ** max(r - rp, 0) / p
            if bound < eps or tail == 0.0:
                return total + tail, bound

    def j0(self) -> float:
        """E[p^R1]: probability a full service sees no adversarial step.

        Series sum_{r>=1} p^r * P(delay <= r) * prod_{i<r} P(delay > i); the
        terms are bounded by p^r, which drives the truncation.
        """
        p, eps = self.p, self.truncation_eps
        total = 0.0
        prod = 1.0  # prod_{i<r} P(delay > i)
        pr = p
        r = 1
        while True:
            total += pr * self.delay.cdf(r) * prod
            prod *= self.delay.ccdf(r)
            pr *= p
            r += 1
            if pr / (1.0 - p) < eps or prod == 0.0:
                return total

    def sample(self, rng: np.random.Generator, size=None):
        """Draw gaps by step-wise success with probability p * P(delay <= i)."""
        if size is None:
            return int(self._sample_block(rng, 1)[0])
        return self._sample_block(rng, int(np.prod(size))).reshape(size)

    def _sample_block(self, rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=np.int64)
        alive = np.arange(n)
        i = 0
        while alive.size:
            i += 1
            hit = rng.random(alive.size) < self.p * self.delay.cdf(i)
            out[alive[hit]] = i
            alive = alive[~hit]
            if i > 10_000_000:
                raise RuntimeError("renewal sampler failed to terminate")
        return out
