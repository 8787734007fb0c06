"""Bracketed root finding used by the threshold and pole solvers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import BracketError


@dataclass(frozen=True)
class BisectionResult:
    root: float
    iterations: int
    residual: float


def bisect_root(f: Callable[[float], float], lo: float, hi: float,
                tol: float = 1e-12, max_iter: int = 200) -> BisectionResult:
    """Bisection for a sign change of f on [lo, hi].

    `tol` bounds the final interval width (tolerance on the independent
    variable). Raises BracketError when f(lo) and f(hi) share a sign.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return BisectionResult(lo, 0, 0.0)
    if fhi == 0.0:
        return BisectionResult(hi, 0, 0.0)
    if (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo:.3e}, {fhi:.3e}")
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        it += 1
        if fmid == 0.0:
            lo = hi = mid
            break
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    root = 0.5 * (lo + hi)
    return BisectionResult(root, it, f(root))
