"""Network-delay distributions on {1, 2, 3, ...}.

A DelaySpec is an immutable value describing the law of the per-block
propagation delay. All kinds have finite mean by construction: unit and
deterministic delays are point masses, empirical laws have finite support
(capped), and the geometric tail sums. Samplers take an explicit generator,
so specs are safely shareable across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError

EMPIRICAL_SUPPORT_CAP = 10_000


@dataclass(frozen=True)
class DelaySpec:
    kind: str
    d: int = 1
    a: float = 0.0
    pmf: tuple = field(default=())

    def __post_init__(self):
        if self.kind in ("unit", "deterministic"):
            if self.d < 1:
                raise ValueError(f"delay support starts at 1, got {self.d}")
        elif self.kind == "geometric":
            if not 0.0 < self.a <= 1.0:
                raise ValueError(f"geometric success probability must be in (0, 1], got {self.a}")
        elif self.kind == "empirical":
            vals = [v for v, _ in self.pmf]
            probs = [q for _, q in self.pmf]
            if not vals:
                raise ValueError("empirical pmf is empty")
            if any(v < 1 or v != int(v) for v in vals):
                raise ValueError("empirical support must be positive integers")
            if len(set(vals)) != len(vals):
                raise ValueError("empirical support has duplicate values")
            if max(vals) > EMPIRICAL_SUPPORT_CAP:
                raise ValueError(f"empirical support exceeds cap {EMPIRICAL_SUPPORT_CAP}")
            if any(not 0.0 <= q <= 1.0 for q in probs):
                raise ValueError("empirical probabilities must lie in [0, 1]")
            if abs(sum(probs) - 1.0) > 1e-12:
                raise ValueError(f"empirical pmf sums to {sum(probs)!r}, not 1")
        else:
            raise ValueError(f"unknown delay kind {self.kind!r}")

    # -- constructors -------------------------------------------------------

    @staticmethod
    def unit() -> "DelaySpec":
        return DelaySpec("unit", d=1)

    @staticmethod
    def deterministic(d: int) -> "DelaySpec":
        return DelaySpec("deterministic", d=int(d))

    @staticmethod
    def geometric(a: float) -> "DelaySpec":
        return DelaySpec("geometric", a=float(a))

    @staticmethod
    def empirical(pairs) -> "DelaySpec":
        norm = tuple(sorted((int(v), float(q)) for v, q in pairs))
        return DelaySpec("empirical", pmf=norm)

    # -- law ----------------------------------------------------------------

    def ccdf(self, i: int) -> float:
        """P(delay > i) for integer i >= 0."""
        if i < 1:
            return 1.0  # support starts at 1
        if self.kind in ("unit", "deterministic"):
            return 1.0 if i < self.d else 0.0
        if self.kind == "geometric":
            return (1.0 - self.a) ** i
        return min(1.0, float(sum(q for v, q in self.pmf if v > i)))

    def cdf(self, i: int) -> float:
        """P(delay <= i)."""
        return 1.0 - self.ccdf(i)

    def prob_one(self) -> float:
        """P(delay = 1), the zero-effective-delay mass."""
        return 1.0 - self.ccdf(1)

    def mean(self) -> float:
        if self.kind in ("unit", "deterministic"):
            return float(self.d)
        if self.kind == "geometric":
            return 1.0 / self.a
        return float(sum(v * q for v, q in self.pmf))

    def support_max(self) -> int | None:
        """Largest support point, or None for an unbounded (geometric) tail."""
        if self.kind in ("unit", "deterministic"):
            return self.d
        if self.kind == "geometric":
            return None
        return max(v for v, _ in self.pmf)

    def sample(self, rng: np.random.Generator, size=None):
        if self.kind in ("unit", "deterministic"):
            if size is None:
                return self.d
            return np.full(size, self.d, dtype=np.int64)
        if self.kind == "geometric":
            out = rng.geometric(self.a, size=size)
            return int(out) if size is None else out.astype(np.int64)
        vals = np.array([v for v, _ in self.pmf], dtype=np.int64)
        probs = np.array([q for _, q in self.pmf])
        probs = probs / probs.sum()
        out = rng.choice(vals, size=size, p=probs)
        return int(out) if size is None else out

    def label(self) -> str:
        if self.kind == "unit":
            return "unit"
        if self.kind == "deterministic":
            return f"det:{self.d}"
        if self.kind == "geometric":
            return f"geom:{self.a:g}"
        return "pmf:" + ",".join(f"{v}={q:g}" for v, q in self.pmf)


def parse_delay_spec(text: str) -> DelaySpec:
    """Parse the CLI delay syntax: unit | det:<d> | geom:<a> | pmf:<csv-path>."""
    text = text.strip()
    if text == "unit":
        return DelaySpec.unit()
    if text.startswith("det:"):
        return DelaySpec.deterministic(int(text[4:]))
    if text.startswith("geom:"):
        return DelaySpec.geometric(float(text[5:]))
    if text.startswith("pmf:"):
        return load_pmf_csv(text[4:])
    raise ValueError(f"cannot parse delay spec {text!r} "
                     "(expected unit, det:<d>, geom:<a>, or pmf:<path>)")


def load_pmf_csv(path: str) -> DelaySpec:
    """Read an empirical pmf from a CSV file with header `value,prob`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["value", "prob"]:
            raise SchemaError(f"{path}: expected header 'value,prob', got {reader.fieldnames}")
        pairs = [(int(row["value"]), float(row["prob"])) for row in reader]
    return DelaySpec.empirical(pairs)
