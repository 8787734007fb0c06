"""Figure jobs over consensus-clock output files.

Three kinds are supported, each consuming the documented file schemas only:

* mean_vs_p       -- ensemble summary JSONs -> mean time to consensus vs p.
* exceed_vs_p     -- ensemble summary JSONs -> exceedance fraction vs p.
* tail_with_slope -- tail CSV (t_minutes,log_survival) -> log tail with an
                     overlay line of the given analytic slope anchored at the
                     first plotted point (only the slope is theoretical; the
                     intercept is taken from the data).

Rendering is deterministic: a fixed style, a fixed PNG metadata block, and
no timestamps, so re-running on identical inputs is byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

KINDS = ("mean_vs_p", "exceed_vs_p", "tail_with_slope")

SUMMARY_KEYS = ("p", "mean", "stderr", "exceed_frac", "n")
TAIL_HEADER = ["t_minutes", "log_survival"]

_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "consensus-figures",
}
_METADATA = {"Software": "consensus-figures"}


class SchemaMismatch(Exception):
    """An input file does not match the documented schema."""


@dataclass(frozen=True)
class FigureJob:
    kind: str
    inputs: tuple
    out: Path
    slope: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        missing = [str(p) for p in self.inputs if not Path(p).exists()]
        if missing:
            raise SchemaMismatch(f"missing input files: {', '.join(missing)}")


def load_summaries(paths) -> list[dict]:
    rows = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        for key in SUMMARY_KEYS:
            if key not in doc:
                raise SchemaMismatch(f"{path}: summary JSON lacks key {key!r}")
        rows.append(doc)
    rows.sort(key=lambda d: d["p"])
    return rows


def load_tail(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TAIL_HEADER:
            offending = header[0] if header else "<empty>"
            raise SchemaMismatch(
                f"{path}: expected columns {TAIL_HEADER}, found {header} "
                f"(first offending column: {offending!r})")
        pairs = [(float(t), float(y)) for t, y in reader]
    if not pairs:
        raise SchemaMismatch(f"{path}: tail CSV has no rows")
    arr = np.array(pairs)
    return arr[:, 0], arr[:, 1]


def crossing(ps: np.ndarray, values: np.ndarray, level: float) -> float:
    """p at which the piecewise-linear curve crosses `level` (first fall)."""
    for i in range(len(ps) - 1):
        a, b = values[i], values[i + 1]
        if (a - level) * (b - level) <= 0 and a != b:
            return float(ps[i] + (level - a) * (ps[i + 1] - ps[i]) / (b - a))
    raise ValueError(f"curve never crosses {level}")


def render(job: FigureJob) -> Path:
    """Render the job to its PNG path and return the path."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        if job.kind == "mean_vs_p":
            rows = load_summaries(job.inputs)
            ps = np.array([r["p"] for r in rows])
            means = np.array([r["mean"] for r in rows])
            errs = np.array([r["stderr"] for r in rows])
            ax.errorbar(ps, means, yerr=3 * errs, fmt="o-", ms=3, lw=1,
                        capsize=2, label="ensemble mean")
            ax.axhline(60.0, color="tab:red", lw=1, ls="--", label="60 min")
            ax.set_xlabel("honest step probability p")
            ax.set_ylabel("mean time to consensus (min)")
            ax.legend()
        elif job.kind == "exceed_vs_p":
            rows = load_summaries(job.inputs)
            ps = np.array([r["p"] for r in rows])
            fracs = np.array([r["exceed_frac"] for r in rows])
            ax.plot(ps, fracs, "o-", ms=3, lw=1, label="P(ttc > threshold)")
            ax.axhline(0.10, color="tab:orange", lw=1, ls="--", label="10%")
            ax.axhline(0.05, color="tab:red", lw=1, ls="--", label="5%")
            ax.set_xlabel("honest step probability p")
            ax.set_ylabel("exceedance fraction")
            ax.legend()
        elif job.kind == "tail_with_slope":
            ts, logs = load_tail(job.inputs[0])
            ax.plot(ts, logs, "-", lw=1.5, label="empirical log tail")
            if job.slope is not None:
                ax.plot(ts, logs[0] + job.slope * (ts - ts[0]), "--", lw=1.5,
                        color="tab:orange", label="analytic rate")
            ax.set_xlabel("t (minutes)")
            ax.set_ylabel("log P(ttc > t)")
            ax.legend()
        out = Path(job.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, format="png", metadata=dict(_METADATA))
        plt.close(fig)
    return out
