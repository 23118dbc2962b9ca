"""Log-linear growth fits of simulated completion times."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .core import P2PError
from .stochastic import SCENARIOS, TrialStats, sweep


class DegenerateDesign(P2PError):
    pass


@dataclass(frozen=True)
class RegressionFit:
    intercept: float
    slope: float
    r_squared: float
    n_points: int
    residual_se: float

    def describe(self) -> str:
        return f"{self.intercept:.4f} + {self.slope:.4f} * log2(N)  (R^2 = {self.r_squared:.4f})"


def fit_loglinear(points) -> RegressionFit:
    """Ordinary least squares of y on log2(N) for (N, y) pairs."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise DegenerateDesign("need at least two points")
    x = np.log2(pts[:, 0])
    y = pts[:, 1]
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise DegenerateDesign("all N values are equal")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    sse = float(resid @ resid)
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if sst == 0 else max(0.0, 1.0 - sse / sst)
    dof = len(y) - 2
    rse = float(np.sqrt(sse / dof)) if dof > 0 else 0.0
    return RegressionFit(intercept, slope, r2, len(y), rse)


def points_from_stats(stats: list[TrialStats], per_part: bool = False):
    """Every individual run as an (N, y) pair; y is rounds or rounds / M."""
    for st in stats:
        scale = st.n_parts if per_part else 1
        for s in st.samples:
            yield st.n_peers, s / scale


@dataclass
class ExperimentSpec:
    scenarios: list[str]
    n_values: list[int]
    m_values: list[int]
    replications: int
    seed: int
    csv_path: str | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.scenarios or not self.n_values or not self.m_values:
            raise ValueError("grids must be nonempty")
        if any(s not in SCENARIOS for s in self.scenarios):
            raise ValueError(f"scenarios must be among {SCENARIOS}")
        if self.replications < 2:
            raise ValueError("need at least two replications for variance estimates")


@dataclass(frozen=True)
class GrowthRow:
    m: int
    fit: RegressionFit

    @property
    def centralized_slope(self) -> float:
        return 1.0 / self.m


GROWTH_HEADER = ["m", "intercept", "slope", "r_squared", "n_points", "centralized_slope"]


def growth_report(scenario: str, m_values, n_values, replications: int, seed: int) -> list[GrowthRow]:
    """One fit per M of completion time (rounds / M) against log2 N.

    Time is measured in file-transfer units, a round lasting 1/M, so the
    centralized optimum M + floor(log2 N) rounds has slope exactly 1/M.
    """
    rows = []
    for m in m_values:
        stats = sweep(n_values, [m], [scenario], replications, seed)
        rows.append(GrowthRow(m, fit_loglinear(points_from_stats(stats, per_part=True))))
    return rows


def growth_csv(rows: list[GrowthRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GROWTH_HEADER)
    for r in rows:
        f = r.fit
        w.writerow([r.m, f"{f.intercept:.6f}", f"{f.slope:.6f}", f"{f.r_squared:.6f}",
                    f.n_points, f"{r.centralized_slope:.6f}"])
    return buf.getvalue()
