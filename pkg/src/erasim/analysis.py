"""Statistical post-processing of Monte Carlo results.

Effective-distance fits of ``p_L = A (b x)^d_eff`` on log-log axes,
threshold extraction from pairwise crossings, Wilson confidence
intervals, per-site placement correlations across random-placement
ensembles, transmon cost and chip yield, and scaling projections over a
grid of architectures.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from erasim.placement import ArchitectureSpec, erasure_budget, max_full_lines
from erasim.capacity import deff_lower_bound


@dataclass(frozen=True)
class DataPoint:
    """One Monte Carlo sample point of a logical-error-rate sweep."""

    d: int
    f_e: float
    strategy_tag: str
    p: float
    shots: int
    failures_x: int
    failures_z: int
    failures_combined: int

    def __post_init__(self):
        for f in (self.failures_x, self.failures_z, self.failures_combined):
            if not 0 <= f <= self.shots:
                raise ValueError("failures must lie in [0, shots]")

    def rate(self, basis: str) -> float:
        f = {
            "Z": self.failures_z,
            "X": self.failures_x,
            "combined": self.failures_combined,
        }[basis]
        return f / self.shots


@dataclass(frozen=True)
class FitResult:
    """Log-log line fit of p_L(p); A is gauge-fixed to 1."""

    A: float
    b: float
    d_eff: float
    residual: float
    points_used: int

    @property
    def intercept(self) -> float:
        return self.d_eff * math.log(self.b)

    def predict(self, p: float) -> float:
        return self.A * (self.b * p) ** self.d_eff


def fit_deff(points, basis: str = "Z") -> FitResult:
    """Least-squares log-log fit; slope is the effective distance.

    Points with zero failures are excluded with a warning (their log
    rate is undefined).  ``A`` and ``b`` are not separately identifiable
    from a line, so ``A = 1`` and ``b = exp(intercept / d_eff)``.
    """
    usable = [pt for pt in points if pt.rate(basis) > 0]
    dropped = len(points) - len(usable)
    if dropped:
        warnings.warn(f"excluded {dropped} zero-failure point(s) from fit")
    if len(usable) < 3:
        raise ValueError("need at least 3 points with nonzero failures")
    lx = np.log([pt.p for pt in usable])
    ly = np.log([pt.rate(basis) for pt in usable])
    coeffs, res, *_ = np.polyfit(lx, ly, 1, full=True)
    slope, intercept = float(coeffs[0]), float(coeffs[1])
    if slope <= 0:
        raise ValueError("fitted effective distance is non-positive")
    residual = float(res[0]) if len(res) else 0.0
    return FitResult(
        A=1.0,
        b=float(math.exp(intercept / slope)),
        d_eff=slope,
        residual=residual,
        points_used=len(usable),
    )


def estimate_threshold(fits) -> float:
    """Average pairwise crossing point of fitted log-log lines.

    Crossings falling outside (0, 0.5) are discarded; near-parallel
    pairs raise a degenerate-geometry error if no valid crossing
    remains.
    """
    fits = list(fits)
    if len(fits) < 2:
        raise ValueError("need fits for at least 2 distances")
    crossings = []
    for i in range(len(fits)):
        for j in range(i + 1, len(fits)):
            a, b = fits[i], fits[j]
            dslope = a.d_eff - b.d_eff
            if abs(dslope) < 1e-12:
                continue
            logp = (b.intercept - a.intercept) / dslope
            p = math.exp(logp)
            if 0.0 < p < 0.5:
                crossings.append(p)
    if not crossings:
        raise ValueError("no crossing in (0, 0.5): lines parallel or degenerate")
    return float(np.mean(crossings))


def coarse_threshold(points_by_d, basis: str = "Z") -> float:
    """Crossing of adjacent-distance raw curves by log-log interpolation.

    Used to select below-threshold points automatically before fitting.
    Returns the mean crossing over adjacent distance pairs, or +inf when
    the curves never cross (all points usable).
    """
    ds = sorted(points_by_d)
    crossings = []
    for d1, d2 in zip(ds, ds[1:]):
        c = _raw_crossing(points_by_d[d1], points_by_d[d2], basis)
        if c is not None:
            crossings.append(c)
    return float(np.mean(crossings)) if crossings else math.inf


def _raw_crossing(pts_a, pts_b, basis):
    pa = {pt.p: pt.rate(basis) for pt in pts_a if pt.rate(basis) > 0}
    pb = {pt.p: pt.rate(basis) for pt in pts_b if pt.rate(basis) > 0}
    common = sorted(set(pa) & set(pb))
    if len(common) < 2:
        return None
    diff = [math.log(pa[p]) - math.log(pb[p]) for p in common]
    for k in range(len(common) - 1):
        if diff[k] == 0:
            return common[k]
        if diff[k] * diff[k + 1] < 0:
            x1, x2 = math.log(common[k]), math.log(common[k + 1])
            t = diff[k] / (diff[k] - diff[k + 1])
            return math.exp(x1 + t * (x2 - x1))
    return None


def below_threshold_points(points, p_th_coarse: float):
    """Keep points with ``p <= 0.5 * p_th_coarse``."""
    return [pt for pt in points if pt.p <= 0.5 * p_th_coarse]


def wilson_interval(failures: int, shots: int, confidence: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if not 0 <= failures <= shots:
        raise ValueError("failures must lie in [0, shots]")
    from scipy.stats import norm

    z = norm.ppf(0.5 + confidence / 2.0)
    n = shots
    phat = failures / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    return max(0.0, center - half), min(1.0, center + half)


def transmon_cost(d: int, f_e: float) -> int:
    """Transmons for a d x d hybrid patch: erasure qubits cost triple."""
    n_e = erasure_budget(d, f_e)
    return d * d - n_e + 3 * n_e


def chip_yield(n_transmons: int, defect_rate: float) -> float:
    """Probability that all transmons on a chip are defect-free."""
    if not 0 <= defect_rate < 1:
        raise ValueError("defect_rate must lie in [0, 1)")
    if n_transmons < 0:
        raise ValueError("n_transmons must be >= 0")
    return (1.0 - defect_rate) ** n_transmons


@dataclass(frozen=True)
class CorrelationMap:
    """Per-site Pearson correlations of erasure presence with p_L."""

    d: int
    values: dict  # basis -> (d, d) float array (nan where degenerate)
    degenerate: np.ndarray  # (d, d) bool: no variance in site indicator


def placement_correlation(ensemble) -> CorrelationMap:
    """Correlate each site's erasure indicator with logical error rate.

    ``ensemble`` is a list of ``(ArchitectureSpec, rates)`` with
    ``rates`` a mapping with keys "Z", "X", "combined".  Sites whose
    indicator never varies across the ensemble are flagged degenerate
    and reported as NaN.
    """
    if len(ensemble) < 50:
        raise ValueError("need at least 50 placements for a correlation map")
    d = ensemble[0][0].d
    ind = np.zeros((len(ensemble), d, d))
    for i, (spec, _) in enumerate(ensemble):
        if spec.d != d:
            raise ValueError("mixed distances in ensemble")
        for r, c in spec.placement:
            ind[i, r, c] = 1.0
    degenerate = ind.std(axis=0) == 0
    values = {}
    for basis in ("Z", "X", "combined"):
        y = np.array([rates[basis] for _, rates in ensemble])
        out = np.full((d, d), np.nan)
        # ptp, not std: summation noise makes std of a constant ~1e-17.
        if np.ptp(y) > 0:
            yc = y - y.mean()
            for r in range(d):
                for c in range(d):
                    if degenerate[r, c]:
                        continue
                    xc = ind[:, r, c] - ind[:, r, c].mean()
                    out[r, c] = float(
                        (xc * yc).sum()
                        / math.sqrt((xc * xc).sum() * (yc * yc).sum())
                    )
        values[basis] = out
    return CorrelationMap(d=d, values=values, degenerate=degenerate)


@dataclass(frozen=True)
class ProjectionPoint:
    """Projected performance of one architecture at physical rate p."""

    d: int
    f_e: float
    cost: int
    p_l_upper_estimate: float  # repetition-like d_eff (optimistic, larger d_eff)
    p_l_lower_estimate: float  # from the closed-form d_eff lower bound


def scaling_projection(p: float, p_th, d_range, f_e_grid):
    """Project p_L = (p / p_th)^d_eff over an architecture grid.

    ``p_th`` is either a constant threshold or a callable ``(d, f_e) ->
    p_th``.  Each architecture gets two projections: an optimistic one
    using the repetition-like effective distance floor((d+k+1)/2) with k
    full erased lines, and a conservative one using the closed-form
    effective-distance lower bound.  Returns the list of points plus two
    query helpers built on it:

    - ``best_pl(budget)``: smallest projected p_L (per estimate) over
      architectures with cost <= budget.
    - ``min_cost(target_pl)``: minimum transmon count achieving p_L <=
      target (per estimate), or None.
    """
    points = []
    for d in d_range:
        for f_e in f_e_grid:
            th = p_th(d, f_e) if callable(p_th) else p_th
            ratio = p / th
            k = max_full_lines(d, erasure_budget(d, f_e))
            deff_rep = (d + k + 1) // 2
            deff_lo, _ = deff_lower_bound(d, f_e, p)
            points.append(
                ProjectionPoint(
                    d=d,
                    f_e=f_e,
                    cost=transmon_cost(d, f_e),
                    p_l_upper_estimate=min(1.0, ratio**deff_rep),
                    p_l_lower_estimate=min(1.0, ratio ** max(deff_lo, 1.0)),
                )
            )

    def best_pl(budget: int):
        avail = [pt for pt in points if pt.cost <= budget]
        if not avail:
            return None
        return (
            min(pt.p_l_upper_estimate for pt in avail),
            min(pt.p_l_lower_estimate for pt in avail),
        )

    def min_cost(target_pl: float):
        up = [pt.cost for pt in points if pt.p_l_upper_estimate <= target_pl]
        lo = [pt.cost for pt in points if pt.p_l_lower_estimate <= target_pl]
        return (min(up) if up else None, min(lo) if lo else None)

    return points, best_pl, min_cost
