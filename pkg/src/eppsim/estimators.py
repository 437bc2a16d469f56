"""Correlation estimators and corrections across sampling time scales.

The measured (realised-covariance) correlation on a previous-tick grid
shrinks as the grid step falls because asynchronous observation windows
stop overlapping. Three responses are implemented: the overlap correction
(rescale by the measured overlap expectations of the two assets'
previous-tick windows), the flat-trade correction (rescale by the
probability of zero grid returns), and the Hayashi-Yoshida estimator
(sum return products over genuinely overlapping tick intervals, no grid).
The analytic correlation-vs-scale curve under Poisson sampling closes the
loop for the simulation experiments.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSeriesError,
    InsufficientDataError,
    NoOverlapError,
    ParameterError,
    SaturationError,
)
from .series import ArrivalSet, GridSeries, TickSeries


@dataclass(frozen=True)
class CorrelationEstimate:
    """A correlation estimate with its provenance.

    dt is the grid step the estimate was formed at; None for estimators
    that do not synchronise onto a grid.
    """

    rho: float
    method: str
    dt: float | None = None
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OverlapStats:
    """Average previous-tick window lengths and their pairwise overlap.

    kappa_ii, kappa_jj : mean length of [gamma(t-dt), gamma(t)] per asset
    kappa_ij : mean length of the intersection of the two windows
    n_windows : number of grid windows averaged over
    """

    kappa_ii: float
    kappa_jj: float
    kappa_ij: float
    n_windows: int
    dt: float


def realised_covariance(gi: GridSeries, gj: GridSeries) -> float:
    """Sum of products of grid returns over h = 1..floor(T/dt)."""
    if len(gi) != len(gj):
        raise ParameterError(
            f"grid series lengths differ: {len(gi)} vs {len(gj)}"
        )
    if abs(gi.dt - gj.dt) > 1e-12 * max(gi.dt, gj.dt):
        raise ParameterError(f"grid steps differ: {gi.dt} vs {gj.dt}")
    if len(gi) < 2:
        raise DegenerateSeriesError("need at least two grid points")
    return float(np.sum(gi.returns() * gj.returns()))


def measured_correlation(gi: GridSeries, gj: GridSeries) -> CorrelationEstimate:
    """Realised-covariance correlation on a common grid."""
    cov = realised_covariance(gi, gj)
    var_i = realised_covariance(gi, gi)
    var_j = realised_covariance(gj, gj)
    if var_i <= 0:
        raise DegenerateSeriesError("realised variance of leg i is zero", leg="i")
    if var_j <= 0:
        raise DegenerateSeriesError("realised variance of leg j is zero", leg="j")
    rho = cov / math.sqrt(var_i * var_j)
    return CorrelationEstimate(
        rho=rho,
        method="measured",
        dt=gi.dt,
        diagnostics={"cov": cov, "var_i": var_i, "var_j": var_j},
    )


def hayashi_yoshida(si: TickSeries, sj: TickSeries) -> CorrelationEstimate:
    """Correlation from return products over overlapping tick intervals.

    Returns are taken over the half-open intervals (t_{l-1}, t_l] of each
    series; a product contributes iff the intervals intersect, so a shared
    endpoint does not count as overlap. The own-variance legs reduce to
    plain sums of squared returns because a series' own intervals are
    disjoint. The double sum is evaluated by a two-cursor sweep: for each
    interval of leg i, the range of overlapping leg-j intervals is located
    by bisection and their return sum read off a prefix-sum table.
    """
    if len(si) < 2 or len(sj) < 2:
        raise DegenerateSeriesError("each leg needs at least two observations")
    di = np.diff(si.values)
    dj = np.diff(sj.values)
    var_i = float(np.sum(di * di))
    var_j = float(np.sum(dj * dj))
    if var_i <= 0:
        raise DegenerateSeriesError("leg i has zero realised variance", leg="i")
    if var_j <= 0:
        raise DegenerateSeriesError("leg j has zero realised variance", leg="j")
    # j-interval k = (starts[k], ends[k]] overlaps i-interval (a, b] iff
    # ends[k] > a and starts[k] < b; both bounds are monotone in k
    k_lo = np.searchsorted(sj.times[1:], si.times[:-1], side="right")
    k_hi = np.searchsorted(sj.times[:-1], si.times[1:], side="left")
    pref = np.concatenate([[0.0], np.cumsum(dj)])
    cov = float(np.sum(di * (pref[k_hi] - pref[k_lo])))
    rho = cov / math.sqrt(var_i * var_j)
    return CorrelationEstimate(
        rho=rho,
        method="hy",
        dt=None,
        diagnostics={
            "cov": cov,
            "var_i": var_i,
            "var_j": var_j,
            "n_i": len(si),
            "n_j": len(sj),
        },
    )


def overlap_expectation(
    ui: ArrivalSet,
    uj: ArrivalSet,
    dt: float,
    horizon: float,
    stride: float | None = None,
) -> OverlapStats:
    """Estimate the previous-tick window expectations on the grid.

    For each evaluation time t (grid-aligned t = h*dt by default, or an
    arbitrary finer stride) the windows [gamma(t-dt), gamma(t)] of both
    assets are formed from the last arrival at or before each endpoint,
    and the own lengths and intersection length are averaged. Windows
    beginning before both assets have an observation are excluded.
    """
    if len(ui) == 0 or len(uj) == 0:
        raise DegenerateSeriesError("overlap expectation needs non-empty arrivals")
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if stride is None:
        stride = dt
    if not 0 < stride <= horizon:
        raise ParameterError(f"stride must lie in (0, horizon], got {stride}")
    n_eval = int(math.floor((horizon - dt) / stride + 1e-9))
    t_eval = dt + stride * np.arange(n_eval + 1)
    first_common = max(ui.times[0], uj.times[0])
    t_eval = t_eval[t_eval - dt >= first_common]
    if t_eval.size == 0:
        raise InsufficientDataError(
            "no evaluation windows start after both assets' first observations"
        )
    gi_hi = ui.times[np.searchsorted(ui.times, t_eval, side="right") - 1]
    gi_lo = ui.times[np.searchsorted(ui.times, t_eval - dt, side="right") - 1]
    gj_hi = uj.times[np.searchsorted(uj.times, t_eval, side="right") - 1]
    gj_lo = uj.times[np.searchsorted(uj.times, t_eval - dt, side="right") - 1]
    cross = np.minimum(gi_hi, gj_hi) - np.maximum(gi_lo, gj_lo)
    return OverlapStats(
        kappa_ii=float(np.mean(gi_hi - gi_lo)),
        kappa_jj=float(np.mean(gj_hi - gj_lo)),
        kappa_ij=float(np.mean(np.maximum(cross, 0.0))),
        n_windows=int(t_eval.size),
        dt=dt,
    )


def overlap_correction(rho_measured: float, stats: OverlapStats) -> CorrelationEstimate:
    """Rescale a measured correlation by its window-overlap expectations.

    rho = rho_measured * sqrt(kappa_ii * kappa_jj) / kappa_ij. A zero
    cross-overlap (or a degenerate own window) leaves nothing to rescale.
    """
    if stats.kappa_ij <= 0:
        raise NoOverlapError("window overlap expectation is zero")
    if stats.kappa_ii <= 0 or stats.kappa_jj <= 0:
        raise NoOverlapError("own window expectation is zero")
    factor = math.sqrt(stats.kappa_ii * stats.kappa_jj) / stats.kappa_ij
    return CorrelationEstimate(
        rho=rho_measured * factor,
        method="overlap",
        dt=stats.dt,
        diagnostics={
            "kappa_ii": stats.kappa_ii,
            "kappa_jj": stats.kappa_jj,
            "kappa_ij": stats.kappa_ij,
            "factor": factor,
            "n_windows": stats.n_windows,
        },
    )


def flat_trade_probability(g: GridSeries) -> float:
    """Fraction of exactly-zero grid returns."""
    r = g.returns()
    if r.size == 0:
        raise DegenerateSeriesError("need at least one grid return")
    return float(np.mean(r == 0.0))


def flat_trade_correction(
    rho_measured: float, p_i: float, p_j: float, dt: float | None = None
) -> CorrelationEstimate:
    """Rescale a measured correlation by the flat-trading probabilities.

    rho = rho_measured * (1 - p_i p_j) / ((1 - p_i)(1 - p_j)). The factor
    is >= 1 and the correction can push estimates outside [-1, 1]; that is
    a property of the correction, not clipped here.
    """
    for name, p in (("p_i", p_i), ("p_j", p_j)):
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"{name} must lie in [0, 1], got {p}")
    if p_i == 1.0 or p_j == 1.0:
        raise SaturationError("flat-trade probability of 1 cannot be corrected")
    factor = (1.0 - p_i * p_j) / ((1.0 - p_i) * (1.0 - p_j))
    return CorrelationEstimate(
        rho=rho_measured * factor,
        method="flat_trade",
        dt=dt,
        diagnostics={"p_i": p_i, "p_j": p_j, "factor": factor},
    )


def theoretical_poisson_epps(c: float, rate: float, dt: float) -> float:
    """Expected measured correlation under independent Poisson sampling.

    c * (1 + (exp(-rate*dt) - 1)/(rate*dt)) for an underlying correlation c;
    evaluated with expm1 so the small-(rate*dt) limit c*rate*dt/2 comes out
    without cancellation.
    """
    if not rate > 0:
        raise ParameterError(f"rate must be positive, got {rate}")
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if not -1.0 <= c <= 1.0:
        raise ParameterError(f"c must lie in [-1, 1], got {c}")
    x = rate * dt
    return c * (1.0 + math.expm1(-x) / x)
