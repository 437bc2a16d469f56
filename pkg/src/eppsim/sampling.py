"""Asynchronous observation schemes and previous-tick synchronisation.

Arrival processes (homogeneous Poisson or mutually exciting Hawkes) pick
the observation times of each asset; observe_path reads the latent path at
those times; previous_tick_grid synchronises a tick series back onto a
regular grid by carrying the last observed value forward; k_skip thins a
series to every k-th observation.
"""

import math
from dataclasses import replace

import numpy as np

from . import seeding
from .errors import DegenerateSeriesError, OutOfRangeError, ParameterError
from .hawkes import HawkesSpec, simulate_hawkes
from .series import ArrivalSet, GridSeries, PricePath, TickSeries


def grid_count(horizon: float, dt: float) -> int:
    """floor(horizon/dt) with a tolerance absorbing float division error."""
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if not horizon >= 0:
        raise ParameterError(f"horizon must be non-negative, got {horizon}")
    return int(math.floor(horizon / dt + 1e-9))


def poisson_arrivals(rate: float, horizon: float, seed: int) -> ArrivalSet:
    """Homogeneous Poisson arrival times on [0, horizon].

    Draws exponential gaps in deterministic blocks until the horizon is
    crossed, so the output depends only on (seed, stream id).
    """
    if rate < 0 or not np.isfinite(rate):
        raise ParameterError(f"rate must be finite and >= 0, got {rate}")
    if not horizon >= 0:
        raise ParameterError(f"horizon must be non-negative, got {horizon}")
    if rate == 0 or horizon == 0:
        return ArrivalSet(times=np.empty(0), horizon=horizon)
    rng = seeding.stream(seed, seeding.POISSON)
    expected = rate * horizon
    block = max(16, int(expected + 5.0 * math.sqrt(expected)))
    gaps = rng.exponential(1.0 / rate, size=block)
    total = np.cumsum(gaps)
    while total[-1] <= horizon:
        gaps = rng.exponential(1.0 / rate, size=block)
        total = np.append(total, total[-1] + np.cumsum(gaps))
    return ArrivalSet(times=total[total <= horizon], horizon=horizon)


def mutual_excitation_spec(baseline: float, amplitude: float, decay: float) -> HawkesSpec:
    """Two-component Hawkes kernel with zero diagonal: each component's
    events excite only the other component."""
    return HawkesSpec(
        lambda0=np.array([baseline, baseline]),
        alpha=np.array([[0.0, amplitude], [amplitude, 0.0]]),
        beta=np.full((2, 2), decay),
    )


def hawkes_arrivals(
    spec: HawkesSpec, horizon: float, seed: int
) -> tuple[ArrivalSet, ArrivalSet]:
    """Paired arrival times from a 2-dim mutually exciting kernel."""
    if spec.dim != 2:
        raise ParameterError(f"sampling spec must be 2-dimensional, got {spec.dim}")
    a, b = simulate_hawkes(spec, horizon, seed)
    return a, b


def observe_path(path: PricePath, arrivals: ArrivalSet, asset: int) -> TickSeries:
    """Read one asset of the latent path at the arrival times.

    The value at arrival t is the path value at the greatest grid point <= t.
    Arrivals outside [t0, horizon] of the path are refused.
    """
    if asset not in (0, 1):
        raise ParameterError(f"asset must be 0 or 1, got {asset}")
    t = arrivals.times
    if t.size:
        if t[0] < path.t0 or t[-1] > path.horizon:
            raise OutOfRangeError(
                f"arrivals span [{t[0]}, {t[-1]}] outside the path domain "
                f"[{path.t0}, {path.horizon}]"
            )
    idx = np.searchsorted(path.times(), t, side="right") - 1
    return TickSeries(
        times=t, values=path.values[idx, asset], horizon=arrivals.horizon
    )


def previous_tick_grid(ticks: TickSeries, dt: float, horizon: float) -> GridSeries:
    """Synchronise a tick series onto the grid h*dt, h = 0..floor(T/dt).

    Each grid point takes the last tick value at or before it; grid points
    before the first tick are backfilled with the first tick value (they
    produce leading zero returns, the flat-trading convention).
    """
    if len(ticks) == 0:
        raise DegenerateSeriesError("cannot synchronise an empty tick series")
    n = grid_count(horizon, dt)
    grid_t = dt * np.arange(n + 1)
    idx = np.searchsorted(ticks.times, grid_t, side="right") - 1
    idx = np.maximum(idx, 0)
    return GridSeries(dt=dt, values=ticks.values[idx])


def synchronous_ticks(path: PricePath, asset: int) -> TickSeries:
    """One asset of the path viewed as a (dense, synchronous) tick series."""
    if asset not in (0, 1):
        raise ParameterError(f"asset must be 0 or 1, got {asset}")
    return TickSeries(
        times=path.times(), values=path.values[:, asset], horizon=path.horizon
    )


def k_skip(obj, k: int):
    """Every k-th observation (1-based positions k, 2k, ...) of an arrival
    set or tick series; the result keeps floor(n/k) elements."""
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k!r}")
    if isinstance(obj, ArrivalSet):
        return ArrivalSet(times=obj.times[k - 1 :: k], horizon=obj.horizon)
    if isinstance(obj, TickSeries):
        return replace(obj, times=obj.times[k - 1 :: k], values=obj.values[k - 1 :: k])
    raise ParameterError(f"k_skip expects an ArrivalSet or TickSeries, got {type(obj).__name__}")
