"""Synchronous price-process simulators: correlated GBM and jump-diffusion.

Drift and variance parameters are quoted per trading day and converted with
DAY_SECONDS; simulation runs on a regular grid in seconds. Both simulators
draw their Brownian increments from the same derived stream, so the
jump-diffusion with jump intensity zero reproduces the plain GBM path
bitwise under the same seed.
"""

from dataclasses import dataclass

import numpy as np

from . import seeding
from .errors import ParameterError
from .series import PricePath

# one trading day in seconds (20 hours), the unit the daily parameters refer to
DAY_SECONDS = 72000.0


def _n_steps(horizon: float, dt: float) -> int:
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if not horizon > 0:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    ratio = horizon / dt
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, abs(ratio)):
        raise ParameterError(
            f"horizon {horizon} is not a positive integer multiple of dt {dt}"
        )
    return n


def _check_diffusion(mu1, mu2, sigma_sq1, sigma_sq2, rho):
    if sigma_sq1 < 0 or sigma_sq2 < 0:
        raise ParameterError("variances must be non-negative")
    if not -1.0 <= rho <= 1.0:
        raise ParameterError(f"rho must lie in [-1, 1], got {rho}")
    if not (np.isfinite(mu1) and np.isfinite(mu2)):
        raise ParameterError("drifts must be finite")


@dataclass(frozen=True)
class GbmParams:
    """Correlated geometric Brownian motion, parameters per trading day.

    mu1, mu2 : daily drifts of the two assets
    sigma_sq1, sigma_sq2 : daily variances
    rho : instantaneous correlation of the driving Brownian motions
    dt : simulation grid step in seconds
    horizon : total time in seconds, a positive multiple of dt
    """

    mu1: float
    mu2: float
    sigma_sq1: float
    sigma_sq2: float
    rho: float
    dt: float = 1.0
    horizon: float = DAY_SECONDS

    def __post_init__(self):
        _check_diffusion(self.mu1, self.mu2, self.sigma_sq1, self.sigma_sq2, self.rho)
        _n_steps(self.horizon, self.dt)


@dataclass(frozen=True)
class MertonParams:
    """GBM plus compound-Poisson log-normal jumps.

    jump_rate : jump intensity per second, per asset (independent across assets)
    jump_mean : mean of the log jump size
    jump_std : standard deviation of the log jump size
    """

    mu1: float
    mu2: float
    sigma_sq1: float
    sigma_sq2: float
    rho: float
    jump_rate: float
    jump_mean: float = 0.0
    jump_std: float = 0.001
    dt: float = 1.0
    horizon: float = DAY_SECONDS

    def __post_init__(self):
        _check_diffusion(self.mu1, self.mu2, self.sigma_sq1, self.sigma_sq2, self.rho)
        if self.jump_rate < 0:
            raise ParameterError(f"jump_rate must be non-negative, got {self.jump_rate}")
        if self.jump_std < 0:
            raise ParameterError(f"jump_std must be non-negative, got {self.jump_std}")
        _n_steps(self.horizon, self.dt)


def _diffusion_increments(params, n: int, seed: int) -> np.ndarray:
    """Euler-Maruyama log-price increments for the correlated diffusion part."""
    rng = seeding.stream(seed, seeding.DIFFUSION)
    z = rng.standard_normal((n, 2))
    # lower-triangular square root of [[1, rho], [rho, 1]]
    rho = params.rho
    z2 = rho * z[:, 0] + np.sqrt(1.0 - rho * rho) * z[:, 1]
    z1 = z[:, 0]
    mu_s = np.array([params.mu1, params.mu2]) / DAY_SECONDS
    var_s = np.array([params.sigma_sq1, params.sigma_sq2]) / DAY_SECONDS
    sig_s = np.sqrt(var_s)
    drift = (mu_s - 0.5 * var_s) * params.dt
    vol = sig_s * np.sqrt(params.dt)
    out = np.empty((n, 2))
    out[:, 0] = drift[0] + vol[0] * z1
    out[:, 1] = drift[1] + vol[1] * z2
    return out


def _jump_increments(params: MertonParams, n: int, seed: int):
    """Per-step log-price jump sums and total jump counts per asset.

    A step with c jumps contributes N(c*jump_mean, c*jump_std^2), the exact
    law of the sum of c independent log jump sizes.
    """
    rng = seeding.stream(seed, seeding.JUMPS)
    counts = rng.poisson(params.jump_rate * params.dt, size=(n, 2))
    z = rng.standard_normal((n, 2))
    sums = params.jump_mean * counts + params.jump_std * np.sqrt(counts) * z
    return sums, counts.sum(axis=0)


def simulate_gbm(params: GbmParams, seed: int) -> PricePath:
    """Simulate the correlated GBM log-price pair on its grid.

    Log-prices start at zero; increments follow the Euler-Maruyama scheme
    (mu - sigma^2/2) dt + sigma dW with daily parameters rescaled to seconds.
    """
    n = _n_steps(params.horizon, params.dt)
    inc = _diffusion_increments(params, n, seed)
    values = np.vstack([np.zeros((1, 2)), np.cumsum(inc, axis=0)])
    return PricePath(t0=0.0, dt=params.dt, values=values)


def simulate_merton(params: MertonParams, seed: int) -> PricePath:
    """Simulate the jump-diffusion log-price pair on its grid.

    Jump arrivals are Poisson per step and independent across assets; each
    jump adds a log-normal log return at the step it occurs. Diffusion and
    jump draws come from separate streams of the same seed.
    """
    n = _n_steps(params.horizon, params.dt)
    inc = _diffusion_increments(params, n, seed)
    if params.jump_rate > 0:
        jumps, _ = _jump_increments(params, n, seed)
        inc = inc + jumps
    values = np.vstack([np.zeros((1, 2)), np.cumsum(inc, axis=0)])
    return PricePath(t0=0.0, dt=params.dt, values=values)
