"""Multivariate Hawkes processes with exponential kernels.

Covers the generic M-variate engine (intensities, branching matrix,
stability classification, thinning simulation) and the 4-component
event-driven price model built on top of it: two assets whose log-prices
are differences of counting processes, coupled by a self-reversion kernel
within each asset and a cross-excitation kernel between assets. The
analytic covariance of that model over an interval, its correlation curve
and the large-interval limit are provided in closed form.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import seeding
from .errors import DomainError, NumericError, ParameterError, StabilityError
from .series import ArrivalSet, PricePath

STABILITY_TOL = 1e-9


@dataclass(frozen=True)
class HawkesSpec:
    """Exponential-kernel Hawkes process specification.

    lambda0 : baseline intensities, shape (M,)
    alpha : excitation amplitudes, shape (M, M); alpha[m, n] is the jump in
        component m's intensity caused by an event of component n
    beta : decay rates, shape (M, M); must be positive wherever alpha > 0
    """

    lambda0: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)

    def __post_init__(self):
        lam0 = np.atleast_1d(np.asarray(self.lambda0, dtype=np.float64))
        alpha = np.asarray(self.alpha, dtype=np.float64)
        beta = np.asarray(self.beta, dtype=np.float64)
        m = lam0.size
        if lam0.ndim != 1:
            raise ParameterError("lambda0 must be one-dimensional")
        if alpha.shape != (m, m) or beta.shape != (m, m):
            raise ParameterError(
                f"alpha and beta must have shape ({m}, {m}), got "
                f"{alpha.shape} and {beta.shape}"
            )
        if not np.all(np.isfinite(lam0)) or np.any(lam0 < 0):
            raise ParameterError("baseline intensities must be finite and >= 0")
        if not np.all(np.isfinite(alpha)) or np.any(alpha < 0):
            raise ParameterError("excitation amplitudes must be finite and >= 0")
        if not np.all(np.isfinite(beta)) or np.any(beta < 0):
            raise ParameterError("decay rates must be finite and >= 0")
        if np.any((alpha > 0) & (beta <= 0)):
            raise ParameterError("beta must be positive wherever alpha > 0")
        object.__setattr__(self, "lambda0", lam0)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def dim(self) -> int:
        return self.lambda0.size


def branching_matrix(spec: HawkesSpec) -> np.ndarray:
    """Expected offspring counts alpha/beta, with 0/0 read as 0."""
    out = np.zeros_like(spec.alpha)
    mask = spec.alpha > 0
    out[mask] = spec.alpha[mask] / spec.beta[mask]
    return out


@dataclass(frozen=True)
class StabilityReport:
    classification: str  # stationary | quasi_stationary | non_stationary
    spectral_radius: float


def classify_stability(spec: HawkesSpec, tol: float = STABILITY_TOL) -> StabilityReport:
    """Classify the kernel by the spectral radius of its branching matrix."""
    gamma = branching_matrix(spec)
    try:
        radius = float(np.max(np.abs(np.linalg.eigvals(gamma))))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue computation failed: {exc}") from exc
    if abs(radius - 1.0) <= tol:
        kind = "quasi_stationary"
    elif radius < 1.0:
        kind = "stationary"
    else:
        kind = "non_stationary"
    return StabilityReport(classification=kind, spectral_radius=radius)


def intensity_at(spec: HawkesSpec, history, t: float) -> np.ndarray:
    """Conditional intensities at time t given events strictly before t.

    Uses the per-pair decayed-state recursion over each source component's
    events instead of a full history scan: along events s_1 < ... < s_k the
    accumulator E_j = 1 + E_{j-1} * exp(-beta (s_j - s_{j-1})) carries the
    whole excitation sum, and the pair contributes
    alpha * E_k * exp(-beta (t - s_k)).
    """
    m_dim = spec.dim
    if len(history) != m_dim:
        raise ParameterError(f"history must have {m_dim} components")
    lam = spec.lambda0.copy()
    for n in range(m_dim):
        times = history[n].times if isinstance(history[n], ArrivalSet) else np.asarray(history[n], dtype=float)
        times = times[times < t]
        if times.size == 0:
            continue
        gaps = np.diff(times)
        tail = t - times[-1]
        for m in range(m_dim):
            a = spec.alpha[m, n]
            if a == 0.0:
                continue
            b = spec.beta[m, n]
            acc = 1.0
            for g in gaps:
                acc = 1.0 + acc * math.exp(-b * g)
            lam[m] += a * acc * math.exp(-b * tail)
    return lam


def simulate_hawkes(
    spec: HawkesSpec,
    horizon: float,
    seed: int,
    allow_unstable: bool = False,
) -> tuple[ArrivalSet, ...]:
    """Simulate the process on [0, horizon] by thinning.

    The candidate wait is exponential at the current total intensity I(t);
    the mark u ~ U[0, I(t)] accepts the candidate iff u <= I(t + tau) and
    attributes it to the component whose cumulative intensity bracket
    contains u. The excitation state decays across rejected candidates too.

    Non-stationary kernels are refused unless allow_unstable is set.
    """
    if not horizon >= 0:
        raise ParameterError(f"horizon must be non-negative, got {horizon}")
    report = classify_stability(spec)
    if report.classification != "stationary" and not allow_unstable:
        raise StabilityError(
            f"kernel is {report.classification} "
            f"(spectral radius {report.spectral_radius:.6f}); "
            "pass allow_unstable=True to simulate anyway"
        )
    rng = seeding.stream(seed, seeding.HAWKES)
    m_dim = spec.dim
    alpha = spec.alpha
    beta = spec.beta
    lam0 = spec.lambda0
    # S[m, n]: excitation of component m from past events of component n,
    # decayed to the current time
    state = np.zeros((m_dim, m_dim))
    events: list[list[float]] = [[] for _ in range(m_dim)]
    t = 0.0
    while True:
        total = float(lam0.sum() + state.sum())
        if total <= 0.0:
            break
        tau = rng.exponential(1.0 / total)
        u = rng.uniform(0.0, total)
        t_cand = t + tau
        if t_cand > horizon:
            break
        state *= np.exp(-beta * tau)
        t = t_cand
        cum = np.cumsum(lam0 + state.sum(axis=1))
        if u <= cum[-1]:
            i = int(np.searchsorted(cum, u, side="left"))
            events[i].append(t)
            state[:, i] += alpha[:, i]
    return tuple(
        ArrivalSet(times=np.asarray(ev, dtype=np.float64), horizon=horizon)
        for ev in events
    )


# ---------------------------------------------------------------------------
# event-driven price model: X1 = x0_1 + N1 - N2, X2 = x0_2 + N3 - N4


@dataclass(frozen=True)
class HawkesPriceParams:
    """Parameters of the 4-component mutually exciting price model.

    mu : common baseline intensity of the four counting components
    alpha_r : self-reversion amplitude (up-tick excites the same asset's
        down-tick component and vice versa)
    alpha_c : cross-asset amplitude (up-tick excites the other asset's
        up-tick component, down-tick its down-tick component)
    beta : common decay rate of both kernels
    x0 : initial log-prices of the two assets
    """

    mu: float
    alpha_r: float
    alpha_c: float
    beta: float
    x0: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.mu < 0 or not np.isfinite(self.mu):
            raise ParameterError(f"mu must be finite and >= 0, got {self.mu}")
        if self.alpha_r < 0 or self.alpha_c < 0:
            raise ParameterError("excitation amplitudes must be >= 0")
        if not self.beta > 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")

    @property
    def gamma_r(self) -> float:
        return self.alpha_r / self.beta

    @property
    def gamma_c(self) -> float:
        return self.alpha_c / self.beta


def price_spec(params: HawkesPriceParams) -> HawkesSpec:
    """4-dim HawkesSpec of the price model.

    Components are (asset1 up, asset1 down, asset2 up, asset2 down); the
    reversion amplitude couples the up/down pair within each asset, the
    cross amplitude couples same-direction components across assets.
    """
    r, c = params.alpha_r, params.alpha_c
    alpha = np.array(
        [
            [0.0, r, c, 0.0],
            [r, 0.0, 0.0, c],
            [c, 0.0, 0.0, r],
            [0.0, c, r, 0.0],
        ]
    )
    beta = np.full((4, 4), params.beta)
    lam0 = np.full(4, params.mu)
    return HawkesSpec(lambda0=lam0, alpha=alpha, beta=beta)


def hawkes_price_model(
    params: HawkesPriceParams,
    horizon: float,
    seed: int,
    grid_dt: float = 1.0,
) -> tuple[PricePath, tuple[ArrivalSet, ...]]:
    """Simulate the price model and extract the log-price pair on a grid.

    The grid value at k*grid_dt counts events up to and including k*grid_dt
    (the counting processes are right-continuous and an event landing
    exactly on a grid point belongs to that grid point).
    """
    if not grid_dt > 0:
        raise ParameterError(f"grid_dt must be positive, got {grid_dt}")
    arrivals = simulate_hawkes(price_spec(params), horizon, seed)
    n = int(math.floor(horizon / grid_dt + 1e-9))
    grid = grid_dt * np.arange(n + 1)
    counts = [
        np.searchsorted(a.times, grid, side="right").astype(np.float64)
        for a in arrivals
    ]
    values = np.empty((n + 1, 2))
    values[:, 0] = params.x0[0] + counts[0] - counts[1]
    values[:, 1] = params.x0[1] + counts[2] - counts[3]
    return PricePath(t0=0.0, dt=grid_dt, values=values), arrivals


# ---------------------------------------------------------------------------
# analytic second-order structure of the price model


@dataclass(frozen=True)
class CovarianceCoefficients:
    """Auxiliary constants of the closed-form covariance of the price model.

    rate : stationary event rate of each of the four components
    scale : common prefactor of all non-Poisson terms
    w_sum, w_diff : weights of the sum / difference relaxation channels
    q_own, q_cross : own- and cross-asset weights of the slow channel
        (q_cross is exposed for completeness; the printed covariance
        expressions do not consume it)
    decay_sum, decay_diff : relaxation rates of the two channels
    """

    rate: float
    scale: float
    w_sum: float
    w_diff: float
    q_own: float
    q_cross: float
    decay_sum: float
    decay_diff: float


def covariance_coefficients(params: HawkesPriceParams) -> CovarianceCoefficients:
    g_r, g_c = params.gamma_r, params.gamma_c
    mu, beta = params.mu, params.beta
    den_rate = 1.0 - g_r - g_c
    den_diff = 1.0 + g_r - g_c
    den_q = ((g_r + 1.0) ** 2 - g_c**2) * den_rate
    for name, den in (("1-g_r-g_c", den_rate), ("1+g_r-g_c", den_diff), ("q", den_q)):
        if abs(den) < 1e-12:
            raise DomainError(f"covariance coefficients degenerate: {name} ~ 0")
    return CovarianceCoefficients(
        rate=mu / den_rate,
        scale=beta * mu / (g_r + g_c - 1.0),
        w_sum=(2.0 + g_r + g_c) * (g_r + g_c) / (1.0 + g_r + g_c),
        w_diff=(2.0 + g_r - g_c) * (g_r - g_c) / den_diff,
        q_own=-mu * (g_r**2 + g_r - g_c**2) / den_q,
        q_cross=-mu * g_c / den_q,
        decay_sum=beta * (1.0 + g_r + g_c),
        decay_diff=beta * (1.0 + g_r - g_c),
    )


def theoretical_hawkes_covariance(
    params: HawkesPriceParams, dt: float, as_printed: bool = False
) -> tuple[float, float]:
    """Closed-form (own, cross) covariance of log-price changes over dt.

    Returns (C11, C12): the stationary variance of one asset's change over
    an interval of length dt and the covariance between the two assets'
    changes. Both decompose over the two relaxation channels through
    u(g) = 1 - (1 - exp(-g dt))/(g dt), which rises from 0 to 1:

        C11/dt = rate_a + u(G1) w1 + u(G2) w2
        C12/dt =        - u(G1) w1 + u(G2) w2

    with rate_a the aggregate (up plus down) event rate of one asset and
    w1, w2 the channel weights. Monte Carlo confirms this form across
    dt in [1, 1000] s, and it has the right dt -> 0 limit (C11/dt -> rate_a,
    the Poissonian floor; C12/dt -> 0).

    as_printed=True instead evaluates a commonly transcribed variant of the
    same system whose own-variance bracket mixes in a q_own weight where
    symmetry requires w_sum, and whose rate constant counts only one tick
    direction. That variant underestimates C11 inflation at small dt (it
    even diverges as dt -> 0) and halves both legs at large dt; it is kept
    for comparison because the correlation ratio C12/C11 it induces agrees
    with the corrected form for dt >~ 10 s. See the package notes before
    using it for anything but that comparison.

    All brackets are grouped through expm1 so small-dt evaluation does not
    cancel catastrophically; the groupings are algebraically identical to
    the direct expressions.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    c = covariance_coefficients(params)
    g1, g2 = c.decay_sum, c.decay_diff
    em1 = math.expm1(-g1 * dt)
    em2 = math.expm1(-g2 * dt)
    if as_printed:
        norm = 2.0 * g1**2 * g2**2 * dt
        base = c.scale * c.w_sum / (2.0 * g1)
        anti = c.scale * c.w_diff / (2.0 * g2)
        bracket11 = (
            c.w_diff * g1**2 * em2
            + c.q_own * g2**2 * em1
            + (c.q_own - c.w_sum) * g2**2
        )
        c11 = c.rate + base + anti + c.scale * bracket11 / norm
        bracket12 = -c.w_sum * g2**2 * em1 + c.w_diff * g1**2 * em2
        c12 = -base + anti + c.scale * bracket12 / norm
        return c11 * dt, c12 * dt
    rate_a = 2.0 * c.rate
    scale_a = 2.0 * c.scale
    # u(g) = 1 - (1 - e^{-g dt})/(g dt) = 1 + expm1(-g dt)/(g dt)
    u1 = 1.0 + em1 / (g1 * dt)
    u2 = 1.0 + em2 / (g2 * dt)
    w1 = scale_a * c.w_sum / (2.0 * g1)
    w2 = scale_a * c.w_diff / (2.0 * g2)
    c11 = rate_a + u1 * w1 + u2 * w2
    c12 = -u1 * w1 + u2 * w2
    return c11 * dt, c12 * dt


def theoretical_hawkes_correlation(
    params: HawkesPriceParams, dt: float, as_printed: bool = False
) -> float:
    """Correlation of the two assets' log-price changes over dt."""
    c11, c12 = theoretical_hawkes_covariance(params, dt, as_printed=as_printed)
    if c11 <= 0:
        raise DomainError(f"own covariance is not positive at dt={dt}")
    return c12 / c11


def limiting_correlation(gamma_r: float, gamma_c: float) -> float:
    """Large-interval limit of the price-model correlation.

    2 g_c (1 + g_r) / (1 + g_c^2 + 2 g_r + g_r^2) in the branching ratios.
    """
    if gamma_r < 0 or gamma_c < 0:
        raise ParameterError("branching ratios must be non-negative")
    den = 1.0 + gamma_c**2 + 2.0 * gamma_r + gamma_r**2
    return 2.0 * gamma_c * (1.0 + gamma_r) / den
