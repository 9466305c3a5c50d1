"""Training-free diffusion denoiser and the adaptive guidance width.

No network predicts the noise. The clean sample is estimated analytically
as a posterior-weighted average over a sampling set (by default the
previous Pareto members of a subspace), with a prior that favours the
predicted knee. The implied noise follows from that estimate, and a DDIM step moves
the state one level down the schedule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import Bounds, ContractError, clamp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseSchedule:
    alpha: np.ndarray

    @property
    def K(self) -> int:
        return self.alpha.size - 1

    def sigma(self, k: int) -> float:
        return ddim_sigma(self.alpha[k - 1], self.alpha[k])


def cosine_schedule(K: int) -> NoiseSchedule:
    """alpha_k = (cos(k pi / K) + 1) / 2 for k = 0..K."""
    if K < 2:
        raise ContractError("K must be at least 2")
    k = np.arange(K + 1)
    alpha = 0.5 * (np.cos(k * np.pi / K) + 1.0)
    alpha[0], alpha[-1] = 1.0, 0.0
    return NoiseSchedule(alpha)


def linear_schedule(K: int) -> NoiseSchedule:
    """alpha_k = 1 - k / K, kept for schedule comparisons."""
    if K < 2:
        raise ContractError("K must be at least 2")
    return NoiseSchedule(1.0 - np.arange(K + 1) / K)


def make_schedule(kind: str, K: int) -> NoiseSchedule:
    if kind == "cosine":
        return cosine_schedule(K)
    if kind == "linear":
        return linear_schedule(K)
    raise ContractError(f"unknown schedule {kind!r}")


def ddim_sigma(alpha_prev: float, alpha_cur: float) -> float:
    """Noise scale of the stochastic DDIM step from level k to k-1."""
    if not 0.0 < alpha_prev <= 1.0:
        raise ContractError("alpha_prev must lie in (0, 1]")
    if not 0.0 <= alpha_cur <= alpha_prev or alpha_cur >= 1.0:
        raise ContractError("need 0 <= alpha_cur <= alpha_prev and alpha_cur < 1")
    var = (1.0 - alpha_prev) / (1.0 - alpha_cur) * (1.0 - alpha_cur / alpha_prev)
    return float(np.sqrt(max(var, 0.0)))


def _guidance_coef(alpha_prev: float, sigma: float) -> float:
    rad = 1.0 - alpha_prev - sigma * sigma
    if rad < 0.0:
        # the identity 1 - a' - s^2 = (1-a')^2 a / ((1-a) a') keeps this >= 0
        # up to rounding
        if rad < -1e-12:
            raise AssertionError(f"negative radicand {rad} in denoising step")
        rad = 0.0
    return float(np.sqrt(rad))


def knee_prior_density(x, knee, psi: float) -> float | np.ndarray:
    """log N(x; knee, psi^2 I). ``x`` may hold one point per row."""
    if psi <= 0:
        raise ContractError("psi must be positive")
    x = np.asarray(x, dtype=float)
    knee = np.asarray(knee, dtype=float)
    if x.shape[-1] != knee.shape[-1]:
        raise ContractError("dimension mismatch between x and knee")
    n = knee.shape[-1]
    d2 = np.sum((x - knee) ** 2, axis=-1)
    return -0.5 * n * np.log(2.0 * np.pi * psi * psi) - d2 / (2.0 * psi * psi)


def kde_prior_density(x, data, bandwidth: float | None = None) -> float | np.ndarray:
    """Log Gaussian-kernel density estimate of ``data`` evaluated at ``x``.

    Uses an isotropic kernel; the bandwidth defaults to Silverman's rule on
    the mean per-dimension spread.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    x = np.asarray(x, dtype=float)
    J, n = data.shape
    h = silverman_bandwidth(data) if bandwidth is None else bandwidth
    d2 = np.sum((np.atleast_2d(x)[:, None, :] - data[None]) ** 2, axis=-1)
    out = logsumexp(-d2 / (2 * h * h), axis=1) - np.log(J) - 0.5 * n * np.log(2 * np.pi * h * h)
    return out[0] if x.ndim == 1 else out


def silverman_bandwidth(data: np.ndarray) -> float:
    J, n = data.shape
    spread = float(np.mean(np.std(data, axis=0, ddof=1))) if J > 1 else 0.0
    h = (4.0 / (n + 2)) ** (1.0 / (n + 4)) * J ** (-1.0 / (n + 4)) * spread
    return h if h > 0 else 1e-3


def _posterior_weights(S: np.ndarray, log_prior: np.ndarray, X: np.ndarray, alpha: float) -> np.ndarray:
    """Row-normalized posterior weights, one row per state in ``X``."""
    d2 = np.sum((X[:, None, :] - np.sqrt(alpha) * S[None, :, :]) ** 2, axis=-1)
    logw = log_prior[None, :] - d2 / (2.0 * (1.0 - alpha))
    top = np.max(logw, axis=1, keepdims=True)
    bad = ~np.isfinite(top[:, 0])
    if np.any(bad):
        log.warning("all posterior weights vanished; using uniform weights")
        logw[bad] = 0.0
        top[bad] = 0.0
    logw = logw - logsumexp(logw, axis=1, keepdims=True)
    return np.exp(logw)


def posterior_x0(samples, x_k, alpha_k: float, knee=None, psi: float | None = None,
                 log_prior=None) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean of the clean sample given the noisy state ``x_k``.

    Args:
        samples: Sampling set, one member per row.
        x_k: Current noisy state.
        alpha_k: Signal level of the current step, in [0, 1).
        knee: Centre of the Gaussian prior; ignored when ``log_prior`` is given.
        psi: Width of the Gaussian prior.
        log_prior: Precomputed log prior of each sample.

    Returns:
        The weighted mean and the weights.
    """
    S = np.atleast_2d(np.asarray(samples, dtype=float))
    if S.shape[0] == 0:
        raise ContractError("sampling set is empty")
    if not 0.0 <= alpha_k < 1.0:
        raise ContractError("alpha_k must lie in [0, 1)")
    if log_prior is None:
        log_prior = knee_prior_density(S, knee, psi)
    w = _posterior_weights(S, np.asarray(log_prior, dtype=float),
                           np.asarray(x_k, dtype=float)[None, :], alpha_k)[0]
    return w @ S, w


def implied_noise(x_k, x0_hat, alpha_k: float) -> np.ndarray:
    """Noise that maps ``x0_hat`` onto ``x_k`` under the forward process."""
    if alpha_k >= 1.0:
        raise ContractError("alpha_k must be below 1")
    return (np.asarray(x_k, dtype=float) - np.sqrt(alpha_k) * np.asarray(x0_hat, dtype=float)) / np.sqrt(1.0 - alpha_k)


def denoise_step(x_k, x0_hat, eps, alpha_prev: float, sigma: float, rng: np.random.Generator,
                 bounds: Bounds | None = None) -> np.ndarray:
    """One stochastic DDIM update; works on a single state or one state per row."""
    x0_hat = np.asarray(x0_hat, dtype=float)
    xi = rng.standard_normal(x0_hat.shape)
    out = np.sqrt(alpha_prev) * x0_hat + _guidance_coef(alpha_prev, sigma) * np.asarray(eps, dtype=float) + sigma * xi
    return out if bounds is None else clamp(out, bounds)


SAMPLING = ("fixed", "current")


def denoise_population(subpop, knee, psi: float, schedule: NoiseSchedule, rng: np.random.Generator,
                       bounds: Bounds | None = None, n_out: int | None = None,
                       prior=None, sampling: str = "fixed") -> np.ndarray:
    """Run the reverse chain from level K down to level 1.

    Chains start at the input members (cycled when ``n_out`` exceeds them).
    At level K the signal level is zero, so the first step already replaces
    the start with noise around the prior-weighted mean.

    Args:
        subpop: Members of one subspace of the previous front, one per row.
        knee: Predicted knee, centre of the default Gaussian prior.
        psi: Width of the default prior.
        schedule: Signal levels alpha_0..alpha_K.
        rng: Source of the diversity noise.
        bounds: Box every intermediate state is clamped to.
        n_out: Number of chains; defaults to ``len(subpop)``.
        prior: Callable mapping points (one per row) to log prior values;
            defaults to the Gaussian around ``knee``.
        sampling: ``"fixed"`` averages over the input members at every step;
            ``"current"`` averages over the chains' own current states.

    Returns:
        ``n_out`` states at level 1.
    """
    if sampling not in SAMPLING:
        raise ContractError(f"unknown sampling set {sampling!r}")
    S = np.atleast_2d(np.asarray(subpop, dtype=float))
    J = S.shape[0] if np.size(subpop) else 0
    if n_out is None:
        n_out = J
    if J == 0 or n_out == 0:
        return np.empty((0, S.shape[1] if S.ndim == 2 else 0))
    if prior is None:
        def prior(P):
            return knee_prior_density(P, knee, psi)
    log_prior = np.asarray(prior(S), dtype=float)
    alpha = schedule.alpha
    X = S[np.arange(n_out) % J].copy()
    for k in range(schedule.K, 1, -1):
        a_k, a_p = alpha[k], alpha[k - 1]
        if sampling == "fixed":
            x0 = _posterior_weights(S, log_prior, X, a_k) @ S
        else:
            x0 = _posterior_weights(X, np.asarray(prior(X), dtype=float), X, a_k) @ X
        eps = (X - np.sqrt(a_k) * x0) / np.sqrt(1.0 - a_k)
        X = denoise_step(X, x0, eps, a_p, ddim_sigma(a_p, a_k), rng, bounds)
    return X


@dataclass(frozen=True)
class GuidanceConfig:
    psi_min: float = 0.1
    psi_max: float = 0.5
    lam: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.psi_min <= self.psi_max:
            raise ContractError("need 0 < psi_min <= psi_max")
        if self.lam < 0:
            raise ContractError("lambda must be non-negative")


def adaptive_psi(knee_pred_prev, knee_true_prev, cfg: GuidanceConfig = GuidanceConfig()) -> float:
    """Guidance width grown with the last prediction error.

    Returns ``psi_min`` when either knee is missing.
    """
    if knee_pred_prev is None or knee_true_prev is None:
        return cfg.psi_min
    a = np.asarray(knee_pred_prev, dtype=float)
    b = np.asarray(knee_true_prev, dtype=float)
    if a.shape != b.shape:
        raise ContractError("knee dimensions differ")
    E = float(np.linalg.norm(a - b))
    return min(cfg.psi_max, max(cfg.psi_min, cfg.psi_min + cfg.lam * E))
