"""Gaussian random bridges.

A Gaussian driver pinned at an origin x induces a bridge whose value at
time t, conditioned on the terminal value y, is Gaussian with closed-form
mean and (diagonal) variance.  This module provides those moments, exact
conditioned-state draws, the anticipative whole-path sampler, and the
mean-reverting drift used by the non-anticipative SDE simulation.

Coordinates are treated as mutually independent throughout, so every
covariance is carried as a diagonal (dim,) vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BridgePath,
    ConfigurationError,
    Distribution,
    DomainError,
    RngStream,
    SingularityError,
    TimeGrid,
    as_vector,
    sample_n,
)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaledBrownian:
    """Driver Z_t = x + sigma * W_t with per-coordinate scales sigma > 0.

    ``origin`` may be left None for "template" use (training, filtering),
    where the start point is supplied per call.
    """

    sigma: np.ndarray
    dim: int
    origin: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.dim))
        sigma = as_vector(self.sigma, self.dim, "sigma")
        if np.any(sigma <= 0.0):
            raise ConfigurationError("sigma must be strictly positive")
        sigma.flags.writeable = False
        object.__setattr__(self, "sigma", sigma)
        if self.origin is not None:
            origin = as_vector(self.origin, self.dim, "origin")
            origin.flags.writeable = False
            object.__setattr__(self, "origin", origin)

    def mean(self, t: float) -> np.ndarray:
        _require_origin(self)
        return self.origin.copy()

    def cov(self, s: float, t: float) -> np.ndarray:
        return self.sigma ** 2 * min(s, t)


@dataclass(frozen=True)
class OrnsteinUhlenbeck:
    """Driver dZ = -theta Z dt + sigma dW started at Z_0 = x (theta > 0)."""

    theta: float
    sigma: np.ndarray
    dim: int
    origin: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.dim))
        if not (self.theta > 0.0):
            raise ConfigurationError("theta must be strictly positive")
        object.__setattr__(self, "theta", float(self.theta))
        sigma = as_vector(self.sigma, self.dim, "sigma")
        if np.any(sigma <= 0.0):
            raise ConfigurationError("sigma must be strictly positive")
        sigma.flags.writeable = False
        object.__setattr__(self, "sigma", sigma)
        if self.origin is not None:
            origin = as_vector(self.origin, self.dim, "origin")
            origin.flags.writeable = False
            object.__setattr__(self, "origin", origin)

    def mean(self, t: float) -> np.ndarray:
        _require_origin(self)
        return self.origin * np.exp(-self.theta * t)

    def cov(self, s: float, t: float) -> np.ndarray:
        th = self.theta
        lo, hi = min(s, t), max(s, t)
        return self.sigma ** 2 / (2.0 * th) * (np.exp(-th * (hi - lo)) - np.exp(-th * (hi + lo)))


GaussianKernel = ScaledBrownian | OrnsteinUhlenbeck


def _require_origin(kernel: GaussianKernel):
    if kernel.origin is None:
        raise ConfigurationError("kernel origin is unset; construct the kernel with origin=x")


def _check_origin(kernel: GaussianKernel, x: np.ndarray):
    if kernel.origin is not None and not np.array_equal(kernel.origin, x):
        raise ConfigurationError("x disagrees with the kernel origin")


# ---------------------------------------------------------------------------
# Moments and conditional law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionalLaw:
    """Per-coordinate Gaussian law of the bridge state given its endpoint."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        var = np.maximum(np.asarray(self.var, dtype=float), 0.0)  # clip roundoff
        mean.flags.writeable = False
        var.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)


def kernel_moments(kernel: GaussianKernel, s: float, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Mean at time t and the (s, t) covariance diagonal of the driver."""
    if s < 0.0 or t < 0.0 or s > t:
        raise DomainError(f"require 0 <= s <= t, got s={s}, t={t}")
    return kernel.mean(t), kernel.cov(s, t)


def _bridge_coefficient(kernel: GaussianKernel, t: float, T: float) -> np.ndarray:
    """Per-coordinate regression coefficient Cov(t,T)/Var(T) of the pinned driver."""
    return kernel.cov(t, T) / kernel.cov(T, T)


def conditional_law(kernel: GaussianKernel, x, y, t: float, T: float) -> ConditionalLaw:
    """Law of the bridge state at t given start x and terminal value y.

    mean = mu_t + c_t (y - mu_T) and var = Sigma_{t,t} - c_t Sigma_{T,t}
    with c_t = Sigma_{t,T} / Sigma_{T,T}; for a scaled Brownian driver this
    reduces to x + (t/T)(y - x) and sigma^2 t (T - t) / T.
    """
    if not (0.0 <= t < T):
        raise DomainError(f"require 0 <= t < T, got t={t}, T={T}")
    x = as_vector(x, kernel.dim, "x")
    y = as_vector(y, kernel.dim, "y")
    _check_origin(kernel, x)
    pinned = _with_origin(kernel, x)
    coef = _bridge_coefficient(pinned, t, T)
    mean = pinned.mean(t) + coef * (y - pinned.mean(T))
    var = pinned.cov(t, t) - coef * pinned.cov(T, t)
    return ConditionalLaw(mean=mean, var=var)


def _with_origin(kernel: GaussianKernel, x: np.ndarray) -> GaussianKernel:
    if kernel.origin is not None:
        return kernel
    import dataclasses

    return dataclasses.replace(kernel, origin=x)


def sample_conditioned_state(kernel: GaussianKernel, x, y, t: float, T: float, rng: RngStream) -> np.ndarray:
    """Exact draw of the bridge state at t given endpoint y; returns x at t = 0."""
    x = as_vector(x, kernel.dim, "x")
    if t == 0.0:
        return x.copy()
    law = conditional_law(kernel, x, y, t, T)
    return law.mean + np.sqrt(law.var) * rng.generator.standard_normal(kernel.dim)


def bridge_transition_law(kernel: ScaledBrownian, r, y, s: float, t: float, T: float) -> ConditionalLaw:
    """Law of the bridge state at t given state r at s < t and endpoint y.

    Scaled Brownian drivers only: the pinned segment is again a Brownian
    bridge, with mean r + ((t-s)/(T-s))(y - r) and variance
    sigma^2 (t-s)(T-t)/(T-s) per coordinate.
    """
    if not isinstance(kernel, ScaledBrownian):
        raise ConfigurationError("segment transitions are provided for scaled Brownian drivers only")
    if not (0.0 <= s < t <= T):
        raise DomainError(f"require 0 <= s < t <= T, got s={s}, t={t}, T={T}")
    r = as_vector(r, kernel.dim, "r")
    y = as_vector(y, kernel.dim, "y")
    frac = (t - s) / (T - s)
    mean = r + frac * (y - r)
    var = kernel.sigma ** 2 * (t - s) * (T - t) / (T - s)
    return ConditionalLaw(mean=mean, var=np.broadcast_to(var, (kernel.dim,)).copy())


# ---------------------------------------------------------------------------
# Anticipative path sampling
# ---------------------------------------------------------------------------

def _driver_paths(kernel: GaussianKernel, times: np.ndarray, n: int, rng: RngStream) -> np.ndarray:
    """n exact driver paths on ascending ``times`` (must start at 0): (n, len(times), dim)."""
    _require_origin(kernel)
    times = np.asarray(times, dtype=float)
    out = np.empty((n, times.size, kernel.dim))
    out[:, 0, :] = kernel.origin
    gen = rng.generator
    if isinstance(kernel, ScaledBrownian):
        for j in range(1, times.size):
            dt = times[j] - times[j - 1]
            out[:, j, :] = out[:, j - 1, :] + kernel.sigma * np.sqrt(dt) * gen.standard_normal((n, kernel.dim))
    else:
        th = kernel.theta
        for j in range(1, times.size):
            dt = times[j] - times[j - 1]
            decay = np.exp(-th * dt)
            sd = kernel.sigma * np.sqrt((1.0 - np.exp(-2.0 * th * dt)) / (2.0 * th))
            prev_mean = kernel.origin * np.exp(-th * times[j - 1])
            cur_mean = kernel.origin * np.exp(-th * times[j])
            out[:, j, :] = cur_mean + (out[:, j - 1, :] - prev_mean) * decay + sd * gen.standard_normal((n, kernel.dim))
    return out


def _anticipative_states(
    kernel: GaussianKernel, ys: np.ndarray, times: np.ndarray, T: float, rng: RngStream
) -> np.ndarray:
    """Bridge states for endpoints ys (n, dim) at ``times`` (ascending, from 0, <= T)."""
    times = np.asarray(times, dtype=float)
    n = ys.shape[0]
    path_times = times if times[-1] == T else np.append(times, T)
    z = _driver_paths(kernel, path_times, n, rng)
    z_T = z[:, -1, :]
    pinned = kernel
    coefs = np.stack([_bridge_coefficient(pinned, t, T) for t in times])  # (len(times), dim)
    # state at t: c_t * y + (Z_t - c_t * Z_T)
    return coefs[None, :, :] * ys[:, None, :] + z[:, : times.size, :] - coefs[None, :, :] * z_T[:, None, :]


def sample_bridge_anticipative(
    kernel: GaussianKernel, x, target: Distribution, grid: TimeGrid, rng: RngStream
) -> BridgePath:
    """One bridge path on the grid via the anticipative construction.

    Draws the terminal value Y from ``target`` and a driver path Z, then
    forms c_t Y + (Z_t - c_t Z_T) at every node; the node-0 state is x.
    """
    states = sample_bridge_anticipative_n(kernel, x, target, grid, 1, rng)[0]
    return BridgePath(grid=grid, states=states)


def sample_bridge_anticipative_n(
    kernel: GaussianKernel, x, target: Distribution, grid: TimeGrid, n: int, rng: RngStream
) -> np.ndarray:
    """n anticipative bridge paths as an (n, m+1, dim) array (shared start x)."""
    x = as_vector(x, kernel.dim, "x")
    _check_origin(kernel, x)
    if target.dim != kernel.dim:
        raise ConfigurationError("target dimension disagrees with the kernel")
    ys = sample_n(target, n, rng)
    return _anticipative_states(_with_origin(kernel, x), ys, grid.nodes, grid.horizon_T, rng)


# ---------------------------------------------------------------------------
# Drift
# ---------------------------------------------------------------------------

def drift(xi, y_hat, t: float, T: float, floor: float = 0.0) -> np.ndarray:
    """Mean-reverting drift (y_hat - xi)/(T - t) toward the current best estimate.

    Raises ``SingularityError`` once T - t falls to ``floor`` (or below),
    rather than silently clamping near the terminal-time singularity.
    """
    gap = T - t
    if gap <= floor or gap <= 0.0:
        raise SingularityError(f"T - t = {gap} at or below the singularity floor {floor}")
    xi = np.asarray(xi, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    return (y_hat - xi) / gap
