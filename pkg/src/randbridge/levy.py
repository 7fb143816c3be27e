"""Levy random bridges for coordinatewise-independent jump drivers.

Three families are implemented: the gamma subordinator (unit mean rate,
variance 1/kappa per unit time), the stable-1/2 subordinator (first passage
of Brownian motion, activity parameter c), and the Poisson counting process.

The bridge pinned at (x at 0, y at T) has conditional density
f_t(z - x) f_{T-t}(y - z) / f_T(y - x) per coordinate, and its Markov
transitions are the Doob h-transform of the driver's transition density by
h_t(z; y) = f_{T-t}(y - z).  Gamma and Poisson transitions admit exact
closed-form samplers (beta-fraction and binomial-thinning respectively);
the stable-1/2 family uses a numerical inverse CDF.

All density arithmetic is in log space; points outside the support give
-inf rather than an error, while impossible endpoints raise SupportError.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .core import (
    ConfigurationError,
    DomainError,
    FilteringCollapseError,
    RngStream,
    SupportError,
    as_vector,
)

_INTEGER_TOL = 1e-8


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevyTriplet:
    """Descriptive drift / Gaussian-coefficient / jump-measure metadata.

    Stored for documentation only; no characteristic-function machinery
    consumes it.
    """

    alpha: tuple = ()
    beta: tuple = ()
    eta: str = ""


@dataclass(frozen=True)
class GammaSubordinator:
    """Gamma process with E[Z_t] = t and Var[Z_t] = t / kappa per coordinate."""

    kappa: float
    dim: int
    triplet: LevyTriplet | None = None

    def __post_init__(self):
        if not (self.kappa > 0.0):
            raise ConfigurationError("kappa must be strictly positive")
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True)
class StableHalf:
    """Stable-1/2 subordinator: first time Brownian motion exceeds level c*t."""

    activity: float = np.sqrt(2.0)
    dim: int = 1
    triplet: LevyTriplet | None = None

    def __post_init__(self):
        if not (self.activity > 0.0):
            raise ConfigurationError("activity must be strictly positive")
        object.__setattr__(self, "activity", float(self.activity))
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True)
class PoissonCounting:
    """Poisson counting process with jump rate > 0 per coordinate."""

    rate: float
    dim: int
    triplet: LevyTriplet | None = None

    def __post_init__(self):
        if not (self.rate > 0.0):
            raise ConfigurationError("rate must be strictly positive")
        object.__setattr__(self, "rate", float(self.rate))
        object.__setattr__(self, "dim", int(self.dim))


LevyFamily = GammaSubordinator | StableHalf | PoissonCounting


def is_subordinator(family: LevyFamily) -> bool:
    return isinstance(family, (GammaSubordinator, StableHalf))


# ---------------------------------------------------------------------------
# Increment densities (elementwise, log space)
# ---------------------------------------------------------------------------

def _log_f_elementwise(family: LevyFamily, t: float, w: np.ndarray) -> np.ndarray:
    """log f_t(w) per element; -inf outside the support."""
    w = np.asarray(w, dtype=float)
    out = np.full(w.shape, -np.inf)
    if isinstance(family, GammaSubordinator):
        shape = family.kappa * t
        ok = w > 0.0
        ws = np.where(ok, w, 1.0)
        val = shape * np.log(family.kappa) - gammaln(shape) + (shape - 1.0) * np.log(ws) - family.kappa * ws
        out[ok] = val[ok]
    elif isinstance(family, StableHalf):
        c = family.activity
        ok = w > 0.0
        ws = np.where(ok, w, 1.0)
        val = np.log(c * t) - 0.5 * np.log(2.0 * np.pi) - 1.5 * np.log(ws) - c * c * t * t / (2.0 * ws)
        out[ok] = val[ok]
    elif isinstance(family, PoissonCounting):
        k = np.round(w)
        ok = (np.abs(w - k) <= _INTEGER_TOL) & (k >= 0.0)
        ks = np.where(ok, k, 0.0)
        mean = family.rate * t
        val = ks * np.log(mean) - mean - gammaln(ks + 1.0)
        out[ok] = val[ok]
    else:
        raise ConfigurationError(f"unknown family type {type(family).__name__}")
    return out


def log_increment_density(family: LevyFamily, t: float, w) -> float:
    """Coordinatewise sum of log f_t(w); -inf if any coordinate leaves the support."""
    if not (t > 0.0):
        raise DomainError(f"increment time must be positive, got {t}")
    w = as_vector(w, family.dim, "w")
    return float(np.sum(_log_f_elementwise(family, t, w)))


# ---------------------------------------------------------------------------
# Endpoint / state support
# ---------------------------------------------------------------------------

def check_endpoint_support(family: LevyFamily, x, y, what: str = "endpoint") -> None:
    """Require 0 < f_T(y - x) < infinity coordinatewise; raise SupportError otherwise."""
    x = as_vector(x, family.dim, "x")
    y = as_vector(y, family.dim, "y")
    _check_support_gaps(family, y - x, what)


def _check_support_gaps(family: LevyFamily, gaps: np.ndarray, what: str) -> None:
    if is_subordinator(family):
        if np.any(gaps <= 0.0):
            raise SupportError(
                f"unsupported {what}: subordinator bridges need y > x coordinatewise"
            )
    else:
        k = np.round(gaps)
        if np.any(np.abs(gaps - k) > _INTEGER_TOL) or np.any(k < 0.0):
            raise SupportError(
                f"unsupported {what}: counting bridges need integer y - x >= 0"
            )


# ---------------------------------------------------------------------------
# Bridge and transition densities
# ---------------------------------------------------------------------------

def log_bridge_density(family: LevyFamily, x, y, t: float, T: float, z) -> float:
    """log of the pinned-bridge density f_t(z-x) f_{T-t}(y-z) / f_T(y-x), summed over coordinates."""
    if not (0.0 < t < T):
        raise DomainError(f"require 0 < t < T, got t={t}, T={T}")
    x = as_vector(x, family.dim, "x")
    y = as_vector(y, family.dim, "y")
    z = as_vector(z, family.dim, "z")
    check_endpoint_support(family, x, y)
    val = (
        _log_f_elementwise(family, t, z - x)
        + _log_f_elementwise(family, T - t, y - z)
        - _log_f_elementwise(family, T, y - x)
    )
    return float(np.sum(val))


def log_marginal_mixture_density(family: LevyFamily, x, target, t: float, T: float, z) -> float:
    """log of the atom-weighted mixture of bridge densities at z.

    ``target`` must be finitely supported; every atom is checked against the
    endpoint-support condition before any density is evaluated.
    """
    from .core import FiniteAtoms

    if not isinstance(target, FiniteAtoms):
        raise ConfigurationError("marginal mixture densities require a FiniteAtoms target")
    x = as_vector(x, family.dim, "x")
    z = as_vector(z, family.dim, "z")
    for i, atom in enumerate(target.points):
        try:
            check_endpoint_support(family, x, atom)
        except SupportError as exc:
            raise SupportError(f"atom {i} at {atom} violates endpoint support: {exc}") from None
    terms = np.array(
        [
            np.log(wi) + log_bridge_density(family, x, yi, t, T, z) if wi > 0.0 else -np.inf
            for wi, yi in zip(target.weights, target.points)
        ]
    )
    return float(logsumexp(terms))


def h_transition_logdensity(family: LevyFamily, r, z, y, s: float, t: float, T: float) -> float:
    """log transition density of the pinned bridge from (s, r) to (t, z).

    This is the h-transform of the driver transition by h_t(z; y) = f_{T-t}(y - z):
    log[ h_t(z; y) / h_s(r; y) ] + log f_{t-s}(z - r).
    """
    if not (0.0 <= s < t < T):
        raise DomainError(f"require 0 <= s < t < T, got s={s}, t={t}, T={T}")
    r = as_vector(r, family.dim, "r")
    z = as_vector(z, family.dim, "z")
    y = as_vector(y, family.dim, "y")
    check_endpoint_support(family, r, y, what="state")
    val = (
        _log_f_elementwise(family, T - t, y - z)
        - _log_f_elementwise(family, T - s, y - r)
        + _log_f_elementwise(family, t - s, z - r)
    )
    return float(np.sum(val))


# ---------------------------------------------------------------------------
# Exact bridge-increment samplers
# ---------------------------------------------------------------------------

def sample_bridge_increment(
    family: LevyFamily, r, y, s: float, t: float, T: float, rng: RngStream
) -> np.ndarray:
    """Exact draw of the bridge state at t given state r at s and endpoint y.

    Gamma: r + (y - r) B with B ~ Beta(kappa (t-s), kappa (T-t)).
    Poisson: r + Binomial(y - r, (t-s)/(T-s)).
    Stable-1/2: numerical inverse CDF of the h-transform kernel.
    The final step t = T returns y exactly.
    """
    r = np.atleast_2d(as_vector(r, family.dim, "r"))
    y = np.atleast_2d(as_vector(y, family.dim, "y"))
    return sample_bridge_increment_n(family, r, y, s, t, T, rng)[0]


def sample_bridge_increment_n(
    family: LevyFamily, rs: np.ndarray, ys: np.ndarray, s: float, t: float, T: float, rng: RngStream
) -> np.ndarray:
    """Vectorized bridge increments: rs, ys of shape (n, dim) -> (n, dim)."""
    if not (0.0 <= s < t <= T):
        raise DomainError(f"require 0 <= s < t <= T, got s={s}, t={t}, T={T}")
    rs = np.asarray(rs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    for i in range(rs.shape[0]):
        check_endpoint_support(family, rs[i], ys[i], what="state")
    if t == T:
        return ys.copy()
    gen = rng.generator
    if isinstance(family, GammaSubordinator):
        a = family.kappa * (t - s)
        b = family.kappa * (T - t)
        frac = gen.beta(a, b, size=rs.shape)
        return rs + (ys - rs) * frac
    if isinstance(family, PoissonCounting):
        counts = np.round(ys - rs).astype(np.int64)
        p = (t - s) / (T - s)
        return rs + gen.binomial(counts, p)
    if isinstance(family, StableHalf):
        out = np.empty_like(rs)
        u = gen.random(rs.shape)
        for i in range(rs.shape[0]):
            for j in range(rs.shape[1]):
                gap = ys[i, j] - rs[i, j]
                grid_w, cdf = _stable_half_fraction_cdf(family.activity, t - s, T - t, gap)
                out[i, j] = rs[i, j] + gap * np.interp(u[i, j], cdf, grid_w)
        return out
    raise ConfigurationError(f"unknown family type {type(family).__name__}")


@functools.lru_cache(maxsize=512)
def _stable_half_fraction_cdf(c: float, dt1: float, dt2: float, gap: float, tol: float = 1e-6):
    """CDF of the normalized increment fraction for a stable-1/2 bridge step.

    The transition density of the step, expressed in the fraction
    w = (z - r)/(y - r) in (0, 1), is proportional to
    f_{dt1}(gap w) f_{dt2}(gap (1 - w)).  The grid is refined by doubling
    until the CDF changes by less than ``tol`` in sup norm.  Returned arrays
    are immutable and safe to share across threads.
    """
    def cdf_on(n_cells: int):
        w = np.linspace(0.0, 1.0, n_cells + 1)
        interior = w[1:-1]
        logpdf = np.full(w.size, -np.inf)
        logpdf[1:-1] = (
            -1.5 * np.log(gap * interior)
            - c * c * dt1 * dt1 / (2.0 * gap * interior)
            - 1.5 * np.log(gap * (1.0 - interior))
            - c * c * dt2 * dt2 / (2.0 * gap * (1.0 - interior))
        )
        pdf = np.exp(logpdf - logpdf.max())
        cdf = np.concatenate([[0.0], np.cumsum((pdf[1:] + pdf[:-1]) * 0.5 * np.diff(w))])
        return w, cdf / cdf[-1]

    n = 1024
    w, cdf = cdf_on(n)
    while n < 2 ** 17:
        n *= 2
        w2, cdf2 = cdf_on(n)
        if np.max(np.abs(cdf2[::2] - cdf)) < tol:
            w, cdf = w2, cdf2
            break
        w, cdf = w2, cdf2
    # keep only strictly increasing CDF points so inversion is well posed
    keep = np.concatenate([[True], np.diff(cdf) > 0.0])
    w, cdf = w[keep], cdf[keep]
    w.flags.writeable = False
    cdf.flags.writeable = False
    return w, cdf


# ---------------------------------------------------------------------------
# Generative step through the posterior mixture
# ---------------------------------------------------------------------------

def sample_generative_step(
    family: LevyFamily, r, posterior, s: float, t: float, T: float, rng: RngStream
) -> np.ndarray:
    """One exact Markov step of the generative bridge at state r.

    Draws an endpoint atom from the posterior, then one h-transform
    increment toward it; the one-step law is the posterior mixture of the
    pinned-bridge kernels, which is the transition of the unpinned bridge.
    """
    r = np.atleast_2d(as_vector(r, family.dim, "r"))
    log_w = np.atleast_2d(posterior.log_weights)
    out = sample_generative_step_n(family, r, log_w, posterior.atoms, s, t, T, rng)
    return out[0]


def sample_generative_step_n(
    family: LevyFamily,
    rs: np.ndarray,
    log_weights: np.ndarray,
    atoms: np.ndarray,
    s: float,
    t: float,
    T: float,
    rng: RngStream,
) -> np.ndarray:
    """Vectorized generative steps with per-path posterior weights (n, k)."""
    weights = np.exp(log_weights)
    totals = weights.sum(axis=1)
    if np.any(totals <= 0.0):
        raise FilteringCollapseError("a posterior has empty support; no atom can be drawn")
    weights = weights / totals[:, None]
    cum = np.cumsum(weights, axis=1)
    u = rng.generator.random((rs.shape[0], 1))
    idx = np.minimum((u > cum).sum(axis=1), weights.shape[1] - 1)
    ys = atoms[idx]
    return sample_bridge_increment_n(family, rs, ys, s, t, T, rng)
