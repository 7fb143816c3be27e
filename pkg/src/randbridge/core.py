"""Shared primitives: distributions, couplings, time grids, and seeded randomness.

Everything downstream (bridge samplers, the filter, training, simulation)
builds on the types here.  All samplers are pure functions of their inputs
and the state of the ``RngStream`` they are handed; replaying with an
identical stream reproduces draws bit for bit.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class BridgeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(BridgeError):
    """Invalid parameters for a type, sampler, or run configuration."""


class UsageError(BridgeError):
    """A call that is structurally wrong (empty batch, mismatched dims, ...)."""


class DomainError(BridgeError):
    """A time argument outside its valid range."""


class SingularityError(BridgeError):
    """A drift evaluation too close to the terminal-time singularity."""


class SupportError(BridgeError):
    """An endpoint or state outside the driving process support."""


class FilteringCollapseError(BridgeError):
    """Every posterior atom received zero (or underflowed) likelihood."""


class TrainingDivergenceError(BridgeError):
    """Training produced a non-finite loss.  Carries the last checkpoint."""

    def __init__(self, message, params=None, loss_curve=None):
        super().__init__(message)
        self.params = params
        self.loss_curve = loss_curve


# ---------------------------------------------------------------------------
# Randomness
# ---------------------------------------------------------------------------

class RngStream:
    """Counter-addressed random stream: (root_seed, stream_index).

    Distinct stream indices under one root seed yield statistically
    independent PCG64 generators (via ``SeedSequence`` spawn keys), so
    parallel path simulation stays reproducible regardless of scheduling.
    ``child(i)`` derives a nested independent stream for per-path use.
    """

    def __init__(self, root_seed: int, stream_index: int = 0, _lineage: tuple = ()):
        if not (0 <= int(root_seed) < 2 ** 64):
            raise ConfigurationError(f"root_seed must be a 64-bit unsigned integer, got {root_seed}")
        if int(stream_index) < 0:
            raise ConfigurationError(f"stream_index must be nonnegative, got {stream_index}")
        self.root_seed = int(root_seed)
        self.stream_index = int(stream_index)
        self._lineage = tuple(_lineage)
        seq = np.random.SeedSequence(
            entropy=self.root_seed, spawn_key=(*self._lineage, self.stream_index)
        )
        self._generator = np.random.Generator(np.random.PCG64(seq))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def child(self, index: int) -> "RngStream":
        """Independent sub-stream addressed below this one."""
        return RngStream(self.root_seed, index, (*self._lineage, self.stream_index))

    def __repr__(self):
        return f"RngStream(root_seed={self.root_seed}, stream_index={self.stream_index})"


# ---------------------------------------------------------------------------
# Time grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeGrid:
    """Discretization 0 = t_0 < ... < t_m = T - epsilon of the transport horizon.

    The final node stops short of the horizon by ``epsilon`` because the
    bridge drift carries a 1/(T - t) factor that blows up at t = T.
    """

    horizon_T: float
    m: int
    epsilon: float
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        T, m, eps = float(self.horizon_T), int(self.m), float(self.epsilon)
        if not (0.0 < eps < T):
            raise ConfigurationError(f"epsilon must satisfy 0 < epsilon < T, got epsilon={eps}, T={T}")
        if m < 1:
            raise ConfigurationError(f"step count m must be positive, got {m}")
        if nodes.ndim != 1 or nodes.size != m + 1:
            raise ConfigurationError(f"expected {m + 1} nodes, got shape {nodes.shape}")
        if nodes[0] != 0.0:
            raise ConfigurationError("grid must start at t=0")
        if abs(nodes[-1] - (T - eps)) > 1e-12 * max(1.0, T):
            raise ConfigurationError("last node must equal T - epsilon")
        if np.any(np.diff(nodes) <= 0.0):
            raise ConfigurationError("nodes must be strictly increasing")
        nodes.flags.writeable = False

    @classmethod
    def uniform(cls, horizon_T: float, m: int, epsilon: float) -> "TimeGrid":
        nodes = np.linspace(0.0, horizon_T - epsilon, m + 1)
        return cls(horizon_T=float(horizon_T), m=int(m), epsilon=float(epsilon), nodes=nodes)

    @property
    def delta(self) -> float:
        """Uniform spacing (T - epsilon)/m.  Meaningful for uniform grids."""
        return (self.horizon_T - self.epsilon) / self.m

    @property
    def steps(self) -> np.ndarray:
        """Per-interval widths, valid for non-uniform grids too."""
        return np.diff(self.nodes)


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

_WEIGHT_TOL = 1e-12


def _check_weights(weights: np.ndarray, what: str) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or weights.size == 0:
        raise ConfigurationError(f"{what}: weights must be a nonempty 1-d array")
    if np.any(weights < 0.0):
        raise ConfigurationError(f"{what}: weights must be nonnegative")
    if abs(weights.sum() - 1.0) > _WEIGHT_TOL:
        raise ConfigurationError(f"{what}: weights must sum to 1 (got {weights.sum()!r})")
    weights.flags.writeable = False
    return weights


@dataclass(frozen=True)
class StandardGaussian:
    """N(0, I) on R^dim."""

    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ConfigurationError(f"dim must be positive, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True)
class GaussianMixture:
    """Mixture of axis-aligned Gaussians: weights (k,), means (k, dim), variances (k, dim)."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        weights = _check_weights(self.weights, "GaussianMixture")
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        variances = np.atleast_2d(np.asarray(self.variances, dtype=float))
        if means.shape[0] != weights.size or variances.shape != means.shape:
            raise ConfigurationError("GaussianMixture: weights, means, variances shapes disagree")
        if np.any(variances <= 0.0):
            raise ConfigurationError("GaussianMixture: variances must be strictly positive")
        means.flags.writeable = False
        variances.flags.writeable = False
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)

    @property
    def dim(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class FiniteAtoms:
    """Finitely supported distribution: points (k, dim) with weights (k,)."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        weights = _check_weights(self.weights, "FiniteAtoms")
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if points.shape[0] != weights.size:
            raise ConfigurationError("FiniteAtoms: number of points and weights disagree")
        points.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


Distribution = StandardGaussian | GaussianMixture | FiniteAtoms


def sample_n(dist: Distribution, n: int, rng: RngStream) -> np.ndarray:
    """n draws from ``dist`` as an (n, dim) array."""
    gen = rng.generator
    if isinstance(dist, StandardGaussian):
        return gen.standard_normal((n, dist.dim))
    if isinstance(dist, GaussianMixture):
        comps = gen.choice(dist.weights.size, size=n, p=dist.weights)
        noise = gen.standard_normal((n, dist.dim))
        return dist.means[comps] + np.sqrt(dist.variances[comps]) * noise
    if isinstance(dist, FiniteAtoms):
        idx = gen.choice(dist.weights.size, size=n, p=dist.weights)
        return dist.points[idx].copy()
    raise ConfigurationError(f"unknown distribution type {type(dist).__name__}")


def sample(dist: Distribution, rng: RngStream) -> np.ndarray:
    """One draw from ``dist`` as a (dim,) vector."""
    return sample_n(dist, 1, rng)[0]


def mean_of(dist: Distribution) -> np.ndarray:
    if isinstance(dist, StandardGaussian):
        return np.zeros(dist.dim)
    if isinstance(dist, GaussianMixture):
        return dist.weights @ dist.means
    if isinstance(dist, FiniteAtoms):
        return dist.weights @ dist.points
    raise ConfigurationError(f"unknown distribution type {type(dist).__name__}")


# ---------------------------------------------------------------------------
# Couplings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IndependentProduct:
    """Product coupling: draws from the two marginals are independent."""

    phi: Distribution
    psi: Distribution

    def __post_init__(self):
        if self.phi.dim != self.psi.dim:
            raise ConfigurationError("coupling marginals must share a dimension")

    @property
    def dim(self) -> int:
        return self.phi.dim


@dataclass(frozen=True)
class PairedAtoms:
    """Index-aligned coupling of two atom sets with identical weights."""

    phi: FiniteAtoms
    psi: FiniteAtoms

    def __post_init__(self):
        if not isinstance(self.phi, FiniteAtoms) or not isinstance(self.psi, FiniteAtoms):
            raise ConfigurationError("PairedAtoms requires FiniteAtoms on both sides")
        if self.phi.weights.size != self.psi.weights.size:
            raise ConfigurationError("PairedAtoms: atom counts differ")
        if not np.array_equal(self.phi.weights, self.psi.weights):
            raise ConfigurationError("PairedAtoms: weights must be identical on both sides")
        if self.phi.dim != self.psi.dim:
            raise ConfigurationError("coupling marginals must share a dimension")

    @property
    def dim(self) -> int:
        return self.phi.dim


Coupling = IndependentProduct | PairedAtoms


def sample_coupling_n(coupling: Coupling, n: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """n paired draws (x, y) as two (n, dim) arrays."""
    if isinstance(coupling, IndependentProduct):
        xs = sample_n(coupling.phi, n, rng)
        ys = sample_n(coupling.psi, n, rng)
        return xs, ys
    if isinstance(coupling, PairedAtoms):
        idx = rng.generator.choice(coupling.phi.weights.size, size=n, p=coupling.phi.weights)
        return coupling.phi.points[idx].copy(), coupling.psi.points[idx].copy()
    raise ConfigurationError(f"unknown coupling type {type(coupling).__name__}")


def sample_coupling(coupling: Coupling, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """One paired draw (x, y); marginals follow the coupling's two sides."""
    xs, ys = sample_coupling_n(coupling, 1, rng)
    return xs[0], ys[0]


def uniform_time(T: float, rng: RngStream) -> float:
    """Uniform draw on [0, T)."""
    if not (T > 0.0):
        raise ConfigurationError(f"horizon must be positive, got {T}")
    return float(rng.generator.uniform(0.0, T))


# ---------------------------------------------------------------------------
# Bridge paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BridgePath:
    """States of one bridge realization on a time grid: states[r] is the value at nodes[r]."""

    grid: TimeGrid
    states: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] != self.grid.m + 1:
            raise ConfigurationError(
                f"states must be (m+1, dim), got {states.shape} for m={self.grid.m}"
            )
        states.flags.writeable = False
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


def as_vector(x, dim: int, what: str = "vector") -> np.ndarray:
    """Coerce scalars/lists to a float (dim,) array, validating length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = np.full(dim, float(arr))
    if arr.shape != (dim,):
        raise ConfigurationError(f"{what}: expected shape ({dim},), got {arr.shape}")
    return arr
