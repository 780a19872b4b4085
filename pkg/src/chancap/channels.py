"""Channel models, cost functions and the cost constraint.

A channel instance always carries its blocklength ``n``; the n-letter law of
a :class:`DiscreteChannel` is the memoryless product of its single-letter
matrix, and a :class:`GaussianChannel` is either white (``noise_power``) or
colored (a :class:`~chancap.gaussian.ToeplitzCovariance`).

Discrete input and output words are enumerated in C order with the first
letter most significant, so word ``(x_1, ..., x_n)`` has index
``np.ravel_multi_index(x, (|X|,) * n)``. Every dense distribution over words
in this package uses that indexing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EnumerationTooLargeError,
    NotPositiveDefiniteError,
    PreconditionError,
    UnsupportedError,
)
from .gaussian import ToeplitzCovariance, build_toeplitz

ROW_SUM_TOL = 1e-12
# Largest word space we are willing to materialise as a dense vector.
MAX_ENUMERATION = 2**20
# Relative slack when comparing a per-letter cost against Gamma; absorbs the
# rounding in e.g. sqrt(n P)**2.
COST_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteChannel:
    transitions: np.ndarray
    n: int = 1

    def __post_init__(self):
        W = np.array(self.transitions, dtype=float)
        if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
            raise PreconditionError("transition matrix must be a non-empty 2-D array")
        if np.any(W < 0) or np.any(W > 1):
            raise PreconditionError("transition probabilities must lie in [0, 1]")
        sums = W.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise PreconditionError(f"row {bad} sums to {sums[bad]!r}, not 1")
        if int(self.n) < 1:
            raise PreconditionError(f"blocklength must be >= 1, got {self.n}")
        W.setflags(write=False)
        object.__setattr__(self, "transitions", W)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def bsc(cls, p: float, n: int = 1) -> "DiscreteChannel":
        if not 0.0 <= p <= 1.0:
            raise PreconditionError(f"crossover probability must be in [0, 1], got {p}")
        return cls(np.array([[1.0 - p, p], [p, 1.0 - p]]), n)

    @classmethod
    def noiseless(cls, size: int = 2, n: int = 1) -> "DiscreteChannel":
        return cls(np.eye(size), n)

    @property
    def input_size(self) -> int:
        return self.transitions.shape[0]

    @property
    def output_size(self) -> int:
        return self.transitions.shape[1]

    @property
    def input_space_size(self) -> int:
        return self.input_size**self.n

    @property
    def output_space_size(self) -> int:
        return self.output_size**self.n

    def extend(self, n: int) -> "DiscreteChannel":
        return DiscreteChannel(self.transitions, n)

    def word_index(self, word, alphabet: str = "input") -> int:
        size = self.input_size if alphabet == "input" else self.output_size
        word = _check_word(word, self.n)
        return int(np.ravel_multi_index(tuple(int(a) for a in word), (size,) * self.n))


@dataclass(frozen=True, eq=False)
class GaussianChannel:
    """Additive Gaussian noise channel of blocklength ``n``.

    Exactly one of ``noise_power`` (white) or ``covariance`` (colored) is set.
    """

    noise_power: float | None = None
    covariance: ToeplitzCovariance | None = None
    n: int = 1

    def __post_init__(self):
        if (self.noise_power is None) == (self.covariance is None):
            raise PreconditionError("give exactly one of noise_power or covariance")
        if self.noise_power is not None:
            if not self.noise_power > 0:
                raise PreconditionError(f"noise power must be positive, got {self.noise_power}")
            object.__setattr__(self, "noise_power", float(self.noise_power))
        else:
            if self.covariance.n != self.n:
                object.__setattr__(self, "n", self.covariance.n)
            if not self.covariance.min_eigenvalue > 0:
                raise NotPositiveDefiniteError("covariance has a non-positive eigenvalue")
        if int(self.n) < 1:
            raise PreconditionError(f"blocklength must be >= 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def awgn(cls, noise_power: float, n: int = 1) -> "GaussianChannel":
        return cls(noise_power=noise_power, n=n)

    @classmethod
    def anwgn(cls, autocorr, n: int) -> "GaussianChannel":
        return cls(covariance=build_toeplitz(autocorr, n), n=n)

    @property
    def is_white(self) -> bool:
        return self.covariance is None

    @property
    def noise_levels(self) -> np.ndarray:
        """Per-dimension noise variances after whitening."""
        if self.is_white:
            return np.full(self.n, self.noise_power)
        return np.asarray(self.covariance.eigenvalues)

    def noise_matrix(self) -> np.ndarray:
        if self.is_white:
            return self.noise_power * np.eye(self.n)
        return np.asarray(self.covariance.matrix)

    def extend(self, n: int) -> "GaussianChannel":
        if self.is_white:
            return GaussianChannel(noise_power=self.noise_power, n=n)
        return GaussianChannel(covariance=self.covariance.extend(n), n=n)


ChannelModel = DiscreteChannel | GaussianChannel


@dataclass(frozen=True)
class CostFunction:
    """Additive per-letter cost, or an arbitrary word cost ``c_n``.

    ``kind`` is ``"power"`` (``c(x) = x**2``), ``"additive"`` (table lookup
    for discrete letters) or ``"custom"`` (``func`` maps a whole word to
    ``c_n(x)``).
    """

    kind: str = "power"
    letter_costs: tuple | None = None
    func: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("power", "additive", "custom"):
            raise PreconditionError(f"unknown cost kind {self.kind!r}")
        if self.kind == "additive":
            if self.letter_costs is None:
                raise PreconditionError("additive cost needs letter_costs")
            object.__setattr__(self, "letter_costs", tuple(float(c) for c in self.letter_costs))
        if self.kind == "custom" and self.func is None:
            raise PreconditionError("custom cost needs func")

    @classmethod
    def power(cls) -> "CostFunction":
        return cls("power")

    @classmethod
    def additive(cls, letter_costs: Sequence[float]) -> "CostFunction":
        return cls("additive", tuple(letter_costs))

    @classmethod
    def custom(cls, func: Callable) -> "CostFunction":
        return cls("custom", func=func)

    def total(self, x) -> float:
        """``c_n(x)``."""
        if self.kind == "power":
            a = np.asarray(x, dtype=float)
            return float(np.dot(a.ravel(), a.ravel()))
        if self.kind == "additive":
            table = np.asarray(self.letter_costs)
            return float(np.sum(table[np.asarray(x, dtype=int)]))
        return float(self.func(x))

    def per_letter(self, x) -> float:
        n = len(x)
        if n == 0:
            raise PreconditionError("empty input word")
        return self.total(x) / n


def check_constraint(cost: CostFunction, gamma: float, x) -> bool:
    """True iff ``(1/n) c_n(x) <= gamma``."""
    return cost.per_letter(x) <= gamma + COST_RTOL * max(1.0, abs(gamma))


@dataclass(frozen=True)
class ConstraintSet:
    """The feasible set ``{x : (1/n) c_n(x) <= gamma}``."""

    cost: CostFunction
    gamma: float

    def contains(self, x) -> bool:
        return check_constraint(self.cost, self.gamma, x)

    def cube_half_width(self, n: int) -> float:
        """Half the edge of the cube that covers the set (power cost only)."""
        if self.cost.kind != "power":
            raise UnsupportedError("covering cube is only defined for the power cost")
        if self.gamma < 0:
            raise PreconditionError("negative power budget")
        return math.sqrt(n * self.gamma)

    def cube_edge(self, n: int) -> float:
        return 2.0 * self.cube_half_width(n)


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    """Finitely many atoms ``points[j]`` in R^n with probabilities ``masses[j]``."""

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        m = np.array(self.masses, dtype=float).ravel()
        if pts.ndim != 2 or pts.shape[0] != m.size or m.size == 0:
            raise PreconditionError("points must be (k, n) with k matching masses")
        if np.any(m < 0) or abs(m.sum() - 1.0) > 1e-12:
            raise PreconditionError(f"masses must be a probability vector (sum={m.sum()!r})")
        pts.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", m)

    @classmethod
    def point_mass(cls, x) -> "FiniteDistribution":
        return cls(np.atleast_2d(np.asarray(x, dtype=float)), [1.0])

    @property
    def n(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Output law ``sum_j w_j N(means[j], cov)`` of a Gaussian channel.

    ``cov`` is either a scalar (white, ``N I``) or a ToeplitzCovariance.
    """

    means: np.ndarray
    weights: np.ndarray
    cov: float | ToeplitzCovariance

    @property
    def n(self) -> int:
        return self.means.shape[1]

    def _noise_levels(self) -> np.ndarray:
        if isinstance(self.cov, ToeplitzCovariance):
            return np.asarray(self.cov.eigenvalues)
        return np.full(self.n, float(self.cov))

    def standardized(self) -> "GaussianMixture":
        """Map to whitened unit-variance coordinates.

        The map is linear and invertible, hence preserves variational
        distance between two mixtures sharing the same noise.
        """
        means = self.means
        if isinstance(self.cov, ToeplitzCovariance):
            means = means @ self.cov.eigenbasis
        means = means / np.sqrt(self._noise_levels())
        return GaussianMixture(means, self.weights, 1.0)

    def pdf(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.n:
            raise DimensionMismatchError(f"points must have last axis {self.n}")
        flat = y.reshape(-1, self.n)
        d = flat[:, None, :] - self.means[None, :, :]
        if isinstance(self.cov, ToeplitzCovariance):
            q = self.cov.quad_inverse(d)
            logdet = self.cov.logdet()
        else:
            q = np.sum(d * d, axis=-1) / float(self.cov)
            logdet = self.n * math.log(float(self.cov))
        dens = np.exp(-0.5 * q - 0.5 * (self.n * math.log(2 * math.pi) + logdet)) @ self.weights
        return dens.reshape(y.shape[:-1])

    def total_mass(self) -> float:
        return float(self.weights.sum())


def _check_word(x, n: int) -> np.ndarray:
    a = np.asarray(x)
    if a.ndim == 0:
        a = a[None]
    if a.shape != (n,):
        raise DimensionMismatchError(f"expected a word of length {n}, got shape {a.shape}")
    return a


def transition_prob(channel: ChannelModel, x, y) -> float:
    """``W^n(y|x)``: a probability (discrete) or a density (Gaussian)."""
    if isinstance(channel, DiscreteChannel):
        xa = _check_word(x, channel.n).astype(int)
        ya = _check_word(y, channel.n).astype(int)
        return float(np.prod(channel.transitions[xa, ya]))
    return float(np.exp(log_transition_density(channel, x, y)))


def log_transition_density(channel: GaussianChannel, x, y) -> np.ndarray | float:
    """Log of the Gaussian transition density; broadcasts over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if y.ndim == 0:
        y = y[None]
    if x.shape[-1] != channel.n or y.shape[-1] != channel.n:
        raise DimensionMismatchError(f"words must have length {channel.n}")
    d = y - x
    n = channel.n
    if channel.is_white:
        N = channel.noise_power
        out = -0.5 * np.sum(d * d, axis=-1) / N - 0.5 * n * math.log(2 * math.pi * N)
    else:
        cov = channel.covariance
        out = -0.5 * cov.quad_inverse(d) - 0.5 * (n * math.log(2 * math.pi) + cov.logdet())
    return float(out) if np.ndim(out) == 0 else out


def _ensure_enumerable(size: int, what: str):
    if size > MAX_ENUMERATION:
        raise EnumerationTooLargeError(
            f"{what} has {size} words, above the exact-enumeration limit {MAX_ENUMERATION}"
        )


def apply_memoryless(W: np.ndarray, dist: np.ndarray, n: int) -> np.ndarray:
    """Push a dense distribution over ``|X|**n`` words through ``W^{(x)n}``.

    Applies the single-letter matrix along each of the ``n`` tensor axes,
    which costs ``O(n |X|^n |Y|)`` instead of the ``|X|^n |Y|^n`` dense
    product.
    """
    nx, ny = W.shape
    t = np.asarray(dist, dtype=float).reshape((nx,) * n)
    for axis in range(n):
        t = np.moveaxis(np.tensordot(t, W, axes=([axis], [0])), -1, axis)
    return t.reshape(ny**n)


def product_law(letter_law, n: int) -> np.ndarray:
    """Dense i.i.d. law ``P^{(x)n}`` over words, in the package's word order."""
    p = np.asarray(letter_law, dtype=float).ravel()
    out = np.ones(1)
    for _ in range(n):
        out = np.outer(out, p).ravel()
    return out


def input_law_vector(channel: DiscreteChannel, Q) -> np.ndarray:
    """Normalise a discrete input law to a dense vector over ``|X|**n`` words.

    ``Q`` may be a dense vector of that length, or a mapping from words
    (tuples of letters) to probabilities.
    """
    size = channel.input_space_size
    _ensure_enumerable(size, "input space")
    if isinstance(Q, dict):
        vec = np.zeros(size)
        for word, prob in Q.items():
            vec[channel.word_index(word)] += prob
    else:
        vec = np.asarray(Q, dtype=float).ravel()
        if vec.size != size:
            raise DimensionMismatchError(f"input law has {vec.size} entries, expected {size}")
    if np.any(vec < 0) or abs(vec.sum() - 1.0) > 1e-12:
        raise PreconditionError(f"input law is not a probability vector (sum={vec.sum()!r})")
    return vec


def push_forward(Q, channel: ChannelModel):
    """Output law ``QW^n(y) = sum_x Q(x) W^n(y|x)``.

    Discrete channels return a dense vector over the ``|Y|**n`` output words.
    Gaussian channels accept a :class:`FiniteDistribution` and return the
    corresponding :class:`GaussianMixture`.
    """
    if isinstance(channel, DiscreteChannel):
        _ensure_enumerable(channel.output_space_size, "output space")
        vec = input_law_vector(channel, Q)
        return apply_memoryless(channel.transitions, vec, channel.n)
    if not isinstance(Q, FiniteDistribution):
        raise UnsupportedError(
            "Gaussian push-forward needs a finitely supported input; quantize it first"
        )
    if Q.n != channel.n:
        raise DimensionMismatchError(f"input law lives in R^{Q.n}, channel has n={channel.n}")
    cov = channel.noise_power if channel.is_white else channel.covariance
    return GaussianMixture(Q.points, Q.masses, cov)


def sample_output(channel: ChannelModel, x, rng_seed) -> np.ndarray:
    """Draw ``Y ~ W^n(.|x)``; ``x`` may be a single word or a stack of words."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    if isinstance(channel, DiscreteChannel):
        xa = np.asarray(x, dtype=int)
        if xa.shape[-1] != channel.n:
            raise DimensionMismatchError(f"words must have length {channel.n}")
        cdf = np.cumsum(channel.transitions, axis=1)
        cdf[:, -1] = 1.0
        u = rng.random(xa.shape)
        return (u[..., None] >= cdf[xa]).sum(axis=-1)
    xa = np.asarray(x, dtype=float)
    if xa.shape[-1] != channel.n:
        raise DimensionMismatchError(f"words must have length {channel.n}")
    if channel.is_white:
        z = rng.standard_normal(xa.shape) * math.sqrt(channel.noise_power)
    else:
        cov = channel.covariance
        z = (rng.standard_normal(xa.shape) * np.sqrt(cov.eigenvalues)) @ cov.eigenbasis.T
    return xa + z
