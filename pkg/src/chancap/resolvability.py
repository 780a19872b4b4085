"""Uniform-random-number encoders and the variational distance between the
output they induce and a target output law.

A codebook of ``M`` input words is drawn i.i.d. (with replacement) from an
n-letter input law; feeding a uniform index through it and then through the
channel gives ``Ytilde``, which is compared against the output ``Y`` of the
input law itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .channels import (
    CostFunction,
    DiscreteChannel,
    GaussianChannel,
    GaussianMixture,
    apply_memoryless,
    check_constraint,
    product_law,
)
from .errors import DimensionMismatchError, EnumerationTooLargeError, PreconditionError

# exact output enumeration is limited to 2**16 binary words
MAX_EXACT_OUTPUTS = 2**16
MAX_CODEBOOK = 10**7


@dataclass(frozen=True, eq=False)
class ResolvabilityEncoder:
    """Multiset of ``M`` codewords, each used with probability ``1/M``.

    ``codewords`` has shape ``(M, n)``: letter indices for discrete channels,
    real words for Gaussian ones.
    """

    codewords: np.ndarray
    n: int
    cost: CostFunction | None = None
    gamma: float | None = None

    def __post_init__(self):
        cw = np.asarray(self.codewords)
        if cw.ndim != 2 or cw.shape[1] != self.n or cw.shape[0] < 1:
            raise DimensionMismatchError(f"codewords must have shape (M, {self.n})")
        if self.cost is not None:
            for word in cw:
                if not check_constraint(self.cost, self.gamma, word):
                    raise PreconditionError(f"codeword {word.tolist()} violates the cost constraint")
        cw = cw.copy()
        cw.setflags(write=False)
        object.__setattr__(self, "codewords", cw)

    @property
    def M(self) -> int:
        return self.codewords.shape[0]

    @property
    def rate(self) -> float:
        return math.log(self.M) / self.n

    def input_histogram(self, input_size: int) -> np.ndarray:
        """Law of the encoder output ``X~`` over the ``input_size**n`` words."""
        idx = np.ravel_multi_index(self.codewords.T.astype(np.int64), (input_size,) * self.n)
        return np.bincount(idx, minlength=input_size**self.n) / self.M


@dataclass(frozen=True)
class ApproximationReport:
    target_rate: float
    requested_rate: float
    M: int
    n: int
    tv: float
    seed: int
    trials: int = 1
    extra: dict = field(default_factory=dict, compare=False)


def codebook_size(rate: float, n: int) -> int:
    """``ceil(exp(n R))``, snapped to the nearest integer when within 1e-9
    relative, so that e.g. ``R = log 2`` gives exactly ``2**n``."""
    if rate < 0:
        raise PreconditionError(f"rate must be non-negative, got {rate}")
    x = math.exp(n * rate)
    if x > MAX_CODEBOOK:
        raise EnumerationTooLargeError(f"codebook of size {x:.3g} exceeds {MAX_CODEBOOK}")
    near = round(x)
    if near >= 1 and abs(x - near) <= 1e-9 * x:
        return int(near)
    return int(math.ceil(x))


def encoder_output_law(enc: ResolvabilityEncoder, channel):
    """Exact law of ``Ytilde^n = (1/M) sum_j W^n(.|phi(j))``.

    Dense vector over output words for discrete channels; a Gaussian mixture
    for Gaussian channels.
    """
    if isinstance(channel, DiscreteChannel):
        if channel.output_size**enc.n > MAX_EXACT_OUTPUTS or channel.input_size**enc.n > MAX_EXACT_OUTPUTS:
            raise EnumerationTooLargeError(
                "output space too large for exact representation; use sampled_tv instead"
            )
        hist = enc.input_histogram(channel.input_size)
        return apply_memoryless(channel.transitions, hist, enc.n)
    if isinstance(channel, GaussianChannel):
        if channel.n != enc.n:
            channel = channel.extend(enc.n)
        words, counts = np.unique(enc.codewords, axis=0, return_counts=True)
        cov = channel.noise_power if channel.is_white else channel.covariance
        return GaussianMixture(words.astype(float), counts / enc.M, cov)
    raise PreconditionError(f"unsupported channel type {type(channel).__name__}")


def _letter_law(channel: DiscreteChannel, input_law) -> np.ndarray:
    p = np.asarray(input_law, dtype=float).ravel()
    if p.size != channel.input_size:
        raise DimensionMismatchError(f"letter law has {p.size} entries, alphabet has {channel.input_size}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise PreconditionError("input law is not a probability vector")
    return p


def _feasible_mask(channel: DiscreteChannel, n: int, cost, gamma) -> np.ndarray | None:
    if cost is None:
        return None
    if gamma is None:
        raise PreconditionError("a cost function needs a budget gamma")
    words = np.array(np.unravel_index(np.arange(channel.input_size**n), (channel.input_size,) * n)).T
    return np.array([check_constraint(cost, gamma, w) for w in words])


def target_input_law(channel: DiscreteChannel, input_law, n: int, cost=None, gamma=None) -> np.ndarray:
    """``P^n`` over input words, conditioned on the feasible set when a
    constraint is given."""
    law = product_law(_letter_law(channel, input_law), n)
    mask = _feasible_mask(channel, n, cost, gamma)
    if mask is not None:
        law = np.where(mask, law, 0.0)
        total = law.sum()
        if not total > 0:
            raise PreconditionError("input law puts no mass on feasible words")
        law = law / total
    return law


def random_binning_experiment(input_law, channel: DiscreteChannel, rate: float, n: int, seed: int,
                              cost: CostFunction | None = None, gamma: float | None = None) -> ApproximationReport:
    """Draw ``M = ceil(exp(n R))`` codewords i.i.d. from the n-letter input
    law and report the exact ``d(Y^n, Ytilde^n)``.

    ``input_law`` is the single-letter law; with ``cost``/``gamma`` the n-letter
    law is restricted to feasible words so every codeword is feasible.
    """
    if not isinstance(channel, DiscreteChannel):
        raise PreconditionError("random binning runs on discrete channels")
    if channel.output_size**n > MAX_EXACT_OUTPUTS or channel.input_size**n > MAX_EXACT_OUTPUTS:
        raise EnumerationTooLargeError(f"n={n} is beyond exact enumeration; use sampled_tv")
    M = codebook_size(rate, n)
    law = target_input_law(channel, input_law, n, cost, gamma)
    rng = np.random.default_rng(seed)
    idx = rng.choice(law.size, size=M, p=law)
    words = np.array(np.unravel_index(idx, (channel.input_size,) * n)).T
    enc = ResolvabilityEncoder(words, n, cost, gamma)
    W = channel.transitions
    target = apply_memoryless(W, law, n)
    approx = encoder_output_law(enc, channel)
    tv = float(np.abs(target - approx).sum())
    return ApproximationReport(enc.rate, float(rate), M, n, min(tv, 2.0), int(seed))


def _seed_list(seeds) -> list[int]:
    if isinstance(seeds, int | np.integer):
        return list(range(int(seeds)))
    return sorted(int(s) for s in seeds)


def resolvability_curve(input_law, channel, rates, n: int, seeds, cost=None, gamma=None) -> list[tuple]:
    """Rows ``(rate_nats, median_tv, min_tv, max_tv)`` over the given seeds.

    ``seeds`` is either a count ``K`` (seeds ``0..K-1``) or an explicit list.
    """
    seed_list = _seed_list(seeds)
    if not seed_list:
        raise PreconditionError("need at least one seed")
    rows = []
    for R in rates:
        tvs = np.array([random_binning_experiment(input_law, channel, R, n, s, cost, gamma).tv
                        for s in seed_list])
        rows.append((float(R), float(np.median(tvs)), float(tvs.min()), float(tvs.max())))
    return rows


def sampled_tv(enc: ResolvabilityEncoder, channel: DiscreteChannel, input_law, samples: int, seed: int,
               confidence: float = 0.95) -> tuple[float, float]:
    """Monte-Carlo estimate of ``d(Y^n, Ytilde^n)`` for large ``n``.

    Uses ``d = E_Y |1 - Ytilde(Y)/Y(Y)|`` with both densities evaluated
    exactly at each sample, which is unbiased. Returns the estimate and a
    normal-approximation half-width. Not used for any exact claim.
    """
    p = _letter_law(channel, input_law)
    W = channel.transitions
    n = enc.n
    q = p @ W
    rng = np.random.default_rng(seed)
    x = rng.choice(p.size, size=(samples, n), p=p)
    cdf = np.cumsum(W, axis=1)
    cdf[:, -1] = 1.0
    y = (rng.random((samples, n))[..., None] >= cdf[x]).sum(axis=-1)
    with np.errstate(divide="ignore"):
        logW = np.log(W)
    log_py = np.log(q)[y].sum(axis=1)
    cw = enc.codewords.astype(np.int64)
    ratios = np.empty(samples)
    for k in range(samples):
        lw = logW[cw, y[k]].sum(axis=1)
        top = lw.max()
        log_qy = top + math.log(np.exp(lw - top).sum()) - math.log(enc.M) if np.isfinite(top) else -np.inf
        ratios[k] = math.exp(log_qy - log_py[k])
    vals = np.abs(1.0 - ratios)
    est = float(vals.mean())
    half = float(stats.norm.ppf(0.5 + confidence / 2) * vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf
    return est, half
