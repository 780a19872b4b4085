"""Information density, its finite-n spectral statistics, and the
cost-constrained capacity of a discrete memoryless channel.

The probabilistic liminf / limsup of the normalized information density are
asymptotic objects; here they are replaced by empirical tail quantiles of a
finite-n sample (``spectral_inf`` / ``spectral_sup``) that can be tracked
over increasing ``n`` with :func:`spectral_trend`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channels import (
    DiscreteChannel,
    GaussianChannel,
    input_law_vector,
    log_transition_density,
    push_forward,
)
from .errors import InfeasibleConstraintError, OutsideSupportError, PreconditionError, UnsupportedError

DEFAULT_TOL = 1e-9
MAX_ITER = 100_000
# trials handled per independent random stream
STREAM_CHUNK = 256


@dataclass(frozen=True)
class GaussianInput:
    """i.i.d. ``N(0, power)`` input letters for a Gaussian channel."""

    power: float

    def __post_init__(self):
        if self.power < 0:
            raise PreconditionError(f"input power must be non-negative, got {self.power}")


@dataclass(frozen=True, eq=False)
class InfoDensitySamples:
    n: int
    values: np.ndarray
    seed: int | None
    input_law: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 1:
            raise PreconditionError("sample set is empty")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("information density samples must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std_error(self) -> float:
        if self.values.size < 2:
            return float("inf")
        return float(np.std(self.values, ddof=1) / math.sqrt(self.values.size))


@dataclass(frozen=True, eq=False)
class CapacityResult:
    capacity: float
    optimal_input: np.ndarray
    multiplier_state: float | None
    iterations: int
    residual: float
    converged: bool = True

    def as_dict(self) -> dict:
        return {
            "capacity": self.capacity,
            "input": [float(p) for p in self.optimal_input],
            "residual": self.residual,
            "iterations": self.iterations,
        }


def _letter_law(channel: DiscreteChannel, input_law) -> np.ndarray:
    p = np.asarray(input_law, dtype=float).ravel()
    if p.size != channel.input_size:
        raise PreconditionError(f"single-letter law needs {channel.input_size} entries, got {p.size}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise PreconditionError("input law is not a probability vector")
    return p


def _describe(input_law) -> str:
    if isinstance(input_law, GaussianInput):
        return f"iid N(0, {input_law.power!r})"
    p = np.asarray(input_law, dtype=float).ravel()
    return "iid " + "[" + ", ".join(repr(float(a)) for a in p) + "]"


def _log_ratio_table(channel: DiscreteChannel, p: np.ndarray) -> np.ndarray:
    """``log W(y|x) - log (pW)(y)``; ``-inf`` where ``W(y|x) = 0``."""
    W = channel.transitions
    q = p @ W
    with np.errstate(divide="ignore"):
        return np.log(W) - np.log(q)[None, :]


def info_density(channel, input_law, x, y) -> float:
    """Normalized information density ``(1/n) log W^n(y|x) / P_{Y^n}(y)``.

    ``input_law`` is a single-letter law (i.i.d. input), a dense law over all
    ``|X|**n`` input words, or a :class:`GaussianInput` on Gaussian channels.
    """
    n = channel.n
    if isinstance(channel, DiscreteChannel):
        xa = np.asarray(x, dtype=int).reshape(-1)
        ya = np.asarray(y, dtype=int).reshape(-1)
        if xa.size != n or ya.size != n:
            raise PreconditionError(f"words must have length {n}")
        law = np.asarray(input_law, dtype=float).ravel()
        if law.size == channel.input_size:
            p = _letter_law(channel, law)
            q = p @ channel.transitions
            py = q[ya]
            if np.any(py == 0):
                raise OutsideSupportError(f"output word {tuple(ya)} has zero probability")
            w = channel.transitions[xa, ya]
            with np.errstate(divide="ignore"):
                return float(np.sum(np.log(w) - np.log(py)) / n)
        out = push_forward(input_law_vector(channel, law), channel)
        py = out[channel.word_index(ya, "output")]
        if py == 0:
            raise OutsideSupportError(f"output word {tuple(ya)} has zero probability")
        w = float(np.prod(channel.transitions[xa, ya]))
        with np.errstate(divide="ignore"):
            return float((math.log(w) if w > 0 else -math.inf) - math.log(py)) / n
    if not isinstance(input_law, GaussianInput):
        raise UnsupportedError("Gaussian channels support GaussianInput laws only")
    return float(_gaussian_density_values(channel, input_law.power, np.asarray(x, float), np.asarray(y, float)))


def _gaussian_density_values(channel: GaussianChannel, power: float, x, y):
    n = channel.n
    logw = log_transition_density(channel, x, y)
    # output law: N(0, power I + V_n), diagonal in the noise eigenbasis
    if channel.is_white:
        s = power + channel.noise_power
        logp = -0.5 * np.sum(y * y, axis=-1) / s - 0.5 * n * math.log(2 * math.pi * s)
    else:
        cov = channel.covariance
        lev = power + np.asarray(cov.eigenvalues)
        t = y @ cov.eigenbasis
        logp = -0.5 * np.sum(t * t / lev, axis=-1) - 0.5 * (n * math.log(2 * math.pi) + np.sum(np.log(lev)))
    return (logw - logp) / n


def _discrete_chunk(W_cdf, uniq_idx, n_uniq, p_cdf, n, trials, rng):
    x = (rng.random((trials, n))[..., None] >= p_cdf).sum(axis=-1)
    u = rng.random((trials, n))
    y = (u[..., None] >= W_cdf[x]).sum(axis=-1)
    codes = uniq_idx[x, y] + n_uniq * np.arange(trials)[:, None]
    # counting distinct log-ratio values keeps degenerate cases exact
    counts = np.bincount(codes.ravel(), minlength=trials * n_uniq).reshape(trials, n_uniq)
    return counts / n


def sample_info_density(channel, input_law, n: int, trials: int, seed: int) -> InfoDensitySamples:
    """Draw ``trials`` i.i.d. realizations of the normalized information density.

    Trials are split into fixed chunks, each driven by its own child of
    ``SeedSequence(seed)``; chunk results are concatenated in stream order so
    the output does not depend on how the chunks are scheduled.
    """
    if trials < 1:
        raise PreconditionError("need at least one trial")
    if n < 1:
        raise PreconditionError("blocklength must be >= 1")
    channel = channel.extend(n)
    n_streams = -(-trials // STREAM_CHUNK)
    streams = np.random.SeedSequence(seed).spawn(n_streams)
    parts = []
    if isinstance(channel, DiscreteChannel):
        p = _letter_law(channel, input_law)
        table = _log_ratio_table(channel, p)
        uniq, inv = np.unique(table, return_inverse=True)
        uniq_idx = inv.reshape(table.shape)
        W_cdf = np.cumsum(channel.transitions, axis=1)
        W_cdf[:, -1] = 1.0
        p_cdf = np.cumsum(p)
        p_cdf[-1] = 1.0
        for k, ss in enumerate(streams):
            m = min(STREAM_CHUNK, trials - k * STREAM_CHUNK)
            freq = _discrete_chunk(W_cdf, uniq_idx, uniq.size, p_cdf, n, m, np.random.default_rng(ss))
            finite = np.isfinite(uniq)
            parts.append(freq[:, finite] @ uniq[finite])
    else:
        if not isinstance(input_law, GaussianInput):
            raise UnsupportedError("Gaussian channels support GaussianInput laws only")
        for k, ss in enumerate(streams):
            m = min(STREAM_CHUNK, trials - k * STREAM_CHUNK)
            rng = np.random.default_rng(ss)
            x = rng.standard_normal((m, n)) * math.sqrt(input_law.power)
            if channel.is_white:
                z = rng.standard_normal((m, n)) * math.sqrt(channel.noise_power)
            else:
                cov = channel.covariance
                z = (rng.standard_normal((m, n)) * np.sqrt(cov.eigenvalues)) @ cov.eigenbasis.T
            parts.append(_gaussian_density_values(channel, input_law.power, x, x + z))
    return InfoDensitySamples(n, np.concatenate(parts), seed, _describe(input_law))


def _values(samples) -> np.ndarray:
    v = samples.values if isinstance(samples, InfoDensitySamples) else np.asarray(samples, dtype=float).ravel()
    if v.size == 0:
        raise PreconditionError("sample set is empty")
    return v


def _check_tau(tau: float):
    if not 0.0 < tau < 1.0:
        raise PreconditionError(f"tail probability must be in (0, 1), got {tau}")


def spectral_inf(samples, tail_prob: float) -> float:
    """Smallest sample value whose empirical CDF exceeds ``tail_prob``."""
    _check_tau(tail_prob)
    v = np.sort(_values(samples))
    return float(v[int(math.floor(tail_prob * v.size))])


def spectral_sup(samples, tail_prob: float) -> float:
    """Largest sample value whose empirical survival ``Pr{Z >= v}`` exceeds ``tail_prob``.

    Mirror image of :func:`spectral_inf`; the pair is ordered
    (``inf <= sup``) whenever ``tail_prob < 1/2``.
    """
    _check_tau(tail_prob)
    v = np.sort(_values(samples))
    return float(v[v.size - 1 - int(math.floor(tail_prob * v.size))])


def j_curve(samples, R) -> float | np.ndarray:
    """Empirical ``Pr{density <= R}``; vectorised over ``R``."""
    v = np.sort(_values(samples))
    r = np.asarray(R, dtype=float)
    out = np.searchsorted(v, r, side="right") / v.size
    return float(out) if out.ndim == 0 else out


def spectral_trend(channel, input_law, n_list, trials: int, seed: int, tail_prob: float = 0.05):
    """Rows ``(n, mean, spectral_inf, spectral_sup)`` over increasing ``n``."""
    rows = []
    for i, n in enumerate(n_list):
        s = sample_info_density(channel, input_law, int(n), trials, seed + i)
        rows.append((int(n), s.mean, spectral_inf(s, tail_prob), spectral_sup(s, tail_prob)))
    return rows


def mutual_information(p, W) -> float:
    """``I(X;Y)`` in nats for input law ``p`` and channel matrix ``W``."""
    p = np.asarray(p, dtype=float)
    W = np.asarray(W, dtype=float)
    q = p @ W
    joint = p[:, None] * W
    mask = joint > 0
    return float(np.sum(joint[mask] * np.log(W[mask] / np.broadcast_to(q, W.shape)[mask])))


def _divergences(W, q) -> np.ndarray:
    """``D(W(.|x) || q)`` for every input letter."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(W > 0, W * (np.log(W) - np.log(q)[None, :]), 0.0)
    return terms.sum(axis=1)


def _blahut_arimoto(W, c, s, p0, tol, max_iter):
    """Maximise ``I(p) - s E_p c`` by alternating maximisation.

    Returns ``(p, lower, upper, iterations)`` where ``[lower, upper]``
    brackets the optimal value.
    """
    p = p0.copy()
    lower = upper = 0.0
    it = 0
    while True:
        q = p @ W
        e = _divergences(W, q) - s * c
        lower = float(p @ e)
        upper = float(e.max())
        if upper - lower <= tol or it >= max_iter:
            break
        z = p * np.exp(e - e.max())
        p = z / z.sum()
        it += 1
    return p, lower, upper, it


def _dual_bound(W, c, s, q, gamma) -> float:
    """Upper bound ``max_x [D(W_x||q) - s c_x] + s gamma`` on the constrained capacity."""
    return float((_divergences(W, q) - s * c).max() + s * gamma)


def constrained_capacity_dmc(
    channel: DiscreteChannel,
    cost,
    gamma: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
) -> CapacityResult:
    """Capacity ``max_{E c(X) <= gamma} I(X;Y)`` of a discrete memoryless channel.

    Bisects the cost multiplier ``s`` around a Blahut-Arimoto inner loop, then
    mixes the two bracketing inputs so that the cost constraint is met with
    equality. ``residual`` is a certified duality gap: the distance from the
    reported capacity to an upper bound ``max_x [D(W_x || q) - s c_x] + s gamma``.
    """
    W = np.asarray(channel.transitions, dtype=float)
    nx = W.shape[0]
    c = np.zeros(nx) if cost is None else np.asarray(getattr(cost, "letter_costs", cost), dtype=float).ravel()
    if c.size != nx:
        raise PreconditionError(f"need {nx} letter costs, got {c.size}")
    c_min = float(c.min())
    slack = 1e-12 * max(1.0, abs(gamma))
    if gamma < c_min - slack:
        raise InfeasibleConstraintError(f"gamma={gamma} is below the cheapest letter cost {c_min}")
    inner_tol = tol / 10.0
    total_iter = 0

    def finish(p, s, upper_bound, iters):
        cap = mutual_information(p, W)
        residual = max(0.0, upper_bound - cap)
        converged = residual < tol
        if not converged:
            warnings.warn(f"constrained capacity did not converge: residual {residual:.3e}", RuntimeWarning)
        return CapacityResult(max(cap, 0.0), p, s, iters, residual, converged)

    cheapest = c <= c_min + slack
    if gamma <= c_min + slack or np.all(cheapest):
        # only the cheapest letters are feasible: unconstrained problem on them
        sub = W[cheapest]
        p_sub, lo, up, it = _blahut_arimoto(sub, np.zeros(sub.shape[0]), 0.0,
                                            np.full(sub.shape[0], 1.0 / sub.shape[0]), inner_tol, max_iter)
        p = np.zeros(nx)
        p[cheapest] = p_sub
        bound = float(_divergences(sub, p_sub @ sub).max())
        s = None if not np.all(cheapest) else 0.0
        return finish(p, s, bound, it)

    p0 = np.full(nx, 1.0 / nx)
    p, lo, up, it = _blahut_arimoto(W, c, 0.0, p0, inner_tol, max_iter)
    total_iter += it
    if float(p @ c) <= gamma + slack:
        return finish(p, 0.0, _dual_bound(W, c, 0.0, p @ W, gamma), total_iter)

    s_lo, p_lo = 0.0, p
    s_hi = 1.0
    while True:
        p_hi, _, _, it = _blahut_arimoto(W, c, s_hi, p_lo, inner_tol, max_iter)
        total_iter += it
        if float(p_hi @ c) <= gamma:
            break
        s_lo, p_lo = s_hi, p_hi
        s_hi *= 2.0
        if s_hi > 1e12:
            raise InfeasibleConstraintError("could not bracket the cost multiplier")

    best = None
    for _ in range(200):
        ec_lo, ec_hi = float(p_lo @ c), float(p_hi @ c)
        theta = 1.0 if ec_lo == ec_hi else (gamma - ec_hi) / (ec_lo - ec_hi)
        theta = min(max(theta, 0.0), 1.0)
        p_mix = theta * p_lo + (1.0 - theta) * p_hi
        q_mix = p_mix @ W
        cap = mutual_information(p_mix, W)
        bound = min(_dual_bound(W, c, s, q_mix, gamma) for s in (s_lo, s_hi))
        bound = min(bound, _dual_bound(W, c, s_hi, p_hi @ W, gamma), _dual_bound(W, c, s_lo, p_lo @ W, gamma))
        best = (p_mix, s_hi, bound)
        if bound - cap < tol or s_hi - s_lo <= 1e-15 * max(1.0, s_hi):
            break
        s_mid = 0.5 * (s_lo + s_hi)
        p_mid, _, _, it = _blahut_arimoto(W, c, s_mid, p_hi, inner_tol, max_iter)
        total_iter += it
        if float(p_mid @ c) > gamma:
            s_lo, p_lo = s_mid, p_mid
        else:
            s_hi, p_hi = s_mid, p_mid
    p_mix, s, bound = best
    return finish(p_mix, s, bound, total_iter)


def info_density_moments_awgn(x: float, P: float, N: float) -> tuple[float, float]:
    """Conditional mean and variance of ``log W(Y|x) / P_Y(Y)`` for one letter.

    ``W(.|x) = N(x, N)`` and the reference output law is ``N(0, P + N)``.
    Writing ``Y = x + Z`` the log ratio is
    ``0.5 log(1 + P/N) + x^2 / (2s) + x Z / s - P Z^2 / (2 s N)`` with
    ``s = P + N``, so the mean is ``0.5 log(1 + P/N) + (x^2 - P) / (2s)`` and the
    variance is ``P^2 / (2 s^2) + x^2 N / s^2``.
    """
    if not N > 0:
        raise PreconditionError(f"noise power must be positive, got {N}")
    if P < 0:
        raise PreconditionError(f"allocated power must be non-negative, got {P}")
    s = P + N
    mean = 0.5 * math.log1p(P / N) + (x * x - P) / (2.0 * s)
    var = P * P / (2.0 * s * s) + x * x * N / (s * s)
    return mean, var


def info_density_variance_bound(x: float, P: float, N: float) -> float:
    """Upper bound ``9P^2 / (4 s^2) + x^2 N / s^2`` on the per-letter variance.

    Always at least the exact variance from :func:`info_density_moments_awgn`,
    and at most ``9/4 + x^2 / s``.
    """
    if not N > 0:
        raise PreconditionError(f"noise power must be positive, got {N}")
    s = P + N
    return 9.0 * P * P / (4.0 * s * s) + x * x * N / (s * s)
