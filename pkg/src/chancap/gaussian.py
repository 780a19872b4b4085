"""Closed-form Gaussian quantities: divergences, Fisher norm, Toeplitz noise
covariances, whitening and the noise spectral density.

All logarithms are natural.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidAutocorrelationError,
    NotPositiveDefiniteError,
    PreconditionError,
)

# Positive-definiteness threshold, relative to gamma_0.
PD_RTOL = 1e-10
# Tolerated negative excursion of a spectral density before rejecting it.
SPECTRAL_NEG_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ToeplitzCovariance:
    """Covariance ``V_n`` of ``n`` consecutive samples of a stationary noise.

    ``eigenbasis`` has the eigenvectors as columns, so that
    ``eigenbasis.T @ matrix @ eigenbasis == diag(eigenvalues)``.
    """

    autocorr: np.ndarray
    n: int
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenbasis: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def is_white(self) -> bool:
        return bool(np.all(self.autocorr[1:] == 0.0))

    def logdet(self) -> float:
        return float(np.sum(np.log(self.eigenvalues)))

    def quad_inverse(self, d) -> np.ndarray:
        """``d V^{-1} d^T`` for one word or a stack of words (last axis)."""
        d = np.asarray(d, dtype=float)
        if d.shape[-1] != self.n:
            raise DimensionMismatchError(f"word length {d.shape[-1]} != n={self.n}")
        t = d @ self.eigenbasis
        return np.sum(t * t / self.eigenvalues, axis=-1)

    def extend(self, n: int) -> "ToeplitzCovariance":
        return build_toeplitz(self.autocorr, n)


def _pad_autocorr(autocorr, n: int) -> np.ndarray:
    gamma = np.asarray(autocorr, dtype=float).ravel()
    if gamma.size < 1:
        raise PreconditionError("autocorrelation sequence is empty")
    if not gamma[0] > 0:
        raise PreconditionError(f"gamma_0 must be positive, got {gamma[0]}")
    out = np.zeros(n)
    m = min(n, gamma.size)
    out[:m] = gamma[:m]
    return out


def build_toeplitz(autocorr, n: int) -> ToeplitzCovariance:
    """Build the symmetric Toeplitz covariance with entries ``gamma_|i-j|``.

    Lags beyond the supplied sequence are zero. Raises
    :class:`NotPositiveDefiniteError` when the smallest eigenvalue does not
    exceed ``PD_RTOL * gamma_0``.
    """
    if n < 1:
        raise PreconditionError(f"n must be >= 1, got {n}")
    gamma_full = np.asarray(autocorr, dtype=float).ravel()
    gamma = _pad_autocorr(gamma_full, n)
    idx = np.arange(n)
    matrix = gamma[np.abs(idx[:, None] - idx[None, :])]
    sym = 0.5 * (matrix + matrix.T)
    eigenvalues, eigenbasis = np.linalg.eigh(sym)
    threshold = PD_RTOL * gamma[0]
    if eigenvalues[0] <= threshold:
        raise NotPositiveDefiniteError(
            f"not purely nondeterministic at this n: min eigenvalue "
            f"{eigenvalues[0]:.3e} <= {threshold:.3e} (n={n})"
        )
    for arr in (gamma, matrix, eigenvalues, eigenbasis):
        arr.setflags(write=False)
    # keep the caller's full sequence so that extend() can grow n later
    keep = gamma_full.copy()
    keep.setflags(write=False)
    return ToeplitzCovariance(keep, n, matrix, eigenvalues, eigenbasis)


def ar1_autocorr(rho: float, n_lags: int | None = None, gamma0: float = 1.0) -> np.ndarray:
    """Autocorrelation ``gamma0 * rho**k`` of an AR(1) process.

    With ``n_lags=None`` the sequence is truncated once ``|rho|**k`` drops
    below 1e-18, which makes the truncated spectral density exact to
    double precision.
    """
    if not -1.0 < rho < 1.0:
        raise PreconditionError(f"AR(1) needs |rho| < 1, got {rho}")
    if n_lags is None:
        if rho == 0.0:
            n_lags = 1
        else:
            n_lags = int(np.ceil(np.log(1e-18) / np.log(abs(rho)))) + 1
    return gamma0 * rho ** np.arange(n_lags, dtype=float)


def whiten(cov: ToeplitzCovariance, word) -> np.ndarray:
    """Rotate a word (or stack of words) into the eigenbasis: ``word @ U_n``.

    The rotation is orthogonal, so squared norms are preserved; whitened
    noise has independent coordinates with variances ``cov.eigenvalues``.
    """
    w = np.asarray(word, dtype=float)
    if w.shape[-1] != cov.n:
        raise DimensionMismatchError(f"word length {w.shape[-1]} != n={cov.n}")
    return w @ cov.eigenbasis


def awgn_divergence(v, x, noise_power: float) -> float:
    """``D(W(.|v) || W(.|x)) = sum (v_i - x_i)^2 / (2N)`` for white noise."""
    if not noise_power > 0:
        raise PreconditionError(f"noise power must be positive, got {noise_power}")
    d = np.asarray(v, dtype=float) - np.asarray(x, dtype=float)
    return float(np.sum(d * d) / (2.0 * noise_power))


def anwgn_divergence(v, x, cov: ToeplitzCovariance) -> float:
    """Divergence between colored-noise output laws: ``0.5 d V^{-1} d^T``."""
    d = np.asarray(v, dtype=float) - np.asarray(x, dtype=float)
    if d.shape != (cov.n,):
        raise DimensionMismatchError(f"expected words of length {cov.n}, got shape {d.shape}")
    return float(0.5 * cov.quad_inverse(d))


def fisher_norm(channel) -> float:
    """Spectral norm of the Fisher information matrix of a Gaussian channel.

    The matrix is ``V_n^{-1}`` (``I/N`` for white noise) and does not depend
    on the input point, so the norm is one over the smallest noise
    eigenvalue.
    """
    cov = getattr(channel, "covariance", None)
    if cov is not None:
        return 1.0 / cov.min_eigenvalue
    N = channel.noise_power
    if not N > 0:
        raise PreconditionError(f"noise power must be positive, got {N}")
    return 1.0 / N


def fisher_norm_growth_bound(power: float, capacity: float, n: int, delta: float = 0.0) -> float:
    """Upper bound ``exp(2n(C + delta)) / P`` on the Fisher norm at blocklength ``n``."""
    return float(np.exp(2.0 * n * (capacity + delta)) / power)


def spectral_density_eval(autocorr, lam) -> np.ndarray | float:
    """Evaluate ``g(lambda) = (1/2pi) sum_k gamma_k exp(-i k lambda)``.

    The sequence is treated as symmetric (``gamma_-k = gamma_k``), so the
    series is the real cosine sum ``gamma_0 + 2 sum_{k>=1} gamma_k cos(k lambda)``.
    """
    gamma = np.asarray(autocorr, dtype=float).ravel()
    lam_arr = np.asarray(lam, dtype=float)
    flat = lam_arr.ravel()
    if flat.size and (flat.min() < -np.pi - 1e-12 or flat.max() > np.pi + 1e-12):
        raise PreconditionError("lambda must lie in [-pi, pi]")
    k = np.arange(1, gamma.size)
    series = gamma[0] + 2.0 * (np.cos(np.outer(flat, k)) @ gamma[1:])
    g = series / (2.0 * np.pi)
    if g.size and g.min() < -SPECTRAL_NEG_TOL:
        raise InvalidAutocorrelationError(
            f"spectral density is negative ({g.min():.3e}); sequence is not an autocorrelation"
        )
    g = np.maximum(g, 0.0)
    if lam_arr.ndim == 0:
        return float(g[0])
    return g.reshape(lam_arr.shape)


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """Noise spectral density on ``[-pi, pi]``.

    Either backed by a (truncated) autocorrelation sequence, or tabulated on
    a uniform grid and linearly interpolated. Evaluation always uses
    ``|lambda|`` so the even symmetry holds by construction.
    """

    autocorr: np.ndarray | None = None
    grid: np.ndarray | None = None
    values: np.ndarray | None = None

    @classmethod
    def from_autocorr(cls, autocorr) -> "SpectralDensity":
        gamma = np.asarray(autocorr, dtype=float).ravel().copy()
        if gamma.size < 1 or not gamma[0] > 0:
            raise PreconditionError("autocorrelation needs gamma_0 > 0")
        gamma.setflags(write=False)
        return cls(autocorr=gamma)

    @classmethod
    def ar1(cls, rho: float, gamma0: float = 1.0) -> "SpectralDensity":
        return cls.from_autocorr(ar1_autocorr(rho, None, gamma0))

    @classmethod
    def white(cls, noise_power: float) -> "SpectralDensity":
        return cls.from_autocorr([noise_power])

    @classmethod
    def tabulated(cls, grid, values) -> "SpectralDensity":
        grid = np.asarray(grid, dtype=float).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if grid.shape != values.shape or grid.size < 2:
            raise PreconditionError("tabulated density needs matching grid/value arrays")
        if np.any(values < -SPECTRAL_NEG_TOL):
            raise InvalidAutocorrelationError("tabulated spectral density has negative values")
        order = np.argsort(grid)
        grid, values = grid[order], np.maximum(values[order], 0.0)
        steps = np.diff(grid)
        if not np.allclose(steps, steps[0], rtol=1e-6, atol=1e-12):
            raise PreconditionError("tabulated density must use a uniform grid")
        if grid[0] < -np.pi - 1e-9 or grid[-1] > np.pi + 1e-9:
            raise PreconditionError("tabulated grid must lie in [-pi, pi]")
        # fold onto [0, pi]; use the average of mirrored samples where both exist
        absg = np.abs(grid)
        uniq, inv = np.unique(np.round(absg, 12), return_inverse=True)
        folded = np.bincount(inv, weights=values) / np.bincount(inv)
        uniq.setflags(write=False)
        folded.setflags(write=False)
        return cls(grid=uniq, values=folded)

    @property
    def representation(self) -> str:
        return "autocorr-truncated" if self.autocorr is not None else "tabulated"

    def __call__(self, lam):
        if self.autocorr is not None:
            return spectral_density_eval(self.autocorr, lam)
        lam_arr = np.abs(np.asarray(lam, dtype=float))
        out = np.interp(lam_arr, self.grid, self.values)
        return float(out) if out.ndim == 0 else out
