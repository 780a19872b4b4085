"""Cube grids, quantization of input distributions, and the variational
distance machinery used to check the quantization bound.

The grid covers the cube ``[-l/2, l/2]^n`` that contains the power-constraint
set; cells are half-open ``[a, a + step)`` except the last along each axis,
which is closed, and each cell is represented by its center. The variational
distance ``d(P, Q) = sum |p - q|`` (or ``int |p - q|``) ranges over ``[0, 2]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .channels import FiniteDistribution, GaussianChannel, GaussianMixture, push_forward
from .errors import (
    DimensionMismatchError,
    GridTooLargeError,
    MassOutsideCubeError,
    PreconditionError,
    UnsupportedError,
)
from .gaussian import ToeplitzCovariance, fisher_norm

MAX_CELLS = 10**8
# cells materialised by QuantGrid.representatives
MAX_DENSE_CELLS = 10**6
ENVELOPE_SIGMAS = 12.0
TV_TOL = 1e-8
MAX_LINES = 100_000
LINE_PRUNE = 1e-17


class QuadratureWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class QuantGrid:
    n: int
    edge: float
    step: float
    cells_per_axis: int

    @classmethod
    def from_edge(cls, edge: float, n: int, step: float) -> "QuantGrid":
        if n < 1:
            raise PreconditionError(f"n must be >= 1, got {n}")
        if not step > 0:
            raise PreconditionError(f"step must be positive, got {step}")
        if not edge > 0 or step > edge:
            raise PreconditionError(f"need 0 < step <= edge, got step={step}, edge={edge}")
        ratio = edge / step
        near = round(ratio)
        cells = int(near) if abs(ratio - near) <= 1e-9 * ratio else int(math.ceil(ratio))
        total = cells**n
        if total > MAX_CELLS:
            raise GridTooLargeError(f"grid would have {total} cells (limit {MAX_CELLS})")
        return cls(int(n), float(edge), float(step), cells)

    @property
    def lower(self) -> float:
        return -0.5 * self.edge

    @property
    def num_cells(self) -> int:
        return self.cells_per_axis**self.n

    @property
    def representatives(self) -> np.ndarray:
        """All cell centers, shape ``(num_cells, n)``, in C order of cell index."""
        if self.num_cells > MAX_DENSE_CELLS:
            raise GridTooLargeError(f"{self.num_cells} representatives is too many to list")
        axis = self.lower + (np.arange(self.cells_per_axis) + 0.5) * self.step
        mesh = np.meshgrid(*([axis] * self.n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell_of(self, points) -> np.ndarray:
        """Integer cell index along each axis, shape ``(k, n)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.n:
            raise DimensionMismatchError(f"points must have {self.n} coordinates")
        hi = self.lower + self.cells_per_axis * self.step
        tol = 1e-12 * max(1.0, self.edge)
        if np.any(pts < self.lower - tol) or np.any(pts > hi + tol):
            raise MassOutsideCubeError("point lies outside the covering cube")
        idx = np.floor((pts - self.lower) / self.step).astype(np.int64)
        return np.clip(idx, 0, self.cells_per_axis - 1)

    def center(self, cells) -> np.ndarray:
        return self.lower + (np.asarray(cells, dtype=float) + 0.5) * self.step

    def cell_bounds(self, cell) -> tuple[np.ndarray, np.ndarray]:
        a = self.lower + np.asarray(cell, dtype=float) * self.step
        return a, a + self.step

    def symbolic_rate(self) -> str:
        """Asymptotic rate ``(1/n) log log k`` of the cell count, as text."""
        return f"(1/{self.n}) * log(log({self.cells_per_axis}**{self.n}))"


def build_grid(gamma: float, n: int, step: float) -> QuantGrid:
    """Grid over the cube of edge ``2 sqrt(n gamma)`` covering ``{|x|^2 <= n gamma}``."""
    if not gamma > 0:
        raise PreconditionError(f"power budget must be positive, got {gamma}")
    return QuantGrid.from_edge(2.0 * math.sqrt(n * gamma), n, step)


@dataclass(frozen=True, eq=False)
class QuantizedDistribution:
    grid: QuantGrid
    cells: np.ndarray
    masses: np.ndarray

    @property
    def representatives(self) -> np.ndarray:
        return self.grid.center(self.cells)

    def to_finite(self) -> FiniteDistribution:
        keep = self.masses > 0
        return FiniteDistribution(self.representatives[keep], self.masses[keep] / self.masses[keep].sum())

    def total_mass(self) -> float:
        return float(self.masses.sum())


@dataclass(frozen=True)
class DensityLaw:
    """Absolutely continuous law on R^n given by ``pdf(x)`` (x of shape (n,))."""

    pdf: Callable
    n: int = 1


def _aggregate(cells: np.ndarray, masses: np.ndarray, grid: QuantGrid) -> QuantizedDistribution:
    flat = np.ravel_multi_index(cells.T, (grid.cells_per_axis,) * grid.n)
    uniq, inv = np.unique(flat, return_inverse=True)
    agg = np.bincount(inv, weights=masses)
    ucells = np.stack(np.unravel_index(uniq, (grid.cells_per_axis,) * grid.n), axis=1)
    return QuantizedDistribution(grid, ucells, agg)


def quantize(Q, grid: QuantGrid) -> QuantizedDistribution:
    """Cell masses ``Qbar(u_i) = Q(cell_i)``.

    Atoms are summed exactly; a :class:`DensityLaw` is integrated cell by
    cell (adaptive quadrature), so keep ``n`` and the cell count small.
    """
    if isinstance(Q, FiniteDistribution):
        if Q.n != grid.n:
            raise DimensionMismatchError(f"law lives in R^{Q.n}, grid in R^{grid.n}")
        return _aggregate(grid.cell_of(Q.points), np.asarray(Q.masses), grid)
    if isinstance(Q, DensityLaw):
        if Q.n != grid.n:
            raise DimensionMismatchError(f"law lives in R^{Q.n}, grid in R^{grid.n}")
        if grid.num_cells > 10**4:
            raise GridTooLargeError("per-cell quadrature limited to 10^4 cells")
        cells = np.stack(np.unravel_index(np.arange(grid.num_cells), (grid.cells_per_axis,) * grid.n), axis=1)
        masses = np.empty(len(cells))
        for i, cell in enumerate(cells):
            a, b = grid.cell_bounds(cell)
            if grid.n == 1:
                masses[i] = integrate.quad(lambda t: Q.pdf(np.array([t])), a[0], b[0],
                                           epsabs=1e-13, epsrel=1e-12, limit=200)[0]
            else:
                masses[i] = integrate.nquad(lambda *t: Q.pdf(np.array(t)), list(zip(a, b)),
                                            opts={"epsabs": 1e-12, "epsrel": 1e-10})[0]
        total = masses.sum()
        if abs(1.0 - total) > 1e-9:
            raise MassOutsideCubeError(f"mass {1.0 - total:.3e} lies outside the covering cube")
        return QuantizedDistribution(grid, cells, masses)
    raise UnsupportedError(f"cannot quantize {type(Q).__name__}")


def tv_bound(channel, grid: QuantGrid) -> float:
    """Certified bound ``step * sqrt(n * ||F||)`` on ``d(QW^n, QbarW^n)``.

    Valid for Gaussian channels, whose divergence is exactly quadratic in the
    input, so the second-order expansion behind the bound has no remainder.
    """
    if not isinstance(channel, GaussianChannel):
        raise UnsupportedError("the quantization bound is only certified for Gaussian channels")
    if channel.n != grid.n:
        raise DimensionMismatchError(f"channel n={channel.n} but grid n={grid.n}")
    return grid.step * math.sqrt(grid.n * fisher_norm(channel))


LINE_CHUNK = 2048
ROOT_SCAN_STEP = 0.05
ROOT_SCAN_SIGMAS = 9.0


def _principal_frame(means: np.ndarray) -> np.ndarray:
    """Orthonormal basis whose first column follows the largest spread of the
    component means; isotropic components make the rotation TV-invariant."""
    n = means.shape[1]
    centered = means - means.mean(axis=0)
    if n == 1 or not np.any(centered):
        return np.eye(n)
    v = np.linalg.svd(centered, full_matrices=False)[2][0]
    basis, _ = np.linalg.qr(np.column_stack([v, np.eye(n)]))
    return basis[:, :n]


def _line_integrals(c: np.ndarray, m0: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``int |sum_j c[l, j] phi(s - m0[j])| ds`` over the real line, per row ``l``.

    Sign changes are bracketed on the scan nodes ``t``, polished by bisection
    then Newton, and the integral is assembled from normal CDF differences
    between consecutive roots.
    """
    phi = np.exp(-0.5 * (t[:, None] - m0[None, :]) ** 2) / math.sqrt(2 * math.pi)
    d = c @ phi.T
    sgn = np.sign(d)
    rows, cols = np.nonzero(sgn[:, :-1] * sgn[:, 1:] < 0)
    totals = np.abs(c.sum(axis=1))
    if rows.size == 0:
        return totals
    cr = c[rows]
    lo, hi = t[cols].copy(), t[cols + 1].copy()
    s_lo = sgn[rows, cols]

    def f(x):
        return np.einsum("rj,rj->r", cr, np.exp(-0.5 * (x[:, None] - m0) ** 2)) / math.sqrt(2 * math.pi)

    for _ in range(8):
        mid = 0.5 * (lo + hi)
        same = np.sign(f(mid)) == s_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    x = 0.5 * (lo + hi)
    for _ in range(3):
        z = x[:, None] - m0
        e = np.exp(-0.5 * z * z)
        fx = np.einsum("rj,rj->r", cr, e)
        dfx = -np.einsum("rj,rj->r", cr, z * e)
        step = np.divide(fx, dfx, out=np.zeros_like(fx), where=dfx != 0)
        x = np.clip(x - step, lo, hi)
    F = np.einsum("rj,rj->r", cr, special.ndtr(x[:, None] - m0))
    # per row: |F(r1) - 0| + sum |F(r_{s+1}) - F(r_s)| + |S - F(r_K)|
    first = np.ones(rows.size, dtype=bool)
    first[1:] = rows[1:] != rows[:-1]
    last = np.ones(rows.size, dtype=bool)
    last[:-1] = rows[1:] != rows[:-1]
    prev = np.empty_like(F)
    prev[0] = 0.0
    prev[1:] = F[:-1]
    prev[first] = 0.0
    seg = np.abs(F - prev)
    seg[last] += np.abs(c[rows[last]].sum(axis=1) - F[last])
    totals[np.unique(rows)] = 0.0
    np.add.at(totals, rows, seg)
    return totals


def _tv_lines(p: GaussianMixture, q: GaussianMixture, h: float):
    """Exact along the principal axis, trapezoid over the others.

    Returns ``(value, estimate)`` with the estimate taken as the gap to the
    same rule on every other outer node.
    """
    means = np.vstack([p.means, q.means])
    w = np.concatenate([np.asarray(p.weights), -np.asarray(q.weights)])
    means = means @ _principal_frame(means)
    n = means.shape[1]
    lo = means.min(axis=0) - ENVELOPE_SIGMAS
    hi = means.max(axis=0) + ENVELOPE_SIGMAS
    # roots beyond 9 sigma move the integral by < 1e-18, so scan a narrower window
    scan = np.arange(lo[0] + ENVELOPE_SIGMAS - ROOT_SCAN_SIGMAS, hi[0] - ENVELOPE_SIGMAS + ROOT_SCAN_SIGMAS
                     + ROOT_SCAN_STEP, ROOT_SCAN_STEP)
    if n == 1:
        return float(_line_integrals(w[None, :], means[:, 0], scan)[0]), 1e-14
    axes = []
    for i in range(1, n):
        m = int(math.ceil((hi[i] - lo[i]) / h)) + 1
        m += m % 2 == 0
        axes.append(lo[i] + h * np.arange(m))
    shape = tuple(len(a) for a in axes)
    factors = [np.exp(-0.5 * (a[:, None] - means[:, i + 1][None, :]) ** 2) / math.sqrt(2 * math.pi)
               for i, a in enumerate(axes)]
    coef = w[None, :]
    for fac in factors:
        coef = (coef[:, None, :] * fac[None, :, :]).reshape(-1, len(w))
    # a row's integral is at most sum_j |c_j|; skip rows that cannot matter
    mag = np.abs(coef).sum(axis=1)
    live = np.nonzero(mag > LINE_PRUNE)[0]
    g = np.zeros(coef.shape[0])
    for k in range(0, live.size, LINE_CHUNK):
        rows = live[k:k + LINE_CHUNK]
        g[rows] = _line_integrals(coef[rows], means[:, 0], scan)
    g = g.reshape(shape)
    dropped = h ** (n - 1) * float(mag.sum() - mag[live].sum())
    fine = h ** (n - 1) * float(g.sum())
    coarse = (2 * h) ** (n - 1) * float(g[(slice(None, None, 2),) * (n - 1)].sum())
    return fine, abs(fine - coarse) + dropped


def _same_noise(a, b) -> bool:
    if isinstance(a, ToeplitzCovariance) and isinstance(b, ToeplitzCovariance):
        return a is b or (a.n == b.n and np.array_equal(a.matrix, b.matrix))
    if isinstance(a, ToeplitzCovariance) or isinstance(b, ToeplitzCovariance):
        return False
    return float(a) == float(b)


def mixture_tv(p: GaussianMixture, q: GaussianMixture, tol: float = TV_TOL) -> tuple[float, float]:
    """Variational distance between two Gaussian mixtures with shared noise.

    Both mixtures are mapped to whitened unit-variance coordinates and
    rotated so the first axis follows the spread of the means (distance is
    invariant under both maps). The first axis is integrated exactly from
    normal CDFs between sign changes; the remaining axes use a trapezoid
    rule over a +-12 sigma envelope, halving the step until the coarse/fine
    discrepancy drops below ``tol`` or the line budget is spent. Returns
    ``(distance, achieved_error_estimate)``.
    """
    if p.n != q.n:
        raise DimensionMismatchError("mixtures live in different dimensions")
    if not _same_noise(p.cov, q.cov):
        raise UnsupportedError("mixtures must share the same noise covariance")
    ps, qs = p.standardized(), q.standardized()
    h = 0.4
    while True:
        value, err = _tv_lines(ps, qs, h)
        if err <= tol or ps.n == 1:
            break
        span = float((np.ptp(np.vstack([ps.means, qs.means]), axis=0) + 2 * ENVELOPE_SIGMAS)[1:].prod())
        if span / (h / 2) ** (p.n - 1) > MAX_LINES:
            break
        h /= 2
    return min(value, 2.0), err


def tv_exact(P_out, Q_out, tol: float = TV_TOL) -> float:
    """Variational distance ``d = sum |p - q|`` between two output laws.

    Accepts dense probability vectors or two :class:`GaussianMixture` laws.
    Issues a :class:`QuadratureWarning` carrying the achieved error estimate
    when mixture quadrature stops short of ``tol``.
    """
    if isinstance(P_out, GaussianMixture) and isinstance(Q_out, GaussianMixture):
        value, err = mixture_tv(P_out, Q_out, tol)
        if err > tol:
            warnings.warn(f"TV quadrature reached error {err:.2e} (target {tol:.0e})", QuadratureWarning)
        return value
    p = np.asarray(P_out, dtype=float).ravel()
    q = np.asarray(Q_out, dtype=float).ravel()
    if p.shape != q.shape:
        raise DimensionMismatchError("distributions live on different spaces")
    return float(np.abs(p - q).sum())


def quantization_tv(Q: FiniteDistribution, channel: GaussianChannel, grid: QuantGrid, tol: float = TV_TOL):
    """``(d(QW^n, QbarW^n), error_estimate, bound)`` for one input law."""
    Qbar = quantize(Q, grid).to_finite()
    value, err = mixture_tv(push_forward(Q, channel), push_forward(Qbar, channel), tol)
    return value, err, tv_bound(channel, grid)


def random_finite_law(n: int, gamma: float, atoms: int, rng) -> FiniteDistribution:
    """Random law with ``atoms`` points drawn uniformly from the power ball
    ``{|x|^2 <= n gamma}`` and Dirichlet(1) masses."""
    radius = math.sqrt(n * gamma)
    pts = []
    while len(pts) < atoms:
        x = rng.uniform(-radius, radius, n)
        if float(x @ x) <= n * gamma:
            pts.append(x)
    return FiniteDistribution(np.array(pts), rng.dirichlet(np.ones(atoms)))


@dataclass(frozen=True)
class Normal:
    """Univariate normal law, used by :func:`pinsker_check`."""

    mean: float
    var: float

    def __post_init__(self):
        if not self.var > 0:
            raise PreconditionError(f"variance must be positive, got {self.var}")


def kl_divergence(P, Q) -> float:
    """``D(P || Q)`` in nats; ``inf`` when ``P`` is not absolutely continuous."""
    if isinstance(P, Normal) and isinstance(Q, Normal):
        return 0.5 * (math.log(Q.var / P.var) + (P.var + (P.mean - Q.mean) ** 2) / Q.var - 1.0)
    p = np.asarray(P, dtype=float).ravel()
    q = np.asarray(Q, dtype=float).ravel()
    if p.shape != q.shape:
        raise DimensionMismatchError("distributions live on different spaces")
    support = p > 0
    if np.any(q[support] == 0):
        return math.inf
    return float(np.sum(p[support] * np.log(p[support] / q[support])))


def _normal_tv(P: Normal, Q: Normal) -> float:
    sp, sq = math.sqrt(P.var), math.sqrt(Q.var)
    lo = min(P.mean - ENVELOPE_SIGMAS * sp, Q.mean - ENVELOPE_SIGMAS * sq)
    hi = max(P.mean + ENVELOPE_SIGMAS * sp, Q.mean + ENVELOPE_SIGMAS * sq)

    def f(t):
        a = math.exp(-0.5 * (t - P.mean) ** 2 / P.var) / (sp * math.sqrt(2 * math.pi))
        b = math.exp(-0.5 * (t - Q.mean) ** 2 / Q.var) / (sq * math.sqrt(2 * math.pi))
        return abs(a - b)

    pts = sorted({P.mean, Q.mean})
    return integrate.quad(f, lo, hi, points=pts, limit=500, epsabs=1e-12, epsrel=1e-10)[0]


def pinsker_check(P, Q) -> tuple[float, float, bool]:
    """``(d, D, 0.5 d^2 <= D + 1e-12)`` for two discrete laws or two normals.

    For normals ``D`` is closed form and ``d`` comes from adaptive
    quadrature.
    """
    D = kl_divergence(P, Q)
    d = _normal_tv(P, Q) if isinstance(P, Normal) else tv_exact(P, Q)
    return d, D, bool(0.5 * d * d <= D + 1e-12)
