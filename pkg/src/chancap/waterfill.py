"""Water-filling over parallel Gaussian channels.

``waterfill_discrete`` allocates a total budget ``n P`` over noise levels
``N_1..N_n`` (the eigenvalues of the noise covariance); ``waterfill_spectral``
does the same in the frequency domain against a spectral density ``g``.
Capacities are in nats per letter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, UnboundedCapacityError
from .gaussian import SpectralDensity, build_toeplitz

DEFAULT_GRID = 4096


@dataclass(frozen=True, eq=False)
class WaterFillSolution:
    water_level: float
    allocations: np.ndarray
    capacity: float
    mode: str
    noise: np.ndarray
    grid: np.ndarray | None = None
    iterations: int = 0

    def kkt_residual(self) -> float:
        """``max_i |P_i (N_i + P_i - A)|`` over the allocated dimensions."""
        P, N, A = self.allocations, self.noise, self.water_level
        return float(np.max(np.abs(P * (N + P - A)))) if P.size else 0.0

    def as_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "water_level": self.water_level,
            "capacity_nats": self.capacity,
        }
        if self.mode == "discrete":
            out["allocations"] = [float(p) for p in self.allocations]
        return out


def awgn_capacity(P: float, N: float) -> float:
    """``0.5 log(1 + P/N)``."""
    if P < 0:
        raise PreconditionError(f"power must be non-negative, got {P}")
    if not N > 0:
        raise PreconditionError(f"noise power must be positive, got {N}")
    return 0.5 * math.log1p(P / N)


def _bisect_level(budget, lo: float, hi: float, target: float, rtol: float, max_iter: int = 400):
    it = 0
    while it < max_iter and hi - lo > rtol * max(abs(hi), 1e-300):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if budget(mid) < target:
            lo = mid
        else:
            hi = mid
        it += 1
    return lo, hi, it


def waterfill_discrete(noise_levels, P: float, tol: float = 1e-12) -> WaterFillSolution:
    """Water-fill a total budget ``n P`` over the given noise levels.

    The level ``A`` is located by bisection on the (continuous, strictly
    increasing above ``min N``) budget function; once bisection has settled
    the active set ``{i : N_i < A}``, ``A`` is recomputed in closed form on that
    set so the budget holds to rounding.
    """
    N = np.asarray(noise_levels, dtype=float).ravel()
    if N.size == 0:
        raise PreconditionError("no noise levels given")
    if np.any(~(N > 0)):
        raise PreconditionError("noise levels must be positive")
    if not P > 0:
        raise PreconditionError(f"power budget must be positive, got {P}")
    n = N.size
    total = n * P

    def budget(a):
        return float(np.sum(np.maximum(a - N, 0.0)))

    lo, hi = float(N.min()), float(N.max()) + P
    # the closed-form upper bracket above always suffices; keep the geometric
    # expansion as a guard against overflow-level inputs
    while budget(hi) < total:
        hi = lo + 2.0 * (hi - lo)
    lo, hi, iters = _bisect_level(budget, lo, hi, total, tol)
    A = hi
    for _ in range(n + 1):
        active = N < A
        A_new = (total + float(N[active].sum())) / int(active.sum())
        if np.array_equal(N < A_new, active):
            A = A_new
            break
        A = A_new
    alloc = np.maximum(A - N, 0.0)
    cap = float(np.sum(np.log1p(alloc / N))) / (2.0 * n)
    return WaterFillSolution(float(A), alloc, cap, "discrete", N, iterations=iters)


def _half_grid(grid_size: int):
    """Nodes on ``[0, pi]`` and trapezoid weights for the full-period integral.

    A uniform ``grid_size``-point periodic rule on ``[-pi, pi]`` folded by
    the symmetry ``g(-l) = g(l)``; needs an even ``grid_size``.
    """
    if grid_size < 4 or grid_size % 2:
        raise PreconditionError(f"grid size must be an even integer >= 4, got {grid_size}")
    m = grid_size // 2
    lam = np.linspace(0.0, np.pi, m + 1)
    h = 2.0 * np.pi / grid_size
    w = np.full(m + 1, 2.0 * h)
    w[0] = w[-1] = h
    return lam, w


def waterfill_spectral(g, P: float, grid_size: int = DEFAULT_GRID, tol: float = 1e-12) -> WaterFillSolution:
    """Spectral water-filling against the noise spectral density ``g``.

    Finds ``alpha`` with ``int max(alpha - g, 0) dl = P`` over ``[-pi, pi]``
    and returns capacity ``(1/4pi) int log(1 + f/g) dl``, both integrals by
    the composite trapezoid rule on a uniform grid of ``grid_size`` points.
    """
    if not P > 0:
        raise PreconditionError(f"power budget must be positive, got {P}")
    if not isinstance(g, SpectralDensity):
        g = SpectralDensity.from_autocorr(g)
    lam, w = _half_grid(int(grid_size))
    gv = np.asarray(g(lam), dtype=float)
    if np.any(gv <= 0.0):
        raise UnboundedCapacityError(
            "spectral density vanishes on the grid; the capacity integral diverges"
        )

    def budget(a):
        return float(np.dot(w, np.maximum(a - gv, 0.0)))

    lo, hi = float(gv.min()), float(gv.max()) + P / (2.0 * np.pi)
    while budget(hi) < P:
        hi = lo + 2.0 * (hi - lo)
    lo, hi, iters = _bisect_level(budget, lo, hi, P, tol)
    # budget is piecewise linear in alpha; finish with one exact secant step
    active = gv < hi
    alpha = (P + float(np.dot(w[active], gv[active]))) / float(w[active].sum())
    if not np.array_equal(gv < alpha, active):
        alpha = hi
    f = np.maximum(alpha - gv, 0.0)
    cap = float(np.dot(w, np.log1p(f / gv))) / (4.0 * np.pi)
    return WaterFillSolution(float(alpha), f, cap, "spectral", gv, grid=lam, iterations=iters)


def anwgn_capacity_sequence(autocorr, P: float, n_list) -> list[tuple[int, float]]:
    """``[(n, C_n)]`` with ``C_n`` the water-filled capacity over the
    eigenvalues of the ``n``-dimensional Toeplitz covariance."""
    rows = []
    for n in n_list:
        cov = build_toeplitz(autocorr, int(n))
        rows.append((int(n), waterfill_discrete(cov.eigenvalues, P).capacity))
    return rows
