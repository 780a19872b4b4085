import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from chancap.channels import CostFunction, DiscreteChannel, GaussianChannel
from chancap.errors import InfeasibleConstraintError, PreconditionError
from chancap.spectrum import (
    GaussianInput,
    InfoDensitySamples,
    constrained_capacity_dmc,
    info_density,
    info_density_moments_awgn,
    info_density_variance_bound,
    j_curve,
    mutual_information,
    sample_info_density,
    spectral_inf,
    spectral_sup,
    spectral_trend,
)


def binary_entropy(p):
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


BSC_I = math.log(2) - binary_entropy(0.1)


def samples_of(values):
    return InfoDensitySamples(1, np.asarray(values, dtype=float), None, "fixture")


def test_info_density_noiseless():
    assert info_density(DiscreteChannel.bsc(0.0), [0.5, 0.5], [0], [0]) == pytest.approx(math.log(2), abs=1e-15)


def test_info_density_useless_channel():
    ch = DiscreteChannel.bsc(0.5, n=3)
    assert info_density(ch, [0.3, 0.7], [0, 1, 1], [1, 1, 0]) == pytest.approx(0.0, abs=1e-15)


def test_info_density_bsc():
    assert info_density(DiscreteChannel.bsc(0.1), [0.5, 0.5], [0], [0]) == pytest.approx(math.log(1.8), abs=1e-15)


def test_info_density_joint_law_matches_iid():
    ch = DiscreteChannel.bsc(0.2, n=2)
    p = np.array([0.3, 0.7])
    joint = np.outer(p, p).ravel()
    a = info_density(ch, p, [0, 1], [1, 1])
    b = info_density(ch, joint, [0, 1], [1, 1])
    assert a == pytest.approx(b, abs=1e-14)


def test_info_density_gaussian_closed_form():
    ch = GaussianChannel.awgn(1.0)
    x, y = 0.4, 1.1
    ref = stats.norm.logpdf(y, x, 1.0) - stats.norm.logpdf(y, 0.0, math.sqrt(2.0))
    assert info_density(ch, GaussianInput(1.0), [x], [y]) == pytest.approx(ref, abs=1e-13)


def test_sample_mean_near_mutual_information():
    s = sample_info_density(DiscreteChannel.bsc(0.1), [0.5, 0.5], 2000, 2000, seed=7)
    assert abs(s.mean - BSC_I) < 0.01
    assert abs(s.mean - BSC_I) < 4 * s.std_error


def test_samples_useless_channel_zero():
    s = sample_info_density(DiscreteChannel.bsc(0.5), [0.2, 0.8], 50, 300, seed=1)
    assert np.all(np.abs(s.values) < 1e-12)


def test_samples_noiseless_exact_log2():
    s = sample_info_density(DiscreteChannel.noiseless(2), [0.5, 0.5], 40, 300, seed=1)
    assert np.all(s.values == math.log(2))


def test_sampling_deterministic_and_chunk_stable():
    a = sample_info_density(DiscreteChannel.bsc(0.1), [0.5, 0.5], 100, 600, seed=3)
    b = sample_info_density(DiscreteChannel.bsc(0.1), [0.5, 0.5], 100, 600, seed=3)
    np.testing.assert_array_equal(a.values, b.values)
    # the first chunk does not depend on how many trials follow
    c = sample_info_density(DiscreteChannel.bsc(0.1), [0.5, 0.5], 100, 256, seed=3)
    np.testing.assert_array_equal(a.values[:256], c.values)


def test_gaussian_samples_mean():
    s = sample_info_density(GaussianChannel.awgn(1.0), GaussianInput(1.0), 200, 2000, seed=5)
    assert abs(s.mean - 0.5 * math.log(2)) < 4 * s.std_error


def test_colored_gaussian_samples_mean():
    from chancap.gaussian import ar1_autocorr

    n = 32
    ch = GaussianChannel.anwgn(ar1_autocorr(0.5), n)
    ev = ch.covariance.eigenvalues
    expected = 0.5 * np.sum(np.log1p(1.0 / ev)) / n
    s = sample_info_density(ch, GaussianInput(1.0), n, 3000, seed=2)
    assert abs(s.mean - expected) < 4 * s.std_error


def test_spectral_inf_constant():
    s = samples_of([0.7] * 10)
    for tau in (0.01, 0.3, 0.49):
        assert spectral_inf(s, tau) == 0.7 and spectral_sup(s, tau) == 0.7


def test_spectral_inf_empirical_cdf_rule():
    s = samples_of([3, 0, 2, 1])
    # smallest value whose empirical CDF exceeds 0.25
    assert spectral_inf(s, 0.25) == 1.0


def test_quantiles_concentrate():
    s = sample_info_density(DiscreteChannel.bsc(0.1), [0.5, 0.5], 2000, 2000, seed=99)
    assert abs(spectral_inf(s, 0.01) - 0.368) < 0.05
    assert abs(spectral_sup(s, 0.01) - 0.368) < 0.05


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=50), st.floats(1e-6, 0.4999))
def test_inf_below_sup(values, tau):
    s = samples_of(values)
    assert spectral_inf(s, tau) <= spectral_sup(s, tau)


def test_j_curve_edges():
    s = samples_of([0.2, 0.5, 0.9])
    assert j_curve(s, 0.1) == 0.0
    assert j_curve(s, 1.0) == 1.0
    assert j_curve(s, 0.5) == pytest.approx(2 / 3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=40), st.lists(st.floats(-4, 4), min_size=2, max_size=20))
def test_j_curve_nondecreasing(values, rates):
    r = np.sort(rates)
    J = np.asarray(j_curve(samples_of(values), r))
    assert np.all(np.diff(J) >= 0) and J.min() >= 0 and J.max() <= 1


def test_j_curve_median_crossing():
    s = sample_info_density(DiscreteChannel.bsc(0.1), [0.5, 0.5], 2000, 2000, seed=8)
    assert 0.4 <= j_curve(s, 0.368) <= 0.6


def test_spectral_trend_rows():
    rows = spectral_trend(DiscreteChannel.bsc(0.1), [0.5, 0.5], [100, 400, 1600], 500, seed=1)
    spreads = [sup - inf for _, _, inf, sup in rows]
    assert [r[0] for r in rows] == [100, 400, 1600]
    assert spreads[0] > spreads[1] > spreads[2]


def test_mutual_information_bsc():
    W = DiscreteChannel.bsc(0.1).transitions
    assert mutual_information([0.5, 0.5], W) == pytest.approx(BSC_I, abs=1e-15)


def test_capacity_bsc_unconstrained():
    res = constrained_capacity_dmc(DiscreteChannel.bsc(0.1), None, 0.0)
    assert res.capacity == pytest.approx(BSC_I, abs=1e-9)
    np.testing.assert_allclose(res.optimal_input, [0.5, 0.5], atol=1e-6)


def test_capacity_singleton_constraint():
    res = constrained_capacity_dmc(DiscreteChannel.bsc(0.1), [0.0, 1.0], 0.0)
    assert res.capacity == 0.0
    assert res.optimal_input[1] == 0.0


def test_capacity_loose_constraint_is_unconstrained():
    res = constrained_capacity_dmc(DiscreteChannel.bsc(0.1), CostFunction.additive([0, 1]), 0.5)
    assert res.capacity == pytest.approx(BSC_I, abs=1e-9)


def binary_oracle(W, c, gamma):
    """Maximize I over p1 in the feasible interval with a bounded scalar search."""
    hi = 1.0 if c[1] <= gamma else (gamma - c[0]) / (c[1] - c[0])
    hi = min(max(hi, 0.0), 1.0)
    res = optimize.minimize_scalar(lambda t: -mutual_information([1 - t, t], W), bounds=(0, hi),
                                   method="bounded", options={"xatol": 1e-12})
    return max(-res.fun, mutual_information([1, 0], W), mutual_information([1 - hi, hi], W))


@pytest.mark.parametrize("gamma", [0.05, 0.1, 0.2, 0.35])
def test_capacity_matches_scalar_oracle(gamma):
    ch = DiscreteChannel.bsc(0.1)
    res = constrained_capacity_dmc(ch, [0.0, 1.0], gamma)
    assert res.capacity == pytest.approx(binary_oracle(ch.transitions, [0.0, 1.0], gamma), abs=1e-8)
    assert float(res.optimal_input @ [0.0, 1.0]) <= gamma + 1e-12


def test_z_channel_capacity_closed_form():
    # Z-channel with 1 -> 0 flips at rate q has capacity log(1 + (1-q) q^(q/(1-q)))
    q = 0.3
    W = np.array([[1.0, 0.0], [q, 1 - q]])
    res = constrained_capacity_dmc(DiscreteChannel(W), None, 0.0)
    assert res.capacity == pytest.approx(math.log(1 + (1 - q) * q ** (q / (1 - q))), abs=1e-9)


def test_ternary_capacity_matches_slsqp():
    W = np.array([[0.8, 0.1, 0.1], [0.1, 0.7, 0.2], [0.2, 0.2, 0.6]])
    c = np.array([0.0, 1.0, 2.0])
    gamma = 0.6
    res = constrained_capacity_dmc(DiscreteChannel(W), c, gamma)
    opt = optimize.minimize(
        lambda p: -mutual_information(np.clip(p, 0, None), W), np.full(3, 1 / 3), method="SLSQP",
        bounds=[(0, 1)] * 3,
        constraints=[{"type": "eq", "fun": lambda p: p.sum() - 1}, {"type": "ineq", "fun": lambda p: gamma - p @ c}],
        options={"ftol": 1e-14, "maxiter": 500},
    )
    assert res.capacity == pytest.approx(-opt.fun, abs=1e-7)
    assert res.capacity >= -opt.fun - 1e-9
    assert res.residual < 1e-9


def test_capacity_monotone_in_gamma():
    ch = DiscreteChannel.bsc(0.1)
    caps = [constrained_capacity_dmc(ch, [0.0, 1.0], g).capacity for g in np.linspace(0, 0.6, 13)]
    assert all(b >= a - 1e-12 for a, b in zip(caps, caps[1:]))


def test_infeasible_budget():
    with pytest.raises(InfeasibleConstraintError):
        constrained_capacity_dmc(DiscreteChannel.bsc(0.1), [0.5, 1.0], 0.1)


def test_capacity_record_keys():
    d = constrained_capacity_dmc(DiscreteChannel.bsc(0.2), None, 0.0).as_dict()
    assert set(d) == {"capacity", "input", "residual", "iterations"}


def moment_oracle(x, P, N):
    """Mean and variance of the one-letter log ratio by Gauss-Hermite-free adaptive quadrature."""
    s = P + N

    def ratio(z):
        y = x + z
        return stats.norm.logpdf(y, x, math.sqrt(N)) - stats.norm.logpdf(y, 0.0, math.sqrt(s))

    pdf = stats.norm(0, math.sqrt(N)).pdf
    lim = 12 * math.sqrt(N)
    m1 = integrate.quad(lambda z: ratio(z) * pdf(z), -lim, lim, epsabs=1e-13)[0]
    m2 = integrate.quad(lambda z: (ratio(z) - m1) ** 2 * pdf(z), -lim, lim, epsabs=1e-13)[0]
    return m1, m2


@pytest.mark.parametrize("x, P, N", [(1.0, 1.0, 1.0), (0.3, 2.0, 0.5), (-1.2, 1.5, 3.0), (0.0, 4.0, 1.0)])
def test_moments_match_quadrature(x, P, N):
    mean, var = info_density_moments_awgn(x, P, N)
    m1, m2 = moment_oracle(x, P, N)
    assert mean == pytest.approx(m1, abs=1e-10)
    assert var == pytest.approx(m2, abs=1e-10)


def test_moments_at_unit_point():
    mean, var = info_density_moments_awgn(1.0, 1.0, 1.0)
    assert mean == pytest.approx(0.5 * math.log(2), abs=1e-15)
    assert var == pytest.approx(0.375, abs=1e-15)
    assert info_density_variance_bound(1.0, 1.0, 1.0) == pytest.approx(0.8125, abs=1e-15)


def test_moments_monte_carlo_exact_variance():
    rng = np.random.default_rng(2024)
    z = rng.standard_normal(1_000_000)
    y = 1.0 + z
    r = stats.norm.logpdf(y, 1.0, 1.0) - stats.norm.logpdf(y, 0.0, math.sqrt(2.0))
    m = r.mean()
    v = r.var(ddof=1)
    se_m = r.std(ddof=1) / math.sqrt(r.size)
    se_v = math.sqrt(np.mean((r - m) ** 4) - v**2) / math.sqrt(r.size)
    mean, var = info_density_moments_awgn(1.0, 1.0, 1.0)
    assert abs(m - mean) < 3 * se_m
    assert abs(v - var) < 3 * se_v


def test_moments_zero_power():
    assert info_density_moments_awgn(0.0, 0.0, 1.0) == (0.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(-1, 1))
def test_variance_bound_dominates_exact(P, N, frac):
    x = frac * math.sqrt(P)
    mean, var = info_density_moments_awgn(x, P, N)
    bound = info_density_variance_bound(x, P, N)
    assert var <= bound + 1e-15
    assert bound <= 9 / 4 + x * x / (P + N) + 1e-12
    assert mean <= 0.5 * math.log1p(P / N) + 1e-15


def test_moment_preconditions():
    with pytest.raises(PreconditionError):
        info_density_moments_awgn(0.0, 1.0, 0.0)
