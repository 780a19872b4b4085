import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chancap.channels import CostFunction, DiscreteChannel
from chancap.errors import DimensionMismatchError, EnumerationTooLargeError, PreconditionError
from chancap.identification import (
    IdentificationCode,
    build_distinct_id_code,
    count_quantized_codebooks,
    decoding_sets_by_dominance,
    duality_distance_check,
    enumerate_quantized_distributions,
    id_errors,
    loglog_rate,
    output_laws,
)


def two_message_code():
    return IdentificationCode(np.eye(2), np.eye(2, dtype=bool), 1)


def direct_errors(code, W):
    """Per-pair error probabilities from the n = 1 channel matrix, by explicit loops."""
    N = code.N
    out = code.codewords @ W
    mu = [1 - sum(out[i, y] for y in range(W.shape[1]) if code.decoding_sets[i, y]) for i in range(N)]
    lam = [[0.0 if i == j else sum(out[j, y] for y in range(W.shape[1]) if code.decoding_sets[i, y])
            for i in range(N)] for j in range(N)]
    return max(mu), max(max(r) for r in lam)


def test_noiseless_code():
    rep = id_errors(two_message_code(), DiscreteChannel.bsc(0.0))
    assert rep.mu == 0.0 and rep.lam == 0.0


def test_bsc_code_errors():
    rep = id_errors(two_message_code(), DiscreteChannel.bsc(0.1))
    assert rep.mu == pytest.approx(0.1, abs=1e-15)
    assert rep.lam == pytest.approx(0.1, abs=1e-15)
    np.testing.assert_allclose(rep.pair_matrix, [[0.0, 0.1], [0.1, 0.0]], atol=1e-15)


def test_full_output_decoding():
    code = IdentificationCode(np.eye(2), np.ones((2, 2), dtype=bool), 1)
    rep = id_errors(code, DiscreteChannel.bsc(0.1))
    assert rep.mu == 0.0 and rep.lam == 1.0


def test_as_dict_keys():
    d = id_errors(two_message_code(), DiscreteChannel.bsc(0.1)).as_dict()
    assert set(d) == {"mu", "lambda", "mu_per_message", "lambda_matrix"}


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(2, 4), st.integers(0, 10_000))
def test_errors_match_direct_loops(N, ny, seed):
    rng = np.random.default_rng(seed)
    W = rng.dirichlet(np.ones(ny), size=3)
    code = IdentificationCode(rng.dirichlet(np.ones(3), size=N), rng.random((N, ny)) < 0.5, 1)
    rep = id_errors(code, DiscreteChannel(W))
    mu, lam = direct_errors(code, W)
    assert rep.mu == pytest.approx(mu, abs=1e-12)
    assert rep.lam == pytest.approx(lam, abs=1e-12)
    assert 0 <= rep.mu <= 1 and 0 <= rep.lam <= 1


def test_errors_invariant_under_relabeling():
    rng = np.random.default_rng(1)
    ch = DiscreteChannel.bsc(0.2)
    code = IdentificationCode(rng.dirichlet(np.ones(4), size=5), rng.random((5, 4)) < 0.5, 2)
    perm = rng.permutation(5)
    moved = IdentificationCode(code.codewords[perm], code.decoding_sets[perm], 2)
    a, b = id_errors(code, ch), id_errors(moved, ch)
    assert a.mu == b.mu and a.lam == b.lam
    np.testing.assert_array_equal(b.pair_matrix, a.pair_matrix[np.ix_(perm, perm)])


def test_masks_round_trip():
    code = IdentificationCode.from_masks(np.eye(4)[:2], [0b0101, 0b1000], 4, 2)
    assert code.decoding_sets.tolist() == [[True, False, True, False], [False, False, False, True]]
    assert code.masks() == [0b0101, 0b1000]
    with pytest.raises(DimensionMismatchError):
        IdentificationCode.from_masks(np.eye(4)[:1], [0b10000], 4, 2)


def test_code_validation():
    with pytest.raises(PreconditionError):
        IdentificationCode(np.zeros((0, 2)), np.zeros((0, 2), dtype=bool), 1)
    with pytest.raises(PreconditionError):
        IdentificationCode([[0.6, 0.6]], [[True, False]], 1)
    with pytest.raises(DimensionMismatchError):
        id_errors(IdentificationCode(np.eye(2), np.eye(2, dtype=bool), 2), DiscreteChannel.bsc(0.1))


def test_feasibility_check():
    cost = CostFunction.additive([0.0, 1.0])
    good = IdentificationCode([[0.5, 0.5, 0.0, 0.0]], [[True] * 4], 2)
    bad = IdentificationCode([[0.0, 0.0, 0.0, 1.0]], [[True] * 4], 2)
    ch = DiscreteChannel.bsc(0.1)
    assert good.check_feasible(ch, cost, 0.5)
    assert not bad.check_feasible(ch, cost, 0.5)


def test_output_laws_refuse_large_spaces():
    q = np.zeros((1, 2**17))
    q[0, 0] = 1.0
    code = IdentificationCode(q, np.ones((1, 2**17), dtype=bool), 17)
    with pytest.raises(EnumerationTooLargeError):
        output_laws(code, DiscreteChannel.bsc(0.1))


def test_duality_equality_on_bsc():
    chk = duality_distance_check(two_message_code(), DiscreteChannel.bsc(0.1))
    assert chk.passed
    assert chk.distance == pytest.approx(1.6, abs=1e-14)
    assert chk.bound == pytest.approx(1.6, abs=1e-14)


def test_duality_noiseless_extreme():
    chk = duality_distance_check(two_message_code(), DiscreteChannel.bsc(0.0))
    assert chk.passed and chk.distance == 2.0 and chk.bound == 2.0


def test_duality_vacuous_for_degenerate_decoding():
    code = IdentificationCode(np.eye(2), np.ones((2, 2), dtype=bool), 1)
    chk = duality_distance_check(code, DiscreteChannel.bsc(0.1))
    assert chk.passed and chk.bound <= 0


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10_000))
def test_duality_holds_for_random_codes(N, seed):
    rng = np.random.default_rng(seed)
    ch = DiscreteChannel(rng.dirichlet(np.ones(2), size=2))
    code = IdentificationCode(rng.dirichlet(np.ones(4), size=N), rng.random((N, 4)) < 0.5, 2)
    assert duality_distance_check(code, ch).passed


def test_duality_single_message():
    code = IdentificationCode([[1.0, 0.0]], [[True, False]], 1)
    assert duality_distance_check(code, DiscreteChannel.bsc(0.1)).passed


@pytest.mark.parametrize("k, M, expected", [(1, 7, (1, 1)), (3, 1, (3, 3)), (2, 2, (3, 4))])
def test_count_examples(k, M, expected):
    assert count_quantized_codebooks(k, M) == expected


def test_count_two_points_lists_the_compositions():
    assert enumerate_quantized_distributions(2, 2) == {(0, 2), (1, 1), (2, 0)}


@pytest.mark.parametrize("k, M", [(k, M) for k in range(1, 21) for M in range(1, 21) if k * M <= 20 and k**M <= 10**6])
def test_count_matches_brute_force(k, M):
    exact, bound = count_quantized_codebooks(k, M)
    assert exact == len(enumerate_quantized_distributions(k, M))
    assert exact <= bound
    assert (exact == bound) == (M == 1 or k == 1)


@settings(max_examples=200)
@given(st.integers(1, 10**4), st.integers(1, 10**4))
def test_count_log_bound_big_integers(k, M):
    exact, bound = count_quantized_codebooks(k, M)
    assert exact <= bound
    # compare logarithms without floating overflow
    assert math.log(exact) <= M * math.log(k) + 1e-9 * max(1.0, M * math.log(max(k, 2)))


def test_count_rejects_bad_sizes():
    with pytest.raises(PreconditionError):
        count_quantized_codebooks(0, 3)
    with pytest.raises(EnumerationTooLargeError):
        enumerate_quantized_distributions(10, 10)


def test_loglog_rate_inverts_double_exponential():
    N = math.ceil(math.exp(math.exp(4 * 0.5)))
    assert loglog_rate(N, 4) == pytest.approx(0.5, abs=0.01)


def test_loglog_rate_simple():
    assert loglog_rate(math.exp(3), 1) == pytest.approx(math.log(3), abs=1e-12)
    assert loglog_rate(3, 1) == pytest.approx(math.log(math.log(3)))


def test_loglog_rate_big_integer_count():
    k, M, n = 16, 32, 4
    exact, _ = count_quantized_codebooks(k, M)
    assert loglog_rate(exact, n) <= (math.log(M) + math.log(math.log(k))) / n


def test_loglog_rate_huge_integer():
    N = 10**400
    assert loglog_rate(N, 2) == pytest.approx(math.log(400 * math.log(10)) / 2, rel=1e-12)


@pytest.mark.parametrize("N", [1, 2, math.e])
def test_loglog_rate_undefined(N):
    with pytest.raises(PreconditionError):
        loglog_rate(N, 1)


def test_dominance_sets():
    out = np.array([[0.6, 0.4, 0.0], [0.2, 0.4, 0.4]])
    D = decoding_sets_by_dominance(out)
    assert D.tolist() == [[True, True, False], [False, True, True]]


def test_search_single_message():
    res = build_distinct_id_code(DiscreteChannel.bsc(0.1), 3, 1, 0)
    assert res.achieved_N == 1 and res.complete
    rep = id_errors(res.code, DiscreteChannel.bsc(0.1))
    # the lone decoding set is the support of the output law, so nothing is missed
    assert rep.mu == pytest.approx(0.0, abs=1e-12) and rep.lam == 0.0


def test_search_noiseless_perfect_code():
    ch = DiscreteChannel.bsc(0.0)
    res = build_distinct_id_code(ch, 3, 8, 1)
    assert res.complete
    Q = res.code.codewords
    assert np.all((Q == 0) | (Q == 1))
    assert sorted(np.argmax(Q, axis=1).tolist()) == list(range(8))
    rep = id_errors(res.code, ch)
    assert rep.mu == 0.0 and rep.lam == 0.0
    assert res.floor == pytest.approx(2.0)


def test_search_bsc_duality():
    ch = DiscreteChannel.bsc(0.05)
    res = build_distinct_id_code(ch, 10, 4, 2)
    assert res.complete and res.floor > 0
    assert duality_distance_check(res.code, ch).passed
    out = output_laws(res.code, ch)
    for i, j in itertools.combinations(range(4), 2):
        assert np.abs(out[i] - out[j]).sum() >= res.floor - 1e-12


def test_search_is_seeded():
    ch = DiscreteChannel.bsc(0.1)
    a = build_distinct_id_code(ch, 8, 5, 3)
    b = build_distinct_id_code(ch, 8, 5, 3)
    np.testing.assert_array_equal(a.code.codewords, b.code.codewords)
    np.testing.assert_array_equal(a.code.decoding_sets, b.code.decoding_sets)


def test_search_respects_cost():
    cost = CostFunction.additive([0.0, 1.0])
    ch = DiscreteChannel.bsc(0.1)
    res = build_distinct_id_code(ch, 4, 3, 0, cost=cost, gamma=0.25)
    assert res.code.check_feasible(ch, cost, 0.25)


def test_search_best_effort_when_target_unreachable():
    # one letter, n = 1: only a single distinct output law exists
    ch = DiscreteChannel(np.array([[1.0]]))
    res = build_distinct_id_code(ch, 1, 3, 0)
    assert res.achieved_N == 1 and not res.complete


def test_search_preconditions():
    with pytest.raises(PreconditionError):
        build_distinct_id_code(DiscreteChannel.bsc(0.1), 13, 2, 0)
    with pytest.raises(PreconditionError):
        build_distinct_id_code(DiscreteChannel.bsc(0.1), 2, 0, 0)
