"""Identification codes at small blocklengths.

Codewords are input distributions over the enumerated ``|X|**n`` words and
decoding sets are boolean masks over the ``|Y|**n`` output words; sets may
overlap. Also holds the counting of grid-quantized codebooks and the
log-log rate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channels import DiscreteChannel, apply_memoryless, check_constraint
from .errors import DimensionMismatchError, EnumerationTooLargeError, PreconditionError

SLACK_TOL = 1e-12
MAX_SEARCH_N = 12
MAX_BRUTE_FORCE = 10**6
EXHAUSTIVE_WORDS = 16  # pool of points and pairs stays at most 136 candidates


@dataclass(frozen=True, eq=False)
class IdentificationCode:
    codewords: np.ndarray
    decoding_sets: np.ndarray
    n: int

    def __post_init__(self):
        Q = np.atleast_2d(np.array(self.codewords, dtype=float))
        D = np.atleast_2d(np.array(self.decoding_sets, dtype=bool))
        if Q.shape[0] < 1:
            raise PreconditionError("an identification code needs N >= 1 messages")
        if D.shape[0] != Q.shape[0]:
            raise DimensionMismatchError(f"{Q.shape[0]} codewords but {D.shape[0]} decoding sets")
        if np.any(Q < 0) or np.any(np.abs(Q.sum(axis=1) - 1.0) > 1e-12):
            raise PreconditionError("each codeword must be a probability vector")
        Q.setflags(write=False)
        D.setflags(write=False)
        object.__setattr__(self, "codewords", Q)
        object.__setattr__(self, "decoding_sets", D)

    @property
    def N(self) -> int:
        return self.codewords.shape[0]

    def masks(self) -> list[int]:
        """Decoding sets as integers with bit ``y`` set when ``y`` is in the set."""
        return [sum(1 << int(y) for y in np.nonzero(row)[0]) for row in self.decoding_sets]

    @classmethod
    def from_masks(cls, codewords, masks, output_space_size: int, n: int) -> "IdentificationCode":
        D = np.zeros((len(masks), output_space_size), dtype=bool)
        for i, m in enumerate(masks):
            m = int(m)
            if m < 0 or m >> output_space_size:
                raise DimensionMismatchError(f"mask {i} has bits beyond the output space")
            for y in range(output_space_size):
                D[i, y] = (m >> y) & 1
        return cls(codewords, D, n)

    def check_feasible(self, channel: DiscreteChannel, cost, gamma) -> bool:
        words = np.array(np.unravel_index(np.arange(channel.input_size**self.n),
                                          (channel.input_size,) * self.n)).T
        support = np.any(self.codewords > 0, axis=0)
        return all(check_constraint(cost, gamma, w) for w in words[support])


@dataclass(frozen=True, eq=False)
class IdErrorReport:
    mu: float
    lam: float
    mu_per_message: np.ndarray
    pair_matrix: np.ndarray

    def as_dict(self) -> dict:
        return {
            "mu": self.mu,
            "lambda": self.lam,
            "mu_per_message": [float(v) for v in self.mu_per_message],
            "lambda_matrix": [[float(v) for v in row] for row in self.pair_matrix],
        }


def _check_sizes(code: IdentificationCode, channel: DiscreteChannel):
    if code.codewords.shape[1] != channel.input_size**code.n:
        raise DimensionMismatchError("codewords do not match the channel's input space")
    if code.decoding_sets.shape[1] != channel.output_size**code.n:
        raise DimensionMismatchError("decoding sets do not match the channel's output space")
    if channel.output_size**code.n > 2**16:
        raise EnumerationTooLargeError("output space too large for exact error computation")


def output_laws(code: IdentificationCode, channel: DiscreteChannel) -> np.ndarray:
    """``Q_i W^n`` for every message, shape ``(N, |Y|**n)``."""
    _check_sizes(code, channel)
    return np.stack([apply_memoryless(channel.transitions, q, code.n) for q in code.codewords])


def id_errors(code: IdentificationCode, channel: DiscreteChannel) -> IdErrorReport:
    """Miss probabilities ``mu_i = Q_i W^n(D_i^c)`` and false-identification
    probabilities ``lambda[j, i] = Q_j W^n(D_i)`` (``j != i``; diagonal 0)."""
    out = output_laws(code, channel)
    hits = out @ code.decoding_sets.T.astype(float)
    mu_i = np.clip(1.0 - np.diag(hits), 0.0, 1.0)
    lam = np.clip(hits.copy(), 0.0, 1.0)
    np.fill_diagonal(lam, 0.0)
    lam_max = float(lam.max()) if code.N > 1 else 0.0
    return IdErrorReport(float(mu_i.max()), lam_max, mu_i, lam)


@dataclass(frozen=True)
class DualityCheck:
    passed: bool
    witness: tuple[int, int] | None
    min_slack: float
    distance: float | None
    bound: float

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "witness": list(self.witness) if self.witness else None,
            "min_slack": self.min_slack,
            "distance": self.distance,
            "bound": self.bound,
        }


def duality_distance_check(code: IdentificationCode, channel: DiscreteChannel) -> DualityCheck:
    """Check ``d(Q_j W, Q_k W) >= 2(Q_j W(D_j) - Q_k W(D_j)) >= 2(1 - mu - lambda)``
    for every ordered pair ``j != k``.

    The witness is the pair with the smallest slack over both inequalities.
    """
    out = output_laws(code, channel)
    rep = id_errors(code, channel)
    bound = 2.0 * (1.0 - rep.mu - rep.lam)
    if code.N == 1:
        return DualityCheck(True, None, math.inf, None, bound)
    D = code.decoding_sets.astype(float)
    hits = out @ D.T
    dist = np.abs(out[:, None, :] - out[None, :, :]).sum(axis=-1)
    middle = 2.0 * (np.diag(hits)[:, None] - hits.T)  # [j, k] = 2(Q_jW(D_j) - Q_kW(D_j))
    slack = np.minimum(dist - middle, middle - bound)
    np.fill_diagonal(slack, np.inf)
    j, k = np.unravel_index(int(np.argmin(slack)), slack.shape)
    worst = float(slack[j, k])
    return DualityCheck(worst >= -SLACK_TOL, (int(j), int(k)), worst, float(dist[j, k]), bound)


def count_quantized_codebooks(k: int, M: int) -> tuple[int, int]:
    """``(C(M + k - 1, k - 1), k**M)``: distributions with masses ``m/M`` on
    ``k`` points, and the cruder count of maps ``[M] -> [k]``. Exact integers."""
    k, M = int(k), int(M)
    if k < 1 or M < 1:
        raise PreconditionError(f"need k >= 1 and M >= 1, got k={k}, M={M}")
    return math.comb(M + k - 1, k - 1), k**M


def enumerate_quantized_distributions(k: int, M: int) -> set[tuple[int, ...]]:
    """Brute force: push every map ``[M] -> [k]`` to its count vector."""
    if k < 1 or M < 1:
        raise PreconditionError(f"need k >= 1 and M >= 1, got k={k}, M={M}")
    if k**M > MAX_BRUTE_FORCE:
        raise EnumerationTooLargeError(f"{k}**{M} maps is too many to enumerate")
    seen = set()
    for f in itertools.product(range(k), repeat=M):
        counts = [0] * k
        for v in f:
            counts[v] += 1
        seen.add(tuple(counts))
    return seen


def loglog_rate(N, n: int) -> float:
    """``(1/n) log log N`` in nats; ``N`` may be a (big) integer or a float."""
    if n < 1:
        raise PreconditionError(f"n must be >= 1, got {n}")
    if not N > math.e:
        raise PreconditionError(f"log log N needs N > e, got {N}")
    return math.log(math.log(N)) / n


@dataclass(frozen=True, eq=False)
class IdSearchResult:
    code: IdentificationCode
    floor: float
    achieved_N: int
    target_N: int
    proposals: int
    restart: int

    @property
    def complete(self) -> bool:
        return self.achieved_N == self.target_N


def decoding_sets_by_dominance(outputs: np.ndarray) -> np.ndarray:
    """``D_i = {y : Q_iW(y) > 0 and Q_iW(y) >= max_{j != i} Q_jW(y)}``."""
    out = np.asarray(outputs)
    if out.shape[0] == 1:
        return out > 0
    D = np.zeros(out.shape, dtype=bool)
    for i in range(out.shape[0]):
        rest = np.delete(out, i, axis=0).max(axis=0)
        D[i] = (out[i] > 0) & (out[i] >= rest)
    return D


def _candidate_pool(words: np.ndarray, rng, size: int, exhaustive: bool) -> list[tuple[int, ...]]:
    """Point masses ``(a,)`` and half/half mixtures ``(a, b)`` over word indices."""
    if exhaustive:
        pool = [(int(a),) for a in words]
        pool += [(int(a), int(b)) for a, b in itertools.combinations(words, 2)]
        return pool
    out = []
    for _ in range(size):
        if rng.random() < 0.5 or words.size < 2:
            out.append((int(rng.choice(words)),))
        else:
            a, b = rng.choice(words, size=2, replace=False)
            out.append((int(min(a, b)), int(max(a, b))))
    return out


def _as_law(cand, size: int) -> np.ndarray:
    q = np.zeros(size)
    for a in cand:
        q[a] += 1.0 / len(cand)
    return q


def _greedy(channel, n, target_N, rng, budget, words, batch):
    nx = channel.input_size**n
    W = channel.transitions
    exhaustive = words.size <= EXHAUSTIVE_WORDS
    pool = _candidate_pool(words, rng, 0, True) if exhaustive else None
    cache: dict = {}

    def out_of(c):
        if c not in cache:
            cache[c] = apply_memoryless(W, _as_law(c, nx), n)
        return cache[c]

    first = pool[0] if exhaustive else _candidate_pool(words, rng, 1, False)[0]
    chosen, outs = [first], [out_of(first)]
    used = 1
    floor = math.inf
    while len(chosen) < target_N and used < budget:
        cands = pool if exhaustive else _candidate_pool(words, rng, min(batch, budget - used), False)
        used += len(cands)
        best, best_score = None, 0.0
        stack = np.stack(outs)
        for c in cands:
            if c in chosen:
                continue
            score = float(np.abs(stack - out_of(c)).sum(axis=1).min())
            if score > best_score + 1e-15:
                best, best_score = c, score
        if best is None or best_score <= 1e-12:
            if exhaustive:
                break
            continue
        chosen.append(best)
        outs.append(out_of(best))
        floor = min(floor, best_score)
    return chosen, np.stack(outs), floor, used


def build_distinct_id_code(channel: DiscreteChannel, n: int, target_N: int, seed: int,
                           cost=None, gamma=None, max_proposals: int = 10_000,
                           restarts: int = 4, batch: int = 64) -> IdSearchResult:
    """Greedy search for ``target_N`` codeword laws with large pairwise
    output distance.

    Candidates are point masses and half/half mixtures of two feasible words;
    each step adds the candidate maximizing the minimum output distance to
    the codewords chosen so far. Restarts run on independent streams spawned
    from ``seed`` and share the proposal cap; the best result wins by
    ``(achieved N, floor)``, ties to the earlier restart. Decoding sets are
    assigned by dominance (see :func:`decoding_sets_by_dominance`).
    """
    if not isinstance(channel, DiscreteChannel):
        raise PreconditionError("identification search needs a discrete channel")
    if n < 1 or n > MAX_SEARCH_N:
        raise PreconditionError(f"search supports 1 <= n <= {MAX_SEARCH_N}, got {n}")
    if target_N < 1:
        raise PreconditionError(f"target_N must be >= 1, got {target_N}")
    nx = channel.input_size**n
    words = np.arange(nx)
    if cost is not None:
        grid = np.array(np.unravel_index(words, (channel.input_size,) * n)).T
        words = words[[check_constraint(cost, gamma, w) for w in grid]]
        if words.size == 0:
            raise PreconditionError("no input word satisfies the cost constraint")
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(restarts)]
    share = max(1, max_proposals // restarts)
    best = None
    total = 0
    for r, rng in enumerate(streams):
        chosen, outs, floor, used = _greedy(channel, n, target_N, rng, share, words, batch)
        total += used
        key = (len(chosen), floor if len(chosen) > 1 else math.inf)
        if best is None or key > best[0]:
            best = (key, r, chosen, outs)
        if len(chosen) == target_N and words.size <= EXHAUSTIVE_WORDS:
            break  # the exhaustive search is deterministic across restarts
    (achieved, floor), r, chosen, outs = best
    Q = np.stack([_as_law(c, nx) for c in chosen])
    code = IdentificationCode(Q, decoding_sets_by_dominance(outs), n)
    return IdSearchResult(code, float(floor), achieved, int(target_N), total, r)
