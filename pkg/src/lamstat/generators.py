"""Sequence constructions and the two random elimination processes.

Deterministic builders: running bit averages, anchor interleavings, and the
pair embedding that threads arbitrary close pairs into one sequence with
shrinking steps. Stochastic builders: the pick-and-remove survivor game and
the three-way splitting process, each with an exact small-n oracle.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import streams
from .errors import CapExceeded, EmptyPrefix, NonBitValue, NotFinite
from .summability import SequencePrefix, as_prefix

# stream tags keep the two processes on disjoint substreams
_SURVIVOR = 1
_THREE_SPLIT = 2

DEFAULT_BATCH = 20_000
EXACT_SURVIVOR_CAP = 8


class Mode(str, Enum):
    MONTE_CARLO = "MONTE_CARLO"
    EXACT = "EXACT"


@dataclass(frozen=True)
class PairList:
    pairs: tuple[tuple[float, float], ...]
    domain: tuple[float, float] | None = None

    def __post_init__(self):
        pairs = tuple((float(a), float(b)) for a, b in self.pairs)
        for i, (a, b) in enumerate(pairs, start=1):
            if not (math.isfinite(a) and math.isfinite(b)):
                raise NotFinite("pair values must be finite", index=i)
        object.__setattr__(self, "pairs", pairs)

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True, eq=False)
class EmbeddingResult:
    """``sequence`` with ``(xi_i, eta_i) = (a_{j-1}, a_j)`` for ``j = anchor_indices[i-1]``."""

    sequence: SequencePrefix
    anchor_indices: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"sequence": self.sequence.tolist(), "anchor_indices": list(self.anchor_indices)}

    @classmethod
    def from_dict(cls, d: dict) -> "EmbeddingResult":
        return cls(SequencePrefix(np.asarray(d["sequence"], dtype=float)), tuple(int(j) for j in d["anchor_indices"]))


@dataclass(frozen=True, eq=False)
class SimulationResult:
    process: str
    n_values: tuple[int, ...]
    estimates: np.ndarray
    stderr: np.ndarray
    trials: int
    seed: int
    mode: Mode
    # estimates / n and stderr / n; filled for the splitting process only
    scaled: np.ndarray | None = None
    scaled_stderr: np.ndarray | None = None
    exact: dict = field(default_factory=dict)

    def estimate(self, n: int) -> float:
        return float(self.estimates[self.n_values.index(n)])

    def error(self, n: int) -> float:
        return float(self.stderr[self.n_values.index(n)])

    def to_dict(self) -> dict:
        d = {
            "process": self.process,
            "mode": self.mode.value,
            "seed": self.seed,
            "trials": self.trials,
            "n_values": list(self.n_values),
            "estimates": self.estimates.tolist(),
            "stderr": self.stderr.tolist(),
        }
        if self.scaled is not None:
            d["scaled"] = self.scaled.tolist()
            d["scaled_stderr"] = self.scaled_stderr.tolist()
        if self.exact:
            d["exact"] = {str(n): str(v) for n, v in self.exact.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationResult":
        scaled = d.get("scaled")
        return cls(
            process=d["process"],
            n_values=tuple(int(n) for n in d["n_values"]),
            estimates=np.asarray(d["estimates"], dtype=float),
            stderr=np.asarray(d["stderr"], dtype=float),
            trials=int(d["trials"]),
            seed=int(d["seed"]),
            mode=Mode(d["mode"]),
            scaled=None if scaled is None else np.asarray(scaled, dtype=float),
            scaled_stderr=None if scaled is None else np.asarray(d["scaled_stderr"], dtype=float),
            exact={int(n): Fraction(v) for n, v in d.get("exact", {}).items()},
        )


# ---------------------------------------------------------------------------
# deterministic constructions
# ---------------------------------------------------------------------------


def gen_bit_average(bits: Sequence[int]) -> SequencePrefix:
    """Running means ``a_n = (x_1 + ... + x_n) / n`` of a 0/1 sequence."""
    arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
    if arr.size == 0:
        raise EmptyPrefix("bits must be non-empty")
    bad = np.flatnonzero((arr != 0) & (arr != 1))
    if bad.size:
        raise NonBitValue(f"expected 0 or 1, got {arr[bad[0]]!r}", index=int(bad[0]) + 1)
    csum = np.cumsum(arr.astype(np.int64))
    return SequencePrefix(csum / np.arange(1, arr.size + 1))


def gen_interleave(prefix, x0: float) -> SequencePrefix:
    """``(x_1, x0, x_2, x0, ..., x_N, x0)``."""
    x = as_prefix(prefix).values
    out = np.empty(2 * x.size)
    out[0::2] = x
    out[1::2] = x0
    return SequencePrefix(out)


def _bridge(start: float, stop: float, steps_per_unit: int) -> list[float]:
    """Interior points of a linear walk from ``start`` to ``stop`` with steps <= ``1/steps_per_unit``."""
    bound = 1.0 / steps_per_unit
    gap = abs(stop - start)
    m = math.ceil(gap * steps_per_unit) if gap > 0 else 0
    while m > 1:
        pts = [start + (stop - start) * (t / m) for t in range(1, m)]
        walk = [start, *pts, stop]
        # float rounding can push an exact-bound step over by an ulp
        if max(abs(b - a) for a, b in zip(walk, walk[1:])) <= bound:
            return pts
        m += 1
    return []


def gen_pair_embedding(pairs: PairList | Sequence[tuple[float, float]]) -> EmbeddingResult:
    """Thread pairs ``(xi_i, eta_i)`` into one sequence as consecutive terms.

    Between ``eta_i`` and ``xi_{i+1}`` a linear bridge of ``ceil(gap * (i+1))``
    equal steps is inserted, so every bridge step after pair ``i`` is at most
    ``1/(i+1)``. Pairs are reproduced bit-exactly at the recorded anchors.
    """
    if not isinstance(pairs, PairList):
        pairs = PairList(tuple(pairs))
    if len(pairs) == 0:
        raise EmptyPrefix("need at least one pair")
    seq: list[float] = []
    anchors = []
    for i, (xi, eta) in enumerate(pairs.pairs, start=1):
        if seq:
            seq.extend(_bridge(seq[-1], xi, i))
        seq.append(xi)
        seq.append(eta)
        anchors.append(len(seq))
    return EmbeddingResult(SequencePrefix(np.array(seq)), tuple(anchors))


def gen_sqrt(length: int, scale: float = 1.0, offset: float = 0.0) -> SequencePrefix:
    """``offset + scale * sqrt(n)``: quasi-Cauchy, unbounded."""
    return SequencePrefix(offset + scale * np.sqrt(np.arange(1, length + 1)))


def gen_harmonic(length: int) -> SequencePrefix:
    """Partial sums of ``1/k``: steps shrink, no limit."""
    return SequencePrefix(np.cumsum(1.0 / np.arange(1, length + 1)))


def is_square(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=np.int64)
    r = np.floor(np.sqrt(k)).astype(np.int64)
    # guard against sqrt rounding for large k
    r = np.where((r + 1) * (r + 1) <= k, r + 1, r)
    r = np.where(r * r > k, r - 1, r)
    return r * r == k


def gen_square_indicator(length: int) -> SequencePrefix:
    """``x_k = 1`` when k is a perfect square, else 0."""
    return SequencePrefix(is_square(np.arange(1, length + 1)).astype(float))


def gen_jump_squares(length: int, offset: float = 0.0) -> SequencePrefix:
    """Unit step ``x_{k+1} - x_k = 1`` exactly when k is a perfect square."""
    steps = is_square(np.arange(1, length)).astype(float)
    return SequencePrefix(offset + np.concatenate(([0.0], np.cumsum(steps))))


FAMILIES = ("bit-average", "sqrt", "harmonic", "interleave", "pair-embedding", "jump-squares")
QC_FAMILIES = ("bit-average", "sqrt", "harmonic", "interleave", "pair-embedding")


def sqrt_pairs(count: int) -> PairList:
    """``(sqrt i, sqrt i + 1/i)`` for i = 1..count."""
    return PairList(tuple((math.sqrt(i), math.sqrt(i) + 1.0 / i) for i in range(1, count + 1)))


def gen_family(kind: str, length: int, rng: np.random.Generator | None = None) -> SequencePrefix:
    """One member of a named family; ``rng`` randomises shape where the family allows."""
    rng = rng if rng is not None else np.random.default_rng(0)
    if kind == "bit-average":
        p = rng.uniform(0.05, 0.95)
        return gen_bit_average((rng.random(length) < p).astype(np.int64))
    if kind == "sqrt":
        return gen_sqrt(length, scale=rng.uniform(0.2, 2.0), offset=rng.uniform(-5, 5))
    if kind == "harmonic":
        return SequencePrefix(rng.uniform(-1, 1) + gen_harmonic(length).values)
    if kind == "interleave":
        half = max(1, length // 2)
        x0 = rng.uniform(-1, 1)
        return gen_interleave(x0 + 1.0 / np.arange(1, half + 1), x0)
    if kind == "pair-embedding":
        count = max(1, math.isqrt(length))
        base = sqrt_pairs(count)
        return gen_pair_embedding(base).sequence
    if kind == "jump-squares":
        return gen_jump_squares(length)
    raise KeyError(f"unknown family {kind!r}; choose from {FAMILIES}")


def make_family(kind: str | Sequence[str], count: int, length: int, seed: int = 0) -> list[SequencePrefix]:
    """``count`` prefixes, cycling over ``kind`` when several kinds are given."""
    kinds = [kind] if isinstance(kind, str) else list(kind)
    rng = np.random.default_rng(seed)
    return [gen_family(kinds[i % len(kinds)], length, rng) for i in range(count)]


# ---------------------------------------------------------------------------
# survivor game: everyone picks someone else, the picked are removed
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _picked_count_distribution(m: int) -> tuple[int, ...]:
    # counts[k] = number of the (m-1)^m selection profiles picking exactly k people
    layer = {0: 1}
    for person in range(m):
        nxt: dict[int, int] = {}
        for mask, ways in layer.items():
            for target in range(m):
                if target == person:
                    continue
                key = mask | (1 << target)
                nxt[key] = nxt.get(key, 0) + ways
        layer = nxt
    counts = [0] * (m + 1)
    for mask, ways in layer.items():
        counts[bin(mask).count("1")] += ways
    assert sum(counts) == (m - 1) ** m
    return tuple(counts)


@lru_cache(maxsize=None)
def _survivor_exact(n: int) -> Fraction:
    if n <= 1:
        return Fraction(n)
    counts = _picked_count_distribution(n)
    total = (n - 1) ** n
    # at least two people are always picked, so the group strictly shrinks
    return sum((Fraction(c, total) * _survivor_exact(n - k) for k, c in enumerate(counts) if c), Fraction(0))


def exact_survivor(n: int, n_cap: int = EXACT_SURVIVOR_CAP) -> Fraction:
    """Exact probability that a group of ``n`` ends with one person left.

    Uses all ``(m-1)^m`` selection profiles at every group size m <= n,
    aggregated person by person over the set of picked people.
    ``p_1 = 1``, ``p_0 = 0``.
    """
    if n > n_cap:
        raise CapExceeded(f"exact enumeration capped at n = {n_cap}", index=n)
    if n < 0:
        raise ValueError("n must be non-negative")
    return _survivor_exact(n)


def _survivor_batch(seed: int, n: int, trial_ids: np.ndarray) -> np.ndarray:
    size = np.full(trial_ids.size, n, dtype=np.int64)
    rnd = 0
    while True:
        active = size >= 2
        if not active.any():
            break
        new = size.copy()
        for m in np.unique(size[active]):
            sel = np.flatnonzero(size == m)
            person = np.arange(m)[None, :]
            c = streams.integers(m - 1, seed, _SURVIVOR, n, trial_ids[sel][:, None], rnd, person)
            picks = np.sort(c + (c >= person), axis=1)
            distinct = 1 + np.count_nonzero(np.diff(picks, axis=1), axis=1)
            new[sel] = m - distinct
        size = new
        rnd += 1
    return size == 1


def _three_split_batch(seed: int, n: int, trial_ids: np.ndarray) -> np.ndarray:
    T = trial_ids.size
    g_trial = np.arange(T)
    g_size = np.full(T, n, dtype=np.int64)
    g_slot = np.zeros(T, dtype=np.int64)
    rounds = np.zeros(T, dtype=np.int64)
    rnd = 0
    while g_size.size:
        live = np.zeros(T, dtype=bool)
        live[g_trial] = True
        rounds += live
        G = g_size.size
        gid = np.repeat(np.arange(G), g_size)
        starts = np.concatenate(([0], np.cumsum(g_size)[:-1]))
        person = np.arange(gid.size) - starts[gid]
        choice = streams.integers(3, seed, _THREE_SPLIT, n, trial_ids[g_trial[gid]], rnd, g_slot[gid], person)
        child = np.bincount(gid * 3 + choice, minlength=3 * G).reshape(G, 3)
        assert np.array_equal(child.sum(axis=1), g_size), "split lost people"
        keep = (child >= 2).ravel()
        g_trial = np.repeat(g_trial, 3)[keep]
        g_size = child.ravel()[keep]
        # slot = position among the trial's live groups (g_trial stays sorted)
        if g_trial.size:
            _, first, inv = np.unique(g_trial, return_index=True, return_inverse=True)
            g_slot = np.arange(g_trial.size) - first[inv]
        rnd += 1
    return rounds


def _run_batches(fn, seed, n, trials, batch, workers):
    bounds = [(lo, min(lo + batch, trials)) for lo in range(0, trials, batch)]
    jobs = [np.arange(lo, hi, dtype=np.int64) for lo, hi in bounds]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ids: fn(seed, n, ids), jobs))
    else:
        parts = [fn(seed, n, ids) for ids in jobs]
    return np.concatenate(parts)


def _mean_and_stderr(samples: np.ndarray) -> tuple[float, float]:
    samples = samples.astype(float)
    return float(samples.mean()), float(samples.std() / math.sqrt(samples.size))


def _check_sim_args(n_max, trials):
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    if trials < 1:
        raise ValueError("trials must be >= 1")


def simulate_survivor(
    n_max: int, trials: int, seed: int = 0, batch: int = DEFAULT_BATCH, workers: int = 1
) -> SimulationResult:
    """Monte Carlo estimates of ``p_n`` for n = 2..n_max.

    In each round every member of a group of size m >= 2 picks one of the
    other m-1 uniformly; all picked members leave. A trial succeeds when
    exactly one person is left. Trial ``i`` at size ``n`` draws only from the
    substream keyed by ``(seed, n, i)``, so batching and ``workers`` never
    change the result.
    """
    _check_sim_args(n_max, trials)
    ns = tuple(range(2, n_max + 1))
    est, err = [], []
    for n in ns:
        ok = _run_batches(_survivor_batch, seed, n, trials, batch, workers)
        m, s = _mean_and_stderr(ok)
        est.append(m)
        err.append(s)
    return SimulationResult("survivor", ns, np.array(est), np.array(err), trials, int(seed), Mode.MONTE_CARLO)


def exact_survivor_table(n_max: int, n_cap: int = EXACT_SURVIVOR_CAP) -> SimulationResult:
    ns = tuple(range(2, n_max + 1))
    vals = {n: exact_survivor(n, n_cap) for n in ns}
    return SimulationResult(
        "survivor", ns, np.array([float(v) for v in vals.values()]), np.zeros(len(ns)), 0, 0, Mode.EXACT, exact=vals
    )


# ---------------------------------------------------------------------------
# three-way splitting: every live group splits at once, singletons and empties drop out
# ---------------------------------------------------------------------------


def simulate_three_split(
    n_max: int, trials: int, seed: int = 0, batch: int = DEFAULT_BATCH, workers: int = 1
) -> SimulationResult:
    """Monte Carlo estimates of ``t_n``, the expected number of rounds.

    One round splits every live group (size >= 2) at once, each member
    choosing one of three subgroups uniformly; subgroups of size <= 1 are
    dropped. ``t`` counts rounds until nothing is live, i.e. the depth of the
    splitting tree.
    """
    _check_sim_args(n_max, trials)
    ns = tuple(range(2, n_max + 1))
    est, err = [], []
    for n in ns:
        rounds = _run_batches(_three_split_batch, seed, n, trials, batch, workers)
        m, s = _mean_and_stderr(rounds)
        est.append(m)
        err.append(s)
    est_a, err_a = np.array(est), np.array(err)
    nn = np.array(ns, dtype=float)
    return SimulationResult(
        "three_split", ns, est_a, err_a, trials, int(seed), Mode.MONTE_CARLO, scaled=est_a / nn, scaled_stderr=err_a / nn
    )


def _multinomial3(n: int):
    total = 3**n
    for a in range(n + 1):
        for b in range(n - a + 1):
            c = n - a - b
            w = math.factorial(n) // (math.factorial(a) * math.factorial(b) * math.factorial(c))
            yield a, b, c, w / total


def three_split_depth_survival(n_max: int, rel_tol: float = 1e-18, max_depth: int = 100_000) -> np.ndarray:
    """``S[n, d] = P(rounds > d)`` for a group of n, n = 0..n_max.

    Works on the survival side so small tails keep full relative precision:
    with ``s_a, s_b, s_c`` the children's survivals one round later,
    ``P(some child survives) = s_a + s_b + s_c - s_a s_b - s_a s_c - s_b s_c + s_a s_b s_c``.
    Rows 0 and 1 are identically 0. Columns stop once the newest column is
    below ``rel_tol`` times the accumulated sum.
    """
    splits = {n: list(_multinomial3(n)) for n in range(2, n_max + 1)}
    first = np.zeros(n_max + 1)
    first[2:] = 1.0
    cols = [first]
    total = first.copy()
    while len(cols) <= max_depth:
        prev = cols[-1]
        cur = np.zeros(n_max + 1)
        for n in range(2, n_max + 1):
            terms = []
            for a, b, c, p in splits[n]:
                sa, sb, sc = prev[a], prev[b], prev[c]
                terms.append(p * (sa + sb + sc - sa * sb - sa * sc - sb * sc + sa * sb * sc))
            cur[n] = math.fsum(terms)
        cols.append(cur)
        total += cur
        if np.all(cur <= rel_tol * total):
            break
    return np.stack(cols, axis=1)


def exact_three_split(n_max: int) -> dict[int, float]:
    """Expected rounds ``t_n = sum_d P(rounds > d)`` for n = 2..n_max.

    The series is truncated once its terms fall below 1e-18 of the running
    sum, so values are exact to double precision rather than in rationals.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    S = three_split_depth_survival(n_max)
    return {n: math.fsum(S[n]) for n in range(2, n_max + 1)}


def exact_three_split_table(n_max: int) -> SimulationResult:
    vals = exact_three_split(n_max)
    ns = tuple(vals)
    est = np.array(list(vals.values()))
    nn = np.array(ns, dtype=float)
    return SimulationResult(
        "three_split", ns, est, np.zeros(len(ns)), 0, 0, Mode.EXACT, scaled=est / nn, scaled_stderr=np.zeros(len(ns))
    )
