"""Windowed means, residuals and deviation densities on sequence prefixes.

All positions are 1-based. Normalisation always divides by ``lam_n`` itself,
never by the integer size of the window, so real-valued schedules behave as
the textbook formulas read.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    CutsExceedPrefix,
    EmptyPrefix,
    NonPositiveEpsilon,
    NotFinite,
    OutOfRange,
    PrefixTooShort,
)
from .schedules import LacunarySchedule, LambdaSchedule, identity, window

DEFAULT_EPSILONS = (0.5, 0.1, 0.02)
DEFAULT_TOLERANCE = 0.05
DEFAULT_TAIL = 0.2
DIVERGENCE_FACTOR = 10.0


class Method(str, Enum):
    LIM = "LIM"
    ST = "ST"
    S_THETA = "S_THETA"
    S_LAMBDA = "S_LAMBDA"
    V_LAMBDA_STRONG = "V_LAMBDA_STRONG"
    V_LAMBDA_MEAN = "V_LAMBDA_MEAN"


MEAN_METHODS = (Method.V_LAMBDA_MEAN, Method.V_LAMBDA_STRONG)


class Verdict(str, Enum):
    CONVERGED_EVIDENCE = "CONVERGED_EVIDENCE"
    DIVERGED_EVIDENCE = "DIVERGED_EVIDENCE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True, eq=False)
class SequencePrefix:
    """Finite prefix ``x_1..x_N`` of a real sequence (stored 0-based)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise EmptyPrefix("a prefix needs at least one value")
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise NotFinite("prefix value is not finite", index=int(bad[0]) + 1)
        if arr is self.values and arr.flags.writeable:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, k: int) -> float:
        if not 1 <= k <= len(self):
            raise OutOfRange(f"index must lie in 1..{len(self)}", index=k)
        return float(self.values[k - 1])

    def __eq__(self, other):
        if not isinstance(other, SequencePrefix):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def tolist(self) -> list[float]:
        return self.values.tolist()


def as_prefix(x) -> SequencePrefix:
    return x if isinstance(x, SequencePrefix) else SequencePrefix(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """Per-index densities ``d_n = |{k in I_n : |x_k - L| >= eps}| / lam_n``.

    ``counts`` keeps the integer numerators so exact comparisons stay exact.
    """

    epsilon: float
    center: float
    densities: np.ndarray
    counts: np.ndarray
    schedule_name: str

    def __len__(self):
        return self.densities.size

    def at(self, n: int) -> float:
        return float(self.densities[n - 1])

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "center": self.center,
            "schedule_name": self.schedule_name,
            "counts": self.counts.tolist(),
            "densities": self.densities.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DensityProfile":
        return cls(
            epsilon=float(d["epsilon"]),
            center=float(d["center"]),
            densities=np.asarray(d["densities"], dtype=float),
            counts=np.asarray(d["counts"], dtype=np.int64),
            schedule_name=d["schedule_name"],
        )


@dataclass(frozen=True)
class ConvergenceReport:
    method: Method
    candidate_limit: float
    epsilon_grid: tuple[float, ...]
    tail_densities: dict[float, float]
    verdict: Verdict
    tolerance: float = DEFAULT_TOLERANCE
    tail_fraction: float = DEFAULT_TAIL
    tail_length: int = 0
    tail_max: dict[float, float] = field(default_factory=dict)
    tail_min: dict[float, float] = field(default_factory=dict)
    schedule_name: str = ""

    def to_dict(self) -> dict:
        def keyed(m):
            return [[e, v] for e, v in m.items()]

        return {
            "method": self.method.value,
            "candidate_limit": self.candidate_limit,
            "epsilon_grid": list(self.epsilon_grid),
            "tail_densities": keyed(self.tail_densities),
            "tail_max": keyed(self.tail_max),
            "tail_min": keyed(self.tail_min),
            "tolerance": self.tolerance,
            "tail_fraction": self.tail_fraction,
            "tail_length": self.tail_length,
            "schedule_name": self.schedule_name,
            "verdict": self.verdict.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConvergenceReport":
        def unkey(rows):
            return {float(e): float(v) for e, v in rows}

        return cls(
            method=Method(d["method"]),
            candidate_limit=float(d["candidate_limit"]),
            epsilon_grid=tuple(float(e) for e in d["epsilon_grid"]),
            tail_densities=unkey(d["tail_densities"]),
            verdict=Verdict(d["verdict"]),
            tolerance=float(d["tolerance"]),
            tail_fraction=float(d["tail_fraction"]),
            tail_length=int(d["tail_length"]),
            tail_max=unkey(d["tail_max"]),
            tail_min=unkey(d["tail_min"]),
            schedule_name=d["schedule_name"],
        )


def _need(schedule: LambdaSchedule, length: int):
    if len(schedule) < length:
        raise OutOfRange(f"schedule {schedule.name!r} has {len(schedule)} values, prefix needs {length}")


def _check_n(prefix: SequencePrefix, schedule: LambdaSchedule, n: int):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= min(len(prefix), len(schedule)):
        raise OutOfRange(f"n must lie in 1..{min(len(prefix), len(schedule))}", index=n)


def _check_eps(epsilon: float):
    if not epsilon > 0 or not math.isfinite(epsilon):
        raise NonPositiveEpsilon(f"epsilon must be a positive real, got {epsilon!r}")


def vp_mean(prefix, schedule: LambdaSchedule, n: int) -> float:
    """De la Vallee-Poussin mean ``t_n = (1/lam_n) * sum_{k in I_n} x_k``."""
    prefix = as_prefix(prefix)
    _check_n(prefix, schedule, n)
    w = window(schedule, n)
    return math.fsum(prefix.values[w.lo - 1 : w.hi]) / schedule.values[n - 1]


def vp_means(prefix, schedule: LambdaSchedule) -> np.ndarray:
    """``t_n`` for every n = 1..N."""
    prefix = as_prefix(prefix)
    _need(schedule, len(prefix))
    return np.array([vp_mean(prefix, schedule, n) for n in range(1, len(prefix) + 1)])


def strong_residual(prefix, schedule: LambdaSchedule, L: float, n: int) -> float:
    """``(1/lam_n) * sum_{k in I_n} |x_k - L|``; zero iff the window sits on L."""
    prefix = as_prefix(prefix)
    _check_n(prefix, schedule, n)
    w = window(schedule, n)
    return math.fsum(np.abs(prefix.values[w.lo - 1 : w.hi] - L)) / schedule.values[n - 1]


def strong_residuals(prefix, schedule: LambdaSchedule, L: float) -> np.ndarray:
    prefix = as_prefix(prefix)
    _need(schedule, len(prefix))
    return np.array([strong_residual(prefix, schedule, L, n) for n in range(1, len(prefix) + 1)])


def window_counts(flags: np.ndarray, schedule: LambdaSchedule) -> np.ndarray:
    """Number of set flags inside each window ``I_1..I_N`` (exact integers)."""
    n = flags.size
    csum = np.concatenate(([0], np.cumsum(flags, dtype=np.int64)))
    lows = schedule.lows[:n]
    return csum[1 : n + 1] - csum[lows - 1]


def lambda_density(prefix, schedule: LambdaSchedule, L: float, epsilon: float) -> DensityProfile:
    """Window densities of the deviation set ``{k : |x_k - L| >= epsilon}``."""
    _check_eps(epsilon)
    prefix = as_prefix(prefix)
    _need(schedule, len(prefix))
    flags = np.abs(prefix.values - L) >= epsilon
    counts = window_counts(flags, schedule)
    dens = counts / schedule.values[: len(prefix)]
    return DensityProfile(float(epsilon), float(L), dens, counts, schedule.name)


def lacunary_density(prefix, lacunary: LacunarySchedule, L: float, epsilon: float) -> np.ndarray:
    """Per-block densities ``|{k in (k_{r-1}, k_r] : |x_k - L| >= eps}| / h_r``."""
    _check_eps(epsilon)
    prefix = as_prefix(prefix)
    if int(lacunary.cuts[-1]) > len(prefix):
        raise CutsExceedPrefix(f"last cut {int(lacunary.cuts[-1])} exceeds prefix length {len(prefix)}")
    flags = np.abs(prefix.values - L) >= epsilon
    csum = np.concatenate(([0], np.cumsum(flags, dtype=np.int64)))
    counts = csum[lacunary.cuts[1:]] - csum[lacunary.cuts[:-1]]
    return counts / lacunary.h


def matrix_A_transform(prefix, schedule: LambdaSchedule) -> SequencePrefix:
    """Apply the two-diagonal matrix with ``a_{n,n} = -1/lam_n``, ``a_{n,n+1} = 1/lam_n``.

    Output has length N-1: ``(x_{n+1} - x_n) / lam_n``.
    """
    prefix = as_prefix(prefix)
    if len(prefix) < 2:
        raise PrefixTooShort("matrix transform needs N >= 2")
    _need(schedule, len(prefix) - 1)
    x = prefix.values
    return SequencePrefix(np.diff(x) / schedule.values[: x.size - 1])


def tail_length(n: int, tail_fraction: float) -> int:
    if not 0 < tail_fraction <= 1:
        raise ValueError(f"tail_fraction must lie in (0, 1], got {tail_fraction!r}")
    return max(1, min(n, math.ceil(tail_fraction * n)))


def _verdict(tails: dict[float, np.ndarray], tolerance: float) -> Verdict:
    if all(t.max() <= tolerance for t in tails.values()):
        return Verdict.CONVERGED_EVIDENCE
    if any(t.min() >= DIVERGENCE_FACTOR * tolerance for t in tails.values()):
        return Verdict.DIVERGED_EVIDENCE
    return Verdict.INCONCLUSIVE


def estimate_limit(
    prefix,
    schedule: LambdaSchedule | None = None,
    method: Method | str = Method.S_LAMBDA,
    epsilon_grid: Sequence[float] = DEFAULT_EPSILONS,
    tail_fraction: float = DEFAULT_TAIL,
    tolerance: float = DEFAULT_TOLERANCE,
    lacunary: LacunarySchedule | None = None,
) -> ConvergenceReport:
    """Pick a candidate limit and grade the tail evidence for one method.

    The candidate is the last window mean for the (V, lambda) methods and the
    median of the last window for the others (the tail segment for LIM, the
    last block for S_THETA). The verdict is CONVERGED_EVIDENCE when every
    tail measure is within ``tolerance``, DIVERGED_EVIDENCE when for some
    epsilon the measure never drops below ``10 * tolerance`` on the tail.
    """
    method = Method(method)
    prefix = as_prefix(prefix)
    eps = tuple(float(e) for e in epsilon_grid)
    if not eps:
        raise ValueError("epsilon grid must be non-empty")
    for e in eps:
        _check_eps(e)
    N = len(prefix)
    T = tail_length(N, tail_fraction)
    x = prefix.values

    if method in (Method.ST, Method.LIM):
        schedule = identity(N)
    elif method is Method.S_THETA:
        if lacunary is None:
            raise ValueError("S_THETA needs a lacunary schedule")
    elif schedule is None:
        raise ValueError(f"{method.value} needs a lambda schedule")
    else:
        _need(schedule, N)

    if method in MEAN_METHODS:
        L = vp_mean(prefix, schedule, N)
    elif method is Method.LIM:
        L = float(np.median(x[N - T :]))
    elif method is Method.S_THETA:
        if int(lacunary.cuts[-1]) > N:
            raise CutsExceedPrefix(f"last cut {int(lacunary.cuts[-1])} exceeds prefix length {N}")
        blk = lacunary.block(lacunary.blocks)
        L = float(np.median(x[blk.lo - 1 : blk.hi]))
    else:
        w = window(schedule, N)
        L = float(np.median(x[w.lo - 1 : w.hi]))

    tails: dict[float, np.ndarray] = {}
    for e in eps:
        if method is Method.LIM:
            t = (np.abs(x[N - T :] - L) >= e).astype(float)
        elif method is Method.S_THETA:
            dens = lacunary_density(prefix, lacunary, L, e)
            # blocks ending inside the tail, at least the last one
            inside = lacunary.cuts[1:] > N - T
            t = dens[inside] if inside.any() else dens[-1:]
        elif method is Method.V_LAMBDA_STRONG:
            t = np.array([strong_residual(prefix, schedule, L, n) for n in range(N - T + 1, N + 1)])
        elif method is Method.V_LAMBDA_MEAN:
            t = np.array([abs(vp_mean(prefix, schedule, n) - L) for n in range(N - T + 1, N + 1)])
        else:
            t = lambda_density(prefix, schedule, L, e).densities[N - T :]
        tails[e] = t

    return ConvergenceReport(
        method=method,
        candidate_limit=L,
        epsilon_grid=eps,
        tail_densities={e: float(t[-1]) for e, t in tails.items()},
        verdict=_verdict(tails, tolerance),
        tolerance=float(tolerance),
        tail_fraction=float(tail_fraction),
        tail_length=T,
        tail_max={e: float(t.max()) for e, t in tails.items()},
        tail_min={e: float(t.min()) for e, t in tails.items()},
        schedule_name=(lacunary.name if method is Method.S_THETA else schedule.name),
    )
