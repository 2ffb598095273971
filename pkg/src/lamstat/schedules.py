"""Lambda schedules, lacunary schedules and their index windows.

A lambda schedule is a finite prefix ``lam_1..lam_N`` of a non-decreasing
sequence with ``lam_1 = 1`` and ``lam_{n+1} <= lam_n + 1``. Its trailing window
at ``n`` is every integer ``k`` with ``n - lam_n + 1 <= k <= n``.

A lacunary schedule is a list of integer cuts ``0 = k_0 < k_1 < ... < k_R``
whose blocks are ``(k_{r-1}, k_r]``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    Decreasing,
    EmptyFile,
    FirstNotOne,
    FirstNotZero,
    JumpTooBig,
    Malformed,
    NonPositive,
    NotFinite,
    NotIncreasing,
    OutOfRange,
)

BUILTIN_SCHEDULES = ("identity", "sqrt", "log2")


class ScheduleWarning(UserWarning):
    """Finite-prefix hint that a schedule may not tend to infinity."""


@dataclass(frozen=True)
class IndexWindow:
    lo: int
    hi: int

    def __post_init__(self):
        if not 1 <= self.lo <= self.hi:
            raise ValueError(f"invalid window [{self.lo}, {self.hi}]")

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __iter__(self):
        return iter(range(self.lo, self.hi + 1))

    def __contains__(self, k) -> bool:
        return self.lo <= k <= self.hi


@dataclass(frozen=True, eq=False)
class LambdaSchedule:
    """A validated lambda schedule. Build it with ``validate_lambda``."""

    values: np.ndarray
    name: str = "custom"
    # 1-based lower window bounds, lo[n-1] for index n
    lows: np.ndarray = field(repr=False, default=None)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LambdaSchedule):
            return NotImplemented
        return self.name == other.name and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.name, self.values.tobytes()))

    def lam(self, n: int) -> float:
        """``lam_n`` for 1-based ``n``."""
        _check_index(n, len(self))
        return float(self.values[n - 1])

    @property
    def final(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True, eq=False)
class LacunarySchedule:
    cuts: np.ndarray
    margin: float = 0.0
    name: str = "custom"

    def __eq__(self, other) -> bool:
        if not isinstance(other, LacunarySchedule):
            return NotImplemented
        return (
            self.name == other.name
            and self.margin == other.margin
            and np.array_equal(self.cuts, other.cuts)
        )

    def __hash__(self):
        return hash((self.name, self.margin, self.cuts.tobytes()))

    @property
    def blocks(self) -> int:
        """Number of blocks R."""
        return len(self.cuts) - 1

    @property
    def h(self) -> np.ndarray:
        """Block lengths ``h_r = k_r - k_{r-1}`` for r = 1..R."""
        return np.diff(self.cuts)

    @property
    def q(self) -> np.ndarray:
        """Ratios ``q_r = k_r / k_{r-1}`` for r = 2..R."""
        if self.blocks < 2:
            return np.empty(0)
        return self.cuts[2:] / self.cuts[1:-1]

    @property
    def min_q(self) -> float | None:
        q = self.q
        return float(q.min()) if q.size else None

    @property
    def regular(self) -> bool:
        # No observed ratio means no evidence of regularity.
        mq = self.min_q
        return mq is not None and mq > 1.0 + self.margin

    def block(self, r: int) -> IndexWindow:
        _check_index(r, self.blocks)
        return IndexWindow(int(self.cuts[r - 1]) + 1, int(self.cuts[r]))


def _check_index(n, length):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= length:
        raise OutOfRange(f"index must lie in 1..{length}, got {n!r}", index=n if isinstance(n, int) else None)


def validate_lambda(values: Iterable[float], name: str = "custom") -> LambdaSchedule:
    """Check the lambda-schedule axioms and return an immutable schedule.

    Raises ``FirstNotOne``, ``NonPositive(n)``, ``Decreasing(n)`` or
    ``JumpTooBig(n)``; ``n`` is the 1-based position of the left term of the
    offending step. Warns with ``ScheduleWarning`` when ``lam_N < log N``,
    since growth to infinity cannot be checked on a prefix.
    """
    arr = np.array(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise OutOfRange("schedule must be a non-empty 1-d sequence")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise NotFinite("schedule value is not finite", index=int(bad[0]) + 1)
    bad = np.flatnonzero(arr <= 0)
    if bad.size:
        raise NonPositive("schedule value must be positive", index=int(bad[0]) + 1)
    if arr[0] != 1.0:
        raise FirstNotOne(f"lambda_1 must equal 1, got {arr[0]!r}")
    step = np.diff(arr)
    bad = np.flatnonzero(step < 0)
    if bad.size:
        raise Decreasing("lambda decreases", index=int(bad[0]) + 1)
    bad = np.flatnonzero(arr[1:] > arr[:-1] + 1.0)
    if bad.size:
        raise JumpTooBig("lambda_{n+1} > lambda_n + 1", index=int(bad[0]) + 1)

    n = np.arange(1, arr.size + 1)
    # implied by the axioms, checked anyway
    assert np.all(arr <= n), "lambda_n <= n violated"
    if arr.size > 1 and arr[-1] < math.log(arr.size):
        warnings.warn(
            f"schedule {name!r}: lambda_N = {arr[-1]:g} < log N = {math.log(arr.size):.3g}; "
            "it may not tend to infinity",
            ScheduleWarning,
            stacklevel=2,
        )
    lows = np.array([max(1, math.ceil(k - lam + 1)) for k, lam in zip(n.tolist(), arr.tolist())], dtype=np.int64)
    arr.setflags(write=False)
    lows.setflags(write=False)
    return LambdaSchedule(values=arr, name=name, lows=lows)


def window(schedule: LambdaSchedule, n: int) -> IndexWindow:
    """Index window ``I_n = [n - lam_n + 1, n]`` restricted to integers."""
    _check_index(n, len(schedule))
    return IndexWindow(int(schedule.lows[n - 1]), n)


def builtin(name: str, length: int) -> LambdaSchedule:
    """Named schedules: ``identity`` (lam_n = n), ``sqrt`` (max(1, floor(sqrt n)))
    and ``log2`` (max(1, floor(log2(n + 1))))."""
    if length < 1:
        raise OutOfRange("schedule length must be >= 1")
    n = range(1, length + 1)
    if name == "identity":
        vals = list(n)
    elif name in ("sqrt", "floor-sqrt"):
        name = "sqrt"
        vals = [max(1, math.isqrt(k)) for k in n]
    elif name == "log2":
        vals = [max(1, (k + 1).bit_length() - 1) for k in n]
    else:
        raise KeyError(f"unknown schedule {name!r}; choose from {BUILTIN_SCHEDULES}")
    return validate_lambda(vals, name=name)


def identity(length: int) -> LambdaSchedule:
    return builtin("identity", length)


def load_schedule_csv(path, header: bool = False, name: str | None = None) -> LambdaSchedule:
    """Read a schedule from a CSV file with one value per line."""
    path = Path(path)
    vals = []
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if header:
        rows = rows[1:]
    for lineno, row in enumerate(rows, start=2 if header else 1):
        cells = [c.strip() for c in row if c.strip()]
        if not cells:
            continue
        if len(cells) != 1:
            raise Malformed("expected one value per line", index=lineno)
        try:
            vals.append(float(cells[0]))
        except ValueError:
            raise Malformed(f"not a number: {cells[0]!r}", index=lineno) from None
    if not vals:
        raise EmptyFile(f"{path} has no schedule values")
    return validate_lambda(vals, name=name or path.stem)


def resolve_schedule(spec: str, length: int, header: bool = False) -> LambdaSchedule:
    """A builtin id, or a path to a CSV schedule (which must cover ``length``)."""
    if spec in BUILTIN_SCHEDULES or spec == "floor-sqrt":
        return builtin(spec, length)
    sched = load_schedule_csv(spec, header=header)
    if len(sched) < length:
        raise OutOfRange(f"schedule {spec} has {len(sched)} values, need {length}")
    return sched


def validate_lacunary(cuts: Sequence[int], margin: float = 0.0, name: str = "custom") -> LacunarySchedule:
    """Check ``k_0 = 0`` and strictly increasing integer cuts.

    ``regular`` on the result records whether the smallest observed ratio
    ``q_r`` (r >= 2) exceeds ``1 + margin``.
    """
    raw = list(cuts)
    if not raw:
        raise OutOfRange("cut list must be non-empty")
    out = []
    for r, k in enumerate(raw):
        if isinstance(k, float) and not k.is_integer():
            raise Malformed("cuts must be integers", index=r)
        out.append(int(k))
    if out[0] != 0:
        raise FirstNotZero(f"k_0 must be 0, got {out[0]}")
    for r in range(1, len(out)):
        if out[r] <= out[r - 1]:
            raise NotIncreasing("cuts must increase strictly", index=r)
    arr = np.array(out, dtype=np.int64)
    arr.setflags(write=False)
    return LacunarySchedule(cuts=arr, margin=float(margin), name=name)


def doubling_cuts(limit: int) -> list[int]:
    """``(0, 2, 4, 8, ...)`` up to ``limit``."""
    cuts = [0]
    k = 2
    while k <= limit:
        cuts.append(k)
        k *= 2
    return cuts


def resolve_lacunary(spec: str, limit: int, margin: float = 0.0) -> LacunarySchedule:
    """``doubling``, a comma list of cuts, or a CSV path of cuts."""
    if spec == "doubling":
        return validate_lacunary(doubling_cuts(limit), margin=margin, name="doubling")
    if "," in spec or spec.strip().isdigit():
        try:
            cuts = [int(c) for c in spec.split(",") if c.strip()]
        except ValueError:
            raise Malformed(f"bad cut list {spec!r}") from None
        return validate_lacunary(cuts, margin=margin)
    sched = load_schedule_csv_ints(spec)
    return validate_lacunary(sched, margin=margin, name=Path(spec).stem)


def load_schedule_csv_ints(path) -> list[int]:
    vals = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            try:
                vals.append(int(s))
            except ValueError:
                raise Malformed(f"not an integer: {s!r}", index=lineno) from None
    if not vals:
        raise EmptyFile(f"{path} has no cuts")
    return vals
