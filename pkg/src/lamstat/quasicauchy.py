"""Forward differences and quasi-Cauchy classification of prefixes.

A prefix shows ordinary quasi-Cauchy evidence when its recent steps are all
small, and lambda-statistical quasi-Cauchy evidence when the steps that are
not small occupy a vanishing share of each window.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import PrefixTooShort
from .summability import (
    DEFAULT_EPSILONS,
    DEFAULT_TAIL,
    DEFAULT_TOLERANCE,
    DIVERGENCE_FACTOR,
    DensityProfile,
    SequencePrefix,
    _check_eps,
    as_prefix,
    lambda_density,
    tail_length,
)
from .schedules import LambdaSchedule


class QCVerdict(str, Enum):
    QC_EVIDENCE = "QC_EVIDENCE"
    LAMBDA_QC_ONLY_EVIDENCE = "LAMBDA_QC_ONLY_EVIDENCE"
    NEITHER = "NEITHER"
    INCONCLUSIVE = "INCONCLUSIVE"


PASSING = (QCVerdict.QC_EVIDENCE, QCVerdict.LAMBDA_QC_ONLY_EVIDENCE)


@dataclass(frozen=True, eq=False)
class QCDiagnostic:
    max_recent_step: float
    delta_density_profiles: list[DensityProfile]
    verdict: QCVerdict
    epsilon_grid: tuple[float, ...]
    tail_length: int
    step_tolerance: float = DEFAULT_TOLERANCE
    density_tolerance: float = DEFAULT_TOLERANCE

    @property
    def tail_max_density(self) -> dict[float, float]:
        T = self.tail_length
        return {p.epsilon: float(p.densities[-T:].max()) for p in self.delta_density_profiles}

    @property
    def tail_min_density(self) -> dict[float, float]:
        T = self.tail_length
        return {p.epsilon: float(p.densities[-T:].min()) for p in self.delta_density_profiles}

    def profile(self, epsilon: float) -> DensityProfile:
        for p in self.delta_density_profiles:
            if p.epsilon == epsilon:
                return p
        raise KeyError(epsilon)

    def to_dict(self, with_profiles: bool = True) -> dict:
        d = {
            "verdict": self.verdict.value,
            "max_recent_step": self.max_recent_step,
            "epsilon_grid": list(self.epsilon_grid),
            "tail_length": self.tail_length,
            "step_tolerance": self.step_tolerance,
            "density_tolerance": self.density_tolerance,
            "tail_max_density": [[e, v] for e, v in self.tail_max_density.items()],
        }
        if with_profiles:
            d["delta_density_profiles"] = [p.to_dict() for p in self.delta_density_profiles]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QCDiagnostic":
        return cls(
            max_recent_step=float(d["max_recent_step"]),
            delta_density_profiles=[DensityProfile.from_dict(p) for p in d.get("delta_density_profiles", [])],
            verdict=QCVerdict(d["verdict"]),
            epsilon_grid=tuple(float(e) for e in d["epsilon_grid"]),
            tail_length=int(d["tail_length"]),
            step_tolerance=float(d["step_tolerance"]),
            density_tolerance=float(d["density_tolerance"]),
        )


def diff(prefix) -> SequencePrefix:
    """``Delta x_n = x_{n+1} - x_n`` for n = 1..N-1."""
    prefix = as_prefix(prefix)
    if len(prefix) < 2:
        raise PrefixTooShort("differencing needs N >= 2")
    return SequencePrefix(np.diff(prefix.values))


def qc_profile(
    prefix,
    schedule: LambdaSchedule,
    epsilon_grid: Sequence[float] = DEFAULT_EPSILONS,
    tail_fraction: float = DEFAULT_TAIL,
    step_tolerance: float = DEFAULT_TOLERANCE,
    density_tolerance: float = DEFAULT_TOLERANCE,
) -> QCDiagnostic:
    """Classify a prefix from its step sizes and step densities.

    Decision order, over the last ``ceil(tail_fraction * (N-1))`` steps:
    QC_EVIDENCE if the largest step is within ``step_tolerance``;
    LAMBDA_QC_ONLY_EVIDENCE if every epsilon's step density stays within
    ``density_tolerance``; NEITHER if some epsilon's density never falls
    below ``10 * density_tolerance``; INCONCLUSIVE otherwise.
    """
    eps = tuple(float(e) for e in epsilon_grid)
    if not eps:
        raise ValueError("epsilon grid must be non-empty")
    for e in eps:
        _check_eps(e)
    d = diff(prefix)
    T = tail_length(len(d), tail_fraction)
    steps = np.abs(d.values[-T:])
    max_step = float(steps.max())
    profiles = [lambda_density(d, schedule, 0.0, e) for e in eps]
    tails = [p.densities[-T:] for p in profiles]

    if max_step <= step_tolerance:
        verdict = QCVerdict.QC_EVIDENCE
    elif all(t.max() <= density_tolerance for t in tails):
        verdict = QCVerdict.LAMBDA_QC_ONLY_EVIDENCE
    elif any(t.min() >= DIVERGENCE_FACTOR * density_tolerance for t in tails):
        verdict = QCVerdict.NEITHER
    else:
        verdict = QCVerdict.INCONCLUSIVE
    return QCDiagnostic(
        max_recent_step=max_step,
        delta_density_profiles=profiles,
        verdict=verdict,
        epsilon_grid=eps,
        tail_length=T,
        step_tolerance=float(step_tolerance),
        density_tolerance=float(density_tolerance),
    )
