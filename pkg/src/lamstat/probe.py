"""Empirical probes of uniform continuity and ward-continuity preservation.

Everything here works on sampled grids over a closed interval, so a negative
answer ("no witness found") is evidence at the finest scale reached, never a
proof.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DomainTooSmall,
    DomainViolation,
    EmptyFile,
    Malformed,
    NotFinite,
    UnknownFunction,
)
from .generators import EmbeddingResult, PairList, gen_interleave, gen_pair_embedding, make_family
from .quasicauchy import PASSING, QCDiagnostic, QCVerdict, diff, qc_profile
from .schedules import LambdaSchedule, identity
from .summability import (
    DEFAULT_EPSILONS,
    DEFAULT_TAIL,
    DEFAULT_TOLERANCE,
    SequencePrefix,
    as_prefix,
    lambda_density,
)

BUILTIN_FUNCTIONS = ("square", "reciprocal", "sin", "abs", "affine:a,b")
MAX_GRID_POINTS = 4_000_001


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    domain: tuple[float, float]
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    kind: str = "builtin"
    lipschitz: float | None = None

    def __post_init__(self):
        a, b = (float(v) for v in self.domain)
        if not a < b:
            raise DomainTooSmall(f"domain needs a < b, got [{a}, {b}]")
        object.__setattr__(self, "domain", (a, b))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a, b = self.domain
        bad = np.flatnonzero((x < a) | (x > b) | ~np.isfinite(x))
        if bad.size:
            raise DomainViolation(f"{x.ravel()[bad[0]]!r} outside [{a}, {b}]", index=int(bad[0]) + 1)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            y = np.asarray(self.fn(x), dtype=float)
        bad = np.flatnonzero(~np.isfinite(y))
        if bad.size:
            raise NotFinite(f"{self.name} is not finite at {x.ravel()[bad[0]]!r}", index=int(bad[0]) + 1)
        return y


def builtin_function(name: str, domain: tuple[float, float]) -> FunctionSpec:
    """``square``, ``reciprocal``, ``sin``, ``abs`` or ``affine:a,b`` (x -> a*x + b)."""
    if name == "square":
        a, b = domain
        return FunctionSpec(name, domain, np.square, lipschitz=2 * max(abs(a), abs(b)))
    if name == "reciprocal":
        return FunctionSpec(name, domain, np.reciprocal)
    if name == "sin":
        return FunctionSpec(name, domain, np.sin, lipschitz=1.0)
    if name == "abs":
        return FunctionSpec(name, domain, np.abs, lipschitz=1.0)
    if name.startswith("affine:"):
        try:
            slope, icpt = (float(v) for v in name[len("affine:") :].split(","))
        except ValueError:
            raise UnknownFunction(f"affine needs 'affine:a,b', got {name!r}") from None
        return FunctionSpec(name, domain, lambda x: slope * x + icpt, lipschitz=abs(slope))
    raise UnknownFunction(f"unknown function {name!r}; choose from {BUILTIN_FUNCTIONS} or a CSV table")


def table_function(xs, ys, name: str = "table") -> FunctionSpec:
    """Piecewise-linear interpolant through sample points; no extrapolation."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2 or xs.shape != ys.shape:
        raise DomainTooSmall("a table needs at least two (x, y) samples")
    if np.any(np.diff(xs) <= 0):
        raise Malformed("table x values must increase strictly")
    slopes = np.abs(np.diff(ys) / np.diff(xs))
    return FunctionSpec(
        name, (xs[0], xs[-1]), lambda x: np.interp(x, xs, ys), kind="table", lipschitz=float(slopes.max())
    )


def load_table(path) -> FunctionSpec:
    xs, ys = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row if c.strip()]
            if not cells:
                continue
            if len(cells) != 2:
                raise Malformed("expected two columns x,y", index=lineno)
            try:
                x, y = float(cells[0]), float(cells[1])
            except ValueError:
                if lineno == 1 and not xs:
                    continue  # header row
                raise Malformed(f"not numeric: {row!r}", index=lineno) from None
            xs.append(x)
            ys.append(y)
    if not xs:
        raise EmptyFile(f"{path} has no samples")
    return table_function(xs, ys, name=Path(path).stem)


def parse_function(spec: str, domain: tuple[float, float] | None = None) -> FunctionSpec:
    if spec.endswith(".csv") or spec.startswith("table:"):
        f = load_table(spec.removeprefix("table:"))
        if domain is not None:
            lo, hi = f.domain
            if domain[0] < lo or domain[1] > hi:
                raise DomainViolation(f"domain {domain} leaves the table range [{lo}, {hi}]")
            return FunctionSpec(f.name, domain, f.fn, kind="table", lipschitz=f.lipschitz)
        return f
    if domain is None:
        raise DomainTooSmall("builtin functions need an explicit domain")
    return builtin_function(spec, domain)


# ---------------------------------------------------------------------------
# modulus of continuity
# ---------------------------------------------------------------------------


def _grid(f: FunctionSpec, step: float):
    a, b = f.domain
    G = math.ceil((b - a) / step)
    if G < 1:
        raise DomainTooSmall("domain shorter than one grid step")
    if G + 1 > MAX_GRID_POINTS:
        raise DomainTooSmall(f"grid of {G + 1} points exceeds the cap {MAX_GRID_POINTS}")
    xs = np.linspace(a, b, G + 1)
    return xs, f(xs), (b - a) / G


def modulus_estimate(f: FunctionSpec, delta_grid: Sequence[float], grid_step: float) -> dict[float, float]:
    """Sampled modulus ``w(delta) = max |f(x) - f(y)|`` over grid pairs with ``|x - y| <= delta``.

    The grid is uniform with spacing at most ``grid_step``, which must be at
    most a quarter of the smallest delta. The result is non-decreasing in
    delta by construction.
    """
    deltas = sorted(float(d) for d in delta_grid)
    if not deltas or deltas[0] <= 0:
        raise ValueError("delta grid must be non-empty and positive")
    if not 0 < grid_step <= deltas[0] / 4:
        raise ValueError("grid_step must be positive and at most min(delta)/4")
    a, b = f.domain
    if b - a < grid_step:
        raise DomainTooSmall(f"domain [{a}, {b}] shorter than grid_step {grid_step}")
    xs, fx, h = _grid(f, grid_step)
    out = {}
    best = 0.0
    s = 0
    for d in deltas:
        s_max = min(int(math.floor(d / h * (1 + 1e-12))), xs.size - 1)
        while s < s_max:
            s += 1
            best = max(best, float(np.abs(fx[s:] - fx[:-s]).max()))
        out[d] = best
    return out


# ---------------------------------------------------------------------------
# witness search
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WitnessReport:
    epsilon0: float
    pairs: list[tuple[float, float, float]]
    embedded: EmbeddingResult | None
    image_diagnostic: QCDiagnostic | None
    found: bool
    n_max: int = 0
    finest_delta: float = 0.0
    missing: list[int] = field(default_factory=list)
    function: str = ""
    domain: tuple[float, float] = (0.0, 1.0)

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "domain": list(self.domain),
            "epsilon0": self.epsilon0,
            "n_max": self.n_max,
            "found": self.found,
            "finest_delta": self.finest_delta,
            "missing": list(self.missing),
            "pairs": [list(p) for p in self.pairs],
            "embedded": None if self.embedded is None else self.embedded.to_dict(),
            "image_diagnostic": None if self.image_diagnostic is None else self.image_diagnostic.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WitnessReport":
        return cls(
            epsilon0=float(d["epsilon0"]),
            pairs=[tuple(float(v) for v in p) for p in d["pairs"]],
            embedded=None if d["embedded"] is None else EmbeddingResult.from_dict(d["embedded"]),
            image_diagnostic=None if d["image_diagnostic"] is None else QCDiagnostic.from_dict(d["image_diagnostic"]),
            found=bool(d["found"]),
            n_max=int(d["n_max"]),
            finest_delta=float(d["finest_delta"]),
            missing=[int(n) for n in d["missing"]],
            function=d["function"],
            domain=tuple(float(v) for v in d["domain"]),
        )


def _best_pair(xs, fx, delta):
    """Largest image gap among grid pairs at the widest offset still closer than delta."""
    h = xs[1] - xs[0]
    s = max(1, math.ceil(delta / h) - 1)
    while s >= 1:
        gaps = xs[s:] - xs[:-s]
        ok = gaps < delta
        if ok.any():
            jumps = np.where(ok, np.abs(fx[s:] - fx[:-s]), -np.inf)
            i = int(np.argmax(jumps))
            return float(xs[i]), float(xs[i + s]), float(jumps[i])
        s -= 1
    return None


def find_nonuniform_witness(
    f: FunctionSpec,
    epsilon0: float,
    n_max: int,
    grid_step: float = 1e-3,
    epsilon_grid: Sequence[float] = DEFAULT_EPSILONS,
    tail_fraction: float = DEFAULT_TAIL,
    tolerance: float = DEFAULT_TOLERANCE,
) -> WitnessReport:
    """Look for ``(xi_n, eta_n)`` with ``|xi_n - eta_n| < 1/n`` and image gap >= ``epsilon0``.

    Scale ``n`` is scanned on a uniform grid of spacing ``min(grid_step, 1/(2n))``,
    comparing every grid point with its partner at the widest grid offset
    strictly below ``1/n``. ``found`` requires a witness at every n <= n_max;
    the witnesses are then threaded into one sequence with
    ``gen_pair_embedding`` and ``f`` is diagnosed along it.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    if not epsilon0 > 0:
        raise ValueError("epsilon0 must be positive")
    grids: dict[float, tuple] = {}
    pairs, missing = [], []
    finest = 1.0
    for n in range(1, n_max + 1):
        delta = 1.0 / n
        step = min(grid_step, delta / 2)
        try:
            if step not in grids:
                grids[step] = _grid(f, step)
        except DomainTooSmall:
            # resolution limit: finer scales cannot be sampled
            missing.extend(range(n, n_max + 1))
            break
        xs, fx, _ = grids[step]
        finest = delta
        best = _best_pair(xs, fx, delta)
        if best is not None and best[2] >= epsilon0:
            pairs.append(best)
        else:
            missing.append(n)

    found = not missing
    embedded = image_diag = None
    if found:
        embedded = gen_pair_embedding(PairList(tuple((x, y) for x, y, _ in pairs), domain=f.domain))
        image = f(embedded.sequence.values)
        image_diag = qc_profile(
            image, identity(image.size), epsilon_grid, tail_fraction, tolerance, tolerance
        )
    return WitnessReport(
        epsilon0=float(epsilon0),
        pairs=pairs,
        embedded=embedded,
        image_diagnostic=image_diag,
        found=found,
        n_max=n_max,
        finest_delta=finest,
        missing=missing,
        function=f.name,
        domain=f.domain,
    )


# ---------------------------------------------------------------------------
# preservation of quasi-Cauchy behaviour
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PreservationCase:
    input_verdict: QCVerdict
    image_verdict: QCVerdict
    preserved: bool
    input_tail_density: dict[float, float]
    image_tail_density: dict[float, float]
    # windows where the image density beats the input density at eps/K
    violations: int | None = None


@dataclass(frozen=True)
class PreservationReport:
    function: str
    lipschitz: float | None
    epsilon_grid: tuple[float, ...]
    cases: list[PreservationCase]

    @property
    def total_violations(self) -> int | None:
        if self.lipschitz is None:
            return None
        return sum(c.violations for c in self.cases)

    @property
    def all_preserved(self) -> bool:
        return all(c.preserved for c in self.cases)

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "lipschitz": self.lipschitz,
            "epsilon_grid": list(self.epsilon_grid),
            "total_violations": self.total_violations,
            "all_preserved": self.all_preserved,
            "cases": [
                {
                    "input_verdict": c.input_verdict.value,
                    "image_verdict": c.image_verdict.value,
                    "preserved": c.preserved,
                    "input_tail_density": [[e, v] for e, v in c.input_tail_density.items()],
                    "image_tail_density": [[e, v] for e, v in c.image_tail_density.items()],
                    "violations": c.violations,
                }
                for c in self.cases
            ],
        }


def domination_violations(x, fx, schedule: LambdaSchedule, epsilon_grid, K: float) -> int:
    """Windows where ``d^{f o x}_n(eps) > d^x_n(eps / K)``; compared on integer counts.

    Image values carry rounding from evaluating ``f``, so an image step can
    reach ``eps`` while the exact one falls short by two ulps. The input
    threshold is lowered by that amount; ties such as a step of exactly
    ``eps / K`` would otherwise count as violations.
    """
    dx, dfx = diff(x), diff(fx)
    slack = 2.0 * float(np.spacing(np.abs(as_prefix(fx).values).max()))
    bad = 0
    for e in epsilon_grid:
        cx = lambda_density(dx, schedule, 0.0, max(e - slack, e / 2) / K).counts
        cf = lambda_density(dfx, schedule, 0.0, e).counts
        bad += int(np.count_nonzero(cf > cx))
    return bad


def ward_preservation_test(
    f: FunctionSpec,
    family,
    schedule: LambdaSchedule | None = None,
    epsilon_grid: Sequence[float] = DEFAULT_EPSILONS,
    lipschitz: float | None = None,
    tail_fraction: float = DEFAULT_TAIL,
    tolerance: float = DEFAULT_TOLERANCE,
) -> PreservationReport:
    """Diagnose each input prefix and its image under ``f``.

    ``family`` is a list of prefixes or a ``(kind, count, length, seed)``
    tuple for ``make_family``. A case is preserved unless the input passes
    (QC or lambda-QC evidence) while the image does not. With a Lipschitz
    constant (given, or declared on ``f``) the per-window domination of image
    step densities by input step densities at ``eps/K`` is also counted.
    """
    if isinstance(family, tuple) and family and isinstance(family[0], (str, list)):
        family = make_family(*family)
    K = lipschitz if lipschitz is not None else f.lipschitz
    eps = tuple(float(e) for e in epsilon_grid)
    cases = []
    for x in family:
        x = as_prefix(x)
        fx = SequencePrefix(f(x.values))
        sched = schedule if schedule is not None else identity(len(x))
        dx = qc_profile(x, sched, eps, tail_fraction, tolerance, tolerance)
        dfx = qc_profile(fx, sched, eps, tail_fraction, tolerance, tolerance)
        preserved = dx.verdict not in PASSING or dfx.verdict in PASSING
        cases.append(
            PreservationCase(
                input_verdict=dx.verdict,
                image_verdict=dfx.verdict,
                preserved=preserved,
                input_tail_density=dx.tail_max_density,
                image_tail_density=dfx.tail_max_density,
                violations=None if K is None else domination_violations(x, fx, sched, eps, K),
            )
        )
    return PreservationReport(f.name, K, eps, cases)


@dataclass(frozen=True)
class InterleaveProbe:
    """Both readings of the anchor-interleaving argument.

    ``quasi_cauchy_reading``: diagnostics of the interleaved input and image.
    ``convergent_reading``: tail densities of ``|x_n - x0|`` and
    ``|f(x_n) - f(x0)|`` (does x approach x0, does f(x) approach f(x0)).
    """

    interleaved_input: QCDiagnostic
    interleaved_image: QCDiagnostic
    input_to_anchor: dict[float, float]
    image_to_anchor: dict[float, float]

    @property
    def quasi_cauchy_reading(self) -> tuple[QCVerdict, QCVerdict]:
        return self.interleaved_input.verdict, self.interleaved_image.verdict

    @property
    def convergent_reading(self) -> tuple[dict, dict]:
        return self.input_to_anchor, self.image_to_anchor


def interleave_probe(
    f: FunctionSpec,
    x,
    x0: float,
    schedule: LambdaSchedule | None = None,
    epsilon_grid: Sequence[float] = DEFAULT_EPSILONS,
    tail_fraction: float = DEFAULT_TAIL,
) -> InterleaveProbe:
    x = as_prefix(x)
    z = gen_interleave(x, x0)
    fz = SequencePrefix(f(z.values))
    sz = schedule if schedule is not None else identity(len(z))
    sx = identity(len(x)) if schedule is None else schedule
    fx0 = float(f(np.array([x0]))[0])
    fxv = fz.values[0::2]
    T = max(1, math.ceil(tail_fraction * len(x)))
    to_anchor = {e: float(lambda_density(x, sx, x0, e).densities[-T:].max()) for e in epsilon_grid}
    img_anchor = {e: float(lambda_density(fxv, sx, fx0, e).densities[-T:].max()) for e in epsilon_grid}
    return InterleaveProbe(
        qc_profile(z, sz, epsilon_grid, tail_fraction),
        qc_profile(fz, sz, epsilon_grid, tail_fraction),
        to_anchor,
        img_anchor,
    )
