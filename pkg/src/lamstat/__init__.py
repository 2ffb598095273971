"""Finite-prefix tools for lambda-statistical convergence and quasi-Cauchy sequences."""

__version__ = "0.1.0"

from .errors import LamstatError
from .schedules import (
    IndexWindow,
    LacunarySchedule,
    LambdaSchedule,
    builtin,
    validate_lacunary,
    validate_lambda,
    window,
)
from .summability import (
    ConvergenceReport,
    DensityProfile,
    Method,
    SequencePrefix,
    Verdict,
    estimate_limit,
    lacunary_density,
    lambda_density,
    matrix_A_transform,
    strong_residual,
    vp_mean,
)
from .quasicauchy import QCDiagnostic, QCVerdict, diff, qc_profile
from .generators import (
    EmbeddingResult,
    PairList,
    SimulationResult,
    exact_survivor,
    exact_three_split,
    gen_bit_average,
    gen_interleave,
    gen_jump_squares,
    gen_pair_embedding,
    gen_sqrt,
    make_family,
    simulate_survivor,
    simulate_three_split,
)
from .probe import (
    FunctionSpec,
    WitnessReport,
    builtin_function,
    find_nonuniform_witness,
    modulus_estimate,
    ward_preservation_test,
)
