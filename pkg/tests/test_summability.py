import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lamstat import errors
from lamstat.generators import gen_square_indicator, is_square
from lamstat.schedules import ScheduleWarning, builtin, validate_lacunary, validate_lambda
from lamstat.summability import (
    Method,
    Verdict,
    estimate_limit,
    lacunary_density,
    lambda_density,
    matrix_A_transform,
    strong_residual,
    vp_mean,
    vp_means,
)

SCHEDULES = ("identity", "sqrt", "log2")


def brute_density(x, lam, L, eps):
    """Count window members by scanning every k; independent of the cumsum path."""
    out = []
    for n in range(1, len(x) + 1):
        c = sum(1 for k in range(1, n + 1) if n - lam[n - 1] + 1 <= k and abs(x[k - 1] - L) >= eps)
        out.append(c / lam[n - 1])
    return out


def test_vp_mean_examples():
    ident = builtin("identity", 4)
    assert vp_mean([1, 2, 3, 4], ident, 4) == 2.5
    assert vp_mean([1, 0, 1, 0], ident, 4) == 0.5


@pytest.mark.parametrize("name", SCHEDULES)
def test_vp_mean_constant(name):
    s = builtin(name, 30)
    for n in range(1, 31):
        assert vp_mean([3.0] * 30, s, n) == pytest.approx(3.0)


def test_vp_mean_constant_real_schedule():
    s = validate_lambda([1, 1.5, 2.5])
    # window at n=2 is {2}: c * 1 / 1.5
    assert vp_mean([2.0] * 3, s, 2) == pytest.approx(2.0 / 1.5)


def test_vp_mean_out_of_range():
    with pytest.raises(errors.OutOfRange):
        vp_mean([1, 2], builtin("identity", 5), 3)
    with pytest.raises(errors.OutOfRange):
        vp_mean([1, 2, 3], builtin("identity", 2), 3)


def test_strong_residual_examples():
    ident = builtin("identity", 4)
    assert strong_residual([1, 0, 1, 0], ident, 0.5, 4) == 0.5
    assert strong_residual([1, 0, 1, 0], ident, 0.0, 4) == 0.5
    assert strong_residual([2.0] * 4, ident, 2.0, 3) == 0.0


def test_square_indicator_density():
    x = gen_square_indicator(10_000)
    prof = lambda_density(x, builtin("identity", 10_000), 0.0, 0.5)
    assert prof.at(100) == 0.10
    assert prof.counts[99] == 10
    assert prof.at(10_000) == 0.01


def test_density_constant_and_all_ones():
    s = builtin("sqrt", 50)
    assert not lambda_density([7.0] * 50, s, 7.0, 0.1).densities.any()
    prof = lambda_density([1.0] * 50, s, 0.0, 0.5)
    sizes = np.array([n - s.lows[n - 1] + 1 for n in range(1, 51)])
    assert np.array_equal(prof.densities, sizes / s.values)


def test_density_rejects_bad_epsilon():
    for eps in (0.0, -1.0, float("nan")):
        with pytest.raises(errors.NonPositiveEpsilon):
            lambda_density([1.0, 2.0], builtin("identity", 2), 0.0, eps)


def test_threshold_is_closed():
    prof = lambda_density([0.5, 0.25], builtin("identity", 2), 0.0, 0.5)
    assert prof.counts.tolist() == [1, 1]


@pytest.mark.parametrize("name", SCHEDULES)
def test_density_matches_brute_force(name, rng):
    x = rng.normal(size=120)
    s = builtin(name, 120)
    for eps in (0.5, 0.1, 1.3):
        assert lambda_density(x, s, 0.2, eps).densities.tolist() == brute_density(x, s.values, 0.2, eps)


def test_density_real_schedule_brute_force(rng):
    steps = rng.uniform(0, 1, size=79)
    lam = np.concatenate(([1.0], 1 + np.cumsum(steps)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ScheduleWarning)
        s = validate_lambda(lam)
    x = rng.normal(size=80)
    assert lambda_density(x, s, 0.0, 0.7).densities.tolist() == brute_density(x, lam, 0.0, 0.7)


def test_density_bounded_by_window_share(rng):
    s = builtin("log2", 200)
    prof = lambda_density(rng.normal(size=200), s, 0.0, 0.1)
    sizes = np.arange(1, 201) - s.lows + 1
    assert np.all(prof.densities >= 0)
    assert np.all(prof.densities <= sizes / s.values)


def test_lacunary_density_examples():
    R = 12
    cuts = [0] + [2**r for r in range(1, R + 1)]
    lac = validate_lacunary(cuts)
    x = gen_square_indicator(2**R)
    dens = lacunary_density(x, lac, 0.0, 0.5)
    for r in range(1, R + 1):
        lo, hi = cuts[r - 1], cuts[r]
        count = sum(1 for k in range(lo + 1, hi + 1) if math.isqrt(k) ** 2 == k)
        assert dens[r - 1] == count / (hi - lo)
        if r >= 2:
            assert dens[r - 1] == count / 2 ** (r - 1)
    assert not lacunary_density(np.full(2**R, 3.0), lac, 3.0, 0.1).any()
    assert np.all(lacunary_density(np.ones(2**R), lac, 0.0, 0.5) == 1.0)


def test_lacunary_density_errors():
    lac = validate_lacunary([0, 4, 8])
    with pytest.raises(errors.CutsExceedPrefix):
        lacunary_density(np.zeros(5), lac, 0.0, 0.1)
    with pytest.raises(errors.NonPositiveEpsilon):
        lacunary_density(np.zeros(8), lac, 0.0, 0.0)


def test_matrix_A_transform():
    ident = builtin("identity", 10)
    assert not matrix_A_transform([4.0] * 10, ident).values.any()
    out = matrix_A_transform(np.arange(1.0, 11.0), ident)
    assert out.values.tolist() == [1 / n for n in range(1, 10)]
    assert len(matrix_A_transform([1.0, 5.0], ident)) == 1
    with pytest.raises(errors.PrefixTooShort):
        matrix_A_transform([1.0], ident)


def test_reduction_to_statistical_density(rng):
    x = rng.normal(size=300)
    prof = lambda_density(x, builtin("identity", 300), 0.1, 0.5)
    for n in range(1, 301):
        count = int(np.count_nonzero(np.abs(x[:n] - 0.1) >= 0.5))
        assert prof.densities[n - 1] == count / n


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=150, deadline=None)
@given(
    arrays(np.float64, 40, elements=finite),
    arrays(np.float64, 40, elements=finite),
    st.floats(-10, 10),
    st.floats(-10, 10),
    st.sampled_from(SCHEDULES),
)
def test_vp_mean_linear(x, y, a, b, name):
    s = builtin(name, 40)
    z = a * x + b * y
    for n in range(1, 41):
        lhs = vp_mean(z, s, n)
        rhs = a * vp_mean(x, s, n) + b * vp_mean(y, s, n)
        scale = (abs(a) * np.abs(x).sum() + abs(b) * np.abs(y).sum()) / s.values[n - 1] + 1e-300
        assert abs(lhs - rhs) <= 1e-12 * scale


@settings(max_examples=150, deadline=None)
@given(
    arrays(np.float64, 50, elements=finite),
    st.floats(1e-3, 10),
    st.floats(1e-3, 10),
    st.sampled_from(SCHEDULES),
)
def test_density_monotone_in_epsilon(x, e1, e2, name):
    e1, e2 = sorted((e1, e2))
    s = builtin(name, 50)
    assert np.all(lambda_density(x, s, 0.0, e1).counts >= lambda_density(x, s, 0.0, e2).counts)


@settings(max_examples=150, deadline=None)
@given(arrays(np.float64, 50, elements=finite), st.floats(-5, 5), st.floats(1e-3, 10), st.sampled_from(SCHEDULES))
def test_markov_bound(x, L, eps, name):
    s = builtin(name, 50)
    prof = lambda_density(x, s, L, eps)
    for n in range(1, 51):
        lo = s.lows[n - 1]
        # count * eps <= window sum of |x_k - L|
        assert prof.counts[n - 1] * eps <= math.fsum(np.abs(x[lo - 1 : n] - L))


@settings(max_examples=150, deadline=None)
@given(
    arrays(np.float64, 40, elements=st.floats(-10, 10)),
    arrays(np.float64, 40, elements=st.floats(-10, 10)),
    arrays(np.float64, 40, elements=st.floats(-10, 10)),
    st.floats(1e-3, 5),
    st.sampled_from(SCHEDULES),
)
def test_subadditivity(u, v, z, eps, name):
    s = builtin(name, 40)
    c = lambda x, e: lambda_density(x, s, 0.0, e).counts
    assert np.all(c(u + v, eps) <= c(u, eps / 2) + c(v, eps / 2))
    assert np.all(c(u + v + z, eps) <= c(u, eps / 3) + c(v, eps / 3) + c(z, eps / 3))


def test_vp_means_vector():
    s = builtin("sqrt", 20)
    x = np.arange(20.0)
    assert vp_means(x, s).tolist() == [vp_mean(x, s, n) for n in range(1, 21)]


# --- estimate_limit -------------------------------------------------------


def test_estimate_null_sequence():
    N = 10_000
    x = 1.0 / np.arange(1, N + 1)
    rep = estimate_limit(x, builtin("identity", N), Method.S_LAMBDA)
    assert rep.verdict is Verdict.CONVERGED_EVIDENCE
    assert abs(rep.candidate_limit) < 1e-3


def test_estimate_square_indicator():
    N = 10_000
    rep = estimate_limit(gen_square_indicator(N), builtin("identity", N), "S_LAMBDA")
    assert rep.verdict is Verdict.CONVERGED_EVIDENCE
    assert rep.candidate_limit == 0.0
    assert rep.tail_densities[0.5] == 0.01


def test_estimate_alternating_diverges():
    x = (-1.0) ** np.arange(1, 1001)
    rep = estimate_limit(x, method=Method.LIM)
    assert rep.verdict is Verdict.DIVERGED_EVIDENCE


def test_estimate_mean_methods():
    N = 2000
    x = (-1.0) ** np.arange(1, N + 1)
    s = builtin("sqrt", N)
    # Cesaro-like means of an alternating sequence settle on 0
    mean = estimate_limit(x, s, Method.V_LAMBDA_MEAN)
    assert mean.verdict is Verdict.CONVERGED_EVIDENCE
    assert abs(mean.candidate_limit) <= 1 / s.final
    # but |x_k - 0| = 1 everywhere, so the strong method rejects it
    strong = estimate_limit(x, s, Method.V_LAMBDA_STRONG)
    assert strong.verdict is Verdict.DIVERGED_EVIDENCE


def test_estimate_statistical_and_lacunary():
    N = 4096
    x = gen_square_indicator(N)
    assert estimate_limit(x, method="ST").verdict is Verdict.CONVERGED_EVIDENCE
    lac = validate_lacunary([0] + [2**r for r in range(1, 13)])
    rep = estimate_limit(x, method="S_THETA", lacunary=lac)
    assert rep.verdict is Verdict.CONVERGED_EVIDENCE
    assert rep.candidate_limit == 0.0


def test_estimate_inconclusive_when_slow():
    N = 1000
    x = 1.0 / np.log(np.arange(2, N + 2))
    rep = estimate_limit(x, builtin("identity", N), "S_LAMBDA", tolerance=0.05)
    assert rep.verdict is Verdict.INCONCLUSIVE


def test_converged_implies_tail_within_tolerance(rng):
    x = rng.normal(scale=0.001, size=500)
    rep = estimate_limit(x, builtin("log2", 500), "S_LAMBDA")
    assert rep.verdict is Verdict.CONVERGED_EVIDENCE
    assert all(v <= rep.tolerance for v in rep.tail_max.values())


def test_estimate_argument_checks():
    s = builtin("identity", 10)
    with pytest.raises(ValueError):
        estimate_limit(np.zeros(10), s, epsilon_grid=())
    with pytest.raises(errors.NonPositiveEpsilon):
        estimate_limit(np.zeros(10), s, epsilon_grid=(0.1, -1))
    with pytest.raises(ValueError):
        estimate_limit(np.zeros(10), s, tail_fraction=0)
    with pytest.raises(ValueError):
        estimate_limit(np.zeros(10), None, "S_LAMBDA")
    with pytest.raises(ValueError):
        estimate_limit(np.zeros(10), s, "S_THETA")


def test_report_roundtrip():
    from lamstat.summability import ConvergenceReport

    rep = estimate_limit(gen_square_indicator(500), builtin("sqrt", 500), "S_LAMBDA")
    assert ConvergenceReport.from_dict(rep.to_dict()) == rep


def test_is_square_large():
    k = np.array([10**12, 10**12 + 1, (10**6 + 1) ** 2 - 1, (10**6 + 1) ** 2])
    assert is_square(k).tolist() == [True, False, False, True]
