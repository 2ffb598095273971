import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lamstat import errors
from lamstat.schedules import (
    ScheduleWarning,
    builtin,
    doubling_cuts,
    load_schedule_csv,
    resolve_lacunary,
    resolve_schedule,
    validate_lacunary,
    validate_lambda,
    window,
)


def test_identity_schedule_valid():
    s = validate_lambda([1, 2, 3, 4, 5])
    assert s.values.tolist() == [1, 2, 3, 4, 5]


def test_stuttering_schedule_valid():
    s = validate_lambda([1, 1, 2, 2, 3, 3])
    assert len(s) == 6


@pytest.mark.parametrize(
    "values, exc, index",
    [
        ([1, 3, 4], errors.JumpTooBig, 1),
        ([2, 3], errors.FirstNotOne, None),
        ([1, 2, 1.5], errors.Decreasing, 2),
        ([1, 0, 1], errors.NonPositive, 2),
        ([1, -1], errors.NonPositive, 2),
        ([1, float("nan")], errors.NotFinite, 2),
    ],
)
def test_validate_lambda_errors(values, exc, index):
    with pytest.raises(exc) as info:
        validate_lambda(values)
    assert info.value.index == index


def test_real_valued_schedule_windows():
    s = validate_lambda([1, 1.5, 2.5, 3.2])
    # n - lam_n + 1: 1, 1.5, 1.5, 1.8 -> smallest integer k above
    assert [window(s, n).lo for n in range(1, 5)] == [1, 2, 2, 2]


def test_window_examples():
    ident = builtin("identity", 10)
    assert (window(ident, 7).lo, window(ident, 7).hi) == (1, 7)
    s = validate_lambda([1, 1, 2, 2])
    assert (window(s, 4).lo, window(s, 4).hi) == (3, 4)
    for name in ("identity", "sqrt", "log2"):
        w = window(builtin(name, 5), 1)
        assert (w.lo, w.hi) == (1, 1)


@pytest.mark.parametrize("n", [0, 11, -1])
def test_window_out_of_range(n):
    with pytest.raises(errors.OutOfRange):
        window(builtin("identity", 10), n)


def test_builtin_values():
    assert builtin("sqrt", 10).values.tolist() == [1, 1, 1, 2, 2, 2, 2, 2, 3, 3]
    assert builtin("log2", 8).values.tolist() == [1, 1, 2, 2, 2, 2, 3, 3]
    with pytest.raises(KeyError):
        builtin("nope", 3)


def test_slow_schedule_warns_not_errors():
    with pytest.warns(ScheduleWarning):
        s = validate_lambda([1.0] * 50)
    assert s.final == 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        builtin("identity", 50)


@st.composite
def schedules(draw):
    n = draw(st.integers(1, 60))
    steps = draw(st.lists(st.floats(0, 1), min_size=n - 1, max_size=n - 1))
    return np.concatenate(([1.0], 1.0 + np.cumsum(steps)))


@settings(max_examples=200, deadline=None)
@given(schedules())
def test_window_size_bounds(values):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ScheduleWarning)
        s = validate_lambda(values)
    for n in range(1, len(s) + 1):
        lam = s.values[n - 1]
        assert lam <= n
        members = [k for k in range(1, n + 1) if n - lam + 1 <= k <= n]
        w = window(s, n)
        assert list(w) == members
        assert 1 <= len(w) <= math.ceil(lam)


@settings(max_examples=100, deadline=None)
@given(schedules())
def test_revalidation_idempotent(values):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ScheduleWarning)
        s = validate_lambda(values)
        t = validate_lambda(s.values)
    assert s == t
    assert np.array_equal(s.lows, t.lows)


def test_identity_window_is_whole_prefix():
    s = builtin("identity", 200)
    assert all(window(s, n).lo == 1 for n in range(1, 201))


def test_lacunary_doubling():
    lac = validate_lacunary([0, 2, 4, 8, 16])
    assert lac.h.tolist() == [2, 2, 4, 8]
    assert lac.q.tolist() == [2.0, 2.0, 2.0]
    assert lac.regular


def test_lacunary_unit_steps_min_ratio():
    # min q_r over the prefix is 4/3 (r = 4), computed directly
    cuts = [0, 1, 2, 3, 4]
    lac = validate_lacunary(cuts, margin=0.1)
    expected = min(cuts[r] / cuts[r - 1] for r in range(2, len(cuts)))
    assert lac.min_q == pytest.approx(expected)
    assert expected == pytest.approx(4 / 3)
    assert lac.regular  # 4/3 > 1.1 on this short prefix
    assert not validate_lacunary(cuts, margin=0.5).regular
    # once q_r reaches 11/10 the 0.1 margin fails
    assert not validate_lacunary(list(range(12)), margin=0.1).regular


def test_lacunary_errors():
    with pytest.raises(errors.NotIncreasing) as info:
        validate_lacunary([0, 3, 2])
    assert info.value.index == 2
    with pytest.raises(errors.FirstNotZero):
        validate_lacunary([1, 2])


def test_lacunary_idempotent():
    lac = validate_lacunary([0, 3, 7, 20], margin=0.2)
    again = validate_lacunary(lac.cuts.tolist(), margin=lac.margin)
    assert lac == again and lac.regular == again.regular


def test_single_block_has_no_regularity_evidence():
    assert not validate_lacunary([0, 5]).regular


def test_schedule_csv(tmp_path):
    p = tmp_path / "lam.csv"
    p.write_text("lam\n1\n2\n2\n3\n")
    s = load_schedule_csv(p, header=True)
    assert s.values.tolist() == [1, 2, 2, 3]
    with pytest.raises(errors.Malformed):
        load_schedule_csv(p, header=False)
    assert len(resolve_schedule(str(p), 3, header=True)) == 4
    with pytest.raises(errors.OutOfRange):
        resolve_schedule(str(p), 10, header=True)


def test_resolve_lacunary():
    assert resolve_lacunary("doubling", 20).cuts.tolist() == [0, 2, 4, 8, 16]
    assert resolve_lacunary("0,5,10", 20).cuts.tolist() == [0, 5, 10]
    assert doubling_cuts(1) == [0]


def test_schedule_is_immutable():
    s = builtin("identity", 4)
    with pytest.raises(ValueError):
        s.values[0] = 3
