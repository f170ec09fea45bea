import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxyfavar.data_pipeline import (
    RawSeries,
    adjust_additive_outliers,
    aggregate_to_monthly,
    annual_growth,
    chow_lin_interpolate,
    destandardize_z,
    standardize_z,
)
from proxyfavar.errors import (
    CoverageGap,
    EmptyMonth,
    NonPositiveLevel,
    SeriesTooShort,
    SingularRegression,
    ValidationError,
    ZeroVariance,
)


def quarterly(values, start="2000-01"):
    d0 = np.datetime64(start, "M")
    return RawSeries("quarterly", d0 + 3 * np.arange(len(values)), values, "gdp")


def monthly(values, start="2000-01", name="ip"):
    d0 = np.datetime64(start, "M")
    return RawSeries("monthly", d0 + np.arange(len(values)), values, name)


def quarter_means(v):
    return np.asarray(v).reshape(-1, 3).mean(axis=1)


# ---------------------------------------------------------------- Chow-Lin


def test_chow_lin_constant():
    out = chow_lin_interpolate(quarterly(np.full(8, 5.0)), [monthly(np.full(24, 2.0))])
    np.testing.assert_allclose(out.values, 5.0, atol=1e-10)


def test_chow_lin_reproduces_truth(rng):
    truth = 100 + np.cumsum(rng.standard_normal(60))
    q = quarterly(quarter_means(truth))
    out = chow_lin_interpolate(q, [monthly(truth)])
    np.testing.assert_allclose(out.values, truth, atol=1e-8)


def test_chow_lin_rho_zero_oracle(rng):
    ind = rng.standard_normal(24)
    Y = 1.0 + 2.0 * quarter_means(ind) + 0.3 * rng.standard_normal(8)
    out = chow_lin_interpolate(quarterly(Y), [monthly(ind)], rho=0.0)
    # OLS on the quarterly averages, then each quarter's residual spread evenly over its months
    X = np.column_stack([np.ones(24), ind])
    CX = X.reshape(8, 3, 2).mean(axis=1)
    beta, *_ = np.linalg.lstsq(CX, Y, rcond=None)
    resid = Y - CX @ beta
    oracle = X @ beta + np.repeat(resid, 3)
    np.testing.assert_allclose(out.values, oracle, atol=1e-10)


def test_chow_lin_sum_convention(rng):
    ind = rng.standard_normal(30)
    Y = rng.standard_normal(10)
    out = chow_lin_interpolate(quarterly(Y), [monthly(ind)], aggregation="sum")
    np.testing.assert_allclose(out.values.reshape(-1, 3).sum(axis=1), Y, atol=1e-8)


def test_chow_lin_errors(rng):
    with pytest.raises(CoverageGap):
        chow_lin_interpolate(quarterly(np.ones(8)), [monthly(np.ones(20))])
    ind = rng.standard_normal(24)
    with pytest.raises(SingularRegression):
        chow_lin_interpolate(quarterly(rng.standard_normal(8)), [monthly(ind), monthly(2 * ind, name="u")])
    with pytest.raises(ValidationError):
        chow_lin_interpolate(quarterly(np.ones(8)), [])


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=4, max_value=20), st.integers(min_value=0, max_value=2**31))
def test_chow_lin_constraint_property(nq, seed):
    r = np.random.default_rng(seed)
    ind = [monthly(r.standard_normal(3 * nq)), monthly(r.standard_normal(3 * nq), name="u")]
    Y = r.standard_normal(nq) * 5
    out = chow_lin_interpolate(quarterly(Y), ind)
    np.testing.assert_allclose(quarter_means(out.values), Y, atol=1e-8)


# ---------------------------------------------------------------- outliers


def test_outliers_noop(rng):
    x = monthly(rng.standard_normal(120))
    adj, rep = adjust_additive_outliers(x, critical_value=np.inf)
    assert np.array_equal(adj.values, x.values) and len(rep) == 0
    adj, rep = adjust_additive_outliers(x, critical_value=50.0)
    assert np.array_equal(adj.values, x.values) and len(rep) == 0


def test_outlier_spike():
    r = np.random.default_rng(3)
    v = r.standard_normal(150)
    v[70] += 20.0
    adj, rep = adjust_additive_outliers(monthly(v))
    assert [e[0] for e in rep.entries] == [np.datetime64("2005-11", "M")]
    assert abs(adj.values[70]) < 4.0
    assert np.array_equal(np.delete(adj.values, 70), np.delete(v, 70))


def test_outlier_idempotent():
    r = np.random.default_rng(8)
    v = r.standard_normal(200)
    v[[40, 120]] += [15.0, -12.0]
    once, rep = adjust_additive_outliers(monthly(v))
    assert len(rep) >= 2
    twice, rep2 = adjust_additive_outliers(once)
    assert np.array_equal(once.values, twice.values) and len(rep2) == 0


def test_outlier_too_short():
    with pytest.raises(SeriesTooShort):
        adjust_additive_outliers(monthly(np.arange(35.0)))


# ---------------------------------------------------------------- growth


def test_growth_examples():
    x = monthly(np.r_[100.0, np.ones(11), 110.0])
    assert annual_growth(x, "standard").values[0] == pytest.approx(10.0, abs=1e-12)
    assert annual_growth(x, "log").values[0] == pytest.approx(100 * np.log(1.1), abs=1e-12)
    assert annual_growth(x, "log").values[0] == pytest.approx(9.5310, abs=1e-4)
    assert annual_growth(x, "symmetric").values[0] == pytest.approx(1000 / 105, abs=1e-12)
    assert annual_growth(x).dates[0] == np.datetime64("2001-01", "M")


def test_growth_errors():
    x = monthly(np.r_[-1.0, np.ones(12)])
    with pytest.raises(NonPositiveLevel):
        annual_growth(x, "log")
    with pytest.raises(ValidationError):
        annual_growth(monthly(np.ones(13)), "cubic")


@given(st.floats(min_value=-0.1, max_value=0.1), st.floats(min_value=1e-2, max_value=1e4))
def test_growth_methods_agree(g, level):
    x = monthly(np.r_[level, np.ones(11), level * (1 + g / 100)])
    out = [annual_growth(x, m).values[0] for m in ("standard", "log", "symmetric")]
    assert max(out) - min(out) < 1e-3


# ---------------------------------------------------------------- standardization and aggregation


def test_standardize_example():
    z, mean, std = standardize_z(np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(z, [-1, 0, 1])
    assert mean == 2.0 and std == 1.0


def test_standardize_idempotent_and_inverse(rng):
    z = rng.standard_normal((50, 3)) * [1, 5, 0.1] + [3, -2, 7]
    s, mean, std = standardize_z(z)
    again, _, _ = standardize_z(s)
    np.testing.assert_allclose(again, s, atol=1e-12)
    np.testing.assert_allclose(destandardize_z(s, mean, std), z, atol=1e-12)


def test_standardize_zero_variance():
    with pytest.raises(ZeroVariance):
        standardize_z(np.ones((5, 2)))


def daily(values, dates):
    return RawSeries("daily", np.array(dates, dtype="datetime64[D]"), values, "d")


def test_aggregate_rules():
    days = np.arange(np.datetime64("2020-04-01"), np.datetime64("2020-05-01"))
    assert aggregate_to_monthly(daily(np.full(30, 1.7), days)).values[0] == pytest.approx(1.7)
    two = daily([1.0, 3.0], ["2020-01-02", "2020-01-20"])
    assert aggregate_to_monthly(two).values[0] == 2.0
    assert aggregate_to_monthly(two, "sum").values[0] == 4.0
    assert aggregate_to_monthly(two, "end_of_month").values[0] == 3.0
    span = daily([1.0, 2.0, 4.0], ["2020-01-02", "2020-02-03", "2020-02-28"])
    out = aggregate_to_monthly(span, "sum")
    assert list(out.values) == [1.0, 6.0]
    assert out.dates[1] == np.datetime64("2020-02", "M")


def test_aggregate_empty_month():
    with pytest.raises(EmptyMonth):
        aggregate_to_monthly(daily([1.0, 2.0], ["2020-01-02", "2020-03-03"]))


def test_rawseries_validation():
    with pytest.raises(ValidationError):
        monthly([1.0, 2.0]).__class__("monthly", ["2020-02", "2020-01"], [1.0, 2.0])
    with pytest.raises(ValidationError):
        RawSeries("quarterly", ["2020-02", "2020-05"], [1.0, 2.0])
