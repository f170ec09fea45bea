import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from proxyfavar.errors import BothZero, DegeneratePanel
from proxyfavar.instrument import (
    AnnouncementPanel,
    build_instrument,
    build_rotational_instrument,
    events_to_monthly,
    monthly_panel,
    poor_mans_proxy,
    reliability_indicator,
)


def synthetic_panel(rng, n=120, start="2002-01-10", spacing=30):
    dates = np.datetime64(start) + np.cumsum(rng.integers(spacing // 2, spacing + spacing // 2, n))
    level = rng.standard_normal(n) * 0.05
    ois = level[:, None] * [0.6, 1.0, 1.2, 1.3] + 0.01 * rng.standard_normal((n, 4))
    stock = -8.0 * level + 0.6 * rng.standard_normal(n)
    return AnnouncementPanel(dates, ois, stock, ())


# a literal, step-by-step re-implementation used as the oracle
def oracle_rotation(ois, stock):
    X = ois - ois.mean(axis=0)
    w, V = np.linalg.eigh(X.T @ X)
    v = V[:, np.argmax(w)]
    v = v if v[1] > 0 else -v
    i = X @ v
    # Gram-Schmidt on [i, stock]
    q1 = i / np.linalg.norm(i)
    s = stock - (q1 @ stock) * q1
    q2 = s / np.linalg.norm(s)
    R0 = np.array([q1 @ i, q2 @ i])
    mask = np.array([a if np.sign(a) != np.sign(b) and a != 0 and b != 0 else 0.0 for a, b in zip(i, stock)])
    nz = mask[mask != 0]
    gamma = np.var(nz) / np.var(i) if nz.size else 0.0
    alpha = np.sqrt(gamma)
    P = np.array([[np.cos(alpha), np.sin(alpha)], [-np.sin(alpha), np.cos(alpha)]])
    rot = np.column_stack([q1, q2]) @ P
    coef = P.T @ R0
    return i, coef[0] * rot[:, 0], coef[1] * rot[:, 1], gamma, alpha


SIX = dict(
    dates=["2010-01-14", "2010-02-04", "2010-03-04", "2010-04-08", "2010-05-06", "2010-06-10"],
    ois=[[0.010, 0.020, 0.025, 0.030],
         [-0.005, -0.012, -0.010, -0.020],
         [0.002, 0.004, 0.010, 0.012],
         [-0.020, -0.030, -0.035, -0.050],
         [0.015, 0.010, 0.005, 0.002],
         [0.000, -0.003, -0.004, -0.010]],
    stock=[-0.8, -0.5, 0.4, 1.1, 0.9, -0.3],
)


def test_six_event_oracle():
    panel = AnnouncementPanel(SIX["dates"], SIX["ois"], SIX["stock"], ())
    pair = build_rotational_instrument(panel)
    i, m, cbi, gamma, alpha = oracle_rotation(np.array(SIX["ois"]), np.array(SIX["stock"]))
    np.testing.assert_allclose(pair.pc, i, atol=1e-10)
    np.testing.assert_allclose(pair.m, m, atol=1e-10)
    np.testing.assert_allclose(pair.cbi, cbi, atol=1e-10)
    assert pair.gamma == pytest.approx(gamma, abs=1e-10)
    assert pair.alpha == pytest.approx(alpha, abs=1e-10)
    np.testing.assert_allclose(pair.m + pair.cbi, pair.pc, atol=1e-10)


def test_all_opposite_signs():
    rng = np.random.default_rng(1)
    level = np.abs(rng.standard_normal(10)) * np.where(np.arange(10) % 2, 1, -1)
    ois = level[:, None] * [1.0, 1.0, 1.0, 1.0] + 1e-3 * rng.standard_normal((10, 4))
    ois -= ois.mean(axis=0)
    panel = AnnouncementPanel(np.datetime64("2010-01-01") + np.arange(10), ois, -level, ())
    pair = build_rotational_instrument(panel)
    assert np.all(np.sign(pair.pc) != np.sign(panel.stock))
    assert pair.gamma == pytest.approx(1.0, abs=1e-12)
    assert pair.alpha == pytest.approx(1.0, abs=1e-12)


def test_no_opposite_signs_is_identity():
    rng = np.random.default_rng(2)
    level = np.abs(rng.standard_normal(10)) * np.where(np.arange(10) % 2, 1, -1)
    level -= level.mean()
    ois = level[:, None] * [1.0, 1.1, 1.2, 1.3]
    stock = level + 0.1 * np.sign(level) * rng.uniform(size=10)
    panel = AnnouncementPanel(np.datetime64("2010-01-01") + np.arange(10), ois, stock, ())
    pair = build_rotational_instrument(panel)
    assert pair.gamma == 0.0 and pair.alpha == 0.0
    # no rotation: the policy column is the rate factor itself
    np.testing.assert_allclose(pair.m, pair.pc, atol=1e-12)
    np.testing.assert_allclose(pair.cbi, 0.0, atol=1e-12)


@given(st.integers(min_value=0, max_value=2**31))
def test_sum_identity_on_random_panels(seed):
    r = np.random.default_rng(seed)
    panel = synthetic_panel(r, n=int(r.integers(5, 60)))
    pair = build_rotational_instrument(panel)
    np.testing.assert_allclose(pair.m + pair.cbi, pair.pc, atol=1e-10)


def test_event_order_invariance(rng):
    panel = synthetic_panel(rng, n=40)
    pair = build_rotational_instrument(panel)
    perm = rng.permutation(40)
    shuffled = AnnouncementPanel(panel.dates[perm], panel.ois[perm], panel.stock[perm], ())
    other = build_rotational_instrument(shuffled)
    back = np.argsort(perm)
    np.testing.assert_allclose(other.m[back], pair.m, atol=1e-10)
    np.testing.assert_allclose(other.cbi[back], pair.cbi, atol=1e-10)


def test_default_exclusion():
    rng = np.random.default_rng(5)
    dates = ["2008-09-04", "2008-10-02", "2008-10-08", "2008-11-06", "2008-12-04"]
    panel = AnnouncementPanel(dates, rng.standard_normal((5, 4)), rng.standard_normal(5))
    assert np.datetime64("2008-10-08") not in panel.cleaned().dates
    assert build_rotational_instrument(panel).m.size == 4


def test_degenerate_panel():
    dates = np.datetime64("2010-01-01") + np.arange(4)
    ois = np.outer([1.0, -1.0, 2.0, -2.0], [1, 1, 1, 1])
    with pytest.raises(DegeneratePanel):
        build_rotational_instrument(AnnouncementPanel(dates, ois, 3 * ois[:, 0], ()))
    with pytest.raises(DegeneratePanel):
        build_rotational_instrument(AnnouncementPanel(dates[:2], ois[:2], [1.0, 2.0], ()))


def test_aggregation_order():
    rng = np.random.default_rng(9)
    panel = synthetic_panel(rng, n=200, spacing=40)
    pair = build_rotational_instrument(panel)
    cal = np.unique(panel.dates.astype("datetime64[M]"))
    after = events_to_monthly(pair.dates, pair.m, cal)
    before = build_rotational_instrument(monthly_panel(panel)).m
    assert np.corrcoef(after, before)[0, 1] > 0.99


def test_poor_mans_proxy():
    panel = AnnouncementPanel(["2010-01-01", "2010-02-01", "2010-03-01"],
                              [[0, 0.05, 0, 0], [0, 0.05, 0, 0], [0, 0.0, 0, 0]],
                              [1.0, -1.0, -1.0], ())
    np.testing.assert_array_equal(poor_mans_proxy(panel), [0.0, 0.05, 0.0])
    dates, m, cbi = build_instrument(panel, "poor-mans")
    np.testing.assert_allclose(m + cbi, panel.ois[:, 1])


def test_events_to_monthly():
    cal = np.arange(np.datetime64("2010-01", "M"), np.datetime64("2010-04", "M"))
    out = events_to_monthly(["2010-01-05", "2010-01-20", "2010-03-02"], [0.02, -0.01, 0.3], cal)
    np.testing.assert_allclose(out, [0.01, 0.0, 0.3])
    perm = events_to_monthly(["2010-01-20", "2010-01-05", "2010-03-02"], [-0.01, 0.02, 0.3], cal)
    np.testing.assert_array_equal(out, perm)


def test_reliability_spot_values():
    assert reliability_indicator(1, 0) == 1.0
    assert reliability_indicator(1, 1) == 0.5
    assert reliability_indicator(3, 4) == 0.36
    with pytest.raises(BothZero):
        reliability_indicator(0.0, 0.0)
    np.testing.assert_allclose(reliability_indicator([1, 3], [1, 4]), [0.5, 0.36])


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3))
def test_reliability_scale_invariance(a, b, c):
    assert reliability_indicator(c * a, c * b) == pytest.approx(reliability_indicator(a, b), rel=1e-12)
