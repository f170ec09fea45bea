import json

import numpy as np
import pytest
from scipy import stats

from proxyfavar.errors import (
    DegenerateData,
    DimensionMismatch,
    ExplosiveVar,
    InvalidMcmcSettings,
    InvalidRestriction,
)
from proxyfavar.model import (
    NEGATIVE,
    POSITIVE,
    ZERO,
    DataSet,
    McmcSettings,
    McmcState,
    ModelSpec,
    PosteriorDraws,
    PriorConfig,
    default_true_params,
    impact_tags,
    impact_zero_pattern,
    initialize_state,
    log_likelihood,
    simulate_dgp,
    validate_spec,
)
from proxyfavar.storage import DrawWriter, read_dataset, read_draws, write_dataset, write_manifest


def test_baseline_defaults():
    spec = ModelSpec.baseline(3, ["rate"])
    assert (spec.mcmc.total_iterations, spec.mcmc.burn_in, spec.mcmc.thinning) == (18000, 3000, 5)
    assert spec.var_lag_order == 6 and spec.factor_lag_order == 0 and spec.instrument_count == 1
    assert spec.mcmc.n_retained == 3000
    assert McmcSettings(600, 100, 7).n_retained == 71


def test_validate_ok(small_spec, small_data):
    data, _ = small_data
    bundle = validate_spec(small_spec, data, PriorConfig())
    tags = bundle.tags
    assert tags[2, 0] == POSITIVE and tags[1, 0] == NEGATIVE
    assert np.all(tags[impact_zero_pattern(small_spec)] == ZERO)


def test_burn_in_equal_total(small_spec, small_data):
    small_spec.mcmc = McmcSettings(100, 100, 1)
    with pytest.raises(InvalidMcmcSettings):
        validate_spec(small_spec, small_data[0], PriorConfig())


def test_sign_on_zero_pattern(small_spec, small_data):
    # the instrument row only loads on the first shock, the VAR rows never on the instrument shock
    r = small_spec.r
    bad = PriorConfig(impact_tags={(0, r): "positive", (r, 2): "negative"})
    with pytest.raises(InvalidRestriction) as exc:
        validate_spec(small_spec, small_data[0], bad)
    assert len(exc.value.violations) == 2


def test_violations_are_collected(small_spec, small_data):
    small_spec.mcmc = McmcSettings(10, 20, 0)
    small_spec.policy_rate_index = 7
    with pytest.raises(InvalidMcmcSettings) as exc:
        validate_spec(small_spec, small_data[0], PriorConfig())
    msgs = " ".join(exc.value.violations)
    assert "burn_in" in msgs and "thinning" in msgs and "policy_rate_index" in msgs


def test_dimension_mismatch(small_spec, small_data):
    data, _ = small_data
    data.m = np.hstack([data.m, data.m])
    with pytest.raises(DimensionMismatch):
        validate_spec(small_spec, data, PriorConfig())


def test_kappa2_shape_check(small_data):
    data = small_data[0]
    bare = DataSet.from_raw(data.dates, data.x_out, data.x_inf, np.zeros((data.T, 0)), data.m)
    spec = ModelSpec(2, [], var_lag_order=1)
    with pytest.raises(DimensionMismatch) as exc:
        validate_spec(spec, bare, PriorConfig())
    assert any("kappa_2" in v for v in exc.value.violations)


def test_diagonal_zero_tag_rejected(small_spec):
    with pytest.raises(InvalidRestriction):
        impact_tags(small_spec, PriorConfig(impact_tags={(1, 1): "zero"}))


def test_initialize_constant_series(small_spec, small_data):
    data, _ = small_data
    data.x_inf[:, 1] = 3.0
    with pytest.raises(DegenerateData):
        initialize_state(small_spec, data, PriorConfig(), 0)


def test_initialize_state(small_spec, small_data):
    data, _ = small_data
    s1 = initialize_state(small_spec, data, PriorConfig(), 5)
    s2 = initialize_state(small_spec, data, PriorConfig(), 5)
    expect = np.log(data.x.var(axis=0, ddof=1)) + 1.0
    assert np.array_equal(s1.h0, expect)
    assert np.all(s1.h == expect[:, None])
    for name in McmcState.ARRAY_FIELDS:
        assert np.array_equal(getattr(s1, name), getattr(s2, name))
    assert s1.lambda_out[0, 0] == 1.0 and s1.lambda_inf[0, 0] == 1.0
    assert np.all(s1.tau_h == 1) and np.all(s1.lam_h == 1)
    assert np.all(s1.A == 0)
    assert s1.B[2, 0] > 0 and s1.B[1, 0] < 0
    # the initial factors co-move with the aggregate
    assert np.corrcoef(s1.factors[:, 0], data.x_out[:, 0])[0, 1] > 0


def _white_noise_params(spec, T):
    tp = default_true_params(spec, T, seed=0, sv_scale=0.0, h_level=0.0)
    tp.A[:] = 0.0
    tp.B = np.eye(spec.n)
    return tp


def test_white_noise_reduction():
    spec = ModelSpec.baseline(2, ["rate"], var_lag_order=1)
    tp = _white_noise_params(spec, 4000)
    data, truth = simulate_dgp(spec, tp, 4000, seed=3, standardize=False)
    assert np.array_equal(truth.y, truth.shocks)
    for col in truth.y.T:
        assert stats.kstest(col, "norm").pvalue > 0.001
    # unit volatility and unit loadings on the aggregate
    resid = data.x_out[:, 0] - truth.factors[:, 0]
    assert abs(resid.var() - 1.0) < 0.1


def test_proxy_without_noise():
    spec = ModelSpec.baseline(2, ["rate"], var_lag_order=1)
    tp = default_true_params(spec, 300, seed=1, phi01=0.7, phi02=0.0)
    data, truth = simulate_dgp(spec, tp, 300, seed=2)
    np.testing.assert_allclose(data.m[:, 0], 0.7 * truth.shocks[:, 0], rtol=0, atol=1e-12)
    assert np.corrcoef(data.m[:, 0], truth.shocks[:, 0])[0, 1] == pytest.approx(1.0, abs=1e-12)


def test_large_sample_shock_covariance():
    spec = ModelSpec.baseline(1, ["rate"], var_lag_order=1)
    T = 1_000_000
    tp = default_true_params(spec, T, seed=1, sv_scale=0.0)
    _, truth = simulate_dgp(spec, tp, T, seed=9, burn=10)
    e = truth.shocks
    S = e.T @ e / T
    n = S.shape[0]
    # Monte Carlo s.e. of a sample second moment: sqrt(2/T) on the diagonal, sqrt(1/T) off it
    se = np.where(np.eye(n, dtype=bool), np.sqrt(2.0 / T), np.sqrt(1.0 / T))
    assert np.all(np.abs(S - np.eye(n)) < 3 * se)


def test_explosive_var_rejected():
    spec = ModelSpec.baseline(2, ["rate"], var_lag_order=1)
    tp = default_true_params(spec, 100, seed=1)
    tp.A[0, 2, 2] = 1.05
    with pytest.raises(ExplosiveVar):
        simulate_dgp(spec, tp, 100, seed=1)


def test_likelihood_prefers_truth():
    spec = ModelSpec.baseline(3, ["rate", "spread"], var_lag_order=2)
    tp = default_true_params(spec, 300, seed=4)
    data, truth = simulate_dgp(spec, tp, 300, seed=5, standardize=False)
    true_state = truth.params
    base = log_likelihood(spec, data, true_state)
    rng = np.random.default_rng(6)
    perturbed = []
    for _ in range(20):
        s = true_state.copy()
        s.A[:, :spec.r, :spec.r] += 0.05 * rng.standard_normal(s.A[:, :spec.r, :spec.r].shape)
        s.B[: spec.r, : spec.r] += 0.05 * rng.standard_normal((spec.r, spec.r))
        s.lambda_out[1:] += 0.05 * rng.standard_normal(s.lambda_out[1:].shape)
        s.lambda_inf[1:] += 0.05 * rng.standard_normal(s.lambda_inf[1:].shape)
        perturbed.append(log_likelihood(spec, data, s))
    assert base > np.mean(perturbed)


def test_spec_and_prior_roundtrip():
    spec = ModelSpec.baseline(4, ["a", "b", "c"], policy_rate_index=1, include_country_channels=True,
                              mcmc=McmcSettings(50, 10, 3))
    back = ModelSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert back == spec
    pri = PriorConfig(minnesota_sigma2=[0.5, 2.0], impact_tags={(2, 1): "negative"})
    back = PriorConfig.from_dict(json.loads(json.dumps(pri.to_dict())))
    assert back == pri


def test_state_roundtrip(small_spec, small_data):
    data, _ = small_data
    s = initialize_state(small_spec, data, PriorConfig())
    s.kappa1 = 0.123456789012345678
    back = McmcState.from_dict(json.loads(json.dumps(s.to_dict())))
    for name in McmcState.ARRAY_FIELDS:
        assert np.array_equal(getattr(back, name), getattr(s, name))
    assert back.kappa1 == s.kappa1 and back.kappa2 == s.kappa2


def test_dataset_roundtrip(tmp_path, small_data):
    data, _ = small_data
    write_dataset(tmp_path, data)
    back = read_dataset(tmp_path)
    assert np.array_equal(back.dates, data.dates)
    assert np.array_equal(back.x_out, data.x_out) and np.array_equal(back.x_inf, data.x_inf)
    assert np.array_equal(back.m, data.m)
    np.testing.assert_allclose(back.z_raw, data.z_raw, rtol=0, atol=1e-12)
    np.testing.assert_allclose(back.z, data.z, rtol=0, atol=1e-12)
    assert back.country_names == data.country_names and back.z_names == data.z_names


def test_draws_roundtrip(tmp_path, small_spec, small_data):
    data, _ = small_data
    s = initialize_state(small_spec, data, PriorConfig())
    rng = np.random.default_rng(0)
    states = []
    with DrawWriter(tmp_path, s) as w:
        for k in range(3):
            t = s.copy()
            t.B = t.B + rng.standard_normal(t.B.shape) / 3
            t.kappa2 = float(rng.uniform())
            w.write(10 + k, t)
            states.append(t)
        shapes = w.shapes
    write_manifest(tmp_path, {"block_shapes": shapes, "seed": 4})
    back = read_draws(tmp_path)
    direct = PosteriorDraws.from_states(states, [10, 11, 12], 4)
    assert np.array_equal(back.draw_index, direct.draw_index)
    for name, arr in direct.blocks.items():
        assert np.array_equal(back[name], arr), name
