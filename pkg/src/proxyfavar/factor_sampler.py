"""Gibbs steps for the factor equation: loadings, volatilities, horseshoe, factors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import kernels
from .errors import DimensionMismatch, FilterDivergence, SingularPosterior
from .model import (
    DataSet,
    McmcState,
    ModelSpec,
    PriorConfig,
    factor_residuals,
    loading_regressors,
    pack_loadings,
    unpack_loadings,
)
from .tmvn import psd_factor


@dataclass(frozen=True)
class MixtureTable:
    """Seven-component normal mixture for log chi-square(1) noise."""

    prob: np.ndarray
    raw_mean: np.ndarray
    var: np.ndarray
    offset: float = -1.2704
    jitter: float = 1e-4

    @property
    def mean(self) -> np.ndarray:
        """Component means of the log chi-square draw itself."""
        return self.raw_mean + self.offset

    def moments(self) -> tuple[float, float]:
        mu = float(np.sum(self.prob * self.mean))
        second = float(np.sum(self.prob * (self.var + self.mean**2)))
        return mu, second - mu**2


MIXTURE = MixtureTable(
    prob=np.array([0.00730, 0.10556, 0.00002, 0.04395, 0.34001, 0.24566, 0.25750]),
    raw_mean=np.array([-10.12999, -3.97281, -8.56686, 2.77786, 0.61942, 1.79518, -1.08819]),
    var=np.array([5.79596, 2.61369, 5.17950, 0.16735, 0.64009, 0.34023, 1.26261]),
)


# Smallest state variance used in the precision sampler. Horseshoe draws can
# reach 1e-19, where 1/V swamps the measurement precision in double precision.
V_FLOOR = 1e-12


def _inv_gamma(shape, scale, rng: np.random.Generator):
    return np.asarray(scale) / rng.gamma(shape, 1.0, size=np.shape(scale))


# ---------------------------------------------------------------- step 1


def conjugate_regression_draw(X, y, w, prior_mean, prior_var, rng: np.random.Generator):
    """Draw from the Gaussian posterior of a weighted regression.

    ``w`` are observation precisions; the prior is N(prior_mean, diag(prior_var)).
    Returns ``(draw, mean, precision)``.
    """
    Xw = X * w[:, None]
    prec = X.T @ Xw + np.diag(1.0 / prior_var)
    rhs = Xw.T @ y + prior_mean / prior_var
    try:
        c = linalg.cholesky(prec, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularPosterior("loading posterior precision is not positive definite") from exc
    mean = linalg.cho_solve((c, True), rhs)
    draw = mean + linalg.solve_triangular(c, rng.standard_normal(mean.size), lower=True, trans="T")
    return draw, mean, prec


def _loading_prior(spec: ModelSpec, priors: PriorConfig):
    P1, nz = spec.factor_lag_order + 1, spec.n_z
    mean = [np.full(P1, priors.loading_mean)]
    var = [np.full(P1, priors.loading_var)]
    if spec.include_country_channels:
        mean.append(np.full(P1 * nz, priors.z_loading_mean))
        var.append(np.full(P1 * nz, priors.z_loading_var))
    return np.concatenate(mean), np.concatenate(var)


def sample_loadings(spec: ModelSpec, state: McmcState, data: DataSet, priors: PriorConfig,
                    rng: np.random.Generator) -> McmcState:
    """Heteroskedastic conjugate draw of every unpinned loading row."""
    P, N1 = spec.factor_lag_order, spec.n_series
    pm, pv = _loading_prior(spec, priors)
    blocks = [("lambda_out", "lambda_z_out", data.x_out), ("lambda_inf", "lambda_z_inf", data.x_inf)]
    for j, (name, zname, x) in enumerate(blocks):
        Xr = loading_regressors(spec, state.factors[:, j], data.z)
        coef = pack_loadings(spec, getattr(state, name), getattr(state, zname))
        for i in range(1, N1):
            w = np.exp(-state.h[j * N1 + i])
            coef[i] = conjugate_regression_draw(Xr, x[P:, i], w, pm, pv, rng)[0]
        lam, lam_z = unpack_loadings(spec, coef)
        lam[0] = 0.0
        lam[0, 0] = 1.0
        lam_z[0] = 0.0
        setattr(state, name, lam)
        setattr(state, zname, lam_z)
    return state


# ---------------------------------------------------------------- steps 2-4


def sv_precision(V: np.ndarray, obs_var: np.ndarray | None = None):
    """Tridiagonal precision of a random-walk path with increment variances ``V``.

    Returns ``(diag, off)`` with ``off`` the sub-diagonal; ``obs_var`` adds a
    diagonal measurement precision.
    """
    inv = 1.0 / V
    diag = inv.copy()
    diag[:, :-1] += inv[:, 1:]
    off = -inv[:, 1:]
    if obs_var is not None:
        diag = diag + 1.0 / obs_var
    return diag, off


def sample_stochastic_volatilities(state: McmcState, residuals: np.ndarray, rng: np.random.Generator,
                                   table: MixtureTable = MIXTURE) -> McmcState:
    """Mixture indicators, then a joint draw of every log-volatility path."""
    estar = np.log(residuals**2 + table.jitter)
    u = rng.random(estar.shape)
    s = kernels.mixture_indicator_draw(estar, state.h, u, table.prob, table.mean, table.var)
    V = np.maximum(state.V_h, V_FLOOR)
    diag, off = sv_precision(V, table.var[s])
    rhs = (estar - table.mean[s]) / table.var[s]
    rhs[:, 0] += state.h0 / V[:, 0]
    z = rng.standard_normal(estar.shape)
    state.h = kernels.tridiag_precision_draw(diag, off, rhs, z)[0]
    return state


def sample_sv_initial(state: McmcState, rng: np.random.Generator, prior_var: float = 10.0) -> McmcState:
    V1 = state.V_h[:, 0]
    prec = 1.0 / V1 + 1.0 / prior_var
    mean = (state.h[:, 0] / V1) / prec
    state.h0 = mean + rng.standard_normal(mean.size) / np.sqrt(prec)
    return state


def horseshoe_parameters(h: np.ndarray, h0: np.ndarray, lam: np.ndarray, tau: np.ndarray,
                         nu_lam: np.ndarray, nu_tau: np.ndarray) -> dict:
    """Shape/scale of each inverse-gamma conditional at the given values."""
    dh2 = np.diff(np.hstack([h0[:, None], h]), axis=1) ** 2
    return {
        "nu_lam": (1.0, 1.0 + 1.0 / lam),
        "lam": (1.0, 1.0 / nu_lam + dh2 / (2.0 * tau[:, None])),
        "nu_tau": (1.0, 1.0 + 1.0 / tau),
        "tau": ((h.shape[1] + 1) / 2.0, 1.0 / nu_tau + 0.5 * np.sum(dh2 / lam, axis=1)),
    }


def sample_horseshoe(state: McmcState, rng: np.random.Generator) -> McmcState:
    dh2 = np.diff(np.hstack([state.h0[:, None], state.h]), axis=1) ** 2
    state.nu_lam = _inv_gamma(1.0, 1.0 + 1.0 / state.lam_h, rng)
    state.lam_h = _inv_gamma(1.0, 1.0 / state.nu_lam + dh2 / (2.0 * state.tau_h[:, None]), rng)
    state.nu_tau = _inv_gamma(1.0, 1.0 + 1.0 / state.tau_h, rng)
    shape = (state.h.shape[1] + 1) / 2.0
    state.tau_h = _inv_gamma(shape, 1.0 / state.nu_tau + 0.5 * np.sum(dh2 / state.lam_h, axis=1), rng)
    return state


# ---------------------------------------------------------------- step 8


@dataclass
class StateSpaceSystem:
    """``obs_t = H beta_t + v_t``, ``beta_t = c + F beta_{t-1} + w_t``."""

    H: np.ndarray
    F: np.ndarray
    c: np.ndarray
    Q: np.ndarray
    R: np.ndarray  # (T_obs, m) diagonal observation variances
    obs: np.ndarray  # (T_obs, m)
    known: np.ndarray  # state coordinates observed without error
    random_rows: np.ndarray  # coordinates of beta_{t+1} carrying fresh randomness or drawn lags
    free_last: np.ndarray  # coordinates drawn in each backward step

    def __post_init__(self):
        d = self.F.shape[0]
        m = self.H.shape[0]
        if (self.F.shape != (d, d) or self.Q.shape != (d, d) or self.c.shape != (d,)
                or self.H.shape[1] != d or self.R.shape[1] != m or self.obs.shape != self.R.shape):
            raise DimensionMismatch("state-space matrices are mutually inconsistent")


def state_index(spec: ModelSpec, block: int, var: int) -> int:
    return block * spec.n + var


def build_state_space(spec: ModelSpec, state: McmcState, data: DataSet) -> StateSpaceSystem:
    n, r, p, P = spec.n, spec.r, spec.state_lags, spec.factor_lag_order
    N1, nz, k, L = spec.n_series, spec.n_z, spec.instrument_count, spec.var_lag_order
    d = n * p
    m = 2 * N1 + nz + k
    H = np.zeros((m, d))
    for j, (lam, lam_z) in enumerate([(state.lambda_out, state.lambda_z_out),
                                      (state.lambda_inf, state.lambda_z_inf)]):
        for i in range(N1):
            row = j * N1 + i
            for lag in range(P + 1):
                H[row, state_index(spec, lag, j)] = lam[i, lag]
                H[row, state_index(spec, lag, 2): state_index(spec, lag, r)] += lam_z[i, lag]
    for q in range(nz + k):
        H[2 * N1 + q, 2 + q] = 1.0
    F = np.zeros((d, d))
    for lag in range(L):
        F[:n, lag * n:(lag + 1) * n] = state.A[lag]
    if p > 1:
        F[n:, :-n] = np.eye(n * (p - 1))
    c = np.zeros(d)
    c[:n] = state.c
    Q = np.zeros((d, d))
    Q[:n, :n] = state.B @ state.B.T
    T = data.T
    obs = np.hstack([data.x_out, data.x_inf, data.z, data.m])[p:]
    R = np.hstack([np.exp(state.h.T[p - P:]), np.zeros((T - p, nz + k))])
    known = np.zeros(d, dtype=bool)
    for b in range(p):
        known[state_index(spec, b, 2): state_index(spec, b + 1, 0)] = True
    rows = np.concatenate([np.arange(n)] + [state_index(spec, b, 0) + np.arange(2) for b in range(1, p)])
    free_last = state_index(spec, p - 1, 0) + np.arange(2)
    return StateSpaceSystem(H, F, c, Q, R, obs, known, rows, free_last)


def kalman_update(a, P, y, H, R_diag):
    """Condition N(a, P) on ``y = H x + v`` with v ~ N(0, diag(R_diag))."""
    PHt = P @ H.T
    S = H @ PHt
    S.flat[:: S.shape[0] + 1] += R_diag
    try:
        cS = linalg.cho_factor(S, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise FilterDivergence("innovation covariance is not positive definite") from exc
    gain = linalg.cho_solve(cS, PHt.T, check_finite=False).T
    a_new = a + gain @ (y - H @ a)
    P_new = P - gain @ PHt.T
    return a_new, 0.5 * (P_new + P_new.T)


def kalman_filter(obs, H, R, F, c, Q, m0, V0, known: np.ndarray | None = None):
    """Forward filter for ``beta_0 ~ N(m0, V0)`` with observations at times 1..T.

    Returns filtered means (T+1, d) and covariances (T+1, d, d), index 0 being
    the prior. Coordinates flagged ``known`` are treated as exactly observed and
    their filtered variance is zeroed after each update.
    """
    T, d = obs.shape[0], F.shape[0]
    means = np.empty((T + 1, d))
    covs = np.empty((T + 1, d, d))
    means[0], covs[0] = m0, V0
    a, P = np.asarray(m0, dtype=float), np.asarray(V0, dtype=float)
    for t in range(T):
        a = c + F @ a
        P = F @ P @ F.T + Q
        a, P = kalman_update(a, P, obs[t], H, R[t])
        if known is not None:
            P[known, :] = 0.0
            P[:, known] = 0.0
        if not np.all(np.isfinite(P)):
            raise FilterDivergence(f"non-finite filtered covariance at step {t + 1}")
        means[t + 1], covs[t + 1] = a, P
    return means, covs


def backward_sample(means, covs, F, c, Q, rng: np.random.Generator, rows=None, draw_coords=None,
                    lag_block: int | None = None):
    """Simulation smoother: draws beta_T, ..., beta_0 given filtered moments.

    Each step conditions the filtered law of beta_t on the ``rows`` of the drawn
    beta_{t+1}. Only ``draw_coords`` receive noise; other coordinates take their
    conditional mean, which is exact whenever they are determined. With a
    companion state of block size ``lag_block`` the shifted lags are copied
    from beta_{t+1} verbatim.
    """
    T1, d = means.shape
    rows = np.arange(d) if rows is None else np.asarray(rows)
    draw_coords = np.arange(d) if draw_coords is None else np.asarray(draw_coords)
    Fr, cr, Qr = F[rows], c[rows], Q[np.ix_(rows, rows)]
    out = np.empty((T1, d))
    out[-1] = means[-1] + psd_factor(covs[-1]) @ rng.standard_normal(d)
    for t in range(T1 - 2, -1, -1):
        a, P = means[t], covs[t]
        PF = P @ Fr.T
        S = Fr @ PF + Qr
        try:
            cS = linalg.cho_factor(S, lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise FilterDivergence("smoother covariance is not positive definite") from exc
        gain = linalg.cho_solve(cS, PF.T, check_finite=False).T
        mean = a + gain @ (out[t + 1, rows] - cr - Fr @ a)
        cov = P - gain @ PF.T
        x = mean.copy()
        sub = cov[draw_coords[:, None], draw_coords]
        x[draw_coords] += psd_factor(0.5 * (sub + sub.T)) @ rng.standard_normal(draw_coords.size)
        if lag_block:
            x[:-lag_block] = out[t + 1, lag_block:]
        out[t] = x
    return out


def _initial_state(spec: ModelSpec, state: McmcState, data: DataSet, priors: PriorConfig,
                   sys: StateSpaceSystem):
    """Moments of beta at time p-1 given the factor prior and x_P..x_{p-1}."""
    n, p, P, N1 = spec.n, spec.state_lags, spec.factor_lag_order, spec.n_series
    d = n * p
    Y = np.hstack([state.factors, data.z, data.m])
    a = np.concatenate([Y[p - 1 - b] for b in range(p)])
    Pm = np.zeros((d, d))
    for b in range(p):
        for j in range(2):
            ix = state_index(spec, b, j)
            a[ix] = state.f0_mean[p - 1 - b, j]
            Pm[ix, ix] = priors.factor_init_var
    # x observations dated P..p-1 only involve factors inside this first state
    for s in range(P, p):
        shift = p - 1 - s
        Hs = np.zeros((2 * N1, d))
        Hs[:, shift * n: d] = sys.H[: 2 * N1, : d - shift * n]
        a, Pm = kalman_update(a, Pm, data.x[s], Hs, np.exp(state.h[:, s - P]))
    Pm[sys.known, :] = 0.0
    Pm[:, sys.known] = 0.0
    return a, Pm


def sample_factors(spec: ModelSpec, state: McmcState, data: DataSet, priors: PriorConfig,
                   rng: np.random.Generator) -> McmcState:
    """Forward filter, backward sample the factor paths."""
    n, p = spec.n, spec.state_lags
    sys = build_state_space(spec, state, data)
    a0, P0 = _initial_state(spec, state, data, priors, sys)
    means, covs = kalman_filter(sys.obs, sys.H, sys.R, sys.F, sys.c, sys.Q, a0, P0, sys.known)
    draws = backward_sample(means, covs, sys.F, sys.c, sys.Q, rng, sys.random_rows, sys.free_last,
                            lag_block=n)
    T = data.T
    f = np.empty((T, 2))
    last = draws[-1].reshape(p, n)
    for b in range(p):
        f[T - 1 - b] = last[b, :2]
    for t in range(draws.shape[0] - 1):
        f[t] = draws[t].reshape(p, n)[p - 1, :2]
    if not np.all(np.isfinite(f)):
        raise FilterDivergence("non-finite factor draw")
    state.factors = f
    return state


def current_residuals(spec: ModelSpec, state: McmcState, data: DataSet) -> np.ndarray:
    """Factor-equation residuals shaped like ``state.h``."""
    return factor_residuals(spec, state, data).T
