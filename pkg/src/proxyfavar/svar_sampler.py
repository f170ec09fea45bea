"""Gibbs steps for the VAR block: coefficients, impact matrix, Minnesota shrinkage."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from .errors import NonPositiveShape, SeriesTooShort, SingularPosterior, StuckRegion, ValidationError
from .model import (
    FREE,
    NEGATIVE,
    POSITIVE,
    ZERO,
    DataSet,
    McmcState,
    ModelSpec,
    PriorConfig,
    impact_prior,
    impact_tags,
    lag_free_mask,
    lagged_design,
    minnesota_prior_mean,
    var_series,
)
from .tmvn import sample_box_truncated_mvn


# ---------------------------------------------------------------- Minnesota prior


def compute_minnesota_scales(y: np.ndarray, L: int) -> np.ndarray:
    """Residual variance of a univariate AR(L) with intercept, per column."""
    if L < 1:
        raise ValidationError("AR order must be at least 1")
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    T = y.shape[0]
    if T <= L + 2:
        raise SeriesTooShort("too few observations for the AR(L) scale regressions")
    out = np.empty(y.shape[1])
    for j in range(y.shape[1]):
        X = np.column_stack([np.ones(T - L)] + [y[L - l: T - l, j] for l in range(1, L + 1)])
        coef, *_ = np.linalg.lstsq(X, y[L:, j], rcond=None)
        e = y[L:, j] - X @ coef
        out[j] = e @ e / (T - L - X.shape[1])
    return out


def minnesota_prior_variance(kappa1: float, kappa2: float, sigma2: np.ndarray, L: int) -> np.ndarray:
    """Prior variances of Gamma_l[i, j] (equation i, variable j) as (L, r, r)."""
    r = sigma2.size
    ratio = sigma2[:, None] / sigma2[None, :]
    base = np.where(np.eye(r, dtype=bool), kappa1, kappa1 * kappa2 * ratio)
    lags = np.arange(1, L + 1, dtype=float)
    return base[None] / lags[:, None, None] ** 2


def coefficient_prior(spec: ModelSpec, state: McmcState, priors: PriorConfig):
    """Prior mean/variance of the stacked coefficients ``(1 + nL, n)``; inf marks fixed zeros."""
    n, r, L = spec.n, spec.r, spec.var_lag_order
    mean = np.zeros((1 + n * L, n))
    var = np.full((1 + n * L, n), np.nan)
    var[0] = priors.constant_var
    g0 = minnesota_prior_mean(spec)
    gv = minnesota_prior_variance(state.kappa1, state.kappa2, state.sigma2, L)
    for l in range(L):
        rows = slice(1 + l * n, 1 + l * n + r)
        mean[rows, :r] = g0[l].T
        var[rows, :r] = gv[l].T
    free = ~np.isnan(var)
    return mean, var, free


# ---------------------------------------------------------------- step 5


def var_equation_posterior(X, M, c_i, prior_mean, prior_var):
    """Precision and mean of one equation's free coefficients.

    ``M`` holds the whitened residuals with equation i's own contribution
    removed, ``c_i`` is column i of B^{-1}.
    """
    prec = (c_i @ c_i) * (X.T @ X) + np.diag(1.0 / prior_var)
    rhs = X.T @ (M @ c_i) + prior_mean / prior_var
    try:
        ch = linalg.cholesky(prec, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularPosterior("VAR coefficient precision is not positive definite") from exc
    mean = linalg.cho_solve((ch, True), rhs)
    return mean, prec, ch


def draw_var_coefficients(Y, X, Ast, B, prior_mean, prior_var, free, rng: np.random.Generator):
    """Equation-by-equation draw of the stacked coefficients ``Ast`` (k, n)."""
    Ast = Ast.copy()
    Binv = np.linalg.inv(B)
    C = Binv.T
    for i in range(Y.shape[1]):
        S = free[:, i]
        A0 = Ast.copy()
        A0[:, i] = 0.0
        M = (Y - X @ A0) @ C
        mean, _, ch = var_equation_posterior(X[:, S], M, Binv[:, i], prior_mean[S, i], prior_var[S, i])
        z = rng.standard_normal(mean.size)
        Ast[:, i] = 0.0
        Ast[S, i] = mean + linalg.solve_triangular(ch, z, lower=True, trans="T")
    return Ast


def sample_var_coefficients(spec: ModelSpec, state: McmcState, data: DataSet, priors: PriorConfig,
                            rng: np.random.Generator) -> McmcState:
    p = spec.state_lags
    Yfull = var_series(spec, data, state.factors)
    X = lagged_design(Yfull, spec.var_lag_order, start=p)
    mean, var, free = coefficient_prior(spec, state, priors)
    Ast = draw_var_coefficients(Yfull[p:], X, state.stacked_A(), state.B, mean, var, free, rng)
    state.set_stacked_A(Ast)
    return state


# ---------------------------------------------------------------- step 6


@dataclass
class ImpactStats:
    """Running acceptance counts of the impact-matrix updates."""

    u_proposed: int = 0
    u_accepted: int = 0
    w_proposed: int = 0
    w_accepted: int = 0
    singular_rejections: int = 0
    per_column: dict = field(default_factory=dict)
    stuck_window: int = 100_000
    stuck_rate: float = 1e-4

    def record(self, kind: str, col: int, accepted: bool) -> None:
        setattr(self, f"{kind}_proposed", getattr(self, f"{kind}_proposed") + 1)
        if accepted:
            setattr(self, f"{kind}_accepted", getattr(self, f"{kind}_accepted") + 1)
        tot = self.per_column.setdefault((kind, col), [0, 0])
        tot[0] += 1
        tot[1] += int(accepted)
        if tot[0] >= self.stuck_window and tot[1] / tot[0] < self.stuck_rate:
            raise StuckRegion(f"{kind}-step acceptance for column {col} fell below {self.stuck_rate}")

    def summary(self) -> dict:
        def rate(a, b):
            return a / b if b else None

        return {
            "u_proposed": self.u_proposed,
            "u_accepted": self.u_accepted,
            "u_acceptance_rate": rate(self.u_accepted, self.u_proposed),
            "w_proposed": self.w_proposed,
            "w_accepted": self.w_accepted,
            "w_acceptance_rate": rate(self.w_accepted, self.w_proposed),
            "singular_rejections": self.singular_rejections,
        }


def _sign_ok(value: float, tag: int) -> bool:
    if tag == POSITIVE:
        return value > 0
    if tag == NEGATIVE:
        return value < 0
    return True


@dataclass
class ColumnTransform:
    """Coordinates of column ``i`` of B with the rest of B held fixed."""

    i: int
    others: np.ndarray
    b12: np.ndarray
    B22inv: np.ndarray
    g: np.ndarray
    u: float
    w: np.ndarray

    @classmethod
    def from_matrix(cls, B: np.ndarray, i: int) -> "ColumnTransform":
        others = np.delete(np.arange(B.shape[0]), i)
        b12 = B[i, others]
        B22inv = np.linalg.inv(B[np.ix_(others, others)])
        w = B[others, i].copy()
        g = B22inv.T @ b12
        return cls(i, others, b12, B22inv, g, float(B[i, i] - g @ w), w)

    def b11(self, u: float | None = None, w: np.ndarray | None = None) -> float:
        u = self.u if u is None else u
        w = self.w if w is None else w
        return float(u + self.g @ w)

    def to_matrix(self, B: np.ndarray) -> np.ndarray:
        out = B.copy()
        out[self.others, self.i] = self.w
        out[self.i, self.i] = self.b11()
        return out

    def projections(self, U: np.ndarray):
        """``s_t`` and the rows ``a_t`` for reduced-form residuals ``U`` (T, n)."""
        Ym = U[:, self.others]
        A = Ym @ self.B22inv.T
        s = U[:, self.i] - A @ self.b12
        return s, A


def u_kernel_coefficients(s: np.ndarray, A: np.ndarray, Gw: np.ndarray) -> tuple[float, float]:
    """Coefficients of 1/u and 1/u^2 in the column likelihood exponent."""
    g2 = float(np.sum(s**2) * (1.0 + Gw @ Gw))
    g1 = float(-2.0 * np.sum(s * (A @ Gw)))
    return g1, g2


def column_log_likelihood(U: np.ndarray, B: np.ndarray) -> float:
    """Gaussian log density of residuals U given B, up to the 2*pi constant."""
    E = np.linalg.solve(B, U.T)
    return float(-U.shape[0] * np.log(abs(np.linalg.det(B))) - 0.5 * np.sum(E**2))


class GridProposal:
    """Piecewise-constant independence proposal for v = 1/u."""

    def __init__(self, g1: float, g2: float, T: int, cells: int = 1000, width: float = 8.0):
        self.g1, self.g2, self.T = g1, g2, T
        a = max(T - 2, 1)
        disc = np.sqrt(g1**2 / 4.0 + 4.0 * g2 * a)
        modes = [(-g1 / 2.0 + disc) / (2.0 * g2), (-g1 / 2.0 - disc) / (2.0 * g2)]
        edges = []
        for vm in modes:
            sd = 1.0 / np.sqrt(a / vm**2 + g2)
            lo, hi = vm - width * sd, vm + width * sd
            if vm > 0:
                lo = max(lo, vm * 1e-6)
            else:
                hi = min(hi, vm * 1e-6)
            edges.append(np.linspace(lo, hi, cells + 1))
        self.edges = edges
        mids = [0.5 * (e[1:] + e[:-1]) for e in edges]
        widths = [np.diff(e) for e in edges]
        logw = np.concatenate([self.log_kernel(m) + np.log(w) for m, w in zip(mids, widths)])
        logw -= logw.max()
        p = np.exp(logw)
        self.prob = p / p.sum()
        self.cum = np.cumsum(self.prob)
        self.lo = np.concatenate([e[:-1] for e in edges])
        self.width = np.concatenate(widths)

    def log_kernel(self, v):
        v = np.asarray(v, dtype=float)
        return (self.T - 2) * np.log(np.abs(v)) - 0.5 * (self.g1 * v + self.g2 * v**2)

    def draw(self, rng: np.random.Generator) -> float:
        k = min(int(np.searchsorted(self.cum, rng.random() * self.cum[-1], side="right")), self.prob.size - 1)
        return float(self.lo[k] + rng.random() * self.width[k])

    def log_density(self, v: float) -> float:
        for j, e in enumerate(self.edges):
            if e[0] <= v < e[-1]:
                k = min(int(np.searchsorted(e, v, side="right")) - 1, e.size - 2)
                idx = j * (self.edges[0].size - 1) + k
                return float(np.log(self.prob[idx]) - np.log(self.width[idx]))
        return -np.inf


def update_impact_column(B: np.ndarray, U: np.ndarray, i: int, tags: np.ndarray, prior_mean: np.ndarray,
                         prior_var: np.ndarray, rng: np.random.Generator,
                         stats: ImpactStats | None = None) -> np.ndarray:
    """One Gibbs pass over column i: free off-diagonal entries, then the pivot."""
    stats = stats if stats is not None else ImpactStats()
    try:
        ct = ColumnTransform.from_matrix(B, i)
    except np.linalg.LinAlgError:
        stats.singular_rejections += 1
        return B
    if ct.B22inv.size and (not np.all(np.isfinite(ct.B22inv)) or np.linalg.cond(ct.B22inv) > 1e12):
        stats.singular_rejections += 1
        return B
    T = U.shape[0]
    s, A = ct.projections(U)
    b11_mean, b11_var, tag11 = prior_mean[i, i], prior_var[i, i], tags[i, i]
    wtags = tags[ct.others, i]
    sel = np.flatnonzero(wtags != ZERO)

    if sel.size:
        G = ct.B22inv
        GtG = G.T @ G
        r = s / ct.u
        ZtZ = np.sum(r**2) * GtG
        Ztq = G.T @ (A.T @ r)
        gS = ct.g[sel]
        wm = prior_mean[ct.others, i][sel]
        wv = prior_var[ct.others, i][sel]
        prec = ZtZ[np.ix_(sel, sel)] + np.diag(1.0 / wv) + np.outer(gS, gS) / b11_var
        rhs = Ztq[sel] + wm / wv - (ct.u - b11_mean) * gS / b11_var
        cov = np.linalg.inv(prec)
        cov = 0.5 * (cov + cov.T)
        mean = cov @ rhs
        st = wtags[sel]
        lb = np.where(st == POSITIVE, 0.0, -np.inf)
        ub = np.where(st == NEGATIVE, 0.0, np.inf)
        wt = sample_box_truncated_mvn(mean, prec, lb, ub, rng, cov=cov)
        w_new = np.zeros_like(ct.w)
        w_new[sel] = wt
        ok = _sign_ok(ct.b11(w=w_new), tag11)
        stats.record("w", i, ok)
        if ok:
            ct.w = w_new

    Gw = ct.B22inv @ ct.w
    g1, g2 = u_kernel_coefficients(s, A, Gw)
    gw = float(ct.g @ ct.w)

    def log_target(v):
        if not np.isfinite(v) or v == 0:
            return -np.inf
        b11 = 1.0 / v + gw
        if not _sign_ok(b11, tag11):
            return -np.inf
        return float(prop.log_kernel(v)) - 0.5 * (b11 - b11_mean) ** 2 / b11_var

    prop = GridProposal(g1, g2, T)
    v_cur = 1.0 / ct.u
    v_new = prop.draw(rng)
    q_cur = prop.log_density(v_cur)
    if not np.isfinite(q_cur):
        accept = np.isfinite(log_target(v_new))
    else:
        log_alpha = (log_target(v_new) - prop.log_density(v_new)) - (log_target(v_cur) - q_cur)
        accept = np.log(rng.random()) < log_alpha
    stats.record("u", i, bool(accept))
    if accept:
        ct.u = 1.0 / v_new

    B_new = ct.to_matrix(B)
    det = np.linalg.det(B_new)
    if not np.isfinite(det) or abs(det) < 1e-12:
        stats.singular_rejections += 1
        return B
    return B_new


def draw_impact_matrix(B, U, tags, prior_mean, prior_var, rng: np.random.Generator,
                       stats: ImpactStats | None = None) -> np.ndarray:
    for i in range(B.shape[0]):
        B = update_impact_column(B, U, i, tags, prior_mean, prior_var, rng, stats)
    return B


def reduced_form_residuals(spec: ModelSpec, state: McmcState, data: DataSet) -> np.ndarray:
    p = spec.state_lags
    Y = var_series(spec, data, state.factors)
    X = lagged_design(Y, spec.var_lag_order, start=p)
    return Y[p:] - X @ state.stacked_A()


def sample_impact_matrix(spec: ModelSpec, state: McmcState, data: DataSet, priors: PriorConfig,
                         rng: np.random.Generator, stats: ImpactStats | None = None,
                         tags: np.ndarray | None = None) -> McmcState:
    tags = impact_tags(spec, priors) if tags is None else tags
    mean, var = impact_prior(spec, priors)
    U = reduced_form_residuals(spec, state, data)
    state.B = draw_impact_matrix(state.B, U, tags, mean, var, rng, stats)
    return state


# ---------------------------------------------------------------- step 7


def shrinkage_parameters(Gamma: np.ndarray, gamma0: np.ndarray, sigma2: np.ndarray,
                         kappa1: float, kappa2: float) -> dict:
    """Inverse-gamma shapes and scales of both shrinkage conditionals.

    ``Gamma`` and ``gamma0`` are (L, r, r) with entry [l, i, j] the coefficient
    of variable j in equation i at lag l+1.
    """
    L, r, _ = Gamma.shape
    lags = np.arange(1, L + 1, dtype=float)[:, None, None]
    dev2 = lags**2 * (Gamma - gamma0) ** 2
    ratio = sigma2[None, :] / sigma2[:, None]
    off = ~np.eye(r, dtype=bool)
    g1 = np.where(off, ratio / kappa2, 1.0) * dev2
    g2 = np.where(off, ratio / kappa1, 0.0) * dev2
    return {
        "kappa1": (r * r * L / 2.0 - 1.0, 0.5 * float(np.sum(g1))),
        "kappa2": (r * (r - 1) * L / 2.0 - 1.0, 0.5 * float(np.sum(g2))),
    }


def truncated_inv_gamma(shape: float, scale: float, upper: float, rng: np.random.Generator,
                        floor: float = 1e-12) -> float:
    """Inverse-gamma draw restricted to (0, upper] by inversion."""
    if shape <= 0:
        raise NonPositiveShape("inverse-gamma shape must be positive")
    scale = max(scale, floor)
    tail = special.gammaincc(shape, scale / upper)
    if tail <= 0:
        return float(upper)
    g = special.gammainccinv(shape, rng.random() * tail)
    if not g > 0:
        return float(upper)
    return float(min(scale / g, upper))


def sample_shrinkage(spec: ModelSpec, state: McmcState, priors: PriorConfig,
                     rng: np.random.Generator) -> McmcState:
    r = spec.r
    Gamma = state.A[:, :r, :r]
    g0 = minnesota_prior_mean(spec)
    par = shrinkage_parameters(Gamma, g0, state.sigma2, state.kappa1, state.kappa2)
    state.kappa1 = truncated_inv_gamma(*par["kappa1"], priors.kappa_max, rng)
    par = shrinkage_parameters(Gamma, g0, state.sigma2, state.kappa1, state.kappa2)
    state.kappa2 = truncated_inv_gamma(*par["kappa2"], priors.kappa_max, rng)
    return state


def lag_zero_pattern_holds(spec: ModelSpec, state: McmcState) -> bool:
    mask = lag_free_mask(spec)
    return bool(np.all(state.A[:, ~mask] == 0.0))


__all__ = [
    "FREE",
    "ColumnTransform",
    "GridProposal",
    "ImpactStats",
    "column_log_likelihood",
    "compute_minnesota_scales",
    "draw_impact_matrix",
    "draw_var_coefficients",
    "minnesota_prior_variance",
    "sample_impact_matrix",
    "sample_shrinkage",
    "sample_var_coefficients",
    "shrinkage_parameters",
    "truncated_inv_gamma",
    "u_kernel_coefficients",
    "update_impact_column",
    "var_equation_posterior",
]
