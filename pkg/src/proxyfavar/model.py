"""Model specification, containers and the synthetic data generator.

The endogenous VAR vector is ordered ``y_t = (f_out, f_inf, z_1..z_nz, m_1..m_k)``.
Country panels are ordered with the euro-area aggregate in column 0.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import (
    DegenerateData,
    DimensionMismatch,
    ExplosiveVar,
    InvalidMcmcSettings,
    InvalidRestriction,
    NonPositiveShape,
    ValidationError,
)

# impact-matrix restriction tags
FREE, POSITIVE, NEGATIVE, ZERO = 0, 1, -1, 9
TAG_NAMES = {FREE: "unrestricted", POSITIVE: "positive", NEGATIVE: "negative", ZERO: "zero"}
TAG_CODES = {v: k for k, v in TAG_NAMES.items()}

STEP_NAMES = (
    "loadings",
    "sv",
    "sv_initial",
    "horseshoe",
    "var",
    "impact",
    "shrinkage",
    "factors",
)


@dataclass
class McmcSettings:
    total_iterations: int = 18_000
    burn_in: int = 3_000
    thinning: int = 5

    @property
    def n_retained(self) -> int:
        return (self.total_iterations - self.burn_in) // self.thinning


@dataclass
class ModelSpec:
    n_countries: int
    var_names_z: list[str]
    factor_lag_order: int = 0
    var_lag_order: int = 6
    include_country_channels: bool = False
    policy_rate_index: int = 0
    sign_restrictions: list[tuple[int, int]] = field(default_factory=list)
    instrument_count: int = 1
    mcmc: McmcSettings = field(default_factory=McmcSettings)

    @classmethod
    def baseline(cls, n_countries: int, var_names_z: list[str], policy_rate_index: int = 0, **kw):
        """Spec with the baseline identifying signs on the policy-shock column.

        A contractionary shock raises the policy rate and lowers the inflation
        cycle.
        """
        signs = [(2 + policy_rate_index, 1), (1, -1)]
        kw.setdefault("sign_restrictions", signs)
        return cls(n_countries, list(var_names_z), policy_rate_index=policy_rate_index, **kw)

    @property
    def n_z(self) -> int:
        return len(self.var_names_z)

    @property
    def r(self) -> int:
        return 2 + self.n_z

    @property
    def n(self) -> int:
        return self.r + self.instrument_count

    @property
    def n_series(self) -> int:
        """Number of country series per block, aggregate included."""
        return self.n_countries + 1

    @property
    def state_lags(self) -> int:
        return max(self.var_lag_order, self.factor_lag_order + 1)

    @property
    def policy_rate_y_index(self) -> int:
        return 2 + self.policy_rate_index

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sign_restrictions"] = [list(x) for x in self.sign_restrictions]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        d["mcmc"] = McmcSettings(**d.get("mcmc", {}))
        d["sign_restrictions"] = [tuple(int(v) for v in x) for x in d.get("sign_restrictions", [])]
        d["var_names_z"] = list(d["var_names_z"])
        return cls(**d)


@dataclass
class PriorConfig:
    loading_mean: float = 0.0
    loading_var: float = 10.0
    z_loading_mean: float = 0.0
    z_loading_var: float = 10.0
    impact_mean: float = 0.0
    impact_var: float = 1.0
    proxy_mean1: float = 0.0
    proxy_var1: float = 10.0
    proxy_mean2: float = 0.0
    proxy_var2: float = 0.01**2
    constant_var: float = 100.0**2
    sv_initial_var: float = 10.0
    factor_init_var: float = 10.0
    kappa_max: float = 10.0
    # fixed Minnesota scales; estimated from AR(L) fits when None
    minnesota_sigma2: list[float] | None = None
    # explicit overrides of impact-matrix tags, keyed by (row, col)
    impact_tags: dict[tuple[int, int], str] = field(default_factory=dict)

    @classmethod
    def less_informative_proxy(cls, **kw) -> "PriorConfig":
        return cls(proxy_var1=1.0, proxy_var2=1.0, **kw)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["impact_tags"] = [[int(i), int(j), t] for (i, j), t in self.impact_tags.items()]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PriorConfig":
        d = dict(d)
        d["impact_tags"] = {(int(i), int(j)): t for i, j, t in d.get("impact_tags", [])}
        return cls(**d)


@dataclass
class DataSet:
    dates: np.ndarray
    x_out: np.ndarray
    x_inf: np.ndarray
    z: np.ndarray
    m: np.ndarray
    z_mean: np.ndarray
    z_std: np.ndarray
    country_names: list[str]
    z_names: list[str]
    m_names: list[str]

    @classmethod
    def from_raw(cls, dates, x_out, x_inf, z_raw, m, *, country_names=None, z_names=None,
                 m_names=None, standardize: bool = True) -> "DataSet":
        from .data_pipeline import standardize_z

        x_out = np.atleast_2d(np.asarray(x_out, dtype=float))
        x_inf = np.atleast_2d(np.asarray(x_inf, dtype=float))
        z_raw = np.asarray(z_raw, dtype=float)
        m = np.asarray(m, dtype=float)
        if m.ndim == 1:
            m = m[:, None]
        if standardize:
            z, mean, std = standardize_z(z_raw)
        else:
            z, mean, std = z_raw.copy(), np.zeros(z_raw.shape[1]), np.ones(z_raw.shape[1])
        n1 = x_out.shape[1]
        return cls(
            dates=np.asarray(dates, dtype="datetime64[M]"),
            x_out=x_out,
            x_inf=x_inf,
            z=z,
            m=m,
            z_mean=mean,
            z_std=std,
            country_names=list(country_names or ["EA19"] + [f"C{i}" for i in range(1, n1)]),
            z_names=list(z_names or [f"z{i}" for i in range(z.shape[1])]),
            m_names=list(m_names or [f"m{i}" for i in range(m.shape[1])]),
        )

    @property
    def T(self) -> int:
        return self.x_out.shape[0]

    @property
    def z_raw(self) -> np.ndarray:
        return self.z * self.z_std + self.z_mean

    @property
    def x(self) -> np.ndarray:
        """Both country blocks side by side, output first."""
        return np.hstack([self.x_out, self.x_inf])


@dataclass
class McmcState:
    lambda_out: np.ndarray  # (N+1, P+1)
    lambda_inf: np.ndarray
    lambda_z_out: np.ndarray  # (N+1, P+1, nz)
    lambda_z_inf: np.ndarray
    h: np.ndarray  # (2(N+1), T-P)
    h0: np.ndarray  # (2(N+1),)
    tau_h: np.ndarray
    lam_h: np.ndarray
    nu_tau: np.ndarray
    nu_lam: np.ndarray
    factors: np.ndarray  # (T, 2)
    c: np.ndarray  # (n,)
    A: np.ndarray  # (L, n, n)
    B: np.ndarray  # (n, n)
    kappa1: float
    kappa2: float
    sigma2: np.ndarray  # (r,)
    f0_mean: np.ndarray  # (state_lags, 2)

    ARRAY_FIELDS = (
        "lambda_out", "lambda_inf", "lambda_z_out", "lambda_z_inf", "h", "h0", "tau_h",
        "lam_h", "nu_tau", "nu_lam", "factors", "c", "A", "B", "sigma2", "f0_mean",
    )

    @property
    def V_h(self) -> np.ndarray:
        return self.tau_h[:, None] * self.lam_h

    def copy(self) -> "McmcState":
        return dataclasses.replace(
            self, **{k: np.array(getattr(self, k), copy=True) for k in self.ARRAY_FIELDS}
        )

    def stacked_A(self) -> np.ndarray:
        """Coefficients as ``(1 + nL, n)``: constants on top, column i is equation i."""
        L = self.A.shape[0]
        return np.vstack([self.c[None, :]] + [self.A[l].T for l in range(L)])

    def set_stacked_A(self, Ast: np.ndarray) -> None:
        n = self.c.shape[0]
        self.c = Ast[0].copy()
        for l in range(self.A.shape[0]):
            self.A[l] = Ast[1 + l * n: 1 + (l + 1) * n].T

    def to_dict(self) -> dict:
        d = {k: np.asarray(getattr(self, k)).tolist() for k in self.ARRAY_FIELDS}
        d["kappa1"] = float(self.kappa1)
        d["kappa2"] = float(self.kappa2)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "McmcState":
        kw = {k: np.asarray(d[k], dtype=float) for k in cls.ARRAY_FIELDS}
        return cls(kappa1=float(d["kappa1"]), kappa2=float(d["kappa2"]), **kw)


@dataclass
class ValidatedBundle:
    spec: ModelSpec
    data: DataSet
    priors: PriorConfig
    tags: np.ndarray


DRAW_BLOCKS = McmcState.ARRAY_FIELDS + ("kappa1", "kappa2")


@dataclass
class PosteriorDraws:
    """Retained draws, one stacked array per parameter block."""

    blocks: dict[str, np.ndarray]
    draw_index: np.ndarray
    seed: int | None = None
    chain: int = 0

    def __len__(self) -> int:
        return int(self.draw_index.size)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.blocks[name]

    def state(self, k: int) -> McmcState:
        kw = {name: np.array(self.blocks[name][k]) for name in McmcState.ARRAY_FIELDS}
        return McmcState(kappa1=float(self.blocks["kappa1"][k]), kappa2=float(self.blocks["kappa2"][k]), **kw)

    def states(self):
        for k in range(len(self)):
            yield self.state(k)

    @classmethod
    def from_states(cls, states: list[McmcState], draw_index=None, seed=None, chain: int = 0):
        blocks = {name: np.stack([np.asarray(getattr(s, name), dtype=float) for s in states])
                  for name in DRAW_BLOCKS}
        idx = np.arange(len(states)) if draw_index is None else np.asarray(draw_index)
        return cls(blocks, idx, seed, chain)


# ---------------------------------------------------------------- structure


def impact_zero_pattern(spec: ModelSpec) -> np.ndarray:
    """Entries of B forced to zero by the proxy structure."""
    n, r = spec.n, spec.r
    zero = np.zeros((n, n), dtype=bool)
    zero[:r, r:] = True
    zero[r:, 1:r] = True
    zero[r:, r:] = ~np.eye(spec.instrument_count, dtype=bool)
    return zero


def impact_tags(spec: ModelSpec, priors: PriorConfig | None = None) -> np.ndarray:
    """Restriction tag per entry of B, validated against the zero pattern."""
    n = spec.n
    zero = impact_zero_pattern(spec)
    tags = np.where(zero, ZERO, FREE).astype(int)
    problems: list[str] = []
    for row, sign in spec.sign_restrictions:
        if not 0 <= row < n or sign not in (1, -1):
            problems.append(f"sign restriction ({row}, {sign}) is out of range")
            continue
        tag = POSITIVE if sign > 0 else NEGATIVE
        if zero[row, 0]:
            problems.append(f"sign restriction on B[{row},0] contradicts its zero restriction")
        elif tags[row, 0] not in (FREE, tag):
            problems.append(f"conflicting sign restrictions on B[{row},0]")
        else:
            tags[row, 0] = tag
    if priors is not None:
        for (i, j), name in priors.impact_tags.items():
            if name not in TAG_CODES:
                problems.append(f"unknown tag {name!r} for B[{i},{j}]")
                continue
            if not (0 <= i < n and 0 <= j < n):
                problems.append(f"tag for B[{i},{j}] is out of range")
                continue
            code = TAG_CODES[name]
            if zero[i, j] and code != ZERO:
                problems.append(f"tag {name!r} on B[{i},{j}] contradicts its zero restriction")
            else:
                tags[i, j] = code
    if np.any(np.diag(tags) == ZERO):
        problems.append("diagonal entries of B cannot be zero-restricted")
    if problems:
        raise InvalidRestriction(problems[0], problems)
    return tags


def impact_prior(spec: ModelSpec, priors: PriorConfig) -> tuple[np.ndarray, np.ndarray]:
    """Prior means and variances for every entry of B (zeros where restricted)."""
    n, r = spec.n, spec.r
    mean = np.full((n, n), priors.impact_mean)
    var = np.full((n, n), priors.impact_var)
    for q in range(spec.instrument_count):
        mean[r + q, 0], var[r + q, 0] = priors.proxy_mean1, priors.proxy_var1
        mean[r + q, r + q], var[r + q, r + q] = priors.proxy_mean2, priors.proxy_var2
    zero = impact_zero_pattern(spec)
    mean[zero] = 0.0
    return mean, var


def lag_free_mask(spec: ModelSpec) -> np.ndarray:
    """Free entries of each A_l: only the Gamma block, instrument lags are excluded."""
    n, r = spec.n, spec.r
    mask = np.zeros((n, n), dtype=bool)
    mask[:r, :r] = True
    return mask


def minnesota_prior_mean(spec: ModelSpec) -> np.ndarray:
    """Prior means of Gamma_l as ``(L, r, r)``; random walk for z, zero for the cycles."""
    L, r = spec.var_lag_order, spec.r
    g = np.zeros((L, r, r))
    for i in range(2, r):
        g[0, i, i] = 1.0
    return g


def var_series(spec: ModelSpec, data: DataSet, factors: np.ndarray) -> np.ndarray:
    return np.hstack([factors, data.z, data.m])


def companion(A: np.ndarray) -> np.ndarray:
    """Companion matrix of lag matrices ``A`` shaped ``(L, d, d)``."""
    L, d, _ = A.shape
    F = np.zeros((d * L, d * L))
    F[:d] = np.hstack(list(A))
    if L > 1:
        F[d:, :-d] = np.eye(d * (L - 1))
    return F


def spectral_radius(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(companion(A)))))


# ---------------------------------------------------------------- validation


def validate_spec(spec: ModelSpec, data: DataSet, priors: PriorConfig) -> ValidatedBundle:
    """Check a (spec, data, priors) bundle; raise with every violation listed."""
    found: list[tuple[type, str]] = []
    mc = spec.mcmc
    if mc.total_iterations <= mc.burn_in:
        found.append((InvalidMcmcSettings, "total_iterations must exceed burn_in"))
    if mc.thinning < 1:
        found.append((InvalidMcmcSettings, "thinning must be >= 1"))
    if mc.burn_in < 0:
        found.append((InvalidMcmcSettings, "burn_in must be >= 0"))
    if spec.var_lag_order < 1:
        found.append((InvalidMcmcSettings, "var_lag_order must be >= 1"))
    if spec.factor_lag_order < 0:
        found.append((InvalidMcmcSettings, "factor_lag_order must be >= 0"))
    if not 0 <= spec.policy_rate_index < spec.n_z:
        found.append((DimensionMismatch, "policy_rate_index does not address an element of z"))
    r, L = spec.r, spec.var_lag_order
    if r * (r - 1) * L / 2 - 1 <= 0:
        found.append((NonPositiveShape, "r(r-1)L/2 - 1 must be positive for the kappa_2 draw"))

    T = data.T
    shapes = {
        "x_out": data.x_out.shape,
        "x_inf": data.x_inf.shape,
        "z": data.z.shape,
        "m": data.m.shape,
    }
    if len(data.dates) != T or any(s[0] != T for s in shapes.values()):
        found.append((DimensionMismatch, f"blocks disagree on T: {shapes}, dates {len(data.dates)}"))
    if data.x_out.shape[1] != spec.n_series or data.x_inf.shape[1] != spec.n_series:
        found.append((DimensionMismatch, "country blocks must have n_countries + 1 columns"))
    if data.z.shape[1] != spec.n_z:
        found.append((DimensionMismatch, "z has the wrong number of series"))
    if data.m.shape[1] != spec.instrument_count:
        found.append((DimensionMismatch, "m has the wrong number of instruments"))
    for name in shapes:
        arr = getattr(data, name)
        if not np.all(np.isfinite(arr)):
            found.append((DimensionMismatch, f"{name} contains missing or non-finite cells"))
    if T <= spec.state_lags + 2:
        found.append((DimensionMismatch, "sample too short for the lag orders"))

    variances = {
        "loading_var": priors.loading_var,
        "z_loading_var": priors.z_loading_var,
        "impact_var": priors.impact_var,
        "proxy_var1": priors.proxy_var1,
        "proxy_var2": priors.proxy_var2,
        "constant_var": priors.constant_var,
        "sv_initial_var": priors.sv_initial_var,
        "factor_init_var": priors.factor_init_var,
        "kappa_max": priors.kappa_max,
    }
    for k, v in variances.items():
        if not v > 0:
            found.append((ValidationError, f"{k} must be strictly positive"))

    tags = None
    try:
        tags = impact_tags(spec, priors)
    except InvalidRestriction as exc:
        found.extend((InvalidRestriction, v) for v in exc.violations)

    if found:
        cls = found[0][0]
        raise cls(found[0][1], [msg for _, msg in found])
    return ValidatedBundle(spec, data, priors, tags)


# ---------------------------------------------------------------- initialization


def _first_pc_factor(block: np.ndarray) -> np.ndarray:
    """First principal component of a standardized block, in aggregate units."""
    xs = (block - block.mean(0)) / block.std(0, ddof=1)
    _, _, vt = np.linalg.svd(xs, full_matrices=False)
    score = xs @ vt[0]
    agg = block[:, 0]
    if np.corrcoef(score, agg)[0, 1] < 0:
        score = -score
    X = np.column_stack([np.ones_like(score), score])
    coef, *_ = np.linalg.lstsq(X, agg, rcond=None)
    return X @ coef


def loading_regressors(spec: ModelSpec, factor: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Design matrix ``(T-P, K)`` for one block: factor lags then z lags."""
    P = spec.factor_lag_order
    T = factor.shape[0]
    cols = [factor[P - p: T - p, None] for p in range(P + 1)]
    if spec.include_country_channels:
        cols += [z[P - p: T - p] for p in range(P + 1)]
    return np.hstack(cols)


def pack_loadings(spec: ModelSpec, lam: np.ndarray, lam_z: np.ndarray) -> np.ndarray:
    """(N+1, K) coefficient rows matching :func:`loading_regressors`."""
    parts = [lam]
    if spec.include_country_channels:
        parts.append(lam_z.reshape(lam_z.shape[0], -1))
    return np.hstack(parts)


def unpack_loadings(spec: ModelSpec, coef: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    P1, nz = spec.factor_lag_order + 1, spec.n_z
    lam = coef[:, :P1].copy()
    lam_z = np.zeros((coef.shape[0], P1, nz))
    if spec.include_country_channels:
        lam_z = coef[:, P1:].reshape(coef.shape[0], P1, nz).copy()
    return lam, lam_z


def fitted_common(spec: ModelSpec, state: McmcState, data: DataSet) -> np.ndarray:
    """Fitted values ``(T-P, 2(N+1))`` of the factor equation."""
    out = []
    for j, (lam, lam_z) in enumerate(
        [(state.lambda_out, state.lambda_z_out), (state.lambda_inf, state.lambda_z_inf)]
    ):
        Xr = loading_regressors(spec, state.factors[:, j], data.z)
        out.append(Xr @ pack_loadings(spec, lam, lam_z).T)
    return np.hstack(out)


def factor_residuals(spec: ModelSpec, state: McmcState, data: DataSet) -> np.ndarray:
    P = spec.factor_lag_order
    return data.x[P:] - fitted_common(spec, state, data)


def initial_impact(spec: ModelSpec, tags: np.ndarray) -> np.ndarray:
    """Identity, with sign-tagged entries nudged onto their admissible side."""
    B = np.eye(spec.n)
    for (i, j), t in np.ndenumerate(tags):
        if t == POSITIVE:
            B[i, j] = 1.0 if i == j else 0.1
        elif t == NEGATIVE:
            B[i, j] = -1.0 if i == j else -0.1
    if abs(np.linalg.det(B)) < 1e-8:
        raise InvalidRestriction("sign pattern admits no invertible starting impact matrix")
    return B


def initialize_state(spec: ModelSpec, data: DataSet, priors: PriorConfig, seed: int | None = None
                     ) -> McmcState:
    """Deterministic starting point for the sampler.

    ``seed`` is accepted for interface symmetry; initialization draws no random
    numbers, so equal inputs always give bit-identical states.
    """
    from .svar_sampler import compute_minnesota_scales

    tags = impact_tags(spec, priors)
    x = data.x
    var = x.var(axis=0, ddof=1)
    if np.any(~(var > 0)):
        bad = [int(i) for i in np.flatnonzero(~(var > 0))]
        raise DegenerateData(f"zero-variance country series at columns {bad}")
    f = np.column_stack([_first_pc_factor(data.x_out), _first_pc_factor(data.x_inf)])

    N1, P, T = spec.n_series, spec.factor_lag_order, data.T
    lams = []
    for j, block in enumerate([data.x_out, data.x_inf]):
        Xr = loading_regressors(spec, f[:, j], data.z)
        coef, *_ = np.linalg.lstsq(Xr, block[P:], rcond=None)
        coef = coef.T
        coef[0] = 0.0
        coef[0, 0] = 1.0
        lams.append(unpack_loadings(spec, coef))

    S, Tx = 2 * N1, T - P
    h_level = np.log(var) + 1.0
    n, L = spec.n, spec.var_lag_order
    if priors.minnesota_sigma2 is not None:
        sigma2 = np.asarray(priors.minnesota_sigma2, dtype=float)
    else:
        y = np.hstack([f, data.z])
        sigma2 = compute_minnesota_scales(y, L)
    return McmcState(
        lambda_out=lams[0][0],
        lambda_inf=lams[1][0],
        lambda_z_out=lams[0][1],
        lambda_z_inf=lams[1][1],
        h=np.repeat(h_level[:, None], Tx, axis=1),
        h0=h_level.copy(),
        tau_h=np.ones(S),
        lam_h=np.ones((S, Tx)),
        nu_tau=np.ones(S),
        nu_lam=np.ones((S, Tx)),
        factors=f,
        c=np.zeros(n),
        A=np.zeros((L, n, n)),
        B=initial_impact(spec, tags),
        kappa1=1.0,
        kappa2=1.0,
        sigma2=sigma2,
        f0_mean=f[: spec.state_lags].copy(),
    )


# ---------------------------------------------------------------- synthetic data


@dataclass
class Truth:
    params: McmcState
    factors: np.ndarray
    h: np.ndarray
    shocks: np.ndarray
    y: np.ndarray

    @property
    def reliability(self) -> float:
        r = self.params.c.shape[0] - 1
        p1, p2 = self.params.B[r, 0], self.params.B[r, r]
        return p1**2 / (p1**2 + p2**2)


def default_true_params(spec: ModelSpec, T: int, seed: int = 0, *, sv_scale: float = 0.05,
                        h_level: float = np.log(0.25), phi01: float = 0.5, phi02: float = 0.05
                        ) -> McmcState:
    """A stationary, sign-consistent parameter set for recovery experiments."""
    rng = np.random.default_rng(seed)
    n, r, L, N1 = spec.n, spec.r, spec.var_lag_order, spec.n_series
    P1, nz = spec.factor_lag_order + 1, spec.n_z
    A = np.zeros((L, n, n))
    A[0, :r, :r] = np.diag(np.full(r, 0.5)) + 0.05 * rng.standard_normal((r, r))
    if L > 1:
        A[1, :r, :r] = np.diag(np.full(r, 0.15))
    if spectral_radius(A[:, :r, :r]) >= 0.95:
        A *= 0.9 / spectral_radius(A[:, :r, :r])

    B = np.zeros((n, n))
    B[:r, :r] = 0.2 * rng.standard_normal((r, r))
    np.fill_diagonal(B[:r, :r], 1.0)
    B[2 + spec.policy_rate_index, 0] = 0.6
    B[1, 0] = -0.4
    B[0, 0] = 0.8
    for q in range(spec.instrument_count):
        B[r + q, 0] = phi01
        B[r + q, r + q] = phi02

    lam = np.zeros((N1, P1))
    lam[:, 0] = np.concatenate([[1.0], np.linspace(0.6, 1.4, N1 - 1)]) if N1 > 1 else [1.0]
    lam_inf = lam.copy()
    lam_inf[1:, 0] = lam_inf[1:, 0][::-1]
    lam_z = np.zeros((N1, P1, nz))
    lam_z_inf = np.zeros((N1, P1, nz))
    if spec.include_country_channels:
        lam_z[1:, 0] = 0.3 * rng.standard_normal((N1 - 1, nz))
        lam_z_inf[1:, 0] = 0.3 * rng.standard_normal((N1 - 1, nz))

    S, Tx = 2 * N1, T - spec.factor_lag_order
    steps = sv_scale * rng.standard_normal((S, Tx))
    h = h_level + np.cumsum(steps, axis=1)
    return McmcState(
        lambda_out=lam, lambda_inf=lam_inf, lambda_z_out=lam_z, lambda_z_inf=lam_z_inf,
        h=h, h0=np.full(S, h_level), tau_h=np.full(S, sv_scale**2), lam_h=np.ones((S, Tx)),
        nu_tau=np.ones(S), nu_lam=np.ones((S, Tx)), factors=np.zeros((T, 2)),
        c=np.zeros(n), A=A, B=B, kappa1=1.0, kappa2=1.0, sigma2=np.ones(r),
        f0_mean=np.zeros((spec.state_lags, 2)),
    )


def simulate_dgp(spec: ModelSpec, true_params: McmcState, T: int, seed: int, *,
                 burn: int = 200, standardize: bool = True, start: str = "2003-01"
                 ) -> tuple[DataSet, Truth]:
    """Simulate the FAVAR with stochastic volatility and the proxy equation."""
    n, r, L = spec.n, spec.r, spec.var_lag_order
    A, B, c = true_params.A, true_params.B, true_params.c
    if A.shape != (L, n, n) or B.shape != (n, n):
        raise DimensionMismatch("true parameters do not match the spec dimensions")
    if spectral_radius(A[:, :r, :r]) >= 1.0:
        raise ExplosiveVar("companion matrix of Gamma has spectral radius >= 1")
    P, N1 = spec.factor_lag_order, spec.n_series
    Tx = T - P
    if true_params.h.shape != (2 * N1, Tx):
        raise DimensionMismatch(f"h must be shaped {(2 * N1, Tx)}")

    rng = np.random.default_rng(seed)
    total = T + burn
    eps = rng.standard_normal((total, n))
    y = np.zeros((total + L, n))
    for t in range(total):
        mu = c.copy()
        for l in range(L):
            mu += A[l] @ y[L + t - 1 - l]
        y[L + t] = mu + B @ eps[t]
    y = y[L:]
    f_all, z_all = y[:, :2], y[:, 2:r]

    e = rng.standard_normal((T, 2 * N1))
    x = np.zeros((T, 2 * N1))
    h_full = np.hstack([np.repeat(true_params.h[:, :1], P, axis=1), true_params.h])
    blocks = [(true_params.lambda_out, true_params.lambda_z_out),
              (true_params.lambda_inf, true_params.lambda_z_inf)]
    for j, (lam, lam_z) in enumerate(blocks):
        cols = slice(j * N1, (j + 1) * N1)
        for p in range(P + 1):
            x[:, cols] += f_all[burn - p: burn - p + T, j, None] * lam[:, p]
            x[:, cols] += z_all[burn - p: burn - p + T] @ lam_z[:, p].T
        x[:, cols] += np.exp(h_full[cols].T / 2) * e[:, cols]

    keep = slice(burn, burn + T)
    dates = np.arange(np.datetime64(start, "M"), np.datetime64(start, "M") + T)
    data = DataSet.from_raw(
        dates, x[:, :N1], x[:, N1:], z_all[keep], y[keep, r:],
        z_names=spec.var_names_z, standardize=standardize,
    )
    params = true_params.copy()
    params.factors = f_all[keep].copy()
    truth = Truth(params=params, factors=f_all[keep].copy(), h=true_params.h.copy(),
                  shocks=eps[keep].copy(), y=y[keep].copy())
    return data, truth


# ---------------------------------------------------------------- likelihood


def log_likelihood(spec: ModelSpec, data: DataSet, state: McmcState) -> float:
    """Complete-data log density of the panel and the VAR given all parameters and latents."""
    resid = factor_residuals(spec, state, data)
    hT = state.h.T
    ll = -0.5 * np.sum(np.log(2 * np.pi) + hT + resid**2 * np.exp(-hT))

    p = spec.state_lags
    Y = var_series(spec, data, state.factors)
    X = lagged_design(Y, spec.var_lag_order, start=p)
    U = Y[p:] - X @ state.stacked_A()
    Binv_U = np.linalg.solve(state.B, U.T)
    _, logdet = np.linalg.slogdet(state.B)
    Tv = U.shape[0]
    ll += -0.5 * Tv * spec.n * np.log(2 * np.pi) - Tv * logdet - 0.5 * np.sum(Binv_U**2)
    return float(ll)


def lagged_design(Y: np.ndarray, L: int, start: int | None = None) -> np.ndarray:
    """Rows ``(1, y_{t-1}', ..., y_{t-L}')`` for t = start..T-1."""
    start = L if start is None else start
    T = Y.shape[0]
    cols = [np.ones((T - start, 1))] + [Y[start - l: T - l] for l in range(1, L + 1)]
    return np.hstack(cols)


def as_jsonable(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj
