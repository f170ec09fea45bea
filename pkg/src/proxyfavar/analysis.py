"""Impulse responses and the cross-country analytics built on them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (
    DimensionMismatch,
    DrawMismatch,
    EmptyDraws,
    InsufficientCountries,
    PerfectCollinearity,
    ZeroBenchmark,
    ZeroImpact,
)
from .model import ModelSpec, PosteriorDraws

BANDS = (0.16, 0.5, 0.84)


@dataclass
class IrfSet:
    """Responses shaped (draw, variable, horizon) for the endogenous VAR block."""

    responses: np.ndarray
    variables: list[str]
    draw_index: np.ndarray
    policy_index: int
    target: float
    scale: np.ndarray  # per-draw multiplier applied to the raw impact column
    z_std: np.ndarray
    destandardized: bool = True

    @property
    def horizons(self) -> np.ndarray:
        return np.arange(self.responses.shape[2])

    def standardized_z(self) -> np.ndarray:
        """z responses in the units of the standardized series."""
        z = self.responses[:, 2:]
        return z / self.z_std[None, :, None] if self.destandardized else z


def impulse_path(Gamma: np.ndarray, impact: np.ndarray, H: int) -> np.ndarray:
    """Responses (variable, 0..H) of a VAR with lag matrices ``Gamma`` (L, r, r)."""
    L, r, _ = Gamma.shape
    out = np.zeros((r, H + 1))
    out[:, 0] = impact
    for h in range(1, H + 1):
        acc = np.zeros(r)
        for l in range(1, min(L, h) + 1):
            acc += Gamma[l - 1] @ out[:, h - l]
        out[:, h] = acc
    return out


def compute_irfs(draws: PosteriorDraws, spec: ModelSpec, H: int = 36, shock_index: int = 0, *,
                 z_std: np.ndarray | None = None, target: float = -0.25) -> IrfSet:
    """Normalized responses to the shock in column ``shock_index`` of B."""
    if draws is None or len(draws) == 0:
        raise EmptyDraws("no retained draws")
    r = spec.r
    z_std = np.ones(spec.n_z) if z_std is None else np.asarray(z_std, dtype=float)
    unit = np.concatenate([[1.0, 1.0], z_std])
    pol = spec.policy_rate_y_index
    D = len(draws)
    resp = np.empty((D, r, H + 1))
    scale = np.empty(D)
    A, B = draws["A"], draws["B"]
    for k in range(D):
        path = impulse_path(A[k][:, :r, :r], B[k][:r, shock_index], H) * unit[:, None]
        base = path[pol, 0]
        if base == 0 or not np.isfinite(base):
            raise ZeroImpact(f"policy-rate impact is zero in draw {draws.draw_index[k]}")
        scale[k] = target / base
        # dividing first makes the pinned entry exactly ``target``
        resp[k] = path / base * target
    names = ["f_out", "f_inf", *spec.var_names_z]
    return IrfSet(resp, names, np.asarray(draws.draw_index).copy(), pol, target, scale, z_std)


@dataclass
class CountryIrf:
    """Per-country responses shaped (draw, block, country, horizon); block 0 is output."""

    total: np.ndarray
    common: np.ndarray
    channel: np.ndarray
    countries: list[str]


def _lagged(path: np.ndarray, lag: int) -> np.ndarray:
    if lag == 0:
        return path
    out = np.zeros_like(path)
    out[..., lag:] = path[..., :-lag]
    return out


def decompose_country_responses(irf: IrfSet, draws: PosteriorDraws,
                                countries: list[str] | None = None) -> CountryIrf:
    """Split each country's response into common-cycle and country-channel parts."""
    if len(draws) != irf.responses.shape[0] or not np.array_equal(irf.draw_index, draws.draw_index):
        raise DrawMismatch("IRF draws and loading draws are not aligned")
    fresp = irf.responses[:, :2]
    zresp = irf.standardized_z()
    common, channel = [], []
    for j, (ln, lz) in enumerate([("lambda_out", "lambda_z_out"), ("lambda_inf", "lambda_z_inf")]):
        lam = draws[ln]  # (D, N+1, P+1)
        lamz = draws[lz]  # (D, N+1, P+1, nz)
        c = np.zeros((lam.shape[0], lam.shape[1], fresp.shape[2]))
        ch = np.zeros_like(c)
        for p in range(lam.shape[2]):
            c += lam[:, :, p, None] * _lagged(fresp[:, j], p)[:, None, :]
            ch += np.einsum("dnq,dqh->dnh", lamz[:, :, p], _lagged(zresp, p))
        common.append(c)
        channel.append(ch)
    common = np.stack(common, axis=1)
    channel = np.stack(channel, axis=1)
    names = countries or ["EA19"] + [f"C{i}" for i in range(1, common.shape[2])]
    return CountryIrf(common + channel, common, channel, list(names))


def summarize(values, quantiles=BANDS, axis: int = 0) -> dict:
    """Pointwise quantiles across draws (linear interpolation)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyDraws("nothing to summarize")
    return {q: np.quantile(values, q, axis=axis) for q in quantiles}


def coefficient_of_variation(responses, benchmark: str = "country_mean", ea19=None,
                             quantiles=BANDS) -> dict:
    """Cross-country dispersion over a benchmark response, per draw and horizon.

    ``responses`` is (draw, country, horizon) without the aggregate; with the
    ``ea19`` benchmark the aggregate's (draw, horizon) responses are required.
    """
    R = np.asarray(responses, dtype=float)
    if R.ndim == 2:
        R = R[None]
    if R.shape[1] < 2:
        raise InsufficientCountries("at least two countries are required")
    if benchmark == "country_mean":
        bench = R.mean(axis=1)
    elif benchmark == "ea19":
        if ea19 is None:
            raise DimensionMismatch("ea19 benchmark needs the aggregate responses")
        bench = np.asarray(ea19, dtype=float).reshape(R.shape[0], R.shape[2])
    else:
        raise ValueError(f"unknown benchmark {benchmark!r}")
    if np.any(bench == 0):
        raise ZeroBenchmark("benchmark response is zero")
    cov = R.std(axis=1, ddof=1) / np.abs(bench)
    out = summarize(cov, quantiles)
    out["draws"] = cov
    return out


def exposure_fit(x, loading_draws, factor_draws):
    """Median-over-draws common component and its R-squared against ``x``.

    Loadings are (draw,) or (draw, P+1); factors are (draw, T) and the fitted
    path covers the last ``T - P`` periods.
    """
    x = np.asarray(x, dtype=float)
    lam = np.asarray(loading_draws, dtype=float)
    f = np.asarray(factor_draws, dtype=float)
    if lam.ndim == 1:
        lam = lam[:, None]
    P = lam.shape[1] - 1
    T = f.shape[1]
    if lam.shape[0] != f.shape[0] or x.size not in (T, T - P):
        raise DimensionMismatch("series, loading draws and factor draws are misaligned")
    comp = sum(lam[:, p, None] * f[:, P - p: T - p] for p in range(P + 1))
    fitted = np.median(comp, axis=0)
    xa = x[-fitted.size:]
    ssr = np.sum((xa - fitted) ** 2)
    sst = np.sum((xa - xa.mean()) ** 2)
    return fitted, float(1.0 - ssr / sst)


def peak_response(paths) -> np.ndarray:
    """Maximum of the posterior-median path; ``paths`` is (draw, ..., horizon)."""
    return np.max(np.median(np.asarray(paths, dtype=float), axis=0), axis=-1)


def _stars(p: float) -> str:
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.1 else ""


def _t_pvalue(r: float, df: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t = r * np.sqrt(df / (1.0 - r * r))
    return float(2.0 * stats.t.sf(abs(t), df))


def semi_partial(r_xy: float, r_yz: float, r_xz: float) -> float:
    if abs(r_xz) >= 1.0:
        raise PerfectCollinearity("control and channel peaks are perfectly correlated")
    return (r_xy - r_yz * r_xz) / np.sqrt(1.0 - r_xz**2)


def correlation_table(channel_peaks, common_peaks, characteristics: dict) -> list[dict]:
    """Pearson and semi-partial correlations of peaks with country characteristics.

    The semi-partial coefficient relates the country-channel peaks to each
    characteristic after removing the common-cycle peaks from the former.
    """
    x = np.asarray(channel_peaks, dtype=float)
    z = np.asarray(common_peaks, dtype=float)
    n = x.size
    if n < 4 or z.size != n:
        raise InsufficientCountries("at least four countries with complete data are required")
    r_xz = float(np.corrcoef(x, z)[0, 1])
    rows = []
    for name, vals in characteristics.items():
        y = np.asarray(vals, dtype=float)
        if y.size != n or not np.all(np.isfinite(y)):
            raise InsufficientCountries(f"characteristic {name!r} is incomplete")
        r_xy = float(np.corrcoef(x, y)[0, 1])
        r_zy = float(np.corrcoef(z, y)[0, 1])
        sp = semi_partial(r_xy, r_zy, r_xz)
        p_x, p_z, p_sp = _t_pvalue(r_xy, n - 2), _t_pvalue(r_zy, n - 2), _t_pvalue(sp, n - 3)
        rows.append({
            "characteristic": name,
            "r_channel": r_xy, "p_channel": p_x, "stars_channel": _stars(p_x),
            "r_common": r_zy, "p_common": p_z, "stars_common": _stars(p_z),
            "semi_partial": sp, "p_semi_partial": p_sp, "stars_semi_partial": _stars(p_sp),
        })
    return rows


def reliability_draws(draws: PosteriorDraws, spec: ModelSpec) -> np.ndarray:
    from .instrument import reliability_indicator

    r = spec.r
    B = draws["B"]
    return np.asarray(reliability_indicator(B[:, r, 0], B[:, r, r]))
