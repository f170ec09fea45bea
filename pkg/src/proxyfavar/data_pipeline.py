"""Raw-series transformations feeding the monthly panel."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import (
    CoverageGap,
    EmptyMonth,
    NonPositiveLevel,
    SeriesTooShort,
    SingularRegression,
    ValidationError,
    ZeroVariance,
)

_FREQ_UNIT = {"daily": "D", "monthly": "M", "quarterly": "M"}


@dataclass
class RawSeries:
    frequency: str
    dates: np.ndarray
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        if self.frequency not in _FREQ_UNIT:
            raise ValidationError(f"unknown frequency {self.frequency!r}")
        self.dates = np.asarray(self.dates, dtype=f"datetime64[{_FREQ_UNIT[self.frequency]}]")
        self.values = np.asarray(self.values, dtype=float)
        if self.dates.shape != self.values.shape:
            raise ValidationError("dates and values differ in length")
        if self.dates.size > 1:
            step = np.diff(self.dates).astype(int)
            if np.any(step <= 0):
                raise ValidationError(f"{self.name}: dates must be strictly increasing")
            if self.frequency == "monthly" and np.any(step != 1):
                raise ValidationError(f"{self.name}: monthly dates must be consecutive")
            if self.frequency == "quarterly":
                if np.any(step != 3):
                    raise ValidationError(f"{self.name}: quarterly dates must be 3 months apart")
                if np.any(self.dates.astype(int) % 3 != 0):
                    raise ValidationError(f"{self.name}: quarterly dates must be quarter starts")


@dataclass
class OutlierReport:
    name: str
    entries: list[tuple[np.datetime64, float, float, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)


# ---------------------------------------------------------------- temporal disaggregation


def _ar1_cov(n: int, rho: float) -> np.ndarray:
    return linalg.toeplitz(rho ** np.arange(n)) / (1.0 - rho**2)


def _aggregate(M: np.ndarray, w: float) -> np.ndarray:
    """Apply the quarterly aggregation matrix to the rows of ``M``."""
    return w * M.reshape(M.shape[0] // 3, 3, *M.shape[1:]).sum(axis=1)


def _chow_lin_fit(X, w, Y, rho, *, fitted=True):
    CS = _aggregate(_ar1_cov(X.shape[0], rho), w)
    W = _aggregate(CS.T, w)
    cW = linalg.cho_factor(W)
    CX = _aggregate(X, w)
    G = CX.T @ linalg.cho_solve(cW, CX)
    beta = np.linalg.solve(G, CX.T @ linalg.cho_solve(cW, Y))
    u = Y - CX @ beta
    Wu = linalg.cho_solve(cW, u)
    q = Y.shape[0]
    s2 = float(u @ Wu) / q
    logdet = 2.0 * np.sum(np.log(np.diag(cW[0])))
    loglik = -0.5 * q * np.log(max(s2, 1e-300)) - 0.5 * logdet
    yhat = X @ beta + CS.T @ Wu if fitted else None
    return yhat, beta, loglik


def chow_lin_interpolate(quarterly: RawSeries, indicators: list[RawSeries], *,
                         rho: float | None = None, aggregation: str = "average",
                         grid_size: int = 199) -> RawSeries:
    """GLS temporal disaggregation with AR(1) residuals.

    Quarterly dates are the first month of each quarter. The indicators enter
    jointly alongside an intercept, which also absorbs flat indicators. ``rho``
    is chosen by maximum likelihood over a grid on (-0.99, 0.99) unless fixed
    by the caller.
    """
    if not indicators:
        raise ValidationError("at least one indicator is required")
    if aggregation not in ("average", "sum"):
        raise ValidationError("aggregation must be 'average' or 'sum'")
    q0 = quarterly.dates[0]
    months = np.arange(q0, quarterly.dates[-1] + 3)
    cols = [np.ones(months.size)]
    for ind in indicators:
        pos = np.searchsorted(ind.dates, months)
        ok = (pos < ind.dates.size) & (ind.dates[np.minimum(pos, ind.dates.size - 1)] == months)
        if not np.all(ok):
            raise CoverageGap(f"indicator {ind.name!r} does not cover {months[~ok][0]}")
        vals = ind.values[pos]
        # a flat indicator carries nothing beyond the intercept
        if np.ptp(vals) > 0:
            cols.append(vals)
    X = np.column_stack(cols)
    w = 1.0 / 3.0 if aggregation == "average" else 1.0
    if np.linalg.matrix_rank(_aggregate(X, w)) < X.shape[1]:
        raise SingularRegression("indicators are collinear at quarterly frequency")
    Y = quarterly.values

    if rho is None:
        grid = np.linspace(-0.99, 0.99, grid_size)
        ll = [_chow_lin_fit(X, w, Y, r, fitted=False)[2] for r in grid]
        rho = grid[int(np.argmax(ll))]
    elif not -1.0 < rho < 1.0:
        raise ValidationError("rho must lie in (-1, 1)")
    yhat = _chow_lin_fit(X, w, Y, rho)[0]
    return RawSeries("monthly", months, yhat, quarterly.name)


# ---------------------------------------------------------------- outliers


def _fit_ar(x: np.ndarray, max_order: int):
    """AR(p) with intercept, p chosen by AIC on a common estimation sample."""
    T = x.size
    start = max_order
    best = None
    for p in range(1, max_order + 1):
        Xr = np.column_stack([np.ones(T - start)] + [x[start - j: T - j] for j in range(1, p + 1)])
        coef, *_ = np.linalg.lstsq(Xr, x[start:], rcond=None)
        ssr = np.sum((x[start:] - Xr @ coef) ** 2)
        aic = (T - start) * np.log(max(ssr, 1e-300) / (T - start)) + 2 * (p + 1)
        if best is None or aic < best[0] - 1e-12:
            best = (aic, p)
    p = best[1]
    Xr = np.column_stack([np.ones(T - p)] + [x[p - j: T - j] for j in range(1, p + 1)])
    coef, *_ = np.linalg.lstsq(Xr, x[p:], rcond=None)
    resid = np.full(T, np.nan)
    resid[p:] = x[p:] - Xr @ coef
    return coef[1:], resid


def _ao_statistics(x: np.ndarray, max_order: int):
    phi, resid = _fit_ar(x, max_order)
    p = phi.size
    pi = np.concatenate([[1.0], -phi])
    e = resid[p:]
    sigma = 1.483 * np.median(np.abs(e - np.median(e)))
    T = x.size
    omega = np.zeros(T)
    tau = np.zeros(T)
    if sigma <= 0:
        return omega, tau
    for t in range(T):
        j = np.arange(max(0, p - t), min(p, T - 1 - t) + 1)
        if j.size == 0:
            continue
        w = pi[j]
        ss = np.sum(w**2)
        omega[t] = np.sum(w * resid[t + j]) / ss
        tau[t] = omega[t] * np.sqrt(ss) / sigma
    return omega, tau


def adjust_additive_outliers(series: RawSeries, critical_value: float = 3.5, *,
                             max_order: int = 12) -> tuple[RawSeries, OutlierReport]:
    """Iterative detect-and-replace of additive outliers against an AR model."""
    if series.values.size < 36:
        raise SeriesTooShort(f"{series.name}: at least 36 observations are required")
    x = series.values.copy()
    report = OutlierReport(series.name)
    originals: dict[int, float] = {}
    stats: dict[int, float] = {}
    if np.isfinite(critical_value):
        for _ in range(x.size):
            omega, tau = _ao_statistics(x, max_order)
            k = int(np.argmax(np.abs(tau)))
            if not abs(tau[k]) > critical_value:
                break
            originals.setdefault(k, series.values[k])
            stats[k] = float(tau[k])
            x[k] = x[k] - omega[k]
    for k in sorted(originals):
        report.entries.append((series.dates[k], float(originals[k]), float(x[k]), stats[k]))
    return RawSeries(series.frequency, series.dates.copy(), x, series.name), report


# ---------------------------------------------------------------- growth and scaling


def annual_growth(series: RawSeries, method: str = "standard") -> RawSeries:
    x = series.values
    now, then = x[12:], x[:-12]
    if method in ("log", "symmetric") and np.any(x <= 0):
        raise NonPositiveLevel(f"{series.name}: {method} growth needs strictly positive levels")
    if method == "standard":
        g = 100.0 * (now / then - 1.0)
    elif method == "log":
        g = 100.0 * (np.log(now) - np.log(then))
    elif method == "symmetric":
        g = 100.0 * (now - then) / (0.5 * (now + then))
    else:
        raise ValidationError(f"unknown growth method {method!r}")
    return RawSeries(series.frequency, series.dates[12:], g, series.name)


def standardize_z(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Zero mean and unit sample standard deviation per column."""
    z = np.asarray(z, dtype=float)
    squeeze = z.ndim == 1
    z2 = z[:, None] if squeeze else z
    mean = z2.mean(axis=0)
    std = z2.std(axis=0, ddof=1)
    if np.any(~(std > 0)):
        raise ZeroVariance("every series needs positive variance")
    out = (z2 - mean) / std
    return (out[:, 0] if squeeze else out), mean, std


def destandardize_z(zs: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return np.asarray(zs) * std + mean


def aggregate_to_monthly(series: RawSeries, rule: str = "mean") -> RawSeries:
    if rule not in ("mean", "sum", "end_of_month"):
        raise ValidationError(f"unknown aggregation rule {rule!r}")
    if series.values.size == 0:
        raise EmptyMonth("no observations")
    month = series.dates.astype("datetime64[M]")
    months = np.arange(month[0], month[-1] + 1)
    idx = (month - months[0]).astype(int)
    counts = np.bincount(idx, minlength=months.size)
    if np.any(counts == 0):
        raise EmptyMonth(f"{series.name}: no observations in {months[counts == 0][0]}")
    if rule == "end_of_month":
        last = np.searchsorted(idx, np.arange(months.size), side="right") - 1
        vals = series.values[last]
    else:
        vals = np.bincount(idx, weights=series.values, minlength=months.size)
        if rule == "mean":
            vals = vals / counts
    return RawSeries("monthly", months, vals, series.name)
