"""Exact sampling from normal laws under box constraints.

The multivariate sampler uses minimax exponential tilting (Botev, 2017): a
separable tilted importance density whose tilting parameters solve a small
nonlinear system, used as an accept-reject proposal.
"""
from __future__ import annotations

import numpy as np
from scipy import optimize, special

from .errors import StuckRegion

_SQRT2 = np.sqrt(2.0)
_EPS = 1e-10


def log_phi_tail(x):
    """log P(Z > x) for standard normal Z, stable in the far tail."""
    return -0.5 * x**2 - np.log(2.0) + np.log(special.erfcx(x / _SQRT2))


def log_normal_prob(a, b):
    """log P(a < Z < b) for standard normal Z, accurate for any a < b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    p = np.zeros(a.shape)
    up = a > 0
    if np.any(up):
        pa, pb = log_phi_tail(a[up]), log_phi_tail(b[up])
        p[up] = pa + np.log1p(-np.exp(pb - pa))
    lo = b < 0
    if np.any(lo):
        pa, pb = log_phi_tail(-a[lo]), log_phi_tail(-b[lo])
        p[lo] = pb + np.log1p(-np.exp(pa - pb))
    mid = ~(up | lo)
    if np.any(mid):
        pa = special.erfc(-a[mid] / _SQRT2) / 2
        pb = special.erfc(b[mid] / _SQRT2) / 2
        p[mid] = np.log1p(-pa - pb)
    return p


def _tail(lb, ub, rng):
    """Standard normal on [lb, ub] with lb > 0, by Rayleigh rejection."""
    c = lb**2 / 2
    f = np.expm1(c - ub**2 / 2)
    x = c - np.log1p(rng.random(lb.size) * f)
    bad = np.flatnonzero(rng.random(lb.size) ** 2 * x > c)
    while bad.size:
        y = c[bad] - np.log1p(rng.random(bad.size) * f[bad])
        ok = rng.random(bad.size) ** 2 * y < c[bad]
        x[bad[ok]] = y[ok]
        bad = bad[~ok]
    return np.sqrt(2 * x)


def _central(lb, ub, rng, tol=2.0):
    x = np.empty(lb.size)
    wide = np.abs(ub - lb) > tol
    if np.any(wide):
        idx = np.flatnonzero(wide)
        y = rng.standard_normal(idx.size)
        bad = np.flatnonzero((y < lb[idx]) | (y > ub[idx]))
        while bad.size:
            yy = rng.standard_normal(bad.size)
            ok = (yy > lb[idx[bad]]) & (yy < ub[idx[bad]])
            y[bad[ok]] = yy[ok]
            bad = bad[~ok]
        x[idx] = y
    narrow = ~wide
    if np.any(narrow):
        pl = special.erfc(lb[narrow] / _SQRT2) / 2
        pu = special.erfc(ub[narrow] / _SQRT2) / 2
        u = rng.random(int(narrow.sum()))
        x[narrow] = _SQRT2 * special.erfcinv(2 * (pl - (pl - pu) * u))
    return x


def truncated_standard_normal(lb, ub, rng: np.random.Generator) -> np.ndarray:
    """Independent draws of Z ~ N(0, 1) conditioned on lb < Z < ub (elementwise)."""
    lb = np.atleast_1d(np.asarray(lb, dtype=float)).copy()
    ub = np.atleast_1d(np.asarray(ub, dtype=float)).copy()
    lb, ub = np.broadcast_arrays(lb, ub)
    x = np.empty(lb.shape)
    a = 0.66
    right = lb > a
    if np.any(right):
        x[right] = _tail(lb[right], ub[right], rng)
    left = ub < -a
    if np.any(left):
        x[left] = -_tail(-ub[left], -lb[left], rng)
    mid = ~(right | left)
    if np.any(mid):
        x[mid] = _central(lb[mid], ub[mid], rng)
    return x


def truncated_normal(mean, sd, lb, ub, rng: np.random.Generator) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    return mean + sd * truncated_standard_normal((lb - mean) / sd, (ub - mean) / sd, rng)


class TiltedTruncatedMVN:
    """N(mu, cov) restricted to lb < x < ub, sampled exactly by minimax tilting."""

    def __init__(self, mu, cov, lb, ub):
        self.mu = np.asarray(mu, dtype=float)
        self.cov = np.array(cov, dtype=float)
        self.d = self.mu.size
        self.lb0 = np.asarray(lb, dtype=float) - self.mu
        self.ub0 = np.asarray(ub, dtype=float) - self.mu
        if np.any(self.ub0 <= self.lb0):
            raise ValueError("upper bounds must exceed lower bounds")
        self._prepare()

    def _prepare(self):
        Lfull, perm, lb, ub = self._permuted_cholesky()
        D = np.diag(Lfull).copy()
        self.Lfull, self.perm = Lfull, perm
        self.lb = lb / D
        self.ub = ub / D
        self.L = Lfull / D[:, None] - np.eye(self.d)
        d = self.d
        if d == 1:
            self.x_opt = np.zeros(0)
            self.m_opt = np.zeros(0)
        else:
            sol = optimize.root(self._grad, np.zeros(2 * (d - 1)), method="hybr", jac=True)
            self.x_opt = sol.x[: d - 1]
            self.m_opt = sol.x[d - 1:]
        self.psi_star = self._psi(self.x_opt, self.m_opt)

    def _permuted_cholesky(self):
        d = self.d
        cov = self.cov.copy()
        lb, ub = self.lb0.copy(), self.ub0.copy()
        L = np.zeros((d, d))
        z = np.zeros(d)
        perm = np.arange(d)
        for j in range(d):
            pr = np.full(d, np.inf)
            rest = np.arange(j, d)
            s = np.diag(cov)[rest] - np.sum(L[rest, :j] ** 2, axis=1)
            s = np.sqrt(np.maximum(s, _EPS))
            shift = L[rest, :j] @ z[:j]
            pr[rest] = log_normal_prob((lb[rest] - shift) / s, (ub[rest] - shift) / s)
            k = int(np.argmin(pr))
            jk, kj = [j, k], [k, j]
            cov[jk, :] = cov[kj, :]
            cov[:, jk] = cov[:, kj]
            L[jk, :] = L[kj, :]
            lb[jk] = lb[kj]
            ub[jk] = ub[kj]
            perm[jk] = perm[kj]
            s = cov[j, j] - np.sum(L[j, :j] ** 2)
            if s < -0.01:
                raise np.linalg.LinAlgError("covariance is not positive semi-definite")
            L[j, j] = np.sqrt(max(s, _EPS))
            L[j + 1:, j] = (cov[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
            tl = (lb[j] - L[j, :j] @ z[:j]) / L[j, j]
            tu = (ub[j] - L[j, :j] @ z[:j]) / L[j, j]
            w = log_normal_prob(tl, tu)
            z[j] = (np.exp(-0.5 * tl**2 - w) - np.exp(-0.5 * tu**2 - w)) / np.sqrt(2 * np.pi)
        return L, perm, lb, ub

    def _psi(self, x, m):
        x = np.append(x, 0.0)
        m = np.append(m, 0.0)
        c = self.L @ x
        return float(np.sum(log_normal_prob(self.lb - m - c, self.ub - m - c) + 0.5 * m**2 - x * m))

    def _grad(self, y):
        d, L = self.d, self.L
        x = np.zeros(d)
        m = np.zeros(d)
        x[: d - 1] = y[: d - 1]
        m[: d - 1] = y[d - 1:]
        c = np.zeros(d)
        c[1:] = L[1:] @ x
        lt = self.lb - m - c
        ut = self.ub - m - c
        w = log_normal_prob(lt, ut)
        pl = np.exp(-0.5 * lt**2 - w) / np.sqrt(2 * np.pi)
        pu = np.exp(-0.5 * ut**2 - w) / np.sqrt(2 * np.pi)
        P = pl - pu
        dfdx = -m[: d - 1] + (P @ L[:, : d - 1])
        dfdm = m - x + P
        grad = np.concatenate([dfdx, dfdm[:-1]])
        lt = np.where(np.isinf(lt), 0.0, lt)
        ut = np.where(np.isinf(ut), 0.0, ut)
        dP = -P**2 + lt * pl - ut * pu
        DL = dP[:, None] * L
        mx = (DL - np.eye(d))[:-1, :-1]
        xx = (L.T @ DL)[:-1, :-1]
        J = np.block([[xx, mx.T], [mx, np.diag(1 + dP[:-1])]])
        return grad, J

    def _propose(self, n, rng):
        m = np.append(self.m_opt, 0.0)
        Z = np.zeros((self.d, n))
        logpr = np.zeros(n)
        for k in range(self.d):
            col = self.L[k, :k] @ Z[:k]
            tl = self.lb[k] - m[k] - col
            tu = self.ub[k] - m[k] - col
            Z[k] = m[k] + truncated_standard_normal(tl, tu, rng)
            logpr += log_normal_prob(tl, tu) + 0.5 * m[k] ** 2 - m[k] * Z[k]
        return logpr, Z

    def sample(self, n: int, rng: np.random.Generator, max_rounds: int = 10_000) -> np.ndarray:
        """``n`` exact draws, shaped (n, d)."""
        kept: list[np.ndarray] = []
        got = 0
        for _ in range(max_rounds):
            logpr, Z = self._propose(n, rng)
            ok = -np.log(rng.random(n)) > self.psi_star - logpr
            if np.any(ok):
                kept.append(Z[:, ok])
                got += int(ok.sum())
            if got >= n:
                break
        else:
            raise StuckRegion("truncated normal acceptance collapsed")
        Z = np.hstack(kept)[:, :n]
        X = self.Lfull @ Z
        X = X[np.argsort(self.perm)]
        return (X + self.mu[:, None]).T


def psd_factor(cov: np.ndarray) -> np.ndarray:
    """A square root of a covariance, tolerating round-off semi-definiteness."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(cov)
        return V * np.sqrt(np.clip(w, 0.0, None))


def sample_box_truncated_mvn(mean, prec, lb, ub, rng: np.random.Generator,
                             cov: np.ndarray | None = None) -> np.ndarray:
    """One draw of N(mean, prec^{-1}) restricted to the box [lb, ub].

    Only coordinates with a finite bound go through the tilting sampler; the
    remaining ones are drawn from their Gaussian conditional.
    """
    mean = np.asarray(mean, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if cov is None:
        cov = np.linalg.inv(prec)
        cov = 0.5 * (cov + cov.T)
    con = np.flatnonzero(np.isfinite(lb) | np.isfinite(ub))
    if con.size == 0:
        return mean + psd_factor(cov) @ rng.standard_normal(mean.size)
    free = np.setdiff1d(np.arange(mean.size), con)
    Scc = cov[np.ix_(con, con)]
    if con.size == 1:
        sd = np.sqrt(Scc[0, 0])
        xc = truncated_normal(mean[con], sd, lb[con], ub[con], rng)
    else:
        xc = TiltedTruncatedMVN(mean[con], Scc, lb[con], ub[con]).sample(1, rng)[0]
    out = np.empty_like(mean)
    out[con] = xc
    if free.size:
        Sfc = cov[np.ix_(free, con)]
        Sff = cov[np.ix_(free, free)]
        gain = np.linalg.solve(Scc, Sfc.T).T
        cm = mean[free] + gain @ (xc - mean[con])
        cv = Sff - gain @ Sfc.T
        cv = 0.5 * (cv + cv.T)
        out[free] = cm + psd_factor(cv) @ rng.standard_normal(free.size)
    return out
