"""Reference NumPy implementations of the compiled kernels.

Each routine loops over time and vectorizes across series, using the same
arithmetic order as the compiled versions so both backends agree closely.
"""
import numpy as np


def tridiag_precision_draw(diag, off, rhs, z):
    """Draw from N(K^{-1} rhs, K^{-1}) for a batch of tridiagonal precisions.

    ``diag`` is (S, T), ``off`` (S, T-1) holds the sub-diagonal, ``rhs`` and the
    standard-normal ``z`` are (S, T). Returns ``(draw, mean)``.
    """
    diag = np.ascontiguousarray(diag, dtype=np.float64)
    off = np.ascontiguousarray(off, dtype=np.float64)
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    S, T = diag.shape
    ld = np.empty((S, T))
    lo = np.empty((S, max(T - 1, 0)))
    v = np.empty((S, T))

    piv = diag[:, 0]
    if np.any(piv <= 0):
        raise np.linalg.LinAlgError("precision matrix is not positive definite")
    ld[:, 0] = np.sqrt(piv)
    v[:, 0] = rhs[:, 0] / ld[:, 0]
    for t in range(1, T):
        lo[:, t - 1] = off[:, t - 1] / ld[:, t - 1]
        piv = diag[:, t] - lo[:, t - 1] * lo[:, t - 1]
        if np.any(piv <= 0):
            raise np.linalg.LinAlgError("precision matrix is not positive definite")
        ld[:, t] = np.sqrt(piv)
        v[:, t] = (rhs[:, t] - lo[:, t - 1] * v[:, t - 1]) / ld[:, t]

    mean = np.empty((S, T))
    draw = np.empty((S, T))
    mean[:, T - 1] = v[:, T - 1] / ld[:, T - 1]
    draw[:, T - 1] = (v[:, T - 1] + z[:, T - 1]) / ld[:, T - 1]
    for t in range(T - 2, -1, -1):
        mean[:, t] = (v[:, t] - lo[:, t] * mean[:, t + 1]) / ld[:, t]
        draw[:, t] = (v[:, t] + z[:, t] - lo[:, t] * draw[:, t + 1]) / ld[:, t]
    return draw, mean


def mixture_indicator_draw(estar, h, u, prob, mean, var):
    """Inverse-CDF draw of mixture components for every (series, time) cell.

    Component k has weight ``prob[k] * N(estar; h + mean[k], var[k])``. ``u`` are
    uniforms of the same shape as ``estar``.
    """
    estar = np.asarray(estar, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    K = len(prob)
    resid = (estar - h)[..., None] - np.asarray(mean)
    logw = np.log(prob) - 0.5 * np.log(var) - 0.5 * resid * resid / np.asarray(var)
    logw = logw - logw.max(axis=-1, keepdims=True)
    w = np.exp(logw)
    cum = np.cumsum(w, axis=-1)
    target = np.asarray(u)[..., None] * cum[..., -1:]
    s = np.sum(cum < target, axis=-1)
    return np.minimum(s, K - 1).astype(np.int64)
