"""Monetary-policy instruments from announcement-day rate and stock changes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BothZero, DegeneratePanel, ValidationError

OIS_COLUMNS = ("ois_1m", "ois_3m", "ois_6m", "ois_1y")
DEFAULT_EXCLUSIONS = ("2008-10-08",)


@dataclass
class AnnouncementPanel:
    dates: np.ndarray
    ois: np.ndarray  # (events, 4): 1m, 3m, 6m, 1y
    stock: np.ndarray
    exclude: tuple[str, ...] = DEFAULT_EXCLUSIONS

    def __post_init__(self):
        self.dates = np.asarray(self.dates, dtype="datetime64[D]")
        self.ois = np.atleast_2d(np.asarray(self.ois, dtype=float))
        self.stock = np.asarray(self.stock, dtype=float)
        if self.ois.shape != (self.dates.size, 4) or self.stock.shape != self.dates.shape:
            raise ValidationError("panel needs one row of four OIS changes and a stock change per event")

    def cleaned(self) -> "AnnouncementPanel":
        """Panel with excluded dates dropped, checked for missing cells."""
        drop = np.isin(self.dates, np.asarray(self.exclude, dtype="datetime64[D]"))
        out = AnnouncementPanel(self.dates[~drop], self.ois[~drop], self.stock[~drop], ())
        if not (np.all(np.isfinite(out.ois)) and np.all(np.isfinite(out.stock))):
            raise ValidationError("announcement panel has missing cells")
        return out


@dataclass
class InstrumentPair:
    dates: np.ndarray
    m: np.ndarray
    cbi: np.ndarray
    gamma: float
    alpha: float
    pc: np.ndarray = field(repr=False, default=None)


def first_principal_component(ois: np.ndarray) -> np.ndarray:
    """Scores on the first PC of centered changes, loading positively on the 3m rate."""
    Xc = ois - ois.mean(axis=0)
    _, _, vt = np.linalg.svd(Xc, full_matrices=False)
    v = vt[0]
    if v[1] < 0:
        v = -v
    return Xc @ v


def _positive_qr(U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    Q, R = np.linalg.qr(U)
    s = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * s, R * s[:, None]


def opposite_sign_mask(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a`` where the signs strictly disagree, else 0; zeros count as agreement."""
    return np.where(np.sign(a) * np.sign(b) < 0, a, 0.0)


def build_rotational_instrument(panel: AnnouncementPanel) -> InstrumentPair:
    """Split the policy-rate surprise into a pure policy part and an information part."""
    p = panel.cleaned()
    if p.dates.size < 3:
        raise DegeneratePanel("at least three events are required")
    if np.any(p.ois.var(axis=0) == 0) or p.stock.var() == 0:
        raise DegeneratePanel("every panel column needs nonzero variance")
    i = first_principal_component(p.ois)
    U = np.column_stack([i, p.stock])
    Q, R = _positive_qr(U)
    if abs(R[1, 1]) <= 1e-12 * max(abs(R[0, 0]), 1.0):
        raise DegeneratePanel("rate factor and stock changes are collinear")
    mask = opposite_sign_mask(i, p.stock)
    nz = mask[mask != 0]
    gamma = float(nz.var() / i.var()) if nz.size else 0.0
    alpha = float(np.sqrt(gamma))
    P = np.array([[np.cos(alpha), np.sin(alpha)], [-np.sin(alpha), np.cos(alpha)]])
    rot = Q @ P
    coef, *_ = np.linalg.lstsq(rot, i, rcond=None)
    m = coef[0] * rot[:, 0]
    cbi = coef[1] * rot[:, 1]
    return InstrumentPair(p.dates, m, cbi, gamma, alpha, i)


def poor_mans_proxy(panel: AnnouncementPanel) -> np.ndarray:
    p = panel.cleaned()
    return opposite_sign_mask(p.ois[:, 1], p.stock)


def events_to_monthly(dates, values, calendar) -> np.ndarray:
    """Sum event values per calendar month; months without events get 0."""
    months = np.asarray(dates, dtype="datetime64[D]").astype("datetime64[M]")
    cal = np.asarray(calendar, dtype="datetime64[M]")
    out = np.zeros(cal.size)
    pos = np.searchsorted(cal, months)
    ok = (pos < cal.size) & (cal[np.minimum(pos, cal.size - 1)] == months)
    np.add.at(out, pos[ok], np.asarray(values, dtype=float)[ok])
    return out


def monthly_panel(panel: AnnouncementPanel) -> AnnouncementPanel:
    """Monthly sums of every column, dated at the first of the month."""
    p = panel.cleaned()
    months = p.dates.astype("datetime64[M]")
    cal = np.unique(months)
    ois = np.column_stack([events_to_monthly(p.dates, p.ois[:, j], cal) for j in range(4)])
    stock = events_to_monthly(p.dates, p.stock, cal)
    return AnnouncementPanel(cal.astype("datetime64[D]"), ois, stock, ())


def build_instrument(panel: AnnouncementPanel, method: str = "rotational") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Event dates, policy series and information series for any supported method."""
    p = panel.cleaned()
    if method == "rotational":
        pair = build_rotational_instrument(p)
        return pair.dates, pair.m, pair.cbi
    if method == "poor-mans":
        m = poor_mans_proxy(p)
        return p.dates, m, p.ois[:, 1] - m
    if method == "ois3m":
        return p.dates, p.ois[:, 1].copy(), np.zeros(p.dates.size)
    if method == "pc-raw":
        return p.dates, first_principal_component(p.ois), np.zeros(p.dates.size)
    raise ValidationError(f"unknown instrument method {method!r}")


def reliability_indicator(phi01, phi02):
    """Share of instrument variance explained by the target shock."""
    a = np.asarray(phi01, dtype=float) ** 2
    b = np.asarray(phi02, dtype=float) ** 2
    if np.any(a + b == 0):
        raise BothZero("phi01 and phi02 cannot both be zero")
    out = a / (a + b)
    return float(out) if out.ndim == 0 else out
