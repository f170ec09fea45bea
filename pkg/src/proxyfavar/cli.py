"""Command-line entry point: simulate, prepare-data, build-instrument, estimate, irf, report."""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    BANDS,
    coefficient_of_variation,
    compute_irfs,
    decompose_country_responses,
    exposure_fit,
    reliability_draws,
    summarize,
)
from .data_pipeline import (
    RawSeries,
    adjust_additive_outliers,
    aggregate_to_monthly,
    annual_growth,
    chow_lin_interpolate,
)
from .errors import DataIOError, FavarError, ValidationError
from .gibbs import run_chain
from .instrument import AnnouncementPanel, build_instrument, events_to_monthly
from .model import (
    McmcSettings,
    ModelSpec,
    PriorConfig,
    default_true_params,
    simulate_dgp,
    validate_spec,
)
from .storage import (
    DrawWriter,
    read_dataset,
    read_draws,
    read_manifest,
    read_table,
    write_dataset,
    write_manifest,
    write_table,
)

log = logging.getLogger("proxyfavar")

OUTPUT_ENV = "PROXYFAVAR_OUTPUT_DIR"
EXIT = {"ok": 0, "validation": 2, "numerical": 3, "io": 4}


# ---------------------------------------------------------------- configuration


def _parse_signs(text: str) -> list[tuple[int, int]]:
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        row, sign = item.split(":")
        sign = sign.strip()
        if sign not in ("+", "-", "1", "-1"):
            raise ValueError(f"sign must be + or -, got {sign!r}")
        out.append((int(row), 1 if sign in ("+", "1") else -1))
    return out


def _parse_tags(text: str) -> dict[tuple[int, int], str]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(";"))):
        cell, tag = item.split(":")
        i, j = (int(v) for v in cell.split(","))
        out[(i, j)] = tag.strip()
    return out


def _line_of(path: Path | None, section: str, key: str) -> str:
    if path is None or not path.exists():
        return ""
    current = None
    for n, line in enumerate(path.read_text().splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and s.split("=")[0].strip() == key:
            return f"{path}:{n}: "
    return f"{path}: "


@dataclass
class RunConfig:
    data_dir: Path | None = None
    out_dir: Path = Path("run")
    seed: int = 0
    chains: int = 1
    n_countries: int | None = None
    var_names_z: list[str] = field(default_factory=list)
    factor_lag_order: int = 0
    var_lag_order: int = 6
    include_country_channels: bool = False
    policy_rate_index: int = 0
    sign_restrictions: list[tuple[int, int]] | None = None
    instrument_count: int = 1
    total_iterations: int = 18_000
    burn_in: int = 3_000
    thinning: int = 5
    priors: dict = field(default_factory=dict)
    source: Path | None = None

    _MODEL_KEYS = {
        "factor_lag_order": int,
        "var_lag_order": int,
        "include_country_channels": "bool",
        "policy_rate_index": int,
        "instrument_count": int,
    }
    _MCMC_KEYS = {"total_iterations": int, "burn_in": int, "thinning": int}

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        cp = configparser.ConfigParser()
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise DataIOError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ValidationError(f"{path}: {exc}") from exc
        cfg = cls(source=path)

        def get(section, key, conv):
            raw = cp.get(section, key)
            try:
                if conv == "bool":
                    return cp.getboolean(section, key)
                return conv(raw)
            except ValueError as exc:
                raise ValidationError(f"{_line_of(path, section, key)}bad value for {section}.{key}: {exc}") from exc

        if cp.has_section("data"):
            if cp.has_option("data", "dir"):
                cfg.data_dir = Path(cp.get("data", "dir"))
        if cp.has_section("run"):
            for key, conv in (("seed", int), ("chains", int)):
                if cp.has_option("run", key):
                    setattr(cfg, key, get("run", key, conv))
            if cp.has_option("run", "out"):
                cfg.out_dir = Path(cp.get("run", "out"))
        if cp.has_section("model"):
            for key, conv in cls._MODEL_KEYS.items():
                if cp.has_option("model", key):
                    setattr(cfg, key, get("model", key, conv))
            if cp.has_option("model", "sign_restrictions"):
                cfg.sign_restrictions = get("model", "sign_restrictions", _parse_signs)
        if cp.has_section("mcmc"):
            for key, conv in cls._MCMC_KEYS.items():
                if cp.has_option("mcmc", key):
                    setattr(cfg, key, get("mcmc", key, conv))
        if cp.has_section("priors"):
            known = {f.name: f.type for f in fields(PriorConfig)}
            for key in cp.options("priors"):
                if key == "impact_tags":
                    cfg.priors[key] = get("priors", key, _parse_tags)
                elif key == "minnesota_sigma2":
                    cfg.priors[key] = get("priors", key, lambda s: [float(v) for v in s.split(",")])
                elif key == "preset":
                    cfg.priors[key] = cp.get("priors", key).strip()
                elif key in known:
                    cfg.priors[key] = get("priors", key, float)
                else:
                    raise ValidationError(f"{_line_of(path, 'priors', key)}unknown prior setting {key!r}")
        return cfg

    def apply_args(self, args: argparse.Namespace) -> "RunConfig":
        for key in ("seed", "chains", "total_iterations", "burn_in", "thinning",
                    "var_lag_order", "factor_lag_order", "policy_rate_index"):
            v = getattr(args, key, None)
            if v is not None:
                setattr(self, key, v)
        if getattr(args, "data", None):
            self.data_dir = Path(args.data)
        if getattr(args, "out", None):
            self.out_dir = Path(args.out)
        if getattr(args, "channels", False):
            self.include_country_channels = True
        if getattr(args, "less_informative_proxy", False):
            self.priors["preset"] = "less-informative-proxy"
        return self

    def build(self, data) -> tuple[ModelSpec, PriorConfig]:
        n_countries = data.x_out.shape[1] - 1 if self.n_countries is None else self.n_countries
        mcmc = McmcSettings(self.total_iterations, self.burn_in, self.thinning)
        kw = dict(
            factor_lag_order=self.factor_lag_order,
            var_lag_order=self.var_lag_order,
            include_country_channels=self.include_country_channels,
            instrument_count=self.instrument_count,
            mcmc=mcmc,
        )
        if self.sign_restrictions is not None:
            kw["sign_restrictions"] = self.sign_restrictions
        spec = ModelSpec.baseline(n_countries, list(data.z_names), self.policy_rate_index, **kw)
        pri = dict(self.priors)
        preset = pri.pop("preset", None)
        if preset == "less-informative-proxy":
            priors = PriorConfig.less_informative_proxy(**pri)
        elif preset in (None, "baseline"):
            priors = PriorConfig(**pri)
        else:
            raise ValidationError(f"unknown prior preset {preset!r}")
        return spec, priors


def output_dir(args_out) -> Path:
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env)
    return Path(args_out)


# ---------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    out = output_dir(args.out)
    z_names = [s.strip() for s in args.z_names.split(",") if s.strip()]
    spec = ModelSpec.baseline(
        args.n_countries, z_names,
        factor_lag_order=args.factor_lag_order or 0,
        var_lag_order=args.var_lag_order or 6,
        include_country_channels=args.channels,
    )
    tp = default_true_params(spec, args.T, seed=args.seed, phi01=args.phi01, phi02=args.phi02)
    if args.own_lag is not None:
        r = spec.r
        tp.A[:] = 0.0
        tp.A[0, :r, :r] = np.eye(r) * args.own_lag
    data, truth = simulate_dgp(spec, tp, args.T, seed=args.seed + 1)
    write_dataset(out, data)
    write_table(out / "truth_factors.csv", data.dates, ["f_out", "f_inf"], truth.factors)
    write_table(out / "truth_shocks.csv", data.dates, [f"eps{i}" for i in range(spec.n)], truth.shocks)
    P = spec.factor_lag_order
    names = [f"out_{c}" for c in data.country_names] + [f"inf_{c}" for c in data.country_names]
    write_table(out / "truth_h.csv", data.dates[P:], names, truth.h.T)
    with open(out / "truth_params.json", "w") as fh:
        json.dump({"spec": spec.to_dict(), "params": truth.params.to_dict(),
                   "reliability": truth.reliability, "seed": args.seed}, fh, indent=2, sort_keys=True)
    log.info("wrote synthetic data set with T=%d to %s", args.T, out)
    return 0


# ---------------------------------------------------------------- prepare-data


def _read_raw(path: Path, frequency: str) -> list[RawSeries]:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    names = rows[0][1:]
    unit = "D" if frequency == "daily" else "M"
    width = 10 if frequency == "daily" else 7
    try:
        dates = np.array([r[0][:width] for r in rows[1:]], dtype=f"datetime64[{unit}]")
        vals = np.array([[float(v) if v.strip() else np.nan for v in r[1:]] for r in rows[1:]])
    except ValueError as exc:
        raise DataIOError(f"{path}: unparseable cell ({exc})") from exc
    out = []
    for j, name in enumerate(names):
        ok = np.isfinite(vals[:, j])
        out.append(RawSeries(frequency, dates[ok], vals[ok, j], name))
    return out


def _monthly_block(series: list[RawSeries]) -> tuple[np.ndarray, list[str], np.ndarray]:
    start = max(s.dates[0] for s in series)
    end = min(s.dates[-1] for s in series)
    cal = np.arange(start, end + 1)
    cols = []
    for s in series:
        pos = np.searchsorted(s.dates, cal)
        if np.any(pos >= s.dates.size) or np.any(s.dates[np.minimum(pos, s.dates.size - 1)] != cal):
            raise ValidationError(f"series {s.name!r} has gaps inside the common span")
        cols.append(s.values[pos])
    return cal, [s.name for s in series], np.column_stack(cols)


def cmd_prepare_data(args) -> int:
    raw = Path(args.raw)
    out = output_dir(args.out)
    reports = []

    def country_block(level_file, quarterly_file=None):
        if quarterly_file is not None and (raw / quarterly_file).exists():
            gdp = _read_raw(raw / quarterly_file, "quarterly")
            ind = {name: _read_raw(raw / f"{name}.csv", "monthly") for name in args.indicators.split(",")}
            levels = []
            for q in gdp:
                inds = [next(s for s in block if s.name == q.name) for block in ind.values()]
                levels.append(chow_lin_interpolate(q, inds))
        else:
            levels = _read_raw(raw / level_file, "monthly")
        growth = []
        for s in levels:
            g = annual_growth(s, args.growth_method)
            g, rep = adjust_additive_outliers(g, args.outlier_critical)
            reports.append(rep)
            growth.append(g)
        return growth

    out_series = country_block("output_levels.csv", "gdp_quarterly.csv")
    inf_series = country_block("price_levels.csv")
    if out_series[0].name != "EA19" or inf_series[0].name != "EA19":
        raise ValidationError("EA19 must be the first column of the country files")
    z_series = []
    if (raw / "z_daily.csv").exists():
        z_series += [aggregate_to_monthly(s, args.aggregation_rule) for s in _read_raw(raw / "z_daily.csv", "daily")]
    if (raw / "z_monthly.csv").exists():
        z_series += _read_raw(raw / "z_monthly.csv", "monthly")
    if not z_series:
        raise DataIOError("no z_daily.csv or z_monthly.csv in the raw directory")
    m_series = _read_raw(raw / "m.csv", "monthly")

    blocks = [_monthly_block(b) for b in (out_series, inf_series, z_series, m_series)]
    start = max(b[0][0] for b in blocks)
    end = min(b[0][-1] for b in blocks)
    out.mkdir(parents=True, exist_ok=True)
    for fname, (cal, names, vals) in zip(("x_out", "x_inf", "z", "m"), blocks):
        keep = (cal >= start) & (cal <= end)
        write_table(out / f"{fname}.csv", cal[keep], names, vals[keep])
    with open(out / "outlier_report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "date", "original", "adjusted", "statistic"])
        for rep in reports:
            for d, o, a, t in rep.entries:
                w.writerow([rep.name, str(d), "%.17g" % o, "%.17g" % a, "%.6g" % t])
    return 0


# ---------------------------------------------------------------- build-instrument


def cmd_build_instrument(args) -> int:
    path = Path(args.input)
    out = output_dir(args.out)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    try:
        dates = np.array([r["date"][:10] for r in rows], dtype="datetime64[D]")
        ois = np.array([[float(r[c]) for c in ("ois_1m", "ois_3m", "ois_6m", "ois_1y")] for r in rows])
        stock = np.array([float(r["stoxx"]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise DataIOError(f"{path}: malformed announcement file ({exc})") from exc
    exclude = tuple(s.strip() for s in (args.exclude_dates or "2008-10-08").split(",") if s.strip())
    panel = AnnouncementPanel(dates, ois, stock, exclude)
    ev_dates, m, cbi = build_instrument(panel, args.method)
    months = ev_dates.astype("datetime64[M]")
    cal = np.arange(months.min(), months.max() + 1)
    out.mkdir(parents=True, exist_ok=True)
    write_table(out / "m.csv", cal, ["m"], events_to_monthly(ev_dates, m, cal)[:, None])
    write_table(out / "cbi.csv", cal, ["cbi"], events_to_monthly(ev_dates, cbi, cal)[:, None])
    return 0


# ---------------------------------------------------------------- estimate


def _chain_job(payload):
    spec_d, pri_d, data_dir, out_dir, seed, chain = payload
    spec = ModelSpec.from_dict(spec_d)
    priors = PriorConfig.from_dict(pri_d)
    data = read_dataset(data_dir)
    return _estimate_one(spec, priors, data, data_dir, Path(out_dir), seed, chain)


def _estimate_one(spec, priors, data, data_dir, out_dir: Path, seed: int, chain: int) -> dict:
    from .model import initialize_state

    state = initialize_state(spec, data, priors, seed)
    with DrawWriter(out_dir, state) as writer:
        _, info = run_chain(spec, data, priors, seed, writer=writer, keep=False, init=state)
    manifest = {
        "spec": spec.to_dict(),
        "priors": priors.to_dict(),
        "seed": seed,
        "chain": chain,
        "data_dir": str(data_dir),
        "z_mean": data.z_mean,
        "z_std": data.z_std,
        "country_names": data.country_names,
        "block_shapes": writer.shapes,
        "n_draws": writer.count,
        "version": __version__,
        **info,
    }
    write_manifest(out_dir, manifest)
    return manifest


def cmd_estimate(args) -> int:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    cfg.apply_args(args)
    if cfg.data_dir is None:
        raise ValidationError("no data directory given (use --data or [data] dir)")
    data = read_dataset(cfg.data_dir)
    spec, priors = cfg.build(data)
    validate_spec(spec, data, priors)
    out = output_dir(cfg.out_dir)
    jobs = [(spec.to_dict(), priors.to_dict(), str(cfg.data_dir), str(out / f"chain_{k}"), cfg.seed + k, k)
            for k in range(cfg.chains)]
    if cfg.chains == 1:
        _estimate_one(spec, priors, data, cfg.data_dir, out / "chain_0", cfg.seed, 0)
    else:
        with ProcessPoolExecutor(max_workers=min(cfg.chains, os.cpu_count() or 1)) as ex:
            list(ex.map(_chain_job, jobs))
    log.info("estimation finished: %d chain(s) in %s", cfg.chains, out)
    return 0


# ---------------------------------------------------------------- irf / report


def _load_run(draws_dir: Path):
    man = read_manifest(draws_dir)
    spec = ModelSpec.from_dict(man["spec"])
    draws = read_draws(draws_dir)
    return man, spec, draws


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([("%.17g" % v) if isinstance(v, (float, np.floating)) else v for v in row])


def cmd_irf(args) -> int:
    src = Path(args.draws)
    man, spec, draws = _load_run(src)
    out = output_dir(args.out or src / "irf")
    out.mkdir(parents=True, exist_ok=True)
    irf = compute_irfs(draws, spec, args.horizon, z_std=np.asarray(man["z_std"]))
    D, V, H1 = irf.responses.shape
    _write_rows(out / "irf_long.csv", ["draw", "variable", "horizon", "value"],
                ((int(irf.draw_index[d]), irf.variables[v], h, float(irf.responses[d, v, h]))
                 for d in range(D) for v in range(V) for h in range(H1)))
    q = summarize(irf.responses)
    _write_rows(out / "irf_summary.csv", ["variable", "horizon", "q16", "q50", "q84"],
                ((irf.variables[v], h, float(q[0.16][v, h]), float(q[0.5][v, h]), float(q[0.84][v, h]))
                 for v in range(V) for h in range(H1)))
    cirf = decompose_country_responses(irf, draws, man.get("country_names"))
    rows = []
    for part in ("total", "common", "channel"):
        arr = getattr(cirf, part)
        qs = summarize(arr)
        for b, block in enumerate(("out", "inf")):
            for c, name in enumerate(cirf.countries):
                for h in range(H1):
                    rows.append((block, name, part, h, float(qs[0.16][b, c, h]),
                                 float(qs[0.5][b, c, h]), float(qs[0.84][b, c, h])))
    _write_rows(out / "country_irf_summary.csv",
                ["block", "country", "part", "horizon", "q16", "q50", "q84"], rows)
    # plot-ready layouts: one column per panel series
    _write_rows(out / "figure_var_irf.csv",
                ["horizon"] + [f"{v}_{t}" for v in irf.variables for t in ("q16", "q50", "q84")],
                ([h] + [float(q[t][v, h]) for v in range(V) for t in BANDS] for h in range(H1)))
    med = summarize(cirf.total)
    _write_rows(out / "figure_country_irf.csv",
                ["horizon"] + [f"{b}_{c}_{t}" for b in ("out", "inf") for c in cirf.countries
                               for t in ("q16", "q50", "q84")],
                ([h] + [float(med[t][bi, ci, h]) for bi in range(2) for ci in range(len(cirf.countries))
                        for t in BANDS] for h in range(H1)))
    return 0


def cmd_report(args) -> int:
    src = Path(args.draws)
    man, spec, draws = _load_run(src)
    out = output_dir(args.out or src / "report")
    out.mkdir(parents=True, exist_ok=True)
    rel = reliability_draws(draws, spec)
    qr = summarize(rel)
    _write_rows(out / "reliability.csv", ["q16", "q50", "q84"], [[qr[t] for t in BANDS]])

    names = man.get("country_names") or ["EA19"] + [f"C{i}" for i in range(1, spec.n_series)]
    rows = []
    for block in ("out", "inf"):
        lam = draws[f"lambda_{block}"][:, :, 0]
        qs = summarize(lam)
        for i, name in enumerate(names):
            rows.append((block, name, qs[0.16][i], qs[0.5][i], qs[0.84][i]))
    _write_rows(out / "loadings.csv", ["block", "country", "q16", "q50", "q84"], rows)

    irf = compute_irfs(draws, spec, args.horizon, z_std=np.asarray(man["z_std"]))
    cirf = decompose_country_responses(irf, draws, names)
    horizons = [h for h in (0, 6, 12, 24, 36) if h <= args.horizon]
    rows = []
    if spec.n_countries >= 2:
        for b, block in enumerate(("out", "inf")):
            for bench in ("country_mean", "ea19"):
                cov = coefficient_of_variation(cirf.total[:, b, 1:], bench, ea19=cirf.total[:, b, 0])
                for h in horizons:
                    rows.append((block, bench, h, cov[0.16][h], cov[0.5][h], cov[0.84][h]))
    _write_rows(out / "cov.csv", ["block", "benchmark", "horizon", "q16", "q50", "q84"], rows)

    data_dir = args.data or man.get("data_dir")
    if data_dir:
        try:
            data = read_dataset(data_dir)
        except DataIOError:
            data = None
        if data is not None:
            rows = []
            P = spec.factor_lag_order
            for b, block in enumerate(("out", "inf")):
                x = data.x_out if b == 0 else data.x_inf
                lam = draws[f"lambda_{block}"]
                for i, name in enumerate(names):
                    _, r2 = exposure_fit(x[P:, i], lam[:, i], draws["factors"][:, :, b])
                    rows.append((block, name, r2))
            _write_rows(out / "exposure_r2.csv", ["block", "country", "r2"], rows)
    return 0


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="proxyfavar", description=__doc__)
    p.add_argument("--log-level", default="INFO")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="write a synthetic data set and its truth")
    s.add_argument("--out", default="synthetic")
    s.add_argument("--n-countries", type=int, default=2)
    s.add_argument("--z-names", default="rate,spread")
    s.add_argument("--T", type=int, default=252)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--var-lag-order", type=int, default=None)
    s.add_argument("--factor-lag-order", type=int, default=None)
    s.add_argument("--channels", action="store_true")
    s.add_argument("--phi01", type=float, default=0.5)
    s.add_argument("--phi02", type=float, default=0.05)
    s.add_argument("--own-lag", type=float, default=None, help="diagonal of the first lag matrix")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("prepare-data", help="turn raw CSVs into the four panel files")
    s.add_argument("--raw", required=True)
    s.add_argument("--out", default="data")
    s.add_argument("--growth-method", choices=["standard", "log", "symmetric"], default="standard")
    s.add_argument("--outlier-critical", type=float, default=3.5)
    s.add_argument("--aggregation-rule", choices=["mean", "sum", "end_of_month"], default="mean")
    s.add_argument("--indicators", default="ip,unemployment")
    s.set_defaults(func=cmd_prepare_data)

    s = sub.add_parser("build-instrument", help="construct m.csv and cbi.csv from announcements")
    s.add_argument("--input", required=True)
    s.add_argument("--out", default="instrument")
    s.add_argument("--method", choices=["rotational", "poor-mans", "ois3m", "pc-raw"], default="rotational")
    s.add_argument("--exclude-dates", default=None)
    s.set_defaults(func=cmd_build_instrument)

    s = sub.add_parser("estimate", help="run the Gibbs sampler")
    s.add_argument("--config")
    s.add_argument("--data")
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.add_argument("--chains", type=int)
    s.add_argument("--total-iterations", type=int)
    s.add_argument("--burn-in", type=int)
    s.add_argument("--thinning", type=int)
    s.add_argument("--var-lag-order", type=int)
    s.add_argument("--factor-lag-order", type=int)
    s.add_argument("--policy-rate-index", type=int)
    s.add_argument("--channels", action="store_true")
    s.add_argument("--less-informative-proxy", action="store_true")
    s.set_defaults(func=cmd_estimate)

    for name, func, helptext in (("irf", cmd_irf, "impulse responses from stored draws"),
                                 ("report", cmd_report, "summary tables from stored draws")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--draws", required=True, help="a chain directory written by estimate")
        s.add_argument("--out")
        s.add_argument("--horizon", type=int, default=36)
        if name == "report":
            s.add_argument("--data")
        s.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except FavarError as exc:
        return _fail(exc.category, exc)
    except OSError as exc:
        return _fail("io", exc)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail("numerical", exc)


def _fail(category: str, exc: Exception) -> int:
    payload = {"category": category, "error": type(exc).__name__, "message": str(exc)}
    violations = getattr(exc, "violations", None)
    if violations:
        payload["violations"] = violations
    print(json.dumps(payload), file=sys.stderr)
    return EXIT[category]


if __name__ == "__main__":
    sys.exit(main())
