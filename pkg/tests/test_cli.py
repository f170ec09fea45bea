import csv
import json

import numpy as np
import pytest

from proxyfavar.cli import main
from proxyfavar.storage import read_dataset, read_draws, read_manifest

DRAW_FILES = ("A.csv", "B.csv", "factors.csv", "h.csv", "lambda_out.csv", "kappa1.csv")


def run(argv, capsys):
    code = main(["--log-level", "ERROR", *argv])
    err = capsys.readouterr().err
    return code, err


def error_payload(err):
    return json.loads(err.strip().splitlines()[-1])


@pytest.fixture
def synthetic(tmp_path, capsys):
    out = tmp_path / "syn"
    code, _ = run(["simulate", "--out", str(out), "--T", "120", "--seed", "2", "--var-lag-order", "2"], capsys)
    assert code == 0
    return out


def write_config(path, text):
    path.write_text(text)
    return path


def test_simulate_defaults_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["simulate", "--out", str(a), "--seed", "7"], capsys)[0] == 0
    assert run(["simulate", "--out", str(b), "--seed", "7"], capsys)[0] == 0
    data = read_dataset(a)
    assert data.x_out.shape == (252, 3) and data.z.shape == (252, 2) and data.m.shape == (252, 1)
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
    truth = json.loads((a / "truth_params.json").read_text())
    assert truth["reliability"] == pytest.approx(0.25 / (0.25 + 0.0025))


def test_simulate_explosive(tmp_path, capsys):
    code, err = run(["simulate", "--out", str(tmp_path / "x"), "--own-lag", "1.05"], capsys)
    assert code == 2
    assert error_payload(err)["error"] == "ExplosiveVar"


def test_estimate_retention_and_outputs(tmp_path, capsys):
    syn = tmp_path / "syn"
    assert run(["simulate", "--out", str(syn), "--seed", "1"], capsys)[0] == 0
    out = tmp_path / "run"
    code, _ = run(["estimate", "--data", str(syn), "--out", str(out), "--seed", "3",
                   "--total-iterations", "600", "--burn-in", "100", "--thinning", "5"], capsys)
    assert code == 0
    chain = out / "chain_0"
    draws = read_draws(chain)
    assert len(draws) == 100
    np.testing.assert_array_equal(draws.draw_index, np.arange(105, 601, 5))
    man = read_manifest(chain)
    for key in ("spec", "priors", "seed", "wall_time_sec", "impact_acceptance", "content_sha256"):
        assert key in man
    assert man["spec"]["var_lag_order"] == 6

    assert run(["irf", "--draws", str(chain), "--horizon", "12"], capsys)[0] == 0
    with open(chain / "irf" / "irf_summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    rate0 = [r for r in rows if r["variable"] == "rate" and r["horizon"] == "0"][0]
    assert float(rate0["q50"]) == -0.25
    assert (chain / "irf" / "country_irf_summary.csv").exists()

    assert run(["report", "--draws", str(chain), "--horizon", "12"], capsys)[0] == 0
    for name in ("reliability.csv", "loadings.csv", "cov.csv", "exposure_r2.csv"):
        assert (chain / "report" / name).stat().st_size > 0


def test_estimate_same_seed_identical_files(synthetic, tmp_path, capsys):
    outs = [tmp_path / "r1", tmp_path / "r2"]
    for out in outs:
        code, _ = run(["estimate", "--data", str(synthetic), "--out", str(out), "--seed", "5", "--var-lag-order", "2",
                       "--total-iterations", "30", "--burn-in", "10", "--thinning", "2"], capsys)
        assert code == 0
    for f in DRAW_FILES:
        assert (outs[0] / "chain_0" / f).read_bytes() == (outs[1] / "chain_0" / f).read_bytes()
    m1, m2 = (read_manifest(o / "chain_0") for o in outs)
    assert m1["content_sha256"] == m2["content_sha256"]


def test_contradictory_tags_fail_before_sampling(synthetic, tmp_path, capsys):
    cfg = write_config(tmp_path / "run.ini", f"[data]\ndir = {synthetic}\n\n[model]\nsign_restrictions = 2:+, 2:-\n")
    out = tmp_path / "never"
    code, err = run(["estimate", "--config", str(cfg), "--out", str(out)], capsys)
    assert code == 2
    payload = error_payload(err)
    assert payload["error"] == "InvalidRestriction" and payload["category"] == "validation"
    assert not out.exists()

    cfg2 = write_config(tmp_path / "tags.ini", f"[data]\ndir = {synthetic}\n[priors]\nimpact_tags = 0,4:positive\n")
    code, err = run(["estimate", "--config", str(cfg2), "--out", str(out)], capsys)
    assert code == 2 and "contradicts its zero restriction" in error_payload(err)["message"]
    assert not out.exists()


def test_config_diagnostics_name_the_line(synthetic, tmp_path, capsys):
    cfg = write_config(tmp_path / "bad.ini",
                       f"[data]\ndir = {synthetic}\n\n[mcmc]\ntotal_iterations = 100\nburn_in = lots\n")
    code, err = run(["estimate", "--config", str(cfg)], capsys)
    assert code == 2
    assert error_payload(err)["message"].startswith(f"{cfg}:6: ")

    cfg = write_config(tmp_path / "unk.ini", "[priors]\n\nkappa_typo = 1\n")
    code, err = run(["estimate", "--config", str(cfg)], capsys)
    assert code == 2 and f"{cfg}:3: " in error_payload(err)["message"]


def test_config_file_and_flag_precedence(synthetic, tmp_path, capsys):
    cfg = write_config(tmp_path / "ok.ini", (
        f"[data]\ndir = {synthetic}\n[run]\nseed = 4\nout = {tmp_path / 'fromfile'}\n"
        "[model]\nvar_lag_order = 2\n[mcmc]\ntotal_iterations = 12\nburn_in = 2\nthinning = 5\n"
        "[priors]\nproxy_var2 = 0.5\n"))
    out = tmp_path / "fromflag"
    code, _ = run(["estimate", "--config", str(cfg), "--out", str(out), "--thinning", "1"], capsys)
    assert code == 0 and not (tmp_path / "fromfile").exists()
    man = read_manifest(out / "chain_0")
    assert man["n_draws"] == 10 and man["seed"] == 4 and man["priors"]["proxy_var2"] == 0.5


def test_output_env_override(synthetic, tmp_path, capsys, monkeypatch):
    target = tmp_path / "env_out"
    monkeypatch.setenv("PROXYFAVAR_OUTPUT_DIR", str(target))
    assert run(["simulate", "--out", str(tmp_path / "ignored"), "--T", "60"], capsys)[0] == 0
    assert (target / "x_out.csv").exists() and not (tmp_path / "ignored").exists()


def test_io_errors(tmp_path, capsys):
    code, err = run(["estimate", "--data", str(tmp_path / "missing")], capsys)
    assert code == 4 and error_payload(err)["category"] == "io"
    code, _ = run(["irf", "--draws", str(tmp_path / "nothing")], capsys)
    assert code == 4


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def test_prepare_data(tmp_path, capsys):
    rng = np.random.default_rng(0)
    raw = tmp_path / "raw"
    raw.mkdir()
    months = np.arange(np.datetime64("2001-01"), np.datetime64("2006-01"))
    names = ["EA19", "DE", "FR"]
    for fname in ("output_levels.csv", "price_levels.csv"):
        lev = 100 * np.exp(np.cumsum(0.002 + 0.003 * rng.standard_normal((months.size, 3)), axis=0))
        _write_csv(raw / fname, ["date", *names], [[str(d), *v] for d, v in zip(months, lev)])
    _write_csv(raw / "z_monthly.csv", ["date", "rate", "spread"],
               [[str(d), *v] for d, v in zip(months, rng.standard_normal((months.size, 2)))])
    _write_csv(raw / "m.csv", ["date", "m"], [[str(d), v] for d, v in zip(months, rng.standard_normal(months.size))])
    out = tmp_path / "data"
    assert run(["prepare-data", "--raw", str(raw), "--out", str(out)], capsys)[0] == 0
    data = read_dataset(out)
    assert data.x_out.shape == (48, 3)  # growth rates start a year in
    assert str(data.dates[0]) == "2002-01"
    assert (out / "outlier_report.csv").exists()


def test_build_instrument(tmp_path, capsys):
    rng = np.random.default_rng(1)
    days = np.datetime64("2010-01-14") + np.arange(0, 40 * 35, 35)
    s = rng.standard_normal(days.size)
    ois = np.outer(s, [0.5, 1.0, 0.9, 0.8]) + 0.1 * rng.standard_normal((days.size, 4))
    stock = -0.6 * s + rng.standard_normal(days.size)
    path = tmp_path / "ann.csv"
    _write_csv(path, ["date", "ois_1m", "ois_3m", "ois_6m", "ois_1y", "stoxx"],
               [[str(d), *o, st] for d, o, st in zip(days, ois, stock)])
    out = tmp_path / "inst"
    assert run(["build-instrument", "--input", str(path), "--out", str(out)], capsys)[0] == 0
    m = np.loadtxt(out / "m.csv", delimiter=",", skiprows=1, usecols=1)
    cbi = np.loadtxt(out / "cbi.csv", delimiter=",", skiprows=1, usecols=1)
    assert m.size == cbi.size and np.count_nonzero(m) == days.size
    bad = tmp_path / "bad.csv"
    bad.write_text("date,ois_1m\n2010-01-01,0.1\n")
    assert run(["build-instrument", "--input", str(bad), "--out", str(out)], capsys)[0] == 4
