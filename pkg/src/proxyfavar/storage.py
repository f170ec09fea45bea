"""CSV persistence for data sets and posterior draws."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import DataIOError, ValidationError
from .model import DRAW_BLOCKS, DataSet, McmcState, PosteriorDraws

DATA_FILES = ("x_out", "x_inf", "z", "m")
MANIFEST = "manifest.json"


def _fmt(v: float) -> str:
    return "%.17g" % v


def write_table(path: Path, dates, names, values) -> None:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *names])
        for d, row in zip(np.asarray(dates, dtype="datetime64[M]"), values):
            w.writerow([str(d), *(_fmt(v) for v in row)])


def read_table(path: Path) -> tuple[np.ndarray, list[str], np.ndarray]:
    """Read a dated CSV: first column YYYY-MM, header row of names."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    if not rows or len(rows[0]) < 2:
        raise DataIOError(f"{path} has no header or no data columns")
    names = rows[0][1:]
    body = [r for r in rows[1:] if r]
    try:
        dates = np.array([r[0][:7] for r in body], dtype="datetime64[M]")
        values = np.array([[float(x) if x.strip() else np.nan for x in r[1:]] for r in body], dtype=float)
    except ValueError as exc:
        raise DataIOError(f"{path}: unparseable cell ({exc})") from exc
    if values.ndim != 2 or values.shape[1] != len(names):
        raise DataIOError(f"{path}: ragged rows")
    return dates, names, values


def write_dataset(directory, data: DataSet) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_table(d / "x_out.csv", data.dates, data.country_names, data.x_out)
    write_table(d / "x_inf.csv", data.dates, data.country_names, data.x_inf)
    write_table(d / "z.csv", data.dates, data.z_names, data.z_raw)
    write_table(d / "m.csv", data.dates, data.m_names, data.m)


def read_dataset(directory, standardize: bool = True) -> DataSet:
    """Load the four block files and align them on a common calendar."""
    d = Path(directory)
    tables = {}
    for name in DATA_FILES:
        path = d / f"{name}.csv"
        if not path.exists():
            raise DataIOError(f"missing input file {path}")
        tables[name] = read_table(path)
    for name in ("x_out", "x_inf"):
        if tables[name][1][0] != "EA19":
            raise ValidationError(f"{name}.csv must carry EA19 as its first data column")
    if tables["x_out"][1] != tables["x_inf"][1]:
        raise ValidationError("x_out.csv and x_inf.csv list different countries")
    dates = tables["x_out"][0]
    for name, (dt, _, _) in tables.items():
        if dt.shape != dates.shape or np.any(dt != dates):
            raise ValidationError(f"{name}.csv does not share the x_out calendar")
    for name, (_, _, v) in tables.items():
        if not np.all(np.isfinite(v)):
            raise ValidationError(f"{name}.csv has missing cells")
    return DataSet.from_raw(
        dates,
        tables["x_out"][2],
        tables["x_inf"][2],
        tables["z"][2],
        tables["m"][2],
        country_names=tables["x_out"][1],
        z_names=tables["z"][1],
        m_names=tables["m"][1],
        standardize=standardize,
    )


# ---------------------------------------------------------------- draws


class DrawWriter:
    """Streams retained draws into one CSV per block.

    Each row is the draw index followed by the block's values in C order.
    """

    def __init__(self, directory, state: McmcState):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.shapes = {name: list(np.shape(getattr(state, name))) for name in DRAW_BLOCKS}
        self._fh = {}
        self._w = {}
        try:
            for name in DRAW_BLOCKS:
                fh = open(self.dir / f"{name}.csv", "w", newline="")
                self._fh[name] = fh
                self._w[name] = csv.writer(fh, lineterminator="\n")
        except OSError as exc:
            self.close()
            raise DataIOError(f"cannot write draws to {self.dir}: {exc}") from exc
        self.count = 0

    def write(self, index: int, state: McmcState) -> None:
        for name in DRAW_BLOCKS:
            vals = np.ravel(np.asarray(getattr(state, name), dtype=float))
            self._w[name].writerow([index, *(_fmt(v) for v in vals)])
        self.count += 1

    def close(self) -> None:
        for fh in self._fh.values():
            fh.close()
        self._fh = {}

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def content_hash(directory) -> str:
    h = hashlib.sha256()
    for name in DRAW_BLOCKS:
        path = Path(directory) / f"{name}.csv"
        h.update(name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()


def write_manifest(directory, payload: dict) -> dict:
    d = Path(directory)
    payload = dict(payload)
    payload["content_sha256"] = content_hash(d)
    with open(d / MANIFEST, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
    return payload


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not serializable: {type(obj)!r}")


def read_manifest(directory) -> dict:
    path = Path(directory) / MANIFEST
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, ValueError) as exc:
        raise DataIOError(f"cannot read manifest {path}: {exc}") from exc


def read_draws(directory) -> PosteriorDraws:
    d = Path(directory)
    man = read_manifest(d)
    shapes = man["block_shapes"]
    blocks = {}
    index = None
    for name in DRAW_BLOCKS:
        path = d / f"{name}.csv"
        try:
            raw = np.loadtxt(path, delimiter=",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise DataIOError(f"cannot read {path}: {exc}") from exc
        idx = raw[:, 0].astype(int)
        if index is None:
            index = idx
        elif not np.array_equal(index, idx):
            raise DataIOError(f"{path}: draw indices disagree with other blocks")
        shape = shapes[name]
        vals = raw[:, 1:]
        blocks[name] = vals.reshape((raw.shape[0], *shape)) if shape else vals[:, 0]
    if index is None:
        index = np.zeros(0, dtype=int)
    return PosteriorDraws(blocks, index, man.get("seed"), man.get("chain", 0))
