"""Serialization of trajectory records and plot-ready CSV tables.

Trajectory data goes to NDJSON (one JSON object per sample, header object
first) or to a compact ``.npz`` columnar file.  Both carry the full
parameter set so any downstream file is self-describing.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .params import DipoleRecord, SimParams

FORMAT_VERSION = 1


def _params_dict(params: SimParams) -> dict:
    return dataclasses.asdict(params)


def write_records_ndjson(path, params: SimParams, records: Sequence[DipoleRecord]) -> None:
    """One header line, then one line per sample.

    Header: {"format": ..., "params": {...}, "n_traj": ...}
    Sample: {"traj": i, "t": ..., "re_j": ..., "im_j": ...}
    """
    path = Path(path)
    with path.open("w") as fh:
        header = {
            "format": "srbeam-dipole-ndjson",
            "version": FORMAT_VERSION,
            "params": _params_dict(params),
            "n_traj": len(records),
            "trajectory_seeds": [int(r.trajectory_seed) for r in records],
        }
        fh.write(json.dumps(header) + "\n")
        for i, rec in enumerate(records):
            for t, j in zip(rec.times, rec.j_complex):
                fh.write(
                    json.dumps(
                        {"traj": i, "t": round(float(t), 9),
                         "re_j": float(j.real), "im_j": float(j.imag)}
                    )
                    + "\n"
                )


def read_records_ndjson(path) -> tuple[SimParams, list[DipoleRecord]]:
    path = Path(path)
    with path.open() as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "srbeam-dipole-ndjson":
            raise ValueError(f"{path}: not a dipole NDJSON file")
        params = SimParams(**header["params"])
        seeds = header["trajectory_seeds"]
        times: list[list[float]] = [[] for _ in seeds]
        vals: list[list[complex]] = [[] for _ in seeds]
        for line in fh:
            obj = json.loads(line)
            i = obj["traj"]
            times[i].append(obj["t"])
            vals[i].append(complex(obj["re_j"], obj["im_j"]))
    records = [
        DipoleRecord(times=np.asarray(t), j_complex=np.asarray(v), trajectory_seed=s)
        for t, v, s in zip(times, vals, seeds)
    ]
    return params, records


def write_records_npz(path, params: SimParams, records: Sequence[DipoleRecord]) -> None:
    """Columnar binary alternative: shared time axis + (n_traj, n_samples) dipole."""
    times = records[0].times
    j = np.stack([r.j_complex for r in records])
    seeds = np.asarray([r.trajectory_seed for r in records], dtype=np.uint64)
    np.savez_compressed(
        path,
        header=json.dumps({"format": "srbeam-dipole-npz", "version": FORMAT_VERSION,
                           "params": _params_dict(params)}),
        times=times,
        j_complex=j,
        trajectory_seeds=seeds,
    )


def read_records_npz(path) -> tuple[SimParams, list[DipoleRecord]]:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format") != "srbeam-dipole-npz":
            raise ValueError(f"{path}: not a dipole npz file")
        params = SimParams(**header["params"])
        times = data["times"]
        j = data["j_complex"]
        seeds = data["trajectory_seeds"]
    records = [
        DipoleRecord(times=times.copy(), j_complex=j[i].copy(),
                     trajectory_seed=int(seeds[i]))
        for i in range(j.shape[0])
    ]
    return params, records


def load_records(path) -> tuple[SimParams, list[DipoleRecord]]:
    path = Path(path)
    if path.suffix == ".npz":
        return read_records_npz(path)
    return read_records_ndjson(path)


def write_csv(path, columns: dict[str, Iterable], provenance: dict | None = None) -> None:
    """Plot-ready CSV.  Provenance (parameters, command line) goes into
    ``#``-prefixed header comments so the data block stays tool-friendly."""
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(list(columns[k])) for k in names]
    n = len(cols[0])
    for k, c in zip(names, cols):
        if len(c) != n:
            raise ValueError(f"column {k!r} has length {len(c)}, expected {n}")
    with path.open("w", newline="") as fh:
        for key, val in (provenance or {}).items():
            fh.write(f"# {key} = {val}\n")
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(n):
            writer.writerow([_fmt(c[i]) for c in cols])


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".10g")
    return x


def read_csv(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Inverse of :func:`write_csv`; numeric columns come back as float arrays."""
    provenance = {}
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                provenance[key.strip()] = val.strip()
            else:
                rows.append(line)
    reader = csv.reader(rows)
    names = next(reader)
    data = list(reader)
    out = {}
    for i, name in enumerate(names):
        col = [r[i] for r in data]
        try:
            out[name] = np.asarray(col, dtype=float)
        except ValueError:
            out[name] = np.asarray(col)
    return out, provenance
