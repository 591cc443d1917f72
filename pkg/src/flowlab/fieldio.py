"""Plain-text field and trajectory dumps.

A field dump is a block of ``# key: value`` header lines (dim, resolution,
periods, valence, time_tag) followed by a CSV table with one row per node in
row-major order: the node multi-index, then every component in row-major index
order, each written with 17 significant digits so values round-trip exactly.

A trajectory dump is a directory holding one field dump per sample and a
``manifest.yaml`` with the times and integrator metadata.
"""

from __future__ import annotations

import csv
import itertools
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigurationError
from .grid import build_grid
from .parabolic import FlowTrajectory

FORMAT_TAG = "flowlab-field v1"


def _fmt(x):
    return f"{x:.17g}"


def write_field(path, grid, values, valence=(0, 2), time_tag=None):
    values = np.asarray(values, dtype=float)
    rank = values.ndim - grid.dim
    if sum(valence) != rank:
        raise ConfigurationError(f"valence {valence} does not match component rank {rank}")
    path = Path(path)
    comps = list(itertools.product(range(grid.dim), repeat=rank))
    flat = values.reshape(grid.n_nodes, -1)
    with path.open("w", newline="") as fh:
        fh.write(f"# {FORMAT_TAG}\n")
        fh.write(f"# dim: {grid.dim}\n")
        fh.write(f"# resolution: {' '.join(map(str, grid.resolution))}\n")
        fh.write(f"# periods: {' '.join(_fmt(p) for p in grid.periods)}\n")
        fh.write(f"# valence: {valence[0]} {valence[1]}\n")
        fh.write(f"# time_tag: {'none' if time_tag is None else _fmt(time_tag)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"i{a}" for a in range(grid.dim)] + ["c" + "".join(map(str, c)) for c in comps])
        for flat_idx, node in enumerate(np.ndindex(*grid.shape)):
            w.writerow(list(node) + [_fmt(v) for v in flat[flat_idx]])
    return path


def read_field(path, order=None):
    """Returns (grid, values, valence, time_tag)."""
    header = {}
    with Path(path).open() as fh:
        lines = fh.read().splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        if ":" in line:
            key, val = line[1:].split(":", 1)
            header[key.strip()] = val.strip()
    try:
        dim = int(header["dim"])
        res = [int(v) for v in header["resolution"].split()]
        periods = [float(v) for v in header["periods"].split()]
        valence = tuple(int(v) for v in header["valence"].split())
    except KeyError as exc:
        raise ConfigurationError(f"field dump {path} lacks header key {exc}") from exc
    tt = header.get("time_tag", "none")
    time_tag = None if tt == "none" else float(tt)
    kw = {} if order is None else {"order": order}
    grid = build_grid(dim, res, periods, **kw)
    rows = list(csv.reader(lines[body_start + 1 :]))
    data = np.array([[float(v) for v in r[dim:]] for r in rows])
    rank = sum(valence)
    if data.shape != (grid.n_nodes, dim**rank):
        raise ConfigurationError(f"field dump {path} has {data.shape}, expected {(grid.n_nodes, dim**rank)}")
    return grid, data.reshape(grid.shape + (dim,) * rank), valence, time_tag


def write_trajectory(directory, traj: FlowTrajectory, every=1, valence=(0, 2)):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    idx = list(range(0, len(traj), every))
    if idx[-1] != len(traj) - 1:  # always keep the final sample
        idx.append(len(traj) - 1)
    files = []
    for k in idx:
        name = f"field_{k:05d}.csv"
        write_field(directory / name, traj.grid, traj.fields[k], valence, float(traj.times[k]))
        files.append(name)
    meta = {k: v for k, v in traj.step_meta.items() if not isinstance(v, (list, np.ndarray))}
    manifest = {
        "format": "flowlab-trajectory v1",
        "kind": traj.kind,
        "times": [float(traj.times[k]) for k in idx],
        "files": files,
        "sample_stride": every,
        "step_meta": {k: (float(v) if isinstance(v, (np.floating, float)) else v) for k, v in meta.items()},
    }
    with (directory / "manifest.yaml").open("w") as fh:
        yaml.safe_dump(manifest, fh, sort_keys=False)
    return directory


def read_manifest(directory):
    path = Path(directory) / "manifest.yaml"
    if not path.exists():
        raise ConfigurationError(f"{directory} is not a trajectory dump (no manifest.yaml)")
    with path.open() as fh:
        return yaml.safe_load(fh)


def read_trajectory(directory):
    directory = Path(directory)
    man = read_manifest(directory)
    fields, grid = [], None
    for name in man["files"]:
        grid, values, _, _ = read_field(directory / name)
        fields.append(values)
    return FlowTrajectory(grid, man["times"], np.array(fields), man["kind"], man.get("step_meta", {}))


def field_at_time(directory, t, rtol=1e-9):
    """Path of the dumped sample at time t (must match a sample)."""
    man = read_manifest(directory)
    times = np.array(man["times"])
    k = int(np.argmin(np.abs(times - t)))
    scale = max(abs(times[-1] - times[0]), 1.0)
    if abs(times[k] - t) > rtol * scale:
        raise ConfigurationError(
            f"time {t} is not a dumped sample; nearest is {times[k]:.17g}"
        )
    return Path(directory) / man["files"][k]
