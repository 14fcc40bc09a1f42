"""Trajectory export (CSV / JSON) and re-import.

Floats are written with ``repr``, the shortest string that parses back to
the same double, so a round trip is exact. Rotations are row-major.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .sim import Trajectory

SCHEMA_VERSION = 1
ROT_COLUMNS = tuple(f"r{i}{j}" for i in range(3) for j in range(3))
COLUMNS = ("t", "robot", "px", "py", "pz", *ROT_COLUMNS, "mu", "delta", "wx", "wy", "wz")
PAIR_COLUMNS = ("t", "i", "j", "dist_so3", "drift")


class ExportError(OSError):
    """The trajectory could not be written or read back."""


def _f(x) -> str:
    return repr(float(x))


def pairs_path(path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_pairs{path.suffix or '.csv'}")


def _robot_rows(traj: Trajectory):
    for k, t in enumerate(traj.times):
        for i in range(traj.n_robots):
            yield [
                _f(t), str(i), *(_f(x) for x in traj.p[i, k]),
                *(_f(x) for x in traj.R[i, k].reshape(9)),
                _f(traj.mu[i, k]), _f(traj.delta[i, k]), *(_f(x) for x in traj.omega[i, k]),
            ]


def _pair_rows(traj: Trajectory):
    for k, t in enumerate(traj.times):
        for m, (i, j) in enumerate(traj.pairs):
            yield [_f(t), str(i), str(j), _f(traj.pair_dist[m, k]), _f(traj.pair_drift[m, k])]


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def to_document(traj: Trajectory) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": traj.name,
        "qualitative": bool(traj.qualitative),
        "t0": float(traj.t0),
        "n_robots": traj.n_robots,
        "times": traj.times.tolist(),
        "robots": [
            {
                "p": traj.p[i].tolist(),
                "R": traj.R[i].reshape(-1, 9).tolist(),
                "mu": traj.mu[i].tolist(),
                "delta": traj.delta[i].tolist(),
                "omega": traj.omega[i].tolist(),
                "at_pi": traj.at_pi[i].tolist(),
            }
            for i in range(traj.n_robots)
        ],
        "pairs": [
            {"i": i, "j": j, "dist_so3": traj.pair_dist[m].tolist(), "drift": traj.pair_drift[m].tolist()}
            for m, (i, j) in enumerate(traj.pairs)
        ],
        "nudges": [list(x) for x in traj.nudges],
    }


def export(traj: Trajectory, fmt: str, path) -> list[Path]:
    """Write ``traj``; returns the files written.

    CSV writes ``path`` plus ``<stem>_pairs.csv`` next to it (header only for
    a single robot). JSON writes a single document.
    """
    path = Path(path)
    try:
        if fmt == "csv":
            _write_csv(path, COLUMNS, _robot_rows(traj))
            pp = pairs_path(path)
            _write_csv(pp, PAIR_COLUMNS, _pair_rows(traj))
            return [path, pp]
        if fmt == "json":
            with open(path, "w") as fh:
                json.dump(to_document(traj), fh, allow_nan=True)
            return [path]
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}") from exc
    raise ValueError(f"unknown export format {fmt!r}")


def _read_csv(path: Path, header) -> np.ndarray:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        got = next(r, None)
        if tuple(got or ()) != tuple(header):
            raise ExportError(f"{path}: unexpected header {got!r}")
        rows = [[float(x) for x in row] for row in r]
    return np.array(rows, dtype=float).reshape(-1, len(header))


def from_document(doc: dict) -> Trajectory:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ExportError(f"unsupported schema_version {doc.get('schema_version')!r}")
    times = np.array(doc["times"], dtype=float)
    n = len(times)
    robots = doc["robots"]

    def stack(key, shape):
        return np.array([r[key] for r in robots], dtype=float).reshape(len(robots), n, *shape)

    pairs = tuple((int(p["i"]), int(p["j"])) for p in doc["pairs"])
    return Trajectory(
        times=times,
        p=stack("p", (3,)),
        R=stack("R", (3, 3)),
        Ra=None,
        mu=stack("mu", ()),
        delta=stack("delta", ()),
        omega=stack("omega", (3,)),
        at_pi=np.array([r["at_pi"] for r in robots], dtype=bool).reshape(len(robots), n),
        pairs=pairs,
        pair_dist=np.array([p["dist_so3"] for p in doc["pairs"]], dtype=float).reshape(len(pairs), n),
        pair_drift=np.array([p["drift"] for p in doc["pairs"]], dtype=float).reshape(len(pairs), n),
        t0=float(doc.get("t0", 0.0)),
        name=str(doc.get("name", "custom")),
        qualitative=bool(doc.get("qualitative", False)),
        nudges=tuple((float(t), int(i)) for t, i in doc.get("nudges", [])),
    )


def load_trajectory(path, fmt: str | None = None) -> Trajectory:
    """Inverse of :func:`export` (``Ra`` is not stored and comes back as ``None``)."""
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    try:
        if fmt == "json":
            with open(path) as fh:
                return from_document(json.load(fh))
        data = _read_csv(path, COLUMNS)
        pp = pairs_path(path)
        pdata = _read_csv(pp, PAIR_COLUMNS) if pp.exists() else np.empty((0, len(PAIR_COLUMNS)))
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc.strerror or exc}") from exc

    n_rob = int(data[:, 1].max()) + 1 if len(data) else 0
    n = len(data) // n_rob if n_rob else 0
    data = data.reshape(n, n_rob, len(COLUMNS)).transpose(1, 0, 2)
    times = data[0, :, 0] if n_rob else np.empty(0)
    pairs = tuple((i, j) for i in range(n_rob) for j in range(i + 1, n_rob))
    pdata = pdata.reshape(n, len(pairs), len(PAIR_COLUMNS)).transpose(1, 0, 2)
    mu = data[:, :, 14]
    return Trajectory(
        times=times,
        p=data[:, :, 2:5],
        R=data[:, :, 5:14].reshape(n_rob, n, 3, 3),
        Ra=None,
        mu=mu,
        delta=data[:, :, 15],
        omega=data[:, :, 16:19],
        # not stored in CSV; recovered from the error angle
        at_pi=mu / math.sqrt(2.0) > math.pi - 1e-6,
        pairs=pairs,
        pair_dist=pdata[:, :, 3],
        pair_drift=pdata[:, :, 4],
        name=path.stem,
    )
