"""Column-based readers for the simulator's CSV schemas."""

from __future__ import annotations

import numpy as np


class MissingColumn(KeyError):
    """The CSV file lacks a column the plot needs."""


TRAJECTORY_COLUMNS = (
    ["j", "t", "a", "s"]
    + [f"r{i}{k}" for i in range(3) for k in range(3)]
    + ["px", "py", "pz"]
    + [f"xi{i}" for i in range(6)]
    + [f"eta{i}" for i in range(6)]
)

DIAGNOSTICS_COLUMNS = ["index", "energy"] + [f"J{i}" for i in range(6)] + [
    "energy_rel_drift", "momentum_rel_drift"]


def _read_csv(path: str, required: list[str]) -> dict[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    for col in required:
        if col not in header:
            raise MissingColumn(f"{path}: column {col!r} not found")
    return {name: data[:, k] for k, name in enumerate(header)}


def read_trajectory(path: str) -> dict:
    """Trajectory CSV as a grid: positions (T, S, 3), rotations (T, S, 3, 3)."""
    cols = _read_csv(path, TRAJECTORY_COLUMNS)
    js = cols["j"].astype(int)
    as_ = cols["a"].astype(int)
    T, S = js.max() + 1, as_.max() + 1
    pos = np.full((T, S, 3), np.nan)
    rot = np.full((T, S, 3, 3), np.nan)
    pos[js, as_] = np.stack([cols["px"], cols["py"], cols["pz"]], axis=-1)
    rot[js, as_] = np.stack([cols[f"r{i}{k}"] for i in range(3) for k in range(3)],
                            axis=-1).reshape(-1, 3, 3)
    times = np.full(T, np.nan)
    times[js] = cols["t"]
    arclen = np.full(S, np.nan)
    arclen[as_] = cols["s"]
    return {"pos": pos, "rot": rot, "t": times, "s": arclen}


def read_diagnostics(path: str) -> dict:
    """Diagnostics CSV: per-slice series plus the trailing summary row."""
    cols = _read_csv(path, DIAGNOSTICS_COLUMNS)
    idx = cols["index"].astype(int)
    body = idx >= 0
    return {
        "index": idx[body],
        "energy": cols["energy"][body],
        "momentum": np.stack([cols[f"J{i}"][body] for i in range(6)], axis=-1),
        "energy_rel_drift": cols["energy_rel_drift"][body],
        "momentum_rel_drift": cols["momentum_rel_drift"][body],
        "noether": np.array([cols[f"J{i}"][~body][0] for i in range(6)])
        if np.any(~body) else None,
    }
