"""CSV serialization of fields and diagnostics, and the run manifest.

Trajectory schema: one row per (j, a) with columns

    j, t, a, s, r00..r22 (rotation, row-major), px, py, pz,
    xi0..xi5, eta0..eta5

xi is empty at the last time level and eta at the last space node (written
as nan).  All floats carry 17 significant digits, so parsing reproduces
the binary values exactly.
"""

from __future__ import annotations

import io
import os

import numpy as np

from covariant_beam.grid import BC_NONE, DiscreteField

TRAJ_HEADER = ("j,t,a,s,"
               + ",".join(f"r{i}{k}" for i in range(3) for k in range(3))
               + ",px,py,pz,"
               + ",".join(f"xi{i}" for i in range(6)) + ","
               + ",".join(f"eta{i}" for i in range(6)))


def _f(x: float) -> str:
    return f"{x:.17g}"


def write_trajectory(field: DiscreteField, path: str) -> None:
    T, S = field.n_time, field.n_space
    xi = np.full((T, S, 6), np.nan)
    eta = np.full((T, S, 6), np.nan)
    for j in range(T - 1):
        xi[j] = field.xi_slice(j)
    for j in range(T):
        eta[j, : S - 1] = field.eta_slice(j)
    buf = io.StringIO()
    buf.write(TRAJ_HEADER + "\n")
    for j in range(T):
        t = j * field.dt
        for a in range(S):
            row = [str(j), _f(t), str(a), _f(a * field.ds)]
            row += [_f(v) for v in field.rot[j, a].ravel()]
            row += [_f(v) for v in field.pos[j, a]]
            row += [_f(v) for v in xi[j, a]]
            row += [_f(v) for v in eta[j, a]]
            buf.write(",".join(row) + "\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def read_trajectory(path: str, bc: str = BC_NONE) -> DiscreteField:
    """Rebuild a field from a trajectory CSV (rotations and positions only)."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TRAJ_HEADER:
            raise ValueError(f"{path}: unexpected trajectory header")
        data = np.loadtxt(fh, delimiter=",")
    if data.ndim == 1:
        data = data[None, :]
    js = data[:, 0].astype(int)
    as_ = data[:, 2].astype(int)
    T, S = js.max() + 1, as_.max() + 1
    if len(data) != T * S:
        raise ValueError(f"{path}: expected {T * S} rows, found {len(data)}")
    rot = np.empty((T, S, 3, 3))
    pos = np.empty((T, S, 3))
    rot[js, as_] = data[:, 4:13].reshape(-1, 3, 3)
    pos[js, as_] = data[:, 13:16]
    ts = data[:, 1]
    ss = data[:, 3]
    dt = float(ts[S]) if T > 1 else 1.0   # t at (j=1, a=0)
    ds = float(ss[1]) if S > 1 else 1.0   # s at (j=0, a=1)
    return DiscreteField(rot, pos, dt, ds, bc)


def write_diagnostics(report, path: str) -> None:
    """One row per slice: index, energy, 6 momentum components, relative
    drifts; terminated by a one-row Noether summary (index -1, the
    whole-domain edge-sum components with its scale in the energy column).
    """
    with open(path, "w") as fh:
        fh.write("index,energy,J0,J1,J2,J3,J4,J5,energy_rel_drift,momentum_rel_drift\n")
        for k, idx in enumerate(report.indices):
            row = [str(int(idx)), _f(report.energy[k])]
            row += [_f(v) for v in report.momentum[k]]
            row += [_f(report.energy_rel_drift[k]), _f(report.momentum_rel_drift[k])]
            fh.write(",".join(row) + "\n")
        row = ["-1", _f(report.noether_scale)]
        row += [_f(v) for v in report.noether_residual]
        row += [_f(report.max_energy_drift), _f(report.max_momentum_drift)]
        fh.write(",".join(row) + "\n")


def write_cross_report(report, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("# " + report.summary().replace("\n", "\n# ") + "\n")
        fh.write("slice,max_dpos\n")
        for k, v in enumerate(report.per_slice_dev):
            fh.write(f"{k + 2},{_f(v)}\n")


def write_manifest(path: str, cfg_text: str, wall_time: float,
                   outputs: list[str], notes: list[str] | None = None) -> None:
    import covariant_beam

    with open(path, "w") as fh:
        fh.write("# run manifest\n")
        fh.write(f"covariant_beam_version = {covariant_beam.__version__}\n")
        fh.write(f"numpy_version = {np.__version__}\n")
        fh.write(f"wall_time_seconds = {_f(wall_time)}\n")
        fh.write("outputs = " + ", ".join(os.path.basename(o) for o in outputs) + "\n")
        for note in notes or []:
            fh.write(f"note = {note}\n")
        fh.write("\n# configuration echo\n")
        fh.write(cfg_text)
