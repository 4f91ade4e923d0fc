"""3D beam snapshots: centerline plus director frames at chosen times.

    beam-figures-snapshots trajectory.csv --times 0 0.1 0.5 --out figs/

The directors are the columns of the stored rotation matrices; nothing is
recomputed from the physics.
"""

from __future__ import annotations

import argparse
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from beamfigures.csvio import read_trajectory  # noqa: E402


def plot_snapshots(trajectory_csv: str, times: list[float], out_dir: str,
                   fmt: str = "png", axis_limits: float | None = None) -> list[str]:
    """One centerline-with-frames image per requested time; returns paths."""
    data = read_trajectory(trajectory_csv)
    t = data["t"]
    written = []
    os.makedirs(out_dir, exist_ok=True)
    for t_req in times:
        j = int(np.argmin(np.abs(t - t_req)))
        if np.abs(t[j] - t_req) > (t[1] - t[0]) * 0.51 + 1e-12:
            raise ValueError(f"time {t_req} outside the stored range [{t[0]}, {t[-1]}]")
        pos = data["pos"][j]
        rot = data["rot"][j]
        fig = plt.figure(figsize=(5, 5))
        ax = fig.add_subplot(projection="3d")
        ax.plot(pos[:, 0], pos[:, 1], pos[:, 2], "-o", color="tab:blue",
                markersize=3, linewidth=1.5)
        frame_len = 0.25 * np.linalg.norm(pos[-1] - pos[0]) / max(1, len(pos) - 1) or 0.05
        for color, k in (("tab:red", 0), ("tab:green", 1), ("tab:orange", 2)):
            d = rot[:, :, k] * frame_len
            ax.quiver(pos[:, 0], pos[:, 1], pos[:, 2], d[:, 0], d[:, 1], d[:, 2],
                      color=color, linewidth=0.8, arrow_length_ratio=0.3)
        if axis_limits:
            ax.set_xlim(-axis_limits, axis_limits)
            ax.set_ylim(-axis_limits, axis_limits)
            ax.set_zlim(-axis_limits, axis_limits)
        ax.set_title(f"t = {t[j]:g} s")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_zlabel("z [m]")
        path = os.path.join(out_dir, f"snapshot-t{t[j]:g}.{fmt}")
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("trajectory", help="trajectory CSV")
    ap.add_argument("--times", type=float, nargs="*", default=[],
                    help="snapshot times in seconds")
    ap.add_argument("--out", default="figs")
    ap.add_argument("--format", default="png", choices=("png", "svg"))
    ap.add_argument("--axis-limits", type=float, default=None)
    args = ap.parse_args(argv)
    try:
        written = plot_snapshots(args.trajectory, args.times, args.out,
                                 args.format, args.axis_limits)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
