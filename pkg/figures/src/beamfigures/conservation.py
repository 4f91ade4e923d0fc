"""Energy and momentum traces with relative-error panels.

    beam-figures-conservation diagnostics.csv --out figs/

Renders the per-slice energy, the six momentum components, and the
relative drifts ((E - E0)/E0 style) straight from the diagnostics CSV.
"""

from __future__ import annotations

import argparse
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from beamfigures.csvio import read_diagnostics  # noqa: E402


def plot_conservation(diagnostics_csv: str, out_dir: str, fmt: str = "png",
                      stem: str | None = None) -> list[str]:
    """Energy / momentum / relative-error panels; returns written paths."""
    d = read_diagnostics(diagnostics_csv)
    idx = d["index"]
    os.makedirs(out_dir, exist_ok=True)
    stem = stem or os.path.splitext(os.path.basename(diagnostics_csv))[0]

    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    ax = axes[0, 0]
    ax.plot(idx, d["energy"], color="tab:blue")
    ax.set_title("energy")
    ax.set_xlabel("slice")

    ax = axes[0, 1]
    for k in range(6):
        ax.plot(idx, d["momentum"][:, k], label=f"J{k}")
    ax.set_title("momentum map components")
    ax.set_xlabel("slice")
    ax.legend(fontsize=7, ncol=2)

    ax = axes[1, 0]
    e0 = d["energy"][0]
    if e0 != 0.0:
        ax.plot(idx, (d["energy"] - e0) / e0, color="tab:blue")
    else:
        ax.plot(idx, d["energy"] - e0, color="tab:blue")
    ax.set_title("energy relative error")
    ax.set_xlabel("slice")

    ax = axes[1, 1]
    ax.semilogy(idx, np.maximum(d["momentum_rel_drift"], 1e-18), color="tab:red")
    ax.set_title("momentum relative drift")
    ax.set_xlabel("slice")

    fig.tight_layout()
    path = os.path.join(out_dir, f"{stem}-conservation.{fmt}")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("diagnostics", help="diagnostics CSV")
    ap.add_argument("--out", default="figs")
    ap.add_argument("--format", default="png", choices=("png", "svg"))
    args = ap.parse_args(argv)
    try:
        written = plot_conservation(args.diagnostics, args.out, args.format)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
