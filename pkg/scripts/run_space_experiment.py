#!/usr/bin/env python3
"""Space integration of the two boundary-driven scenarios.

Both bundled scenario data sets prescribe boundary columns whose shear strains
exceed what this very soft thin rod can carry without extreme curvature
(the moment transported over one element is ds x shear, against a bending
stiffness E a^4 / 12 ~ 4e-6).  The marching follows the equations until
the demanded strains leave the retraction chart, then stops; the
conservation identities hold exactly on every completed column.

Usage: python scripts/run_space_experiment.py [--scenario {A,B}] [--out DIR]
"""

import argparse
import os
import sys

import numpy as np

from covariant_beam import config, diagnostics, integrators, io_csv
from covariant_beam.cli import _build_initial


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--scenario", choices=("A", "B"), default="A")
    ap.add_argument("--out", default="out")
    args = ap.parse_args()

    cfg = config.preset(f"scenario-{args.scenario}")
    p = cfg.build_params()
    c0, c1 = _build_initial(cfg, p)

    field, died, err = integrators.run_space_capturing(c0, c1, p)
    if err is not None:
        print(f"marching stopped at column {died} (s = {died * p.ds:.3f} m): {err}")

    rep = diagnostics.conservation_report(field, p)
    print(f"columns: {field.n_space},  momentum drift: {rep.max_momentum_drift:.3e}")
    print(f"global Noether residual: {np.abs(rep.noether_residual).max():.3e} "
          f"(momentum scale {rep.noether_scale:.3e})")

    os.makedirs(args.out, exist_ok=True)
    io_csv.write_trajectory(field, f"{args.out}/{cfg.name}-trajectory.csv")
    io_csv.write_diagnostics(rep, f"{args.out}/{cfg.name}-diagnostics.csv")
    print(f"wrote {args.out}/{cfg.name}-{{trajectory,diagnostics}}.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
