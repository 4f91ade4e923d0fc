"""Command-line driver.

    covariant-beam run <config.ini>
    covariant-beam run --preset free-beam [--out DIR]
    covariant-beam check-cfl <config.ini>
    covariant-beam reconstruct <trajectory.csv> --direction {space,time}

Exit codes: 0 ok, 1 configuration error, 2 solver failure.  The env var
``COVARIANT_BEAM_THREADS`` caps the BLAS/OpenMP thread count (set before
numpy is imported); serialized results are deterministic either way.
"""

from __future__ import annotations

import argparse
import os
import sys
import time


def _apply_thread_env() -> None:
    n = os.environ.get("COVARIANT_BEAM_THREADS")
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)


def _build_initial(cfg, p):
    import numpy as np

    from covariant_beam import grid, liegroup as lg

    g00 = lg.GroupElement(lg.cay_so3(cfg.seed_cayley), np.asarray(cfg.seed_position, float))
    if cfg.mode in ("time_integrate", "time_then_space_reconstruct"):
        n_nodes = p.A_cells
        eta0 = np.tile(cfg.eta0, (n_nodes - 1, 1))
        eta1 = np.tile(cfg.eta1, (n_nodes - 1, 1))
        g01 = lg.compose(g00, lg.tau_se3(p.dt * np.asarray(cfg.seed2, float)))
        return grid.build_from_boundary_time(g00, eta0, eta1, p.dt, p.ds, g01)
    n_levels = p.N_steps
    xi0 = np.tile(cfg.xi0, (n_levels - 1, 1))
    xi1 = np.tile(cfg.xi1, (n_levels - 1, 1))
    g10 = lg.compose(g00, lg.tau_se3(p.ds * np.asarray(cfg.seed2, float)))
    return grid.build_from_boundary_space(g00, xi0, xi1, p.dt, p.ds, g10)


def run_scenario(cfg, out_dir: str | None = None) -> int:
    """Run one scenario and write trajectory, diagnostics and manifest."""
    from covariant_beam import diagnostics, integrators, io_csv
    from covariant_beam.config import emit_config
    from covariant_beam.solvers import NewtonParams

    out = out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    p = cfg.build_params()
    newton = NewtonParams(tol=cfg.newton_tol, max_iter=cfg.newton_max_iter)
    t0 = time.perf_counter()
    notes = []
    outputs = []

    s0, s1 = _build_initial(cfg, p)
    if cfg.mode in ("time_integrate", "time_then_space_reconstruct"):
        field, died, err = integrators.run_time_capturing(s0, s1, p, newton=newton)
        where = f"step {died} (t = {died * p.dt:g} s)" if died else ""
    else:
        field, died, err = integrators.run_space_capturing(s0, s1, p, newton=newton)
        where = f"column {died} (s = {died * p.ds:g} m)" if died else ""
    if err is not None:
        print(f"solver failure at {where}: {err}", file=sys.stderr)
        print("writing artifacts for the completed part of the run", file=sys.stderr)
        notes.append(f"marching stopped early at {where}: {err}")

    traj = os.path.join(out, f"{cfg.name}-trajectory.csv")
    io_csv.write_trajectory(field, traj)
    outputs.append(traj)

    report = diagnostics.conservation_report(field, p)
    diag = os.path.join(out, f"{cfg.name}-diagnostics.csv")
    io_csv.write_diagnostics(report, diag)
    outputs.append(diag)
    print(f"{cfg.name}: momentum drift {report.max_momentum_drift:.3e}, "
          f"energy drift {report.max_energy_drift:.3e}, "
          f"orthogonality {report.orthogonality_drift:.3e}")

    if cfg.mode.endswith("reconstruct"):
        direction = "space" if cfg.mode.startswith("time") else "time"
        code, extra = _reconstruct_field(field, p, direction, out, cfg.name, newton)
        outputs += extra
        if code:
            notes.append("reconstruction did not converge; see stderr")

    cfl = integrators.cfl_suggested_dt(p)
    if p.dt > cfl:
        notes.append(f"configured dt {p.dt:g} exceeds the suggested Courant fraction {cfl:g}")

    man = os.path.join(out, f"{cfg.name}-manifest.txt")
    io_csv.write_manifest(man, emit_config(cfg), time.perf_counter() - t0, outputs, notes)
    return 2 if err is not None else 0


def _reconstruct_field(field, p, direction: str, out: str, name: str, newton):
    from covariant_beam import diagnostics, integrators, io_csv

    if direction == "space":
        re, failed_at = integrators.remarch_space(field, p, newton=newton,
                                                  on_divergence="stop")
    else:
        re, failed_at = integrators.remarch_time(field, p, newton=newton,
                                                 on_divergence="stop")
    rep = diagnostics.cross_consistency(field, re, direction, diverged_at=failed_at)
    path = os.path.join(out, f"{name}-cross-{direction}.csv")
    io_csv.write_cross_report(rep, path)
    print(rep.summary())
    if failed_at is not None:
        print(f"reconstruction solver gave up at slice {failed_at}", file=sys.stderr)
        return 2, [path]
    return 0, [path]


def cmd_run(args) -> int:
    from covariant_beam.config import ParseError, ValidationError, parse_config, preset

    try:
        cfg = preset(args.preset) if args.preset else parse_config(args.config)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run_scenario(cfg, args.out)


def cmd_check_cfl(args) -> int:
    from covariant_beam.config import ParseError, ValidationError, parse_config, preset
    from covariant_beam.integrators import cfl_suggested_dt

    try:
        cfg = preset(args.preset) if args.preset else parse_config(args.config)
        p = cfg.build_params()
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    dt_sugg = cfl_suggested_dt(p)
    print(f"suggested dt = {dt_sugg:.6g} s (configured {p.dt:g} s)")
    if p.dt > dt_sugg:
        print("warning: configured dt exceeds the suggested Courant fraction")
    return 0


def cmd_reconstruct(args) -> int:
    from covariant_beam import io_csv
    from covariant_beam.config import ValidationError, parse_config, preset
    from covariant_beam.grid import BC_ZERO_MOMENTUM, BC_ZERO_TRACTION
    from covariant_beam.solvers import NewtonParams

    # marching in space presumes time-integrated data and vice versa
    bc = BC_ZERO_TRACTION if args.direction == "space" else BC_ZERO_MOMENTUM
    try:
        field = io_csv.read_trajectory(args.trajectory, bc)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = preset(args.preset) if args.preset else parse_config(args.config)
    except (ValidationError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    p = cfg.build_params()
    out = args.out or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    name = os.path.splitext(os.path.basename(args.trajectory))[0]
    code, _ = _reconstruct_field(field, p, args.direction, out, name,
                                 NewtonParams(tol=cfg.newton_tol,
                                              max_iter=cfg.newton_max_iter))
    return code


def main(argv=None) -> int:
    _apply_thread_env()
    ap = argparse.ArgumentParser(prog="covariant-beam", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario")
    run.add_argument("config", nargs="?", help="scenario INI file")
    run.add_argument("--preset", help="built-in scenario name")
    run.add_argument("--out", help="output directory (overrides config)")
    run.set_defaults(func=cmd_run)

    cfl = sub.add_parser("check-cfl", help="print the suggested time step")
    cfl.add_argument("config", nargs="?")
    cfl.add_argument("--preset")
    cfl.set_defaults(func=cmd_check_cfl)

    rec = sub.add_parser("reconstruct", help="re-march a stored trajectory")
    rec.add_argument("trajectory", help="trajectory CSV")
    rec.add_argument("--direction", choices=("space", "time"), required=True)
    rec.add_argument("config", nargs="?", help="scenario file for material data")
    rec.add_argument("--preset", help="preset for material data")
    rec.add_argument("--out")
    rec.set_defaults(func=cmd_reconstruct)

    args = ap.parse_args(argv)
    if args.command in ("run", "check-cfl") and not (args.config or args.preset):
        print("config error: give a config file or --preset", file=sys.stderr)
        return 1
    if args.command == "reconstruct" and not (args.config or args.preset):
        print("config error: reconstruct needs a config file or --preset "
              "for the material data", file=sys.stderr)
        return 1
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
