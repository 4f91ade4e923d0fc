import os
import subprocess
import sys

import numpy as np
import pytest

from covariant_beam import io_csv
from covariant_beam.config import (
    PRESET_NAMES,
    ParseError,
    ScenarioConfig,
    ValidationError,
    emit_config,
    parse_config,
    preset,
)
from covariant_beam.grid import BC_ZERO_TRACTION


class TestPresets:
    def test_reference_time_scenario(self):
        cfg = preset("free-beam")
        assert (cfg.rho, cfg.E_young, cfg.nu_poisson) == (1e3, 5e3, 0.35)
        assert (cfg.ds, cfg.dt, cfg.T_total) == (0.1, 5e-4, 3.0)
        np.testing.assert_array_equal(cfg.eta0, [1, 1.5, 1, 0, 0, 1])
        np.testing.assert_array_equal(cfg.eta1, [1.004, 1.52, 1.005, -0.01, 0, 1])
        p = cfg.build_params()
        assert p.M == pytest.approx(0.1)
        assert (p.N_steps, p.A_cells) == (6000, 10)

    def test_space_scenario_a(self):
        cfg = preset("scenario-A")
        assert (cfg.length_L, cfg.T_total, cfg.E_young) == (0.8, 10.0, 5e4)
        assert (cfg.ds, cfg.dt) == (0.05, 0.05)
        np.testing.assert_array_equal(cfg.xi0, [0, -2, 0, 0, -0.1, 0])
        np.testing.assert_array_equal(cfg.xi1, [0.007, -1.998, -0.007, -0.08, -0.1, 0])
        p = cfg.build_params()
        assert (p.N_steps, p.A_cells) == (200, 16)

    def test_space_scenario_b(self):
        cfg = preset("scenario-B")
        assert (cfg.ds, cfg.dt, cfg.T_total) == (0.02, 0.04, 1.0)
        np.testing.assert_array_equal(cfg.xi0, [0, -0.5, 0, 0, -0.1, 0])

    def test_unknown_preset(self):
        with pytest.raises(ValidationError):
            preset("nope")


class TestParsing:
    def test_round_trip_every_preset(self, tmp_path):
        for name in PRESET_NAMES:
            cfg = preset(name)
            path = tmp_path / f"{name}.ini"
            path.write_text(emit_config(cfg))
            back = parse_config(str(path))
            for field in ("name", "mode", "rho", "side_a", "length_L", "E_young",
                          "nu_poisson", "dt", "ds", "T_total", "newton_tol",
                          "newton_max_iter", "output_dir"):
                assert getattr(back, field) == getattr(cfg, field), field
            for field in ("eta0", "eta1", "xi0", "xi1", "seed_position",
                          "seed_cayley", "seed2", "gravity_q"):
                a, b = getattr(back, field), getattr(cfg, field)
                if a is None or b is None:
                    assert a is b
                else:
                    np.testing.assert_array_equal(a, b)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.ini"
        path.write_text("")
        with pytest.raises(ParseError):
            parse_config(str(path))

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[scenario]\nname = x\nmode = time_integrate\nfoo = 1\n")
        with pytest.raises(ValidationError, match="foo"):
            parse_config(str(path))

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[prehistory]\nname = x\n")
        with pytest.raises(ValidationError, match="prehistory"):
            parse_config(str(path))

    def test_mode_profile_consistency(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(name="x", mode="space_integrate").validate()
        with pytest.raises(ValidationError):
            ScenarioConfig(name="x", mode="sideways").validate()

    def test_vector_length_checked(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[scenario]\nname = x\nmode = time_integrate\n"
                        "[initial]\neta0 = 1 2 3\n")
        with pytest.raises(ValidationError, match="expected 6"):
            parse_config(str(path))


class TestTrajectoryCSV:
    def test_bit_exact_round_trip(self, tmp_path):
        from covariant_beam import integrators, liegroup as lg
        from covariant_beam.beam import E6, build_params
        from covariant_beam.grid import build_from_boundary_time

        p = build_params(1e3, 0.01, 1.0, 5e3, 0.35, np.zeros(3), 5e-4, 0.1, 3.0)
        eta = np.tile([1.0, 1.5, 1.0, 0, 0, 1.0], (p.A_cells - 1, 1))
        s0, s1 = build_from_boundary_time(lg.identity(), eta, eta, p.dt, p.ds,
                                          lg.tau_se3(p.dt * E6))
        f = integrators.run_time(s0, s1, p, n_steps=10)
        path = str(tmp_path / "traj.csv")
        io_csv.write_trajectory(f, path)
        back = io_csv.read_trajectory(path, BC_ZERO_TRACTION)
        np.testing.assert_array_equal(back.rot, f.rot)
        np.testing.assert_array_equal(back.pos, f.pos)
        assert back.dt == f.dt and back.ds == f.ds


def _cli(*args, cwd):
    return subprocess.run([sys.executable, "-m", "covariant_beam.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


class TestCLI:
    def test_equilibrium_run_and_outputs(self, tmp_path):
        res = _cli("run", "--preset", "equilibrium", "--out", "eq", cwd=tmp_path)
        assert res.returncode == 0, res.stderr
        files = sorted(os.listdir(tmp_path / "eq"))
        assert files == ["equilibrium-diagnostics.csv", "equilibrium-manifest.txt",
                         "equilibrium-trajectory.csv"]
        diag = (tmp_path / "eq" / "equilibrium-diagnostics.csv").read_text().splitlines()
        # every slice row reports zero momentum and drift; the energy keeps
        # only the elastic footprint of position round-off (~1e-32)
        for line in diag[1:-1]:
            vals = [float(x) for x in line.split(",")[1:]]
            assert abs(vals[0]) < 1e-30
            assert all(v == 0.0 for v in vals[1:])

    def test_deterministic_output(self, tmp_path):
        _cli("run", "--preset", "equilibrium", "--out", "a", cwd=tmp_path)
        _cli("run", "--preset", "equilibrium", "--out", "b", cwd=tmp_path)
        ta = (tmp_path / "a" / "equilibrium-trajectory.csv").read_bytes()
        tb = (tmp_path / "b" / "equilibrium-trajectory.csv").read_bytes()
        assert ta == tb

    def test_config_error_exit_code(self, tmp_path):
        res = _cli("run", "missing.ini", cwd=tmp_path)
        assert res.returncode == 1
        res = _cli("run", cwd=tmp_path)
        assert res.returncode == 1

    def test_solver_failure_exit_code(self, tmp_path):
        # the bundled space scenarios drive the strains out of the
        # retraction chart; the driver reports the divergence as exit 2
        res = _cli("run", "--preset", "scenario-B", "--out", "sb", cwd=tmp_path)
        assert res.returncode == 2
        assert "solver failure" in res.stderr

    def test_check_cfl(self, tmp_path):
        res = _cli("check-cfl", "--preset", "free-beam", cwd=tmp_path)
        assert res.returncode == 0
        assert "suggested dt" in res.stdout
        res = _cli("check-cfl", "--preset", "scenario-A", cwd=tmp_path)
        assert "warning" in res.stdout  # dt far above the Courant fraction

    def test_reconstruct_round_trip(self, tmp_path):
        res = _cli("run", "--preset", "equilibrium", "--out", "eq", cwd=tmp_path)
        assert res.returncode == 0
        res = _cli("reconstruct", "eq/equilibrium-trajectory.csv",
                   "--direction", "space", "--preset", "equilibrium",
                   "--out", "rec", cwd=tmp_path)
        assert res.returncode == 0, res.stderr
        assert "cross-consistency" in res.stdout
        assert os.path.exists(tmp_path / "rec" / "equilibrium-trajectory-cross-space.csv")
