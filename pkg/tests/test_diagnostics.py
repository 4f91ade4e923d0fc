import numpy as np
import pytest

from covariant_beam import diagnostics, grid, integrators, liegroup as lg
from covariant_beam.beam import E6, build_params, dPi_triv, elastic_Phi, kinetic_K
from covariant_beam.diagnostics import (
    covariant_momenta,
    cross_consistency,
    energy_Ld,
    energy_Nd,
    lemma_space_gap,
    lemma_time_gap,
    momentum_Ld,
    momentum_Nd,
    node_stencil_sum,
    noether_rect,
    noether_space_edge_sum,
    noether_time_edge_sum,
)
from covariant_beam.grid import (
    BC_NONE,
    BC_ZERO_TRACTION,
    DiscreteField,
    build_from_boundary_time,
)

rng = np.random.default_rng(31)


@pytest.fixture(scope="module")
def soft():
    return build_params(1e3, 0.01, 1.0, 5e3, 0.35, np.zeros(3), 5e-4, 0.1, 3.0)


@pytest.fixture(scope="module")
def gravity_params():
    return build_params(1e3, 0.01, 1.0, 5e3, 0.35, np.array([0.0, 0.0, -0.981]),
                        0.01, 0.05, 1.0)


@pytest.fixture(scope="module")
def run53(soft):
    eta0 = np.tile([1.0, 1.5, 1.0, 0.0, 0.0, 1.0], (soft.A_cells - 1, 1))
    eta1 = np.tile([1.004, 1.52, 1.005, -0.01, 0.0, 1.0], (soft.A_cells - 1, 1))
    s0, s1 = build_from_boundary_time(lg.identity(), eta0, eta1, soft.dt, soft.ds,
                                      lg.tau_se3(soft.dt * E6))
    return integrators.run_time(s0, s1, soft, n_steps=400)


def random_field(T, S, dt, ds, bc=BC_NONE, scale=0.3) -> DiscreteField:
    rot = lg.cay_so3(rng.normal(size=(T, S, 3)) * scale)
    pos = rng.normal(size=(T, S, 3))
    return DiscreteField(rot, pos, dt, ds, bc)


def equilibrium_field(T, S, dt, ds, bc=BC_ZERO_TRACTION) -> DiscreteField:
    s0, _ = build_from_boundary_time(lg.identity(), np.tile(E6, (S - 1, 1)),
                                     np.tile(E6, (S - 1, 1)), dt, ds)
    rot = np.broadcast_to(s0.rot, (T,) + s0.rot.shape).copy()
    pos = np.broadcast_to(s0.pos, (T,) + s0.pos.shape).copy()
    return DiscreteField(rot, pos, dt, ds, bc)


class TestCovariantMomenta:
    def test_triangle_sums_cancel_without_gravity(self, soft):
        # SE(3) invariance of the cell Lagrangian: J1 + J2 + J3 vanishes per
        # cell for any configuration when the potential is off
        f = random_field(5, 5, soft.dt, soft.ds)
        for (j, a) in [(0, 0), (2, 1), (3, 3)]:
            J1, J2, J3 = covariant_momenta(f, soft, j, a)
            assert np.abs(J1 + J2 + J3).max() < 1e-12

    def test_triangle_sums_reduce_to_gravity_term(self, gravity_params):
        p = gravity_params
        f = random_field(5, 5, p.dt, p.ds)
        J1, J2, J3 = covariant_momenta(f, p, 2, 2)
        g = f.node(2, 2)
        expected = -p.dt * p.ds * lg.Ad_star(g, dPi_triv(g, p))
        np.testing.assert_allclose(J1 + J2 + J3, expected, atol=1e-13)

    def test_definition_level_pairing_oracle(self, gravity_params):
        # J^k paired with a basis direction equals the derivative of the cell
        # Lagrangian under a left translation of the k-th node
        p = gravity_params
        f = random_field(3, 3, p.dt, p.ds)
        j, a = 1, 1
        eps = 1e-7

        def cell_lagrangian(g1, g2, g3):
            xi = lg.tau_inv_se3(lg.compose(lg.inverse(g1), g2)) / p.dt
            eta = lg.tau_inv_se3(lg.compose(lg.inverse(g1), g3)) / p.ds
            Pi = g1.pos @ p.gravity_q
            return p.dt * p.ds * (kinetic_K(xi, p) - elastic_Phi(eta, p) - Pi)

        nodes = [f.node(j, a), f.node(j + 1, a), f.node(j, a + 1)]
        Js = covariant_momenta(f, p, j, a)
        for k in range(3):
            for comp in range(6):
                z = np.zeros(6)
                z[comp] = 1.0
                plus = list(nodes)
                plus[k] = lg.compose(lg.tau_se3(eps * z), nodes[k])
                minus = list(nodes)
                minus[k] = lg.compose(lg.tau_se3(-eps * z), nodes[k])
                fd = (cell_lagrangian(*plus) - cell_lagrangian(*minus)) / (2 * eps)
                assert fd == pytest.approx(Js[k][comp], abs=2e-7)

    def test_stencil_sum_is_conjugated_residual(self, soft, run53):
        # node stencil = dt ds Ad*_{g^-1} (interior residual)
        f = run53
        j, a = 7, 4
        stencil = node_stencil_sum(f, soft, j, a)
        res = integrators.dcel_residual(f, soft, j, a)
        expected = soft.dt * soft.ds * lg.Ad_star(f.node(j, a), res)
        np.testing.assert_allclose(stencil, expected, atol=1e-15)

    def test_stencil_vanishes_on_solution(self, soft, run53):
        worst = max(np.abs(node_stencil_sum(run53, soft, j, a)).max()
                    for j in (1, 50, 200) for a in (1, 4, 8))
        assert worst < 1e-12 * soft.dt * soft.ds * (soft.dt ** -1 + soft.ds ** -1)


class TestSliceQuantities:
    def test_momenta_vanish_at_rest(self, soft):
        f = equilibrium_field(4, 6, soft.dt, soft.ds)
        assert np.abs(momentum_Ld(f, soft, 1)).max() == 0.0
        # the straight slice keeps one ulp of axial strain from position
        # round-off, so the space momentum is zero only to that footprint
        assert np.abs(momentum_Nd(f, soft, 2)).max() < 1e-16

    def test_energy_zero_at_rest(self, soft):
        f = equilibrium_field(4, 6, soft.dt, soft.ds)
        assert energy_Ld(f, soft, 1) < 1e-30
        assert abs(energy_Nd(f, soft, 2)) < 1e-14

    def test_energy_of_rigid_translation(self, soft):
        # uniform translation at speed v: kinetic term only, constant exactly
        f = equilibrium_field(5, 6, soft.dt, soft.ds)
        v = np.array([0.3, -0.2, 0.1])
        for j in range(5):
            f.pos[j] += j * soft.dt * v
        K = 0.5 * soft.M * v @ v
        for j in range(4):
            assert energy_Ld(f, soft, j) == pytest.approx(6 * K, rel=1e-12)

    def test_energy_Nd_brute_force_oracle(self, soft):
        # independent summation of the displayed space-energy terms
        f = random_field(5, 4, soft.dt, soft.ds, scale=0.1)
        a = 1
        T = f.n_time
        total = 0.0
        for j in range(T - 1):
            total -= kinetic_K(f.xi_at(j, a), soft)
        for j in range(T):
            eta = f.eta_at(j, a)
            work = (soft.C6 @ (eta - E6)) @ E6
            half = 0.5 if j in (0, T - 1) else 1.0
            total -= half * work + elastic_Phi(eta, soft)
        assert energy_Nd(f, soft, a) == pytest.approx(total, rel=1e-12)

    def test_restricted_symmetry_projection(self, soft, run53):
        # momentum components for a subgroup are a fixed projection of the
        # full SE(3) momentum six-vector
        full = momentum_Ld(run53, soft, 10)
        proj = np.zeros((6, 2))
        proj[2, 0] = proj[5, 1] = 1.0  # vertical rotations + translations
        np.testing.assert_allclose(momentum_Ld(run53, soft, 10, project=proj),
                                   full[[2, 5]])
        np.testing.assert_allclose(momentum_Nd(run53, soft, 3, project=proj),
                                   momentum_Nd(run53, soft, 3)[[2, 5]])


class TestNoether:
    def test_minimal_rectangle_is_single_stencil(self, soft, run53):
        # a 2x2 cell rectangle encloses exactly one interior node
        f = run53
        B, K = 2, 5
        rect = noether_rect(f, soft, B, B + 1, K, K + 1)
        stencil = node_stencil_sum(f, soft, K + 1, B + 1)
        np.testing.assert_allclose(rect, -stencil, atol=1e-15)

    def test_rectangles_vanish_on_solutions(self, soft, run53):
        scale = max(np.abs(momentum_Ld(run53, soft, j)).max() for j in (0, 100, 398))
        for _ in range(25):
            K = int(rng.integers(0, run53.n_time - 3))
            L = int(rng.integers(K + 1, run53.n_time - 1))
            B = int(rng.integers(0, run53.n_space - 2))
            C = int(rng.integers(B + 1, run53.n_space - 1))
            assert np.abs(noether_rect(run53, soft, B, C, K, L)).max() < 1e-8 * scale

    def test_rectangle_nonzero_on_random_field(self, soft):
        f = random_field(6, 6, soft.dt, soft.ds)
        assert np.abs(noether_rect(f, soft, 1, 3, 1, 3)).max() > 1e-6

    def test_index_guards(self, soft, run53):
        with pytest.raises(IndexError):
            noether_rect(run53, soft, 3, 3, 0, 4)
        with pytest.raises(IndexError):
            noether_rect(run53, soft, 0, 4, 0, run53.n_time - 1)

    def test_edge_sum_vanishes_on_solution(self, soft, run53):
        rep = noether_time_edge_sum(run53, soft)
        scale = np.abs(momentum_Ld(run53, soft, 0)).max()
        assert np.abs(rep).max() < 1e-10 * scale

    def test_lemma_gap_on_solution_and_negative_control(self, soft, run53):
        scale = np.abs(momentum_Ld(run53, soft, 0)).max()
        assert lemma_time_gap(run53, soft, 3, 390) < 1e-8 * scale
        bad = random_field(6, 6, soft.dt, soft.ds, bc=BC_ZERO_TRACTION)
        assert lemma_time_gap(bad, soft, 0, 4) > 1e-6

    def test_space_lemma_on_mild_run(self):
        p = build_params(1e3, 0.01, 0.4, 5e4, 0.35, np.zeros(3), 0.05, 0.05, 5.0)
        N = p.N_steps
        taper = np.sin(np.pi * np.arange(N - 1) / (N - 2)) ** 2
        xi0 = taper[:, None] * np.array([0.0, 0.0, 0.6, 0.0, 0.0, 0.0])
        xi1 = taper[:, None] * np.array([2e-4, 1e-4, 0.6, 5e-5, 0.0, 0.0])
        c0, c1 = grid.build_from_boundary_space(lg.identity(), xi0, xi1, p.dt, p.ds)
        f = integrators.run_space(c0, c1, p)
        scale = max(np.abs(momentum_Nd(f, p, a)).max() for a in range(f.n_space - 1))
        assert lemma_space_gap(f, p, 0, f.n_space - 2) < 1e-8 * scale
        assert np.abs(noether_space_edge_sum(f, p)).max() < 1e-8 * scale


class TestReport:
    def test_equilibrium_report_all_zero(self, soft):
        f = equilibrium_field(5, 6, soft.dt, soft.ds)
        rep = diagnostics.conservation_report(f, soft)
        assert rep.max_momentum_drift == 0.0
        assert rep.max_energy_drift == 0.0
        assert np.abs(rep.noether_residual).max() == 0.0

    def test_report_series_lengths(self, soft, run53):
        rep = diagnostics.conservation_report(run53, soft)
        assert rep.kind == "time"
        assert len(rep.energy) == run53.n_time - 1
        assert rep.momentum.shape == (run53.n_time - 1, 6)

    def test_cross_report_fields(self, soft, run53):
        re, failed = integrators.remarch_space(run53, soft, on_divergence="stop")
        rep = cross_consistency(run53, re, "space", diverged_at=failed)
        assert rep.direction == "space"
        assert rep.per_slice_dev.ndim == 1
        assert "re-march" in rep.summary()
