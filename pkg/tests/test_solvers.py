import numpy as np
import pytest

from covariant_beam import solvers
from covariant_beam.beam import E6, build_params
from covariant_beam.solvers import (
    NewtonDivergence,
    NewtonParams,
    legendre_jacobian,
    legendre_residual,
    solve_legendre,
    solve_legendre_space,
    solve_legendre_time,
)

rng = np.random.default_rng(5)


@pytest.fixture
def soft_params():
    return build_params(1e3, 0.01, 1.0, 5e3, 0.35, np.zeros(3), 5e-4, 0.1, 3.0)


@pytest.fixture
def stiff_params():
    return build_params(1e3, 0.01, 0.8, 5e4, 0.35, np.zeros(3), 0.05, 0.05, 10.0)


def forward_time(xi, p):
    return legendre_residual(xi, p.dt, p.J6, np.zeros(6), np.zeros(6))


def forward_space(eta, p):
    return legendre_residual(eta, p.ds, p.C6, E6, np.zeros(6))


class TestTimeSolve:
    def test_zero_momentum_gives_zero(self, soft_params):
        xi = solve_legendre_time(np.zeros(6), soft_params, np.zeros(6))
        assert np.abs(xi).max() == 0.0

    def test_round_trip(self, soft_params):
        p = soft_params
        xi0 = rng.normal(size=(500, 6)) * 2.0
        mu = forward_time(xi0, p)
        guess = xi0 + rng.normal(size=xi0.shape) * 0.1
        xi = solve_legendre_time(mu, p, guess)
        np.testing.assert_allclose(xi, xi0, atol=1e-10)

    def test_small_step_limit(self, soft_params):
        # dt -> 0: the relation degenerates to mu = J xi
        p = build_params(1e3, 0.01, 1.0, 5e3, 0.35, np.zeros(3), 1e-9, 0.1, 1e-5)
        mu = rng.normal(size=6) * np.concatenate([np.diag(p.J_inertia), [p.M] * 3])
        xi = solve_legendre_time(mu, p, np.zeros(6))
        np.testing.assert_allclose(xi, np.linalg.solve(p.J6, mu), rtol=1e-6)

    def test_iteration_budget(self, stiff_params):
        # Courant-respecting states solve within ten iterations
        p = stiff_params
        xi0 = rng.normal(size=(200, 6))
        xi0[:, :3] *= 1.5 / max(1.0, np.abs(p.dt * xi0[:, :3]).max())
        mu = forward_time(xi0, p)
        _, its = solve_legendre(mu, p.dt, p.J6, np.zeros(6),
                                xi0 + rng.normal(size=xi0.shape) * 0.02)
        assert its <= 10


class TestSpaceSolve:
    def test_zero_stress_gives_reference(self, soft_params):
        eta = solve_legendre_space(np.zeros(6), soft_params, E6.copy())
        np.testing.assert_allclose(eta, E6, atol=1e-14)

    def test_round_trip(self, stiff_params):
        p = stiff_params
        eta0 = E6 + rng.normal(size=(500, 6)) * np.array([0.5] * 3 + [0.3] * 3)
        lam = forward_space(eta0, p)
        eta = solve_legendre_space(lam, p, eta0 + rng.normal(size=eta0.shape) * 0.02)
        np.testing.assert_allclose(eta, eta0, atol=1e-10)

    def test_small_step_limit(self):
        # ds -> 0: the soft angular block converges linearly in ds, so the
        # comparison needs a genuinely tiny step
        p = build_params(1e3, 0.01, 1.0, 5e3, 0.35, np.zeros(3), 5e-4, 1e-13, 3.0)
        lam = rng.normal(size=6) * np.concatenate([np.diag(p.C2), np.diag(p.C1)])
        eta = solve_legendre_space(lam, p, E6.copy())
        np.testing.assert_allclose(eta, E6 + np.linalg.solve(p.C6, lam), rtol=1e-5,
                                   atol=1e-12)

    def test_divergence_reported_with_context(self, soft_params):
        # a demand that cannot be met within the iteration budget
        lam = np.array([0.05, -0.02, 0.01, 0.4, -0.3, 0.2])
        with pytest.raises(NewtonDivergence) as err:
            solve_legendre_space(lam, soft_params, E6.copy(),
                                 NewtonParams(max_iter=1), context={"a": 3})
        assert err.value.context == {"a": 3}


def test_analytic_jacobian_matches_finite_differences(stiff_params):
    p = stiff_params
    eps = 1e-7
    for _ in range(50):
        x = rng.normal(size=6)
        J = legendre_jacobian(x, p.ds, p.C6, E6)
        for k in range(6):
            e = np.zeros(6)
            e[k] = eps
            fd = (legendre_residual(x + e, p.ds, p.C6, E6, 0)
                  - legendre_residual(x - e, p.ds, p.C6, E6, 0)) / (2 * eps)
            np.testing.assert_allclose(J[:, k], fd, rtol=1e-5, atol=1e-7)


def test_fd_jacobian_fallback_flag(soft_params):
    p = soft_params
    xi0 = rng.normal(size=6)
    mu = forward_time(xi0, p)
    xi = solve_legendre_time(mu, p, xi0 + 0.01, NewtonParams(fd_jacobian=True))
    np.testing.assert_allclose(xi, xi0, atol=1e-9)
