"""The two marching schemes and the stencil residual oracle.

Time marching (zero-traction spatial ends): given slice j, the previous
velocities xi^{j-1} and momenta mu^{j-1}, each step computes the slice
strains eta^j and stresses lambda^j, updates the momenta

    mu^j = coAd(tau(dt xi^{j-1}), mu^{j-1})
           + dt [ (lambda^j - coAd(tau(ds eta_{a-1}^j), lambda_{a-1}^j)) / ds
                  - dPi + f ]                       (a = 0 drops the coAd term,
                                                     lambda_{A-1} = 0 free end)

solves the implicit Legendre relation for xi^j and moves the slice by
g^{j+1} = g^j tau(dt xi^j).  Space marching mirrors this with
(t, K, mu, xi) <-> (s, Phi, lambda, eta) and zero-momentum temporal ends
(mu at the last stored time level is zero; the j = 0 equation drops the
time-transport term).

``remarch_space`` / ``remarch_time`` re-derive the interior of an existing
field in the transverse direction, clamping the two edge slices to the
reference data (the natural-boundary equations of one marching direction
do not hold for data produced by the other; see the cross-consistency
report).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from covariant_beam import liegroup as lg
from covariant_beam.beam import BeamParams, E6, dK, dPhi, dPi_triv
from covariant_beam.grid import (
    BC_ZERO_MOMENTUM,
    BC_ZERO_TRACTION,
    DiscreteField,
    field_from_space_slices,
    field_from_time_slices,
)
from covariant_beam.liegroup import GroupElement
from covariant_beam.solvers import (
    NewtonParams,
    solve_legendre_space,
    solve_legendre_time,
)

# Total external force per node: f(j, a, g, xi, eta) -> (6,) covector.
# The marchers evaluate it with the data available at the step (xi from the
# previous level); forces are None for every conservation scenario.
ForceField = Callable[[int, int, GroupElement, np.ndarray, np.ndarray], np.ndarray]


@dataclass
class TimeFront:
    """Marching state of the time integrator at level j."""

    j: int
    g: GroupElement          # slice j, batched over a (S nodes)
    xi_prev: np.ndarray      # (S, 6), velocities j-1 -> j
    mu_prev: np.ndarray      # (S, 6)


@dataclass
class SpaceFront:
    """Marching state of the space integrator at node a."""

    a: int
    g: GroupElement          # column a, batched over j (T levels)
    eta_prev: np.ndarray     # (T, 6), strains a-1 -> a
    lam_prev: np.ndarray     # (T, 6)


def _forces_on_slice(forces: Optional[ForceField], j: int, g: GroupElement,
                     xi: np.ndarray, eta_full: np.ndarray) -> np.ndarray:
    n = g.pos.shape[0]
    if forces is None:
        return np.zeros((n, 6))
    out = np.empty((n, 6))
    for a in range(n):
        out[a] = forces(j, a, GroupElement(g.rot[a], g.pos[a]), xi[a], eta_full[a])
    return out


def _forces_on_column(forces: Optional[ForceField], a: int, g: GroupElement,
                      xi_full: np.ndarray, eta: np.ndarray) -> np.ndarray:
    n = g.pos.shape[0]
    if forces is None:
        return np.zeros((n, 6))
    out = np.empty((n, 6))
    for j in range(n):
        out[j] = forces(j, a, GroupElement(g.rot[j], g.pos[j]), xi_full[j], eta[j])
    return out


def slice_eta_lambda(g: GroupElement, p: BeamParams) -> tuple[np.ndarray, np.ndarray]:
    """Strains and stresses within one time slice; shapes (S-1, 6)."""
    left = GroupElement(g.rot[:-1], g.pos[:-1])
    right = GroupElement(g.rot[1:], g.pos[1:])
    eta = lg.tau_inv_se3(lg.compose(lg.inverse(left), right)) / p.ds
    lam = lg.dtau_inv_star(p.ds * eta, dPhi(eta, p))
    return eta, lam


def column_xi_mu(g: GroupElement, p: BeamParams) -> tuple[np.ndarray, np.ndarray]:
    """Velocities and momenta within one space column; shapes (T-1, 6)."""
    lower = GroupElement(g.rot[:-1], g.pos[:-1])
    upper = GroupElement(g.rot[1:], g.pos[1:])
    xi = lg.tau_inv_se3(lg.compose(lg.inverse(lower), upper)) / p.dt
    mu = lg.dtau_inv_star(p.dt * xi, dK(xi, p))
    return xi, mu


def step_time(front: TimeFront, p: BeamParams, forces: Optional[ForceField] = None,
              newton: NewtonParams = NewtonParams()) -> TimeFront:
    """Advance the time front one level; free (zero-traction) spatial ends."""
    g, j = front.g, front.j

    eta, lam = slice_eta_lambda(g, p)                    # a = 0 .. S-2
    eta_full = np.vstack([eta, E6[None, :]])             # free-end ghost strain
    lam_coad = lg.coAd(lg.tau_se3(p.ds * eta), lam)      # transported lambda_{a-1}

    # spatial stress flux; lambda at the free end a = S-1 is zero
    flux = np.vstack([lam, np.zeros((1, 6))])
    flux[1:] -= lam_coad
    flux /= p.ds

    f = _forces_on_slice(forces, j, g, front.xi_prev, eta_full)
    mu = lg.coAd(lg.tau_se3(p.dt * front.xi_prev), front.mu_prev)
    mu = mu + p.dt * (flux - dPi_triv(g, p) + f)

    xi = solve_legendre_time(mu, p, front.xi_prev, newton,
                             context={"j": j, "direction": "time"})
    g_next = lg.compose(g, lg.tau_se3(p.dt * xi))
    return TimeFront(j + 1, g_next, xi, mu)


def step_space(front: SpaceFront, p: BeamParams, forces: Optional[ForceField] = None,
               newton: NewtonParams = NewtonParams()) -> SpaceFront:
    """Advance the space front one node; zero-momentum temporal ends.

    The momentum at the last stored time level is zero by convention, and
    the j = 0 equation has no incoming time transport.
    """
    g, a = front.g, front.a
    n = g.pos.shape[0]

    xi, mu = column_xi_mu(g, p)                          # j = 0 .. T-2
    xi_full = np.vstack([xi, np.zeros((1, 6))])
    lam_coad = lg.coAd(lg.tau_se3(p.ds * front.eta_prev), front.lam_prev)

    # temporal momentum flux; mu at the last level is zero (zero momentum)
    flux = np.empty((n, 6))
    flux[0] = mu[0]
    mu_coad = lg.coAd(lg.tau_se3(p.dt * xi[:-1]), mu[:-1])
    flux[1:-1] = mu[1:] - mu_coad
    flux[-1] = -lg.coAd(lg.tau_se3(p.dt * xi[-1]), mu[-1])
    flux /= p.dt

    f = _forces_on_column(forces, a, g, xi_full, front.eta_prev)
    lam = lam_coad + p.ds * (flux + dPi_triv(g, p) - f)

    eta = solve_legendre_space(lam, p, front.eta_prev, newton,
                               context={"a": a, "direction": "space"})
    g_next = lg.compose(g, lg.tau_se3(p.ds * eta))
    return SpaceFront(a + 1, g_next, eta, lam)


def initial_time_front(slice0: GroupElement, slice1: GroupElement,
                       p: BeamParams) -> TimeFront:
    """Seed the time marcher: xi^0 off the two slices, mu^0 by forward map."""
    d = lg.compose(lg.inverse(slice0), slice1)
    xi0 = lg.tau_inv_se3(d) / p.dt
    mu0 = lg.dtau_inv_star(p.dt * xi0, dK(xi0, p))
    return TimeFront(1, slice1, xi0, mu0)


def initial_space_front(col0: GroupElement, col1: GroupElement,
                        p: BeamParams) -> SpaceFront:
    """Seed the space marcher: eta_0 off the two columns, lambda_0 forward."""
    d = lg.compose(lg.inverse(col0), col1)
    eta0 = lg.tau_inv_se3(d) / p.ds
    lam0 = lg.dtau_inv_star(p.ds * eta0, dPhi(eta0, p))
    return SpaceFront(1, col1, eta0, lam0)


def run_time(slice0: GroupElement, slice1: GroupElement, p: BeamParams,
             forces: Optional[ForceField] = None, n_steps: Optional[int] = None,
             newton: NewtonParams = NewtonParams()) -> DiscreteField:
    """March in time; returns a field of n_steps + 1 slices (t = 0 .. T)."""
    field, _, err = run_time_capturing(slice0, slice1, p, forces, n_steps, newton)
    if err is not None:
        raise err
    return field


def run_time_capturing(slice0: GroupElement, slice1: GroupElement, p: BeamParams,
                       forces: Optional[ForceField] = None,
                       n_steps: Optional[int] = None,
                       newton: NewtonParams = NewtonParams()
                       ) -> tuple[DiscreteField, Optional[int], Optional[Exception]]:
    """Like :func:`run_time`, but a chart-boundary or solver failure stops
    the marching and returns (partial field, failing step, exception)."""
    from covariant_beam.liegroup import NearPiRotation
    from covariant_beam.solvers import NewtonDivergence

    n_steps = p.N_steps if n_steps is None else n_steps
    slices = [slice0, slice1]
    front = initial_time_front(slice0, slice1, p)
    died = err = None
    for k in range(1, n_steps):
        try:
            front = step_time(front, p, forces, newton)
        except (NewtonDivergence, NearPiRotation) as exc:
            died, err = k, exc
            _trim_chart_tail(slices, p)
            break
        slices.append(front.g)
    return field_from_time_slices(slices, p.dt, p.ds, BC_ZERO_TRACTION), died, err


def _trim_chart_tail(slices: list, p: BeamParams) -> None:
    """Drop trailing slices whose links left the retraction chart, so that a
    partial field stays fully diagnosable.  Works for both orientations: the
    in-slice links and the link to the previous slice must both invert."""
    from covariant_beam.liegroup import NearPiRotation

    while len(slices) > 2:
        try:
            g = slices[-1]
            if g.rot.shape[0] > 1:
                left = GroupElement(g.rot[:-1], g.pos[:-1])
                right = GroupElement(g.rot[1:], g.pos[1:])
                lg.tau_inv_se3(lg.compose(lg.inverse(left), right))
            prev = slices[-2]
            lg.tau_inv_se3(lg.compose(lg.inverse(prev), g))
            return
        except NearPiRotation:
            slices.pop()


def run_space(col0: GroupElement, col1: GroupElement, p: BeamParams,
              forces: Optional[ForceField] = None, n_cells: Optional[int] = None,
              newton: NewtonParams = NewtonParams()) -> DiscreteField:
    """March in space; returns a field of n_cells + 1 columns (s = 0 .. L)."""
    field, _, err = run_space_capturing(col0, col1, p, forces, n_cells, newton)
    if err is not None:
        raise err
    return field


def run_space_capturing(col0: GroupElement, col1: GroupElement, p: BeamParams,
                        forces: Optional[ForceField] = None,
                        n_cells: Optional[int] = None,
                        newton: NewtonParams = NewtonParams()
                        ) -> tuple[DiscreteField, Optional[int], Optional[Exception]]:
    """Like :func:`run_space`, but a failure stops the marching and returns
    (partial field, failing column, exception)."""
    from covariant_beam.liegroup import NearPiRotation
    from covariant_beam.solvers import NewtonDivergence

    n_cells = p.A_cells if n_cells is None else n_cells
    cols = [col0, col1]
    front = initial_space_front(col0, col1, p)
    died = err = None
    for k in range(1, n_cells):
        try:
            front = step_space(front, p, forces, newton)
        except (NewtonDivergence, NearPiRotation) as exc:
            died, err = k, exc
            _trim_chart_tail(cols, p)
            break
        cols.append(front.g)
    return field_from_space_slices(cols, p.dt, p.ds, BC_ZERO_MOMENTUM), died, err


# -- transverse re-marching (cross-consistency) ------------------------------


def remarch_space(field: DiscreteField, p: BeamParams,
                  forces: Optional[ForceField] = None,
                  newton: NewtonParams = NewtonParams(),
                  n_cols: Optional[int] = None,
                  on_divergence: str = "raise",
                  guess: str = "reference") -> tuple[DiscreteField, Optional[int]]:
    """Re-derive columns 2.. of a field by spatial marching from columns 0, 1.

    The edge time levels j = 0 and j = T-1 of every new column are clamped
    to the reference data: the zero-momentum closure does not hold for a
    time-integrated field, so the edge rows carry no marching equations.
    Interior levels use the interior stencil only.

    ``guess`` selects the Newton seed for each implicit solve: "reference"
    warm-starts from the strains of the field being checked (the solve
    still has to close its own equation to the Newton tolerance), while
    "previous" uses the standalone-marching seed, which at strongly coiled
    states may leave the root's basin.

    Returns the re-marched field and the first column where the solve
    diverged (None if all columns completed).  With the default
    ``on_divergence="raise"`` the divergence propagates instead; with
    ``"stop"`` the remaining columns keep the reference data.
    """
    from covariant_beam.solvers import NewtonDivergence

    out = field.copy()
    out.bc = field.bc
    T = field.n_time
    n_cols = field.n_space if n_cols is None else n_cols
    eta_prev = field.eta_col(0)
    lam_prev = lg.dtau_inv_star(p.ds * eta_prev, dPhi(eta_prev, p))
    for a in range(1, n_cols - 1):
        g = out.space_slice(a)
        xi, mu = column_xi_mu(g, p)
        lam_coad = lg.coAd(lg.tau_se3(p.ds * eta_prev), lam_prev)
        mu_coad = lg.coAd(lg.tau_se3(p.dt * xi[:-1]), mu[:-1])
        f = _forces_on_column(forces, a, g, np.vstack([xi, np.zeros((1, 6))]), eta_prev)
        lam_int = (lam_coad[1:-1]
                   + p.ds * ((mu[1:] - mu_coad) / p.dt
                             + dPi_triv(GroupElement(g.rot[1:-1], g.pos[1:-1]), p)
                             - f[1:-1]))
        seed = field.eta_col(a)[1:-1] if guess == "reference" else eta_prev[1:-1]
        try:
            eta_int = solve_legendre_space(lam_int, p, seed, newton,
                                           context={"a": a, "direction": "space-remarch"})
        except NewtonDivergence:
            if on_divergence == "stop":
                return out, a + 1
            raise
        nxt = lg.compose(GroupElement(g.rot[1:-1], g.pos[1:-1]),
                         lg.tau_se3(p.ds * eta_int))
        out.rot[1:-1, a + 1] = nxt.rot
        out.pos[1:-1, a + 1] = nxt.pos
        # clamp edge levels to the reference data
        out.rot[0, a + 1] = field.rot[0, a + 1]
        out.pos[0, a + 1] = field.pos[0, a + 1]
        out.rot[T - 1, a + 1] = field.rot[T - 1, a + 1]
        out.pos[T - 1, a + 1] = field.pos[T - 1, a + 1]
        eta_prev = out.eta_col(a)
        lam_prev = lg.dtau_inv_star(p.ds * eta_prev, dPhi(eta_prev, p))
    return out, None


def remarch_time(field: DiscreteField, p: BeamParams,
                 forces: Optional[ForceField] = None,
                 newton: NewtonParams = NewtonParams(),
                 n_rows: Optional[int] = None,
                 on_divergence: str = "raise",
                 guess: str = "reference") -> tuple[DiscreteField, Optional[int]]:
    """Re-derive rows 2.. of a field by time marching from rows 0, 1.

    Mirror of :func:`remarch_space`: the edge columns a = 0 and a = S-1 are
    clamped to the reference data (the zero-traction closure does not hold
    for a space-integrated field); interior nodes use the interior stencil.
    Guess and return conventions match :func:`remarch_space`.
    """
    from covariant_beam.solvers import NewtonDivergence

    out = field.copy()
    S = field.n_space
    n_rows = field.n_time if n_rows is None else n_rows
    xi_prev = field.xi_slice(0)
    mu_prev = lg.dtau_inv_star(p.dt * xi_prev, dK(xi_prev, p))
    for j in range(1, n_rows - 1):
        g = out.time_slice(j)
        eta, lam = slice_eta_lambda(g, p)
        lam_coad = lg.coAd(lg.tau_se3(p.ds * eta), lam)
        f = _forces_on_slice(forces, j, g, xi_prev, np.vstack([eta, E6[None, :]]))
        mu = lg.coAd(lg.tau_se3(p.dt * xi_prev), mu_prev)
        mu_int = (mu[1:-1]
                  + p.dt * ((lam[1:] - lam_coad[:-1]) / p.ds
                            - dPi_triv(GroupElement(g.rot[1:-1], g.pos[1:-1]), p)
                            + f[1:-1]))
        seed = field.xi_slice(j)[1:-1] if guess == "reference" else xi_prev[1:-1]
        try:
            xi_int = solve_legendre_time(mu_int, p, seed, newton,
                                         context={"j": j, "direction": "time-remarch"})
        except NewtonDivergence:
            if on_divergence == "stop":
                return out, j + 1
            raise
        nxt = lg.compose(GroupElement(g.rot[1:-1], g.pos[1:-1]),
                         lg.tau_se3(p.dt * xi_int))
        out.rot[j + 1, 1:-1] = nxt.rot
        out.pos[j + 1, 1:-1] = nxt.pos
        out.rot[j + 1, 0] = field.rot[j + 1, 0]
        out.pos[j + 1, 0] = field.pos[j + 1, 0]
        out.rot[j + 1, S - 1] = field.rot[j + 1, S - 1]
        out.pos[j + 1, S - 1] = field.pos[j + 1, S - 1]
        xi_prev = out.xi_slice(j)
        mu_prev = lg.dtau_inv_star(p.dt * xi_prev, dK(xi_prev, p))
    return out, None


# -- stencil residual oracle --------------------------------------------------


def dcel_residual(field: DiscreteField, p: BeamParams, j: int, a: int,
                  forces: Optional[ForceField] = None,
                  forces3: Optional[tuple] = None) -> np.ndarray:
    """Interior stencil residual at node (j, a), recomputed from the field:

        (-mu^j + coAd(tau(dt xi^{j-1}), mu^{j-1})) / dt
        + (lambda^j - coAd(tau(ds eta_{a-1}), lambda_{a-1})) / ds
        - dPi + f

    Valid for 1 <= j <= T-2 and 1 <= a <= S-2.  ``forces3`` optionally
    supplies the three-slot force decomposition (f1, f2, f3), each a
    callable with the :data:`ForceField` signature, evaluated on the three
    triangles touching the node.
    """
    if not (1 <= j <= field.n_time - 2 and 1 <= a <= field.n_space - 2):
        raise IndexError(f"interior stencil needs 1<=j<={field.n_time - 2}, "
                         f"1<=a<={field.n_space - 2}; got ({j}, {a})")
    xi_c = field.xi_at(j, a)
    xi_m = field.xi_at(j - 1, a)
    mu_c = lg.dtau_inv_star(p.dt * xi_c, dK(xi_c, p))
    mu_m = lg.dtau_inv_star(p.dt * xi_m, dK(xi_m, p))
    eta_c = field.eta_at(j, a)
    eta_m = field.eta_at(j, a - 1)
    lam_c = lg.dtau_inv_star(p.ds * eta_c, dPhi(eta_c, p))
    lam_m = lg.dtau_inv_star(p.ds * eta_m, dPhi(eta_m, p))

    res = ((-mu_c + lg.coAd(lg.tau_se3(p.dt * xi_m), mu_m)) / p.dt
           + (lam_c - lg.coAd(lg.tau_se3(p.ds * eta_m), lam_m)) / p.ds
           - dPi_triv(field.node(j, a), p))
    if forces3 is not None:
        f1, f2, f3 = forces3
        g = field.node(j, a)
        res = res + f1(j, a, g, xi_c, eta_c)
        res = res + f2(j - 1, a, field.node(j - 1, a), xi_m, field.eta_at(j - 1, a))
        res = res + f3(j, a - 1, field.node(j, a - 1), field.xi_at(j, a - 1), eta_m)
    elif forces is not None:
        res = res + forces(j, a, field.node(j, a), xi_c, eta_c)
    return res


def dcel_residual_max(field: DiscreteField, p: BeamParams,
                      forces: Optional[ForceField] = None) -> float:
    """Max inf-norm of the interior stencil residual over the whole field."""
    worst = 0.0
    for j in range(1, field.n_time - 1):
        xi_c = field.xi_slice(j)
        xi_m = field.xi_slice(j - 1)
        mu_c = lg.dtau_inv_star(p.dt * xi_c, dK(xi_c, p))
        mu_m = lg.dtau_inv_star(p.dt * xi_m, dK(xi_m, p))
        eta, lam = slice_eta_lambda(field.time_slice(j), p)
        lam_coad = lg.coAd(lg.tau_se3(p.ds * eta), lam)
        res = ((-mu_c[1:-1] + lg.coAd(lg.tau_se3(p.dt * xi_m[1:-1]), mu_m[1:-1])) / p.dt
               + (lam[1:] - lam_coad[:-1]) / p.ds
               - dPi_triv(GroupElement(field.rot[j, 1:-1], field.pos[j, 1:-1]), p))
        if forces is not None:
            g = field.time_slice(j)
            eta_full = np.vstack([eta, E6[None, :]])
            f = _forces_on_slice(forces, j, g, xi_c, eta_full)
            res = res + f[1:-1]
        worst = max(worst, float(np.abs(res).max()))
    return worst


def cfl_suggested_dt(p: BeamParams) -> float:
    """dt = ds / (10 c) with c the dilational wave speed sqrt((lam + 2 mu)/rho)."""
    lame_lambda = (p.E_young * p.nu_poisson
                   / ((1.0 + p.nu_poisson) * (1.0 - 2.0 * p.nu_poisson)))
    lame_mu = p.G_shear
    c = np.sqrt((lame_lambda + 2.0 * lame_mu) / p.rho)
    return p.ds / (10.0 * c)
