"""Conserved and monitored quantities, recomputed from a stored field.

Everything here works off the configuration field alone (momenta are
re-derived through the forward Legendre maps), so these checks validate
the marchers independently of their internal state.

Edge conventions follow the field's boundary tag: a zero-traction field
has lambda = 0 on its last column, a zero-momentum field has mu = 0 on its
last time level.  Quantities that would need data beyond that raise
``IndexError``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from covariant_beam import liegroup as lg
from covariant_beam.beam import BeamParams, E6, dK, dPhi, dPi_triv, elastic_Phi, kinetic_K, potential_Pi
from covariant_beam.grid import BC_ZERO_MOMENTUM, BC_ZERO_TRACTION, DiscreteField
from covariant_beam.liegroup import GroupElement

_DRIFT_FLOOR = 1e-14


def mu_at(field: DiscreteField, p: BeamParams, j: int, a: int) -> np.ndarray:
    """Discrete momentum mu[j, a] via the forward Legendre map."""
    if j == field.n_time - 1:
        if field.bc == BC_ZERO_MOMENTUM:
            return np.zeros(6)
        raise IndexError(f"mu at the last time level {j} needs the zero-momentum convention")
    xi = field.xi_at(j, a)
    return lg.dtau_inv_star(p.dt * xi, dK(xi, p))


def lambda_at(field: DiscreteField, p: BeamParams, j: int, a: int) -> np.ndarray:
    """Discrete stress lambda[j, a] via the forward Legendre map."""
    if a == field.n_space - 1:
        if field.bc == BC_ZERO_TRACTION:
            return np.zeros(6)
        raise IndexError(f"lambda at the last column {a} needs the zero-traction convention")
    eta = field.eta_at(j, a)
    return lg.dtau_inv_star(p.ds * eta, dPhi(eta, p))


def covariant_momenta(field: DiscreteField, p: BeamParams, j: int, a: int
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-triangle momenta (J1, J2, J3) of the cell with corner (j, a).

    J1 sits at node (j, a), J2 at (j+1, a), J3 at (j, a+1); on a solution
    field the three momenta of the triangles touching an interior node sum
    to zero.
    """
    J1, J2, J3 = _momenta_batch(field, p, np.array([j]), np.array([a]))
    return J1[0], J2[0], J3[0]


def _momenta_batch(field: DiscreteField, p: BeamParams,
                   js: np.ndarray, as_: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized :func:`covariant_momenta` over index arrays js, as_."""
    T, S = field.n_time, field.n_space
    js = np.asarray(js)
    as_ = np.asarray(as_)
    if js.size and (js.min() < 0 or js.max() >= T or as_.min() < 0 or as_.max() >= S):
        raise IndexError("triangle indices outside the stored grid")
    dt, ds = p.dt, p.ds
    g1 = GroupElement(field.rot[js, as_], field.pos[js, as_])

    # mu vanishes at the last time level of a zero-momentum field, and the
    # node above it is the ghost; mirror statement for lambda and the last
    # column of a zero-traction field.
    in_t = js < T - 1
    if not np.all(in_t) and field.bc != BC_ZERO_MOMENTUM:
        raise IndexError("triangles at the last time level need the zero-momentum convention")
    in_s = as_ < S - 1
    if not np.all(in_s) and field.bc != BC_ZERO_TRACTION:
        raise IndexError("triangles at the last column need the zero-traction convention")

    mu = np.zeros(js.shape + (6,))
    J2 = np.zeros(js.shape + (6,))
    if np.any(in_t):
        base = GroupElement(g1.rot[in_t], g1.pos[in_t])
        up = GroupElement(field.rot[js[in_t] + 1, as_[in_t]],
                          field.pos[js[in_t] + 1, as_[in_t]])
        xi = lg.tau_inv_se3(lg.compose(lg.inverse(base), up)) / dt
        mu[in_t] = lg.dtau_inv_star(dt * xi, dK(xi, p))
        J2[in_t] = lg.Ad_star(up, ds * lg.coAd(lg.tau_se3(dt * xi), mu[in_t]))

    lam = np.zeros(js.shape + (6,))
    J3 = np.zeros(js.shape + (6,))
    if np.any(in_s):
        base = GroupElement(g1.rot[in_s], g1.pos[in_s])
        right = GroupElement(field.rot[js[in_s], as_[in_s] + 1],
                             field.pos[js[in_s], as_[in_s] + 1])
        eta = lg.tau_inv_se3(lg.compose(lg.inverse(base), right)) / ds
        lam[in_s] = lg.dtau_inv_star(ds * eta, dPhi(eta, p))
        J3[in_s] = lg.Ad_star(right, -dt * lg.coAd(lg.tau_se3(ds * eta), lam[in_s]))

    J1 = lg.Ad_star(g1, -ds * mu + dt * lam - dt * ds * dPi_triv(g1, p))
    return J1, J2, J3


def node_stencil_sum(field: DiscreteField, p: BeamParams, j: int, a: int) -> np.ndarray:
    """J1(cell j,a) + J2(cell j-1,a) + J3(cell j,a-1): zero on solutions."""
    J1, _, _ = covariant_momenta(field, p, j, a)
    _, J2, _ = covariant_momenta(field, p, j - 1, a)
    _, _, J3 = covariant_momenta(field, p, j, a - 1)
    return J1 + J2 + J3


# -- slice momenta and energies ------------------------------------------------


def momentum_Ld(field: DiscreteField, p: BeamParams, j: int,
                project: np.ndarray | None = None) -> np.ndarray:
    """Time-evolution momentum: ds * sum_a Ad*_{g^-1} mu[j, a].

    ``project`` optionally restricts the symmetry to a subgroup: a 6 x k
    matrix whose columns span the subalgebra; the result is its transpose
    applied to the full six-vector.
    """
    if not 0 <= j < field.n_time - 1:
        raise IndexError(f"momentum_Ld needs j < {field.n_time - 1}")
    g = field.time_slice(j)
    xi = field.xi_slice(j)
    mu = lg.dtau_inv_star(p.dt * xi, dK(xi, p))
    out = p.ds * lg.Ad_star(g, mu).sum(axis=0)
    return out if project is None else project.T @ out


def momentum_Nd(field: DiscreteField, p: BeamParams, a: int,
                project: np.ndarray | None = None) -> np.ndarray:
    """Space-evolution momentum: dt * sum_j Ad*_{g^-1} lambda[j, a].

    ``project`` as in :func:`momentum_Ld`.
    """
    if not 0 <= a < field.n_space - 1:
        raise IndexError(f"momentum_Nd needs a < {field.n_space - 1}")
    g = field.space_slice(a)
    eta = field.eta_col(a)
    lam = lg.dtau_inv_star(p.ds * eta, dPhi(eta, p))
    out = p.dt * lg.Ad_star(g, lam).sum(axis=0)
    return out if project is None else project.T @ out


def energy_Ld(field: DiscreteField, p: BeamParams, j: int) -> float:
    """Discrete energy of the time evolution at level j:

    sum_a K(xi) over all nodes, plus Phi(eta) + Pi(g) over the strained
    elements, plus Pi at the last node.
    """
    if not 0 <= j < field.n_time - 1:
        raise IndexError(f"energy_Ld needs j < {field.n_time - 1}")
    xi = field.xi_slice(j)
    eta = field.eta_slice(j)
    g = field.time_slice(j)
    K = kinetic_K(xi, p).sum()
    Phi = elastic_Phi(eta, p).sum()
    Pi = potential_Pi(g, p).sum() if p.has_gravity else 0.0
    return float(K + Phi + Pi)


def energy_Nd(field: DiscreteField, p: BeamParams, a: int) -> float:
    """Discrete energy of the space evolution at node a:

    -sum_j K(xi) minus the stress work <C (eta - E6), E6> and Phi along the
    column, with half-weighted endpoint stress-work terms and no potential
    at the final level.
    """
    if not 0 <= a < field.n_space - 1:
        raise IndexError(f"energy_Nd needs a < {field.n_space - 1}")
    T = field.n_time
    xi = field.xi_col(a)
    eta = field.eta_col(a)
    g = field.space_slice(a)
    K = kinetic_K(xi, p)[: T - 1].sum()
    Phi = elastic_Phi(eta, p)
    work = np.einsum("ji,ik,k->j", eta - E6, p.C6, E6)
    Pi = potential_Pi(g, p) if p.has_gravity else np.zeros(T)
    mid = (-work[1 : T - 1] - Phi[1 : T - 1] + Pi[1 : T - 1]).sum()
    first = -0.5 * work[0] - Phi[0] + Pi[0]
    last = -0.5 * work[T - 1] - Phi[T - 1]
    return float(-K + mid + first + last)


# -- Noether sums ---------------------------------------------------------------


def noether_rect(field: DiscreteField, p: BeamParams,
                 B: int, C: int, K: int, L: int) -> np.ndarray:
    """Covariant Noether sum over the boundary of a rectangle of cells.

    Cells span time indices K .. L and space indices B .. C; the sum equals
    minus the accumulated interior stencil sums, hence zero on converged
    gravity-free runs for every admissible rectangle.
    """
    max_C = field.n_space - 1 if field.bc == BC_ZERO_TRACTION else field.n_space - 2
    max_L = field.n_time - 1 if field.bc == BC_ZERO_MOMENTUM else field.n_time - 2
    if not (0 <= B < C <= max_C and 0 <= K < L <= max_L):
        raise IndexError(f"rectangle B={B},C={C},K={K},L={L} outside admissible "
                         f"range (C<={max_C}, L<={max_L} for bc={field.bc})")
    js = np.arange(K + 1, L + 1)
    J1, _, _ = _momenta_batch(field, p, js, np.full_like(js, B))
    _, J2, _ = _momenta_batch(field, p, js - 1, np.full_like(js, B))
    _, _, J3 = _momenta_batch(field, p, js, np.full_like(js, C))
    total = (J1 + J2 + J3).sum(axis=0)
    as_ = np.arange(B + 1, C + 1)
    J1, _, _ = _momenta_batch(field, p, np.full_like(as_, K), as_)
    _, J2, _ = _momenta_batch(field, p, np.full_like(as_, L), as_)
    _, _, J3 = _momenta_batch(field, p, np.full_like(as_, K), as_ - 1)
    total += (J1 + J2 + J3).sum(axis=0)
    J1, _, _ = covariant_momenta(field, p, K, B)
    _, J2, _ = covariant_momenta(field, p, L, B)
    _, _, J3 = covariant_momenta(field, p, K, C)
    return total + J1 + J2 + J3


def noether_time_edge_sum(field: DiscreteField, p: BeamParams) -> np.ndarray:
    """Whole-domain Noether check for a zero-traction time run:

    sum_j dt (Ad*_{g_0^j,-1} lambda_0^j - Ad*_{g_{S-1}^j,-1} lambda_{S-1}^j)
    + ds (Ad*_{(g_0^0)^-1} mu_0^0 - Ad*_{(g_0^J)^-1} mu_0^J),  J = T-2,

    with the last-column lambda zero by the free-end convention.
    """
    T, S = field.n_time, field.n_space
    J = T - 2
    total = np.zeros(6)
    eta0 = field.eta_col(0)
    lam0 = lg.dtau_inv_star(p.ds * eta0, dPhi(eta0, p))
    g0 = field.space_slice(0)
    coefs = p.dt * lg.Ad_star(g0, lam0)
    total += coefs[1 : J + 1].sum(axis=0)
    if field.bc != BC_ZERO_TRACTION:
        lamS = np.stack([lambda_at(field, p, j, S - 1) for j in range(1, J + 1)])
        gS = field.space_slice(S - 1)
        total -= p.dt * lg.Ad_star(GroupElement(gS.rot[1 : J + 1], gS.pos[1 : J + 1]), lamS).sum(axis=0)
    total += p.ds * (lg.Ad_star(field.node(0, 0), mu_at(field, p, 0, 0))
                     - lg.Ad_star(field.node(J, 0), mu_at(field, p, J, 0)))
    return total


def noether_space_edge_sum(field: DiscreteField, p: BeamParams) -> np.ndarray:
    """Whole-domain Noether check for a zero-momentum space run:

    sum_a ds (Ad*_{(g_a^{T-1})^-1} mu_a^{T-1} - Ad*_{(g_a^0)^-1} mu_a^0)
    + dt (Ad*_{(g_{S-2}^0)^-1} lambda_{S-2}^0 - Ad*_{(g_0^0)^-1} lambda_0^0),

    with the last-level mu zero by the zero-momentum convention.
    """
    T, S = field.n_time, field.n_space
    A = S - 1
    total = np.zeros(6)
    for a in range(1, A):
        total -= p.ds * lg.Ad_star(field.node(0, a), mu_at(field, p, 0, a))
        if field.bc != BC_ZERO_MOMENTUM:
            total += p.ds * lg.Ad_star(field.node(T - 1, a), mu_at(field, p, T - 1, a))
    total += p.dt * (lg.Ad_star(field.node(0, A - 1), lambda_at(field, p, 0, A - 1))
                     - lg.Ad_star(field.node(0, 0), lambda_at(field, p, 0, 0)))
    return total


def lemma_time_gap(field: DiscreteField, p: BeamParams, K: int, L: int) -> float:
    """Gap between the full-width covariant rectangle sum and the momentum
    difference J_Ld(L) - J_Ld(K); vanishes on zero-traction solutions."""
    rect = noether_rect(field, p, 0, field.n_space - 1, K, L)
    gap = rect - (momentum_Ld(field, p, L) - momentum_Ld(field, p, K))
    return float(np.abs(gap).max())


def lemma_space_gap(field: DiscreteField, p: BeamParams, B: int, C: int) -> float:
    """Mirror of :func:`lemma_time_gap` for full-height rectangles: gap to
    J_Nd(B) - J_Nd(C); vanishes on zero-momentum solutions."""
    rect = noether_rect(field, p, B, C, 0, field.n_time - 1)
    gap = rect - (momentum_Nd(field, p, B) - momentum_Nd(field, p, C))
    return float(np.abs(gap).max())


# -- aggregated report ----------------------------------------------------------


@dataclass
class ConservationReport:
    kind: str                       # "time" or "space"
    indices: np.ndarray             # slice indices the series run over
    energy: np.ndarray              # (n,)
    momentum: np.ndarray            # (n, 6)
    energy_rel_drift: np.ndarray    # |E - E0| / max(|E0|, floor)
    momentum_rel_drift: np.ndarray  # inf-norm drift relative to first slice
    noether_residual: np.ndarray    # whole-domain edge sum, 6 components
    noether_scale: float            # max slice momentum inf-norm
    orthogonality_drift: float

    @property
    def max_energy_drift(self) -> float:
        return float(self.energy_rel_drift.max()) if self.energy_rel_drift.size else 0.0

    @property
    def max_momentum_drift(self) -> float:
        return float(self.momentum_rel_drift.max()) if self.momentum_rel_drift.size else 0.0


def _rel_drift(series: np.ndarray) -> np.ndarray:
    ref = series[0]
    scale = np.abs(series).max()
    denom = max(np.abs(ref).max(), _DRIFT_FLOOR * max(scale, 1.0), 1e-300)
    return np.abs(series - ref).reshape(series.shape[0], -1).max(axis=1) / denom


def conservation_report(field: DiscreteField, p: BeamParams) -> ConservationReport:
    """Energy/momentum series along the field's own marching direction."""
    from covariant_beam.liegroup import rotation_defect

    if field.bc == BC_ZERO_MOMENTUM:
        idx = np.arange(field.n_space - 1)
        energy = np.array([energy_Nd(field, p, a) for a in idx])
        mom = np.stack([momentum_Nd(field, p, a) for a in idx])
        noether = noether_space_edge_sum(field, p)
        kind = "space"
    else:
        idx = np.arange(field.n_time - 1)
        energy = np.array([energy_Ld(field, p, j) for j in idx])
        mom = np.stack([momentum_Ld(field, p, j) for j in idx])
        noether = noether_time_edge_sum(field, p)
        kind = "time"
    return ConservationReport(
        kind=kind,
        indices=idx,
        energy=energy,
        momentum=mom,
        energy_rel_drift=_rel_drift(energy),
        momentum_rel_drift=_rel_drift(mom),
        noether_residual=noether,
        noether_scale=float(np.abs(mom).max()),
        orthogonality_drift=rotation_defect(field.rot),
    )


@dataclass
class CrossConsistencyReport:
    """Nodewise agreement between a field and its transverse re-march."""

    direction: str                  # re-marching direction
    max_dev: float                  # position inf-norm over compared slices
    per_slice_dev: np.ndarray       # max |dpos| per re-marched slice
    clamped_edges: str              # which edge slices were clamped to data
    excluded: str                   # what the comparison excludes, and why
    first_exceed: int | None = None # first slice where dev > tol, if any
    diverged_at: int | None = None  # slice where the re-march solve gave up
    tol: float = 1e-6

    @property
    def first_slice_dev(self) -> float:
        """Deviation of the first re-marched slice (slice 2)."""
        return float(self.per_slice_dev[0]) if self.per_slice_dev.size else 0.0

    def summary(self) -> str:
        lines = [
            f"cross-consistency ({self.direction} re-march): max |dpos| = {self.max_dev:.3e}",
            f"clamped edges: {self.clamped_edges}",
            f"excluded from tolerance: {self.excluded}",
        ]
        if self.diverged_at is not None:
            lines.append(f"re-march solve diverged at slice {self.diverged_at}; "
                         "later slices keep the reference data and are excluded")
        if self.first_exceed is not None:
            lines.append(
                f"divergence grows along the re-marching direction: first slice over "
                f"tol {self.tol:g} is slice {self.first_exceed}; per-slice max devs "
                f"{np.array2string(self.per_slice_dev, precision=2)}")
        return "\n".join(lines)


def cross_consistency(field: DiscreteField, remarched: DiscreteField,
                      direction: str, tol: float = 1e-6,
                      diverged_at: int | None = None) -> CrossConsistencyReport:
    dev = np.abs(remarched.pos - field.pos).max(axis=-1)
    if direction == "space":
        per, start = dev.max(axis=0), 2
        clamped = "time levels j=0 and j=T-1 taken from the reference field"
    else:
        per, start = dev.max(axis=1), 2
        clamped = "columns a=0 and a=S-1 taken from the reference field"
    per = per[start:]
    stop = diverged_at - start if diverged_at is not None else per.shape[0]
    over = np.nonzero(per[:stop] > tol)[0]
    return CrossConsistencyReport(
        direction=direction,
        max_dev=float(per[:stop].max()) if stop > 0 else 0.0,
        per_slice_dev=per[:stop],
        clamped_edges=clamped,
        excluded=clamped + " (edge slices carry no transverse marching equations)",
        first_exceed=int(over[0] + start) if over.size else None,
        diverged_at=diverged_at,
        tol=tol,
    )
