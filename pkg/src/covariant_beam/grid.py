"""Storage and views of the discrete configuration field g[j, a].

Axis 0 is time (j), axis 1 is space (a).  A field produced by the time
marcher stores all real time levels (t = 0 .. T) and the dynamic space
nodes a = 0 .. A-1; the free-end ghost node a = A is not stored (it is the
unstrained extension and never enters the update).  A field produced by
the space marcher mirrors this: all real space nodes (s = 0 .. L) and the
dynamic time levels j = 0 .. N-1.

Velocities xi and strains eta are extracted from group differences:

    tau(dt * xi[j, a]) = g[j, a]^-1 g[j+1, a]
    tau(ds * eta[j, a]) = g[j, a]^-1 g[j, a+1]
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from covariant_beam import liegroup as lg
from covariant_beam.beam import E6
from covariant_beam.liegroup import GroupElement

# Boundary convention carried by a field: which natural boundary condition
# its producing run imposed.  Determines the conventioned edge momenta
# (lambda = 0 on the last column under zero traction, mu = 0 on the last
# row under zero momentum).
BC_ZERO_TRACTION = "zero_traction"
BC_ZERO_MOMENTUM = "zero_momentum"
BC_NONE = "none"


@dataclass
class DiscreteField:
    rot: np.ndarray          # (T, S, 3, 3)
    pos: np.ndarray          # (T, S, 3)
    dt: float
    ds: float
    bc: str = BC_NONE

    @property
    def n_time(self) -> int:
        return self.rot.shape[0]

    @property
    def n_space(self) -> int:
        return self.rot.shape[1]

    def node(self, j: int, a: int) -> GroupElement:
        self._check(j, a)
        return GroupElement(self.rot[j, a], self.pos[j, a])

    def time_slice(self, j: int) -> GroupElement:
        """All space nodes at time level j, batched over a."""
        self._check(j, 0)
        return GroupElement(self.rot[j], self.pos[j])

    def space_slice(self, a: int) -> GroupElement:
        """All time levels of node a, batched over j."""
        self._check(0, a)
        return GroupElement(self.rot[:, a], self.pos[:, a])

    def _check(self, j: int, a: int) -> None:
        if not (-self.n_time <= j < self.n_time and -self.n_space <= a < self.n_space):
            raise IndexError(f"node ({j}, {a}) outside {self.n_time} x {self.n_space} grid")

    # -- discrete velocities and strains ------------------------------------

    def xi_at(self, j: int, a: int) -> np.ndarray:
        if not 0 <= j < self.n_time - 1:
            raise IndexError(f"xi needs time levels {j}, {j + 1}; have {self.n_time}")
        self._check(j, a)
        d = lg.compose(lg.inverse(self.node(j, a)), self.node(j + 1, a))
        return lg.tau_inv_se3(d) / self.dt

    def eta_at(self, j: int, a: int) -> np.ndarray:
        if not 0 <= a < self.n_space - 1:
            raise IndexError(f"eta needs space nodes {a}, {a + 1}; have {self.n_space}")
        self._check(j, a)
        d = lg.compose(lg.inverse(self.node(j, a)), self.node(j, a + 1))
        return lg.tau_inv_se3(d) / self.ds

    def xi_slice(self, j: int) -> np.ndarray:
        """xi[j, :] for all nodes, shape (S, 6)."""
        if not 0 <= j < self.n_time - 1:
            raise IndexError(f"xi slice {j} needs time level {j + 1}")
        d = lg.compose(lg.inverse(self.time_slice(j)), self.time_slice(j + 1))
        return lg.tau_inv_se3(d) / self.dt

    def eta_slice(self, j: int) -> np.ndarray:
        """eta[j, a] for a = 0 .. S-2, shape (S-1, 6)."""
        g = self.time_slice(j)
        left = GroupElement(g.rot[:-1], g.pos[:-1])
        right = GroupElement(g.rot[1:], g.pos[1:])
        return lg.tau_inv_se3(lg.compose(lg.inverse(left), right)) / self.ds

    def xi_col(self, a: int) -> np.ndarray:
        """xi[j, a] for j = 0 .. T-2, shape (T-1, 6)."""
        g = self.space_slice(a)
        lower = GroupElement(g.rot[:-1], g.pos[:-1])
        upper = GroupElement(g.rot[1:], g.pos[1:])
        return lg.tau_inv_se3(lg.compose(lg.inverse(lower), upper)) / self.dt

    def eta_col(self, a: int) -> np.ndarray:
        """eta[:, a] for all time levels, shape (T, 6)."""
        if not 0 <= a < self.n_space - 1:
            raise IndexError(f"eta column {a} needs space node {a + 1}")
        d = lg.compose(lg.inverse(self.space_slice(a)), self.space_slice(a + 1))
        return lg.tau_inv_se3(d) / self.ds

    # -- views ---------------------------------------------------------------

    def transposed(self) -> "DiscreteField":
        """Swap the time and space roles (axes and steps); no data copy."""
        return replace(self, rot=self.rot.swapaxes(0, 1), pos=self.pos.swapaxes(0, 1),
                       dt=self.ds, ds=self.dt)

    def ghost_node(self, j: int) -> GroupElement:
        """Free-end ghost a = A by unstrained extension of the last node."""
        return lg.compose(self.node(j, self.n_space - 1), lg.tau_se3(self.ds * E6))

    def copy(self) -> "DiscreteField":
        return replace(self, rot=self.rot.copy(), pos=self.pos.copy())


def repackage(field: DiscreteField) -> Iterator[GroupElement]:
    """Iterate the field in the transposed orientation (space slices of a
    time-built field and vice versa)."""
    for a in range(field.n_space):
        yield field.space_slice(a)


def grow_slice(g0: GroupElement, strains: np.ndarray, step: float) -> GroupElement:
    """Chain nodes g_{k+1} = g_k tau(step * strains[k]) starting from g0.

    Returns a batched GroupElement of len(strains) + 1 nodes.
    """
    strains = np.asarray(strains, dtype=float)
    n = strains.shape[0] + 1
    rot = np.empty((n, 3, 3))
    pos = np.empty((n, 3))
    rot[0], pos[0] = g0.rot, g0.pos
    inc = lg.tau_se3(step * strains)
    for k in range(n - 1):
        rot[k + 1] = rot[k] @ inc.rot[k]
        pos[k + 1] = rot[k] @ inc.pos[k] + pos[k]
    return GroupElement(rot, pos)


def build_from_boundary_time(g00: GroupElement, eta0_profile, eta1_profile,
                             dt: float, ds: float,
                             g01: GroupElement | None = None) -> tuple[GroupElement, GroupElement]:
    """Initial pair of time slices from strain profiles.

    Slice j=0 is grown from ``g00`` by successive tau(ds * eta0[a]); slice
    j=1 from ``g01`` (default: ``g00``, i.e. a beam initially at rest) by
    tau(ds * eta1[a]).  Profiles of length A-1 produce slices of A nodes.
    """
    if g01 is None:
        g01 = g00
    s0 = grow_slice(g00, np.atleast_2d(eta0_profile), ds)
    s1 = grow_slice(g01, np.atleast_2d(eta1_profile), ds)
    return s0, s1


def build_from_boundary_space(g00: GroupElement, xi0_profile, xi1_profile,
                              dt: float, ds: float,
                              g10: GroupElement | None = None) -> tuple[GroupElement, GroupElement]:
    """Initial pair of space slices (columns) from velocity profiles.

    Column a=0 is grown from ``g00`` by successive tau(dt * xi0[j]); column
    a=1 from ``g10`` (default: unstrained offset g00 tau(ds * E6)) by
    tau(dt * xi1[j]).
    """
    if g10 is None:
        g10 = lg.compose(g00, lg.tau_se3(ds * E6))
    c0 = grow_slice(g00, np.atleast_2d(xi0_profile), dt)
    c1 = grow_slice(g10, np.atleast_2d(xi1_profile), dt)
    return c0, c1


def field_from_time_slices(slices: list[GroupElement], dt: float, ds: float,
                           bc: str = BC_ZERO_TRACTION) -> DiscreteField:
    rot = np.stack([s.rot for s in slices])
    pos = np.stack([s.pos for s in slices])
    return DiscreteField(rot, pos, dt, ds, bc)


def field_from_space_slices(cols: list[GroupElement], dt: float, ds: float,
                            bc: str = BC_ZERO_MOMENTUM) -> DiscreteField:
    rot = np.stack([c.rot for c in cols], axis=1)
    pos = np.stack([c.pos for c in cols], axis=1)
    return DiscreteField(rot, pos, dt, ds, bc)
