"""Beam material data and the three energy densities with their derivatives.

The beam has a square cross-section of side ``side_a`` and homogeneous
isotropic material.  Convective velocities xi and strains eta live in R^6
with (angular; linear) ordering; the unstrained reference strain is
``E6 = (0,0,0,0,0,1)`` (unit stretch along the third director).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from covariant_beam.liegroup import GroupElement

E6 = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])


class NonPositiveParam(ValueError):
    """A beam parameter that must be positive is not."""


@dataclass(frozen=True)
class BeamParams:
    rho: float                 # density, kg/m^3
    side_a: float              # cross-section side, m
    length_L: float            # beam length, m
    M: float                   # mass per unit length, kg/m
    J_inertia: np.ndarray      # 3x3 diagonal rotational inertia per unit length
    E_young: float             # N/m^2
    nu_poisson: float
    G_shear: float             # N/m^2, E / (2 (1 + nu))
    C1: np.ndarray             # 3x3 diag(GA, GA, EA), N
    C2: np.ndarray             # 3x3 diag(E I1, E I2, G I), N m^2
    gravity_q: np.ndarray      # gravity covector, N/m (zero disables gravity)
    dt: float
    ds: float
    N_steps: int               # round(T / dt)
    A_nodes: int               # round(L / ds) + 1 (node count incl. the free end)
    J6: np.ndarray = field(init=False, repr=False)   # blockdiag(J_inertia, M I3)
    C6: np.ndarray = field(init=False, repr=False)   # blockdiag(C2, C1)

    def __post_init__(self):
        J6 = np.zeros((6, 6))
        J6[:3, :3] = self.J_inertia
        J6[3:, 3:] = self.M * np.eye(3)
        C6 = np.zeros((6, 6))
        C6[:3, :3] = self.C2
        C6[3:, 3:] = self.C1
        object.__setattr__(self, "J6", J6)
        object.__setattr__(self, "C6", C6)

    @property
    def A_cells(self) -> int:
        """Number of spatial elements (= index of the free-end ghost node)."""
        return self.A_nodes - 1

    @property
    def has_gravity(self) -> bool:
        return bool(np.any(self.gravity_q != 0.0))


def build_params(rho, side_a, length_L, E_young, nu_poisson, gravity_q,
                 dt, ds, T_total) -> BeamParams:
    """Derive all material constants of a square-section beam.

    A = a^2, I1 = I2 = a^4/12, I = I1 + I2, C1 = diag(GA, GA, EA),
    C2 = diag(E I1, E I2, G I), M = rho A, J = rho diag(I1, I2, I).
    """
    for name, val in [("rho", rho), ("side_a", side_a), ("length_L", length_L),
                      ("E_young", E_young), ("dt", dt), ("ds", ds),
                      ("T_total", T_total)]:
        if not val > 0:
            raise NonPositiveParam(f"{name} must be positive, got {val}")
    if not 0 <= nu_poisson < 0.5:
        raise NonPositiveParam(f"nu_poisson must be in [0, 0.5), got {nu_poisson}")

    area = side_a ** 2
    I1 = side_a ** 4 / 12.0
    I2 = I1
    Ipol = I1 + I2
    G = E_young / (2.0 * (1.0 + nu_poisson))
    return BeamParams(
        rho=float(rho),
        side_a=float(side_a),
        length_L=float(length_L),
        M=rho * area,
        J_inertia=rho * np.diag([I1, I2, Ipol]),
        E_young=float(E_young),
        nu_poisson=float(nu_poisson),
        G_shear=G,
        C1=np.diag([G * area, G * area, E_young * area]),
        C2=np.diag([E_young * I1, E_young * I2, G * Ipol]),
        gravity_q=np.asarray(gravity_q, dtype=float),
        dt=float(dt),
        ds=float(ds),
        N_steps=round(T_total / dt),
        A_nodes=round(length_L / ds) + 1,
    )


def kinetic_K(xi, p: BeamParams):
    """Kinetic energy density (1/2) <J xi, xi>; batched over leading axes."""
    xi = np.asarray(xi, dtype=float)
    return 0.5 * np.einsum("...i,ij,...j->...", xi, p.J6, xi)


def elastic_Phi(eta, p: BeamParams):
    """Elastic energy density (1/2) <C (eta - E6), eta - E6>."""
    d = np.asarray(eta, dtype=float) - E6
    return 0.5 * np.einsum("...i,ij,...j->...", d, p.C6, d)


def potential_Pi(g: GroupElement, p: BeamParams):
    """Gravitational potential density <q, pos>."""
    return np.asarray(g.pos, dtype=float) @ p.gravity_q


def dK(xi, p: BeamParams) -> np.ndarray:
    """Momentum covector J xi."""
    return (p.J6 @ np.asarray(xi, dtype=float)[..., None])[..., 0]


def dPhi(eta, p: BeamParams) -> np.ndarray:
    """Stress covector C (eta - E6)."""
    return (p.C6 @ (np.asarray(eta, dtype=float) - E6)[..., None])[..., 0]


def dPi_triv(g: GroupElement, p: BeamParams) -> np.ndarray:
    """Left-trivialized gradient of the potential: (0; R^T q)."""
    rq = (np.swapaxes(g.rot, -1, -2) @ p.gravity_q)
    return np.concatenate([np.zeros_like(rq), rq], axis=-1)
