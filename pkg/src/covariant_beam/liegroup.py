"""SO(3)/SE(3) kernels: hat maps, Cayley retraction, trivialized derivatives,
adjoint and coadjoint actions.

All functions broadcast over leading axes: vectors are ``(..., 3)`` or
``(..., 6)``, matrices ``(..., 3, 3)``.  Algebra vectors are ordered
(angular; linear).  Group elements are (rotation, position) pairs; see
:class:`GroupElement`.

Nothing here re-orthonormalizes rotations: every group element produced by
the integrators is a product of exact Cayley images, so drift is limited to
floating-point accumulation (measured by the diagnostics, not corrected).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

I3 = np.eye(3)

# Chart boundary for the inverse Cayley map: 1 + tr(R) -> 0 at rotations by pi.
_TRACE_TOL = 1e-10


class NearPiRotation(ValueError):
    """Rotation too close to angle pi for the Cayley chart."""


class GroupElement(NamedTuple):
    """SE(3) element as (rotation, position); both may carry batch axes."""

    rot: np.ndarray  # (..., 3, 3)
    pos: np.ndarray  # (..., 3)


def identity(shape: tuple = ()) -> GroupElement:
    rot = np.broadcast_to(I3, shape + (3, 3)).copy()
    pos = np.zeros(shape + (3,))
    return GroupElement(rot, pos)


def hat(w) -> np.ndarray:
    """Skew matrix of w, so that hat(w) @ v == cross(w, v)."""
    w = np.asarray(w, dtype=float)
    m = np.zeros(w.shape[:-1] + (3, 3))
    m[..., 0, 1] = -w[..., 2]
    m[..., 0, 2] = w[..., 1]
    m[..., 1, 0] = w[..., 2]
    m[..., 1, 2] = -w[..., 0]
    m[..., 2, 0] = -w[..., 1]
    m[..., 2, 1] = w[..., 0]
    return m


def vee(m) -> np.ndarray:
    """Inverse of :func:`hat` (uses the antisymmetric part of m)."""
    m = np.asarray(m, dtype=float)
    return 0.5 * np.stack(
        [
            m[..., 2, 1] - m[..., 1, 2],
            m[..., 0, 2] - m[..., 2, 0],
            m[..., 1, 0] - m[..., 0, 1],
        ],
        axis=-1,
    )


def cay_so3(w) -> np.ndarray:
    """Cayley map R = I + 4/(4+|w|^2) (hat(w) + hat(w)^2/2).

    Exact rotation for every w; the rotation angle is 2*atan(|w|/2).
    """
    w = np.asarray(w, dtype=float)
    W = hat(w)
    n2 = np.sum(w * w, axis=-1)[..., None, None]
    return I3 + 4.0 / (4.0 + n2) * (W + 0.5 * (W @ W))


def cay_inv_so3(rot) -> np.ndarray:
    """Inverse Cayley map, w = vee(2 (R - R^T) / (1 + tr R)).

    Raises :class:`NearPiRotation` when 1 + tr(R) is within 1e-10 of zero
    (rotations by +-pi are outside the chart).
    """
    rot = np.asarray(rot, dtype=float)
    tr = np.trace(rot, axis1=-2, axis2=-1)
    if np.any(np.abs(1.0 + tr) < _TRACE_TOL):
        raise NearPiRotation("rotation within 1e-10 of angle pi: Cayley chart boundary")
    s = 2.0 / (1.0 + tr)[..., None, None] * (rot - np.swapaxes(rot, -1, -2))
    return np.stack([s[..., 2, 1], s[..., 0, 2], s[..., 1, 0]], axis=-1)


def tau_se3(v) -> GroupElement:
    """SE(3) Cayley retraction of an algebra vector v = (w; u)."""
    v = np.asarray(v, dtype=float)
    w, u = v[..., :3], v[..., 3:]
    W = hat(w)
    n2 = np.sum(w * w, axis=-1)[..., None, None]
    rot = I3 + 4.0 / (4.0 + n2) * (W + 0.5 * (W @ W))
    A = I3 + 0.5 * W + 0.25 * w[..., :, None] * w[..., None, :]
    pos = (4.0 / (4.0 + n2) * A @ u[..., None])[..., 0]
    return GroupElement(rot, pos)


def tau_inv_se3(g: GroupElement) -> np.ndarray:
    """Inverse retraction: (cay^-1 rot; 2 (rot + I)^-1 pos)."""
    w = cay_inv_so3(g.rot)
    u = 2.0 * np.linalg.solve(g.rot + I3, np.asarray(g.pos, float)[..., None])[..., 0]
    return np.concatenate([w, u], axis=-1)


def dtau_inv_se3(v) -> np.ndarray:
    """6x6 matrix of the inverse right-trivialized derivative of tau at v.

    Block form, with w = v[:3], u = v[3:]:

        [ I - hat(w)/2 + w w^T/4              0          ]
        [ -(I - hat(w)/2) hat(u)/2      I - hat(w)/2     ]
    """
    v = np.asarray(v, dtype=float)
    w, u = v[..., :3], v[..., 3:]
    W = hat(w)
    out = np.zeros(v.shape[:-1] + (6, 6))
    br = I3 - 0.5 * W
    out[..., :3, :3] = br + 0.25 * w[..., :, None] * w[..., None, :]
    out[..., 3:, :3] = -0.5 * br @ hat(u)
    out[..., 3:, 3:] = br
    return out


def dtau_inv_star(v, p) -> np.ndarray:
    """Apply the transpose of :func:`dtau_inv_se3` at v to a covector p."""
    p = np.asarray(p, dtype=float)
    return (np.swapaxes(dtau_inv_se3(v), -1, -2) @ p[..., None])[..., 0]


def Ad(g: GroupElement, v) -> np.ndarray:
    """Adjoint action of g = (R, r) on v = (w; u): (Rw; Ru + r x Rw)."""
    v = np.asarray(v, dtype=float)
    w, u = v[..., :3], v[..., 3:]
    rw = (g.rot @ w[..., None])[..., 0]
    ru = (g.rot @ u[..., None])[..., 0]
    return np.concatenate([rw, ru + np.cross(g.pos, rw)], axis=-1)


def Ad_star(g: GroupElement, p) -> np.ndarray:
    """Coadjoint action at the inverse element: Ad*_{g^-1} p.

    For g = (R, r) and p = (m; n) this is (Rm + r x Rn; Rn); it is the
    dual of Ad at g^-1 under the dot-product pairing.
    """
    p = np.asarray(p, dtype=float)
    m, n = p[..., :3], p[..., 3:]
    rn = (g.rot @ n[..., None])[..., 0]
    rm = (g.rot @ m[..., None])[..., 0]
    return np.concatenate([rm + np.cross(g.pos, rn), rn], axis=-1)


def coAd(g: GroupElement, p) -> np.ndarray:
    """Dual of Ad at g itself: coAd(g, p) = Ad*_{(g^-1)^-1} p = (Ad_g)* p."""
    return Ad_star(inverse(g), p)


def compose(g1: GroupElement, g2: GroupElement) -> GroupElement:
    rot = g1.rot @ g2.rot
    pos = (g1.rot @ np.asarray(g2.pos, float)[..., None])[..., 0] + g1.pos
    return GroupElement(rot, pos)


def inverse(g: GroupElement) -> GroupElement:
    rt = np.swapaxes(g.rot, -1, -2)
    return GroupElement(rt, -(rt @ np.asarray(g.pos, float)[..., None])[..., 0])


def rotation_defect(rot) -> float:
    """Max deviation of R^T R from I and of det(R) from 1 (drift monitor)."""
    rot = np.asarray(rot, dtype=float)
    gram = np.swapaxes(rot, -1, -2) @ rot - I3
    det = np.linalg.det(rot) - 1.0
    return float(max(np.abs(gram).max(), np.abs(det).max()))
