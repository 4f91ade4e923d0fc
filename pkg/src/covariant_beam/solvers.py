"""Implicit discrete Legendre solves.

Both marching directions need the same scalar problem per node: given a
momentum covector m, find the algebra vector x with

    dtau_inv(h x)^T  W (x - x0)  =  m

where (h, W, x0) is (dt, J6, 0) for the time direction and (ds, C6, E6)
for the space direction.  W is block diagonal with a small angular block
and an O(1) linear block, which makes the plain 6x6 Newton iteration
fragile: the linear residual dominates any norm until it is converged,
during which the angular unknown can drift into a spurious far-away root.

The solver therefore eliminates the linear block exactly,

    lin(ang) = x0_lin + Wl^-1 (I + hat(h ang)/2)^-1 m_lin,

and runs a damped Newton iteration on the reduced 3x3 angular system

    (I + hat(w)/2 + w w^T/4) Wa ang + (h/2) lin(ang) x m_lin = m_ang,

with w = h * ang.  Two full-system Newton polish steps then push the
6-vector residual to the floating-point floor.  All operations broadcast
over a leading batch axis, so a whole marching front solves at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from covariant_beam.liegroup import I3, dtau_inv_se3, dtau_inv_star, hat

_EPS = np.finfo(float).eps


class NewtonDivergence(RuntimeError):
    """Newton iteration failed to reach the residual tolerance.

    Signals a step size too large for the current state (the retraction
    chart is reliable for |h * angular part| < 2) or inconsistent data.
    """

    def __init__(self, message: str, residual: float, context: dict | None = None):
        super().__init__(f"{message} (residual {residual:.3e}, context {context})")
        self.residual = residual
        self.context = context or {}


@dataclass(frozen=True)
class NewtonParams:
    tol: float = 1e-12          # residual inf-norm threshold, relative to max(1, |m|)
    max_iter: int = 50
    fd_jacobian: bool = False   # finite-difference Jacobian fallback (debugging aid)


def legendre_residual(x, h: float, W: np.ndarray, x0: np.ndarray, m) -> np.ndarray:
    """F(x) = dtau_inv(h x)^T W (x - x0) - m."""
    x = np.asarray(x, dtype=float)
    p = (W @ (x - x0)[..., None])[..., 0]
    return dtau_inv_star(h * x, p) - np.asarray(m, dtype=float)


def legendre_jacobian(x, h: float, W: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Analytic Jacobian of :func:`legendre_residual` in x."""
    x = np.asarray(x, dtype=float)
    v = h * x
    p = (W @ (x - x0)[..., None])[..., 0]
    return np.swapaxes(dtau_inv_se3(v), -1, -2) @ W + h * _dstar_dv(v, p)


def _dstar_dv(v, p) -> np.ndarray:
    """Derivative of v -> dtau_inv(v)^T p at fixed p, as a 6x6 matrix."""
    w, u = v[..., :3], v[..., 3:]
    pa, pl = p[..., :3], p[..., 3:]
    T = np.zeros(v.shape[:-1] + (6, 6))
    wpa = np.sum(w * pa, axis=-1)[..., None, None]
    T[..., :3, :3] = (-0.5 * hat(pa)
                      + 0.25 * (w[..., :, None] * pa[..., None, :] + wpa * I3)
                      - 0.25 * hat(u) @ hat(pl))
    T[..., :3, 3:] = -0.5 * hat(((I3 + 0.5 * hat(w)) @ pl[..., None])[..., 0])
    T[..., 3:, :3] = -0.5 * hat(pl)
    return T


def _fd_jacobian(x, h, W, x0, m, step=1e-7):
    J = np.zeros(x.shape[:-1] + (6, 6))
    for k in range(6):
        e = np.zeros(6)
        e[k] = step
        J[..., :, k] = (legendre_residual(x + e, h, W, x0, m)
                        - legendre_residual(x - e, h, W, x0, m)) / (2 * step)
    return J


def solve_legendre(m, h: float, W: np.ndarray, x0: np.ndarray, guess,
                   newton: NewtonParams = NewtonParams(),
                   context: dict | None = None) -> tuple[np.ndarray, int]:
    """Solve the implicit Legendre relation for x; returns (x, iterations).

    The convergence test is on the full 6-vector residual inf-norm,
    relative to max(1, |m|_inf).  Raises :class:`NewtonDivergence` on
    failure.
    """
    m = np.asarray(m, dtype=float)
    guess = np.asarray(guess, dtype=float)
    scale = max(1.0, float(np.abs(m).max())) if m.size else 1.0
    tol = newton.tol * scale

    ang, lin, reduced_its = _reduced_newton(m, h, W, x0, guess[..., :3].copy(),
                                            0.01 * tol, newton.max_iter)
    x = np.concatenate([ang, lin], axis=-1)

    # Full-system polish: drives the residual to the floating-point floor
    # provided the reduced iteration landed in the right basin.
    its = reduced_its
    for _ in range(4):
        r = legendre_residual(x, h, W, x0, m)
        rn = float(np.abs(r).max())
        if rn < max(tol * 1e-3, 8 * _EPS * scale):
            break
        J = _fd_jacobian(x, h, W, x0, m) if newton.fd_jacobian else legendre_jacobian(x, h, W, x0)
        x = x - np.linalg.solve(J, r[..., None])[..., 0]
        its += 1

    rn = float(np.abs(legendre_residual(x, h, W, x0, m)).max())
    if not np.isfinite(rn) or rn >= tol:
        raise NewtonDivergence("Legendre solve did not converge", rn, context)
    return x, its


def _reduced_newton(m, h, W, x0, ang, tol, max_iter):
    Wa, Wl = W[:3, :3], W[3:, 3:]
    m_ang, m_lin = m[..., :3], m[..., 3:]
    x0l = x0[3:]

    def lin_of(ang):
        B = I3 + 0.5 * hat(h * ang)
        y = np.linalg.solve(B, m_lin[..., None])[..., 0]
        return x0l + np.linalg.solve(Wl, y[..., None])[..., 0]

    def G(ang):
        w = h * ang
        pref = I3 + 0.5 * hat(w) + 0.25 * w[..., :, None] * w[..., None, :]
        p = (Wa @ ang[..., None])[..., 0]
        return ((pref @ p[..., None])[..., 0]
                + 0.5 * h * np.cross(lin_of(ang), m_lin) - m_ang)

    g = G(ang)
    gn = np.abs(g).max(axis=-1)
    it = 0
    for it in range(max_iter):
        if float(gn.max()) < tol:
            break
        Jg = _reduced_jacobian(ang, h, Wa, Wl, m_lin)
        dx = -np.linalg.solve(Jg, g[..., None])[..., 0]
        # per-node backtracking on |G|: keeps the angular unknown in the
        # basin of the continuation root instead of overshooting
        alpha = np.ones(gn.shape)
        for _ in range(40):
            cand = ang + alpha[..., None] * dx if ang.ndim > 1 else ang + alpha * dx
            g2 = G(cand)
            gn2 = np.abs(g2).max(axis=-1)
            bad = (gn2 > gn * (1.0 - 1e-4 * alpha)) & (gn > 0.01 * tol)
            if not np.any(bad):
                break
            alpha = np.where(bad, 0.5 * alpha, alpha)
        ang, g, gn = cand, g2, gn2
    return ang, lin_of(ang), it


def _reduced_jacobian(ang, h, Wa, Wl, m_lin):
    w = h * ang
    p = (Wa @ ang[..., None])[..., 0]
    pref = I3 + 0.5 * hat(w) + 0.25 * w[..., :, None] * w[..., None, :]
    B = I3 + 0.5 * hat(h * ang)
    Binv_mlin = np.linalg.solve(B, m_lin[..., None])[..., 0]
    wp = np.sum(w * p, axis=-1)[..., None, None]
    dpref_p = h * (-0.5 * hat(p) + 0.25 * (w[..., :, None] * p[..., None, :] + wp * I3))
    Jg = np.zeros(ang.shape[:-1] + (3, 3))
    for k in range(3):
        dw = np.zeros(3)
        dw[k] = h
        t1 = dpref_p[..., :, k] + (pref @ Wa[:, k][..., None])[..., 0]
        z = np.linalg.solve(B, (0.5 * hat(dw) @ Binv_mlin[..., None])[..., 0][..., None])[..., 0]
        dlin = -np.linalg.solve(Wl, z[..., None])[..., 0]
        Jg[..., :, k] = t1 + 0.5 * h * np.cross(dlin, m_lin)
    return Jg


def solve_legendre_time(mu, p, guess, newton: NewtonParams = NewtonParams(),
                        context: dict | None = None) -> np.ndarray:
    """Recover xi from mu = dtau_inv(dt xi)^T J6 xi."""
    x, _ = solve_legendre(mu, p.dt, p.J6, np.zeros(6), guess, newton, context)
    return x


def solve_legendre_space(lam, p, guess, newton: NewtonParams = NewtonParams(),
                         context: dict | None = None) -> np.ndarray:
    """Recover eta from lam = dtau_inv(ds eta)^T C6 (eta - E6)."""
    from covariant_beam.beam import E6

    x, _ = solve_legendre(lam, p.ds, p.C6, E6, guess, newton, context)
    return x
