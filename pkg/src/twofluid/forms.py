"""Element kernels for the weak forms.

Each function returns local arrays indexed ``[e, test, trial]`` (or
``[e, test]`` for load vectors) that :func:`twofluid.linalg.assemble` sums
into global matrices.  Coefficients are passed as values at quadrature
points, shape ``(nt, nq)``; ``None`` means 1.

Vector velocity kernels use the 8-dof local layout of
:func:`twofluid.linalg.velocity_layout`: component 0 on local dofs 0..3,
component 1 on 4..7.
"""
from __future__ import annotations

import numpy as np

from .linalg import assemble, p1_layout, velocity_component_layout, velocity_layout
from .mesh import FESpace


def _w(space: FESpace, coef):
    return space.wq if coef is None else space.wq * coef


# ----------------------------------------------------------------- P1 forms
def p1_mass(space: FESpace, coef=None) -> np.ndarray:
    return np.einsum("eq,qa,qb->eab", _w(space, coef), space.lam, space.lam)


def p1_stiffness(space: FESpace, coef=None) -> np.ndarray:
    w = _w(space, coef).sum(axis=1)  # gradients are constant per element
    return w[:, None, None] * np.einsum("ead,ebd->eab", space.p1_grad, space.p1_grad)


def p1_advection(space: FESpace, u_qp: np.ndarray) -> np.ndarray:
    """``(u . grad phi_b, phi_a)``."""
    ug = np.einsum("eqd,ebd->eqb", u_qp, space.p1_grad)
    return np.einsum("eq,eqb,qa->eab", space.wq, ug, space.lam)


def p1_load(space: FESpace, f_qp: np.ndarray) -> np.ndarray:
    return np.einsum("eq,qa->ea", space.wq * f_qp, space.lam)


def p1_grad_load(space: FESpace, F_qp: np.ndarray) -> np.ndarray:
    """``(F, grad q_a)`` for a vector field given at quadrature points."""
    Fi = np.einsum("eq,eqd->ed", space.wq, F_qp)
    return np.einsum("ed,ead->ea", Fi, space.p1_grad)


# ------------------------------------------------------- P1-bubble forms
def vel_mass(space: FESpace, coef=None) -> np.ndarray:
    """Scalar P1-bubble mass, (nt, 4, 4)."""
    return np.einsum("eq,qa,qb->eab", _w(space, coef), space.vel_phi, space.vel_phi)


def vector_block(scalar: np.ndarray) -> np.ndarray:
    """Place a scalar (nt, 4, 4) kernel on both diagonal component blocks."""
    nt = scalar.shape[0]
    out = np.zeros((nt, 8, 8))
    out[:, :4, :4] = scalar
    out[:, 4:, 4:] = scalar
    return out


def vel_convection(space: FESpace, a_qp: np.ndarray, div_flux_qp: np.ndarray, w_qp: np.ndarray) -> np.ndarray:
    """``(div(a w (x) u), v)`` linear in u, for fixed density a and transport w.

    Expanded as ``div(a w) u + a (w . grad) u``; ``div_flux_qp`` is
    ``div(a w)``.  Same for both components, returned as (nt, 4, 4).
    """
    wg = np.einsum("eqd,eqbd->eqb", w_qp, space.vel_grad)
    trial = div_flux_qp[..., None] * space.vel_phi[None] + a_qp[..., None] * wg
    return np.einsum("eq,eqb,qa->eab", space.wq, trial, space.vel_phi)


def vel_convection_skew(space: FESpace, a_qp: np.ndarray, w_qp: np.ndarray, src_qp: np.ndarray) -> np.ndarray:
    """Energy-neutral convection ``1/2 (a w.grad u, v) - 1/2 (a w.grad v, u) + (src u, v)``.

    With ``src = -1/2 (a - a_old)/dt`` this equals the divergence form when
    the discrete mass balance holds pointwise, and its diagonal value
    ``c(u, u)`` is exactly ``-1/2 int (a - a_old)/dt |u|^2``.
    """
    wg = np.einsum("eqd,eqbd->eqb", w_qp, space.vel_grad)  # w . grad phi_b
    adv = np.einsum("eq,eqb,qa->eab", space.wq * a_qp, wg, space.vel_phi)
    return 0.5 * (adv - np.swapaxes(adv, 1, 2)) + vel_mass(space, src_qp)


def vel_viscous(space: FESpace, mu_qp: np.ndarray, lam_qp=None) -> np.ndarray:
    """``(2 mu D(u) + lam div(u) I, grad v)`` as an (nt, 8, 8) kernel."""
    G = space.vel_grad  # (nt, nq, 4, 2)
    wm = space.wq * mu_qp
    lap = np.einsum("eq,eqad,eqbd->eab", wm, G, G)
    out = np.zeros((space.nt, 8, 8))
    for c in range(2):
        for d in range(2):
            # mu * d_c(phi_b) * d_d(phi_a): test (a, comp c), trial (b, comp d)
            blk = np.einsum("eq,eqa,eqb->eab", wm, G[..., d], G[..., c])
            if c == d:
                blk = blk + lap
            if lam_qp is not None:
                blk = blk + np.einsum("eq,eqa,eqb->eab", space.wq * lam_qp, G[..., c], G[..., d])
            out[:, 4 * c:4 * c + 4, 4 * d:4 * d + 4] = blk
    return out


def vel_load(space: FESpace, F_qp: np.ndarray) -> np.ndarray:
    """``(F, v)`` for F given at quadrature points (nt, nq, 2) -> (nt, 8)."""
    loc = np.einsum("eqc,qa->eca", space.wq[..., None] * F_qp, space.vel_phi)
    return loc.reshape(space.nt, 8)


def vel_grad_load(space: FESpace, T_qp: np.ndarray) -> np.ndarray:
    """``(T, grad v)`` for a tensor field T[e, q, c, j] -> (nt, 8)."""
    loc = np.einsum("eq,eqcj,eqaj->eca", space.wq, T_qp, space.vel_grad)
    return loc.reshape(space.nt, 8)


def divergence_coupling(space: FESpace) -> np.ndarray:
    """``-(q, div v)``: test P1 q (3), trial velocity (8), shape (nt, 3, 8)."""
    G = space.vel_grad
    out = np.empty((space.nt, 3, 8))
    for c in range(2):
        out[:, :, 4 * c:4 * c + 4] = -np.einsum("eq,qa,eqb->eab", space.wq, space.lam, G[..., c])
    return out


# -------------------------------------------------------------- globals
def assemble_p1(space: FESpace, local: np.ndarray):
    lay = p1_layout(space)
    return assemble(local, lay, lay)


def assemble_vel(space: FESpace, local: np.ndarray):
    if local.shape[1] == 4:
        lay = velocity_component_layout(space)
    else:
        lay = velocity_layout(space)
    return assemble(local, lay, lay)


def scatter_p1(space: FESpace, local: np.ndarray) -> np.ndarray:
    return np.bincount(space.p1_dofs.ravel(), weights=local.ravel(), minlength=space.nv)


def scatter_vel(space: FESpace, local: np.ndarray) -> np.ndarray:
    """(nt, 8) local loads -> global (2, n_vel)."""
    lay = velocity_layout(space)
    flat = np.bincount(lay.dofs.ravel(), weights=local.ravel(), minlength=lay.ndof)
    return flat.reshape(2, space.n_vel)
