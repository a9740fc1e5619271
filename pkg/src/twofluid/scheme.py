"""Six-step projection time advance for the two-fluid model.

Per step m -> m+1 (phase index k: 0 = gas, 1 = liquid):

1. predict the partial densities alpha~ by a positivity-preserving transport
   solve with the old velocity u^m;
2. recover phi~, rho~ nodewise from alpha~ by the pressure-equilibrium closure;
3. renormalize the pressure: a pure-Neumann solve for p~_k;
4. momentum for both phases as one block system, Picard-iterated in the
   drag modulus, giving u~_k in the P1-bubble space;
5. the coupled projection for (alpha_g, alpha_l), Picard-iterated in its
   closure coefficients, then closure for (phi, rho, p);
6. end-of-step velocity: u_bar from the pressure update, then
   sqrt(alpha) u = sqrt(alpha~) u_bar nodewise.

Fields with a phase axis have shape ``(2, ...)``.  Velocities of one phase
have shape ``(2, n_vel)`` (component, dof).
"""
from __future__ import annotations

import logging
import time as _time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import forms
from .eos import ALPHA_MIN, ClosureFailure, EosParams, closure_solve
from .linalg import (
    SolverConfig,
    SolverFailure,
    SolverStats,
    solve,
    solve_constrained_mean,
    solve_dirichlet,
)
from .mesh import FESpace

log = logging.getLogger(__name__)

PHASES = ("g", "l")


class StepFailure(RuntimeError):
    def __init__(self, message: str, step: int | None = None, phase: str | None = None, detail=None):
        ctx = []
        if step is not None:
            ctx.append(f"step {step}")
        if phase is not None:
            ctx.append(f"phase {phase}")
        super().__init__(f"{message} ({', '.join(ctx)})" if ctx else message)
        self.step = step
        self.phase = phase
        self.detail = detail


@dataclass(frozen=True)
class DragModel:
    C_D: float = 0.0

    def __post_init__(self) -> None:
        if not self.C_D >= 0:
            raise ValueError("drag coefficient must be nonnegative")


@dataclass(frozen=True)
class PhysParams:
    mu_g: float
    mu_l: float
    drag: DragModel = DragModel()
    lam_g: float = 0.0
    lam_l: float = 0.0

    def __post_init__(self) -> None:
        if not (self.mu_g > 0 and self.mu_l > 0):
            raise ValueError("viscosities must be positive")

    def mu(self, k: int) -> float:
        return (self.mu_g, self.mu_l)[k]

    def lam(self, k: int) -> float:
        return (self.lam_g, self.lam_l)[k]


@dataclass
class SchemeConfig:
    dt: float
    picard_tol: float = 1e-8
    picard_max: int = 50
    drag_picard_tol: float = 1e-8
    drag_picard_max: int = 50
    step1_variant: str = "fct"  # or "upwind", "galerkin", "conservative"
    convection: str = "skew"  # or "divergence"
    transport_solver: SolverConfig = field(default_factory=lambda: SolverConfig(rtol=1e-12, method="bicgstab"))
    pressure_solver: SolverConfig = field(default_factory=lambda: SolverConfig(rtol=1e-10, method="cg"))
    momentum_solver: SolverConfig = field(default_factory=lambda: SolverConfig(rtol=1e-11, method="bicgstab"))
    projection_solver: SolverConfig = field(default_factory=lambda: SolverConfig(rtol=1e-12, method="gmres", restart=60, preconditioner="ilu"))
    mass_solver: SolverConfig = field(default_factory=lambda: SolverConfig(rtol=1e-12, method="cg"))
    validate: bool = True

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        for name in ("picard_tol", "drag_picard_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.picard_max < 1 or self.drag_picard_max < 1:
            raise ValueError("Picard caps must be >= 1")
        if self.step1_variant not in ("fct", "upwind", "galerkin", "conservative"):
            raise ValueError(f"unknown step-1 variant {self.step1_variant!r}")
        if self.convection not in ("skew", "divergence"):
            raise ValueError(f"unknown convection form {self.convection!r}")


@dataclass
class TwoFluidState:
    alpha: np.ndarray    # (2, nv)
    phi: np.ndarray      # (2, nv)
    rho: np.ndarray      # (2, nv)
    u: np.ndarray        # (2, 2, n_vel)
    p: np.ndarray        # (nv,)
    alpha_t: np.ndarray  # intermediates of the last completed step
    phi_t: np.ndarray
    rho_t: np.ndarray
    p_t: np.ndarray      # (2, nv)
    u_t: np.ndarray      # (2, 2, n_vel)
    m: int = 0
    time: float = 0.0

    def copy(self) -> "TwoFluidState":
        return TwoFluidState(
            **{k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}
        )


def state_from_alpha(
    space: FESpace,
    eos: EosParams,
    alpha: np.ndarray,
    u: np.ndarray | None = None,
    p_shift: np.ndarray | None = None,
) -> TwoFluidState:
    """Closure-consistent state at m = 0 with intermediates equal to the state.

    ``p_shift`` (nodal, mean zero) is added to the closure pressure to form
    the intermediate pressures p~_k.
    """
    alpha = np.asarray(alpha, dtype=float)
    cl = closure_solve(alpha[0], alpha[1], eos)
    phi = np.stack([cl.phi_g, cl.phi_l])
    rho = np.stack([cl.rho_g, cl.rho_l])
    if u is None:
        u = np.zeros((2, 2, space.n_vel))
    else:
        u = np.array(u, dtype=float)
        if u.shape == (2, space.n_vel):
            u = np.stack([u, u])
    p = np.array(cl.p, dtype=float)
    p_t = p + (0.0 if p_shift is None else p_shift)
    return TwoFluidState(
        alpha=alpha.copy(), phi=phi, rho=rho, u=u, p=p,
        alpha_t=alpha.copy(), phi_t=phi.copy(), rho_t=rho.copy(),
        p_t=np.stack([p_t, p_t]), u_t=u.copy(),
    )


@dataclass
class StepInfo:
    m: int
    time: float
    timings: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)
    step1_min_raw: np.ndarray | None = None
    seminorm_new: np.ndarray | None = None  # ||sqrt(phi~/rho~)^{m+1} grad p~_k||
    seminorm_old: np.ndarray | None = None  # ||sqrt(phi~/rho~)^m grad p^m||
    mass_change: np.ndarray | None = None


def kinetic_energy(space: FESpace, alpha: np.ndarray, u: np.ndarray) -> float:
    """0.5 * int alpha |u|^2 for one phase."""
    uq = space.vel_qp(u)
    return 0.5 * space.integrate(space.p1_qp(alpha) * np.sum(uq * uq, axis=-1))


def weighted_seminorm(space: FESpace, coef: np.ndarray, p: np.ndarray) -> float:
    """|| sqrt(coef) grad p ||_0 with coef a nodal P1 field."""
    g = space.p1_grad_e(p)
    return float(np.sqrt(space.integrate(space.p1_qp(coef) * np.sum(g * g, axis=1)[:, None])))


class ProjectionScheme:
    """Time stepper bound to one mesh, EOS and material set."""

    def __init__(self, space: FESpace, eos: EosParams, phys: PhysParams, config: SchemeConfig):
        self.space = space
        self.eos = eos
        self.phys = phys
        self.config = config
        s = space
        self.M = forms.assemble_p1(s, forms.p1_mass(s))
        self.Mv = forms.assemble_vel(s, forms.vel_mass(s))
        self.vel_fixed = ~s.vel_free
        self.vec_fixed = np.concatenate([self.vel_fixed, self.vel_fixed])
        self.stats = SolverStats()

    # ------------------------------------------------------------ helpers
    @property
    def dt(self) -> float:
        return self.config.dt

    def _vel_norm_sq(self, u: np.ndarray) -> float:
        return float(u[0] @ (self.Mv @ u[0]) + u[1] @ (self.Mv @ u[1]))

    def _closure(self, ag, al, where: str, m: int):
        try:
            return closure_solve(ag, al, self.eos)
        except ClosureFailure as exc:
            nodes = exc.nodes
            raise StepFailure(f"closure failed in {where} at nodes {nodes}", step=m, detail=exc) from exc

    # ------------------------------------------------------------ step 1
    def step1_system(self, alpha: np.ndarray, u: np.ndarray, variant: str | None = None):
        """Matrix and rhs of the positivity-variant transport solve for one phase.

        ``galerkin`` is the weak form with the (div u)^+- terms.  ``upwind``
        lumps its zeroth-order terms and adds the symmetric artificial
        diffusion d_ij = max(k_ij, 0, k_ji), so the matrix is an M-matrix
        with positive column sums and a nonnegative rhs.  ``fct`` solves the
        galerkin system first and feeds its antidiffusive fluxes into the
        upwind system, limited so that every rhs entry stays nonnegative.
        ``conservative`` drops the positivity terms altogether.
        """
        s = self.space
        dt = self.dt
        variant = variant or self.config.step1_variant
        d = s.div_qp(u)
        K = dt * forms.assemble_p1(s, forms.p1_advection(s, s.vel_qp(u)))
        if variant == "conservative":
            A = self.M + dt * forms.assemble_p1(s, forms.p1_mass(s, d)) + K
            return A.tocsr(), self.M @ alpha
        c_lhs = 1.0 + 0.5 * dt * d + 0.5 * dt * np.maximum(d, 0.0)
        c_rhs = 1.0 + 0.5 * dt * np.maximum(-d, 0.0)
        Mc = forms.assemble_p1(s, forms.p1_mass(s, c_lhs))
        Mr = forms.assemble_p1(s, forms.p1_mass(s, c_rhs))
        if variant == "galerkin":
            return (Mc + K).tocsr(), Mr @ alpha

        S = K.maximum(K.T).maximum(0.0).tolil()
        S.setdiag(0.0)
        S = S.tocsr()
        S.eliminate_zeros()
        D = sp.diags(np.asarray(S.sum(axis=1)).ravel()) - S
        L = np.asarray(Mc.sum(axis=1)).ravel()
        b_low = np.asarray(Mr.sum(axis=1)).ravel() * alpha
        A = (sp.diags(L) + K + D).tocsr()
        A.sort_indices()
        if variant == "upwind":
            return A, b_low

        # A_H x = b_H  <=>  A x = b_low + sum_j f_ij(x) with antisymmetric f_ij
        high = solve((Mc + K).tocsr(), Mr @ alpha, self.config.transport_solver, x0=alpha, stats=self.stats)
        W = (Mc + S).tocoo()
        R = Mr.tocoo()
        F = sp.coo_matrix((W.data * (high[W.row] - high[W.col]), (W.row, W.col)), shape=W.shape).tocsr()
        F = F - sp.coo_matrix((R.data * (alpha[R.row] - alpha[R.col]), (R.row, R.col)), shape=R.shape).tocsr()
        F = F.tocoo()
        neg = np.bincount(F.row, weights=np.minimum(F.data, 0.0), minlength=s.nv)
        with np.errstate(divide="ignore", invalid="ignore"):
            r_minus = np.where(neg < 0.0, np.minimum(1.0, b_low / -neg), 1.0)
        beta = np.where(F.data < 0.0, r_minus[F.row], r_minus[F.col])
        return A, b_low + np.bincount(F.row, weights=beta * F.data, minlength=s.nv)

    def step1_predict_alpha_raw(self, state: TwoFluidState) -> np.ndarray:
        out = np.empty_like(state.alpha)
        for k in range(2):
            A, b = self.step1_system(state.alpha[k], state.u[k])
            try:
                out[k] = solve(A, b, self.config.transport_solver, x0=state.alpha[k], stats=self.stats)
            except SolverFailure as exc:
                raise StepFailure(f"transport solve failed: {exc}", step=state.m + 1, phase=PHASES[k]) from exc
        return out

    def step1_predict_alpha(self, state: TwoFluidState) -> tuple[np.ndarray, np.ndarray]:
        """Returns (floored alpha~, min raw nodal value per phase)."""
        raw = self.step1_predict_alpha_raw(state)
        return np.maximum(raw, 0.0), raw.min(axis=1)

    # ------------------------------------------------------------ step 2
    def step2_pointwise_closure(self, alpha_t: np.ndarray, m: int = -1):
        cl = self._closure(alpha_t[0], alpha_t[1], "step 2", m)
        phi = np.stack([cl.phi_g, cl.phi_l])
        rho = np.stack([cl.rho_g, cl.rho_l])
        return phi, rho, cl

    # ------------------------------------------------------------ step 3
    def step3_renormalize_pressure(self, phi_new, rho_new, phi_old, rho_old, p_old, p_t_guess=None):
        """Returns (p~ per phase, new seminorms, old seminorms)."""
        s = self.space
        p_t = np.empty((2, s.nv))
        sn_new = np.empty(2)
        sn_old = np.empty(2)
        w = s.lumped_mass
        target = float(w @ p_old / w.sum())
        grad_old = s.p1_grad_e(p_old)
        for k in range(2):
            a1 = phi_new[k] / rho_new[k]
            a0 = phi_old[k] / rho_old[k]
            a1q, a0q = s.p1_qp(a1), s.p1_qp(a0)
            S = forms.assemble_p1(s, forms.p1_stiffness(s, a1q))
            F = np.sqrt(a1q * a0q)[..., None] * grad_old[:, None, :]
            b = forms.scatter_p1(s, forms.p1_grad_load(s, F))
            # correction about the guess; p is O(p0) with small variations
            x0 = p_old if p_t_guess is None else p_t_guess[k]
            x0 = x0 - float(w @ x0) / w.sum()  # S kills constants; centring keeps S x0 exact
            p_t[k] = x0 + solve_constrained_mean(
                S, b - S @ x0, target, self.config.pressure_solver, weights=w, stats=self.stats,
                rhs_scale=float(np.linalg.norm(b) + np.linalg.norm(abs(S) @ np.abs(x0))),
            )
            sn_new[k] = weighted_seminorm(s, a1, p_t[k])
            sn_old[k] = weighted_seminorm(s, a0, p_old)
        return p_t, sn_new, sn_old

    # ------------------------------------------------------------ step 4
    def _momentum_parts(self, k: int, alpha_old, u_old, alpha_t, phi_t, p_t):
        """Drag-independent matrix and rhs for phase k."""
        s = self.space
        dt = self.dt
        aq = s.p1_qp(alpha_t)
        uq = s.vel_qp(u_old)
        if self.config.convection == "skew":
            src = -0.5 * (aq - s.p1_qp(alpha_old)) / dt
            conv = forms.vel_convection_skew(s, aq, uq, src)
        else:
            div_flux = np.einsum("ed,eqd->eq", s.p1_grad_e(alpha_t), uq) + aq * s.div_qp(u_old)
            conv = forms.vel_convection(s, aq, div_flux, uq)
        scal = forms.vel_mass(s, aq / dt) + conv
        phq = s.p1_qp(phi_t)
        lam = self.phys.lam(k)
        local = forms.vector_block(scal) + forms.vel_viscous(
            s, phq * self.phys.mu(k), None if lam == 0 else phq * lam
        )
        A = forms.assemble_vel(s, local)
        # pressure term -(p~, div(phi~ v)) written as (phi~ grad p~, v); v = 0 on the boundary
        F = s.p1_qp(alpha_old)[..., None] * uq / dt - phq[..., None] * s.p1_grad_e(p_t)[:, None, :]
        b = forms.scatter_vel(s, forms.vel_load(s, F)).ravel()
        return A, b

    def drag_coefficient_qp(self, phi_t: np.ndarray, u_pair: np.ndarray) -> np.ndarray:
        s = self.space
        C = self.phys.drag.C_D
        if C == 0:
            return np.zeros((s.nt, s.nq))
        du = s.vel_qp(u_pair[0] - u_pair[1])
        return C * s.p1_qp(phi_t[0]) * s.p1_qp(phi_t[1]) * np.sqrt(np.sum(du * du, axis=-1))

    def step4_momentum(self, state: TwoFluidState, alpha_t, phi_t, p_t):
        """Returns (u~ for both phases, drag Picard iterations)."""
        s = self.space
        cfg = self.config
        m = state.m + 1
        parts = [self._momentum_parts(k, state.alpha[k], state.u[k], alpha_t[k], phi_t[k], p_t[k]) for k in range(2)]
        if self.phys.drag.C_D == 0:
            out = np.empty_like(state.u)
            for k in range(2):
                A, b = parts[k]
                out[k] = self._momentum_solve(A, b, self.vec_fixed, state.u[k], m, PHASES[k])
            return out, 1
        # both phases in one block system; Picard only on the slip-dependent
        # coefficient, damped by 1/2 (the undamped map has slope -(1 - slip ratio))
        fixed = np.concatenate([self.vec_fixed, self.vec_fixed])
        w = state.u.copy()
        for it in range(1, cfg.drag_picard_max + 1):
            Md = forms.assemble_vel(s, forms.vector_block(forms.vel_mass(s, self.drag_coefficient_qp(phi_t, w))))
            A = sp.bmat([[parts[0][0] + Md, -Md], [-Md, parts[1][0] + Md]], format="csr")
            b = np.concatenate([parts[0][1], parts[1][1]])
            new = self._momentum_solve(A, b, fixed, w, m, None).reshape(w.shape)
            diff = np.sqrt(sum(self._vel_norm_sq(new[k] - w[k]) for k in range(2)))
            size = np.sqrt(sum(self._vel_norm_sq(new[k]) for k in range(2)))
            if diff <= cfg.drag_picard_tol * size:
                return new, it
            w = 0.5 * (w + new)
        raise StepFailure(
            f"drag Picard did not converge in {cfg.drag_picard_max} iterations (last change {diff:.3e})",
            step=m, detail=diff,
        )

    def _momentum_solve(self, A, b, fixed, guess, m, phase):
        try:
            x = solve_dirichlet(A, b, fixed, 0.0, self.config.momentum_solver, x0=guess.ravel(), stats=self.stats)
        except SolverFailure as exc:
            raise StepFailure(f"momentum solve failed: {exc}", step=m, phase=phase) from exc
        return x.reshape(guess.shape)

    # ------------------------------------------------------------ step 5
    def projection_system(self, alpha_old, phi_t, rho_t, p_t, u_t, rho_it, c2_it):
        """Block matrix and rhs of one Picard iterate of the projection."""
        s = self.space
        dt = self.dt
        phq = [s.p1_qp(phi_t[k]) for k in range(2)]
        rq = [s.p1_qp(rho_it[k]) for k in range(2)]
        rtq = [s.p1_qp(rho_t[k]) for k in range(2)]
        c2q = s.p1_qp(c2_it)
        blocks = [[None, None], [None, None]]
        rhs = []
        for k in range(2):
            beta = phq[k] * rq[k] / rtq[k]
            for j in range(2):
                # C^2 (rho_l grad alpha_g + rho_g grad alpha_l)
                w = beta * c2q * rq[1 - j]
                S = forms.assemble_p1(s, forms.p1_stiffness(s, w))
                blocks[k][j] = dt * dt * S + (self.M if j == k else 0)
            flux = (phq[k] * rq[k])[..., None] * s.vel_qp(u_t[k])
            gp = beta[..., None] * s.p1_grad_e(p_t[k])[:, None, :]
            b = self.M @ alpha_old[k] + forms.scatter_p1(s, forms.p1_grad_load(s, dt * flux + dt * dt * gp))
            rhs.append(b)
        A = sp.bmat(blocks, format="csr")
        A.sort_indices()
        return A, np.concatenate(rhs)

    def step5_projection(self, state: TwoFluidState, alpha_t, phi_t, rho_t, p_t, u_t, closure_t):
        """Returns (alpha^{m+1}, closure result, Picard iterations)."""
        cfg = self.config
        m = state.m + 1
        nv = self.space.nv
        cur = alpha_t.copy()
        rho_it, c2_it = rho_t, np.asarray(closure_t.c_squared)
        change = np.inf
        for it in range(1, cfg.picard_max + 1):
            A, b = self.projection_system(state.alpha, phi_t, rho_t, p_t, u_t, rho_it, c2_it)
            # correction form: dt^2 S dominates M and S alpha nearly cancels, so
            # the residual floor eps |A| |alpha| would exceed rtol |b|
            try:
                dx = solve(A, b - A @ cur.ravel(), cfg.projection_solver, stats=self.stats)
            except SolverFailure as exc:
                raise StepFailure(f"projection solve failed: {exc}", step=m) from exc
            new = cur + dx.reshape(2, nv)
            change = max(
                np.sqrt((new[k] - cur[k]) @ (self.M @ (new[k] - cur[k]))) / np.sqrt(new[k] @ (self.M @ new[k]))
                for k in range(2)
            )
            cur = new
            if np.any(cur < 0):
                k = int(np.argmin(cur.min(axis=1)))
                node = int(np.argmin(cur[k]))
                raise StepFailure(
                    f"projection produced negative partial density {cur[k, node]:.3e} at node {node}",
                    step=m, phase=PHASES[k],
                )
            cl = self._closure(cur[0], cur[1], "step 5", m)
            if change <= cfg.picard_tol:
                return cur, cl, it
            rho_it = np.stack([cl.rho_g, cl.rho_l])
            c2_it = cl.c_squared
        raise StepFailure(
            f"projection Picard did not converge in {cfg.picard_max} iterations (last change {change:.3e})",
            step=m, detail=change,
        )

    # ------------------------------------------------------------ step 6
    def velocity_correction(self, rho_t_k, p_new, p_t_k, u_t_k) -> np.ndarray:
        """u_bar = u~ - dt Pi[(1/rho~) grad(p - p~)], Pi the L2 projection."""
        s = self.space
        g = s.p1_grad_e(p_new - p_t_k)
        F = (1.0 / s.p1_qp(rho_t_k))[..., None] * g[:, None, :]
        rhs = forms.scatter_vel(s, forms.vel_load(s, F))
        w = np.empty_like(rhs)
        for c in range(2):
            w[c] = solve_dirichlet(self.Mv, rhs[c], self.vel_fixed, 0.0, self.config.mass_solver,
                                   symmetric_hint=True, stats=self.stats)
        return u_t_k - self.dt * w

    def step6_renormalize_velocity(self, alpha_new_k, alpha_t_k, u_bar_k, m: int = -1, phase: str | None = None):
        s = self.space
        bad = np.flatnonzero(~(alpha_new_k >= ALPHA_MIN))
        if bad.size:
            raise StepFailure(
                f"alpha below floor at nodes {bad[:10].tolist()} (values {alpha_new_k[bad[:3]]})",
                step=m, phase=phase,
            )
        r_v = np.sqrt(alpha_t_k / alpha_new_k)
        tri = s.mesh.triangles
        r_b = np.sqrt(alpha_t_k[tri].mean(axis=1) / alpha_new_k[tri].mean(axis=1))
        scale = np.concatenate([r_v, r_b])
        return u_bar_k * scale[None, :]

    # ------------------------------------------------------------ advance
    def advance(self, state: TwoFluidState) -> tuple[TwoFluidState, StepInfo]:
        cfg = self.config
        m = state.m + 1
        info = StepInfo(m=m, time=state.time + cfg.dt)
        n0 = len(self.stats.iterations)
        tick = _time.perf_counter()

        def lap(name):
            nonlocal tick
            now = _time.perf_counter()
            info.timings[name] = now - tick
            tick = now

        alpha_t, info.step1_min_raw = self.step1_predict_alpha(state)
        lap("step1")
        phi_t, rho_t, cl_t = self.step2_pointwise_closure(alpha_t, m)
        lap("step2")
        p_t, info.seminorm_new, info.seminorm_old = self.step3_renormalize_pressure(
            phi_t, rho_t, state.phi_t, state.rho_t, state.p, state.p_t
        )
        lap("step3")
        u_t, info.iterations["drag_picard"] = self.step4_momentum(state, alpha_t, phi_t, p_t)
        lap("step4")
        alpha, cl, info.iterations["projection_picard"] = self.step5_projection(
            state, alpha_t, phi_t, rho_t, p_t, u_t, cl_t
        )
        lap("step5")
        p = np.asarray(cl.p, dtype=float)
        u = np.empty_like(u_t)
        for k in range(2):
            u_bar = self.velocity_correction(rho_t[k], p, p_t[k], u_t[k])
            u[k] = self.step6_renormalize_velocity(alpha[k], alpha_t[k], u_bar, m, PHASES[k])
        lap("step6")
        info.iterations["krylov"] = int(sum(self.stats.iterations[n0:]))
        w = self.space.lumped_mass
        info.mass_change = np.array([(w @ alpha[k] - w @ state.alpha[k]) / (w @ state.alpha[k]) for k in range(2)])

        new = TwoFluidState(
            alpha=alpha,
            phi=np.stack([cl.phi_g, cl.phi_l]),
            rho=np.stack([cl.rho_g, cl.rho_l]),
            u=u,
            p=p,
            alpha_t=alpha_t,
            phi_t=phi_t,
            rho_t=rho_t,
            p_t=p_t,
            u_t=u_t,
            m=m,
            time=info.time,
        )
        if cfg.validate:
            validate_state(self.space, self.eos, new)
        log.debug("step %d: %s", m, info.timings)
        return new, info


def validate_state(space: FESpace, eos: EosParams, state: TwoFluidState, closure_tol: float = 1e-9) -> None:
    """Raise StepFailure if a state invariant is violated."""
    m = state.m
    for name in ("alpha", "phi", "rho", "u", "p", "p_t"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise StepFailure(f"non-finite values in {name}", step=m)
    if np.any(state.alpha < 0):
        raise StepFailure("negative partial density", step=m)
    part = np.max(np.abs(state.phi[0] + state.phi[1] - 1.0))
    if part > 1e-12:
        raise StepFailure(f"volume fractions sum to 1 only within {part:.3e}", step=m)
    if np.any(state.u[:, :, : space.nv][:, :, space.mesh.boundary_vertices] != 0.0):
        raise StepFailure("velocity nonzero on the Dirichlet boundary", step=m)
    cl = closure_solve(state.alpha[0], state.alpha[1], eos)
    err = max(
        np.max(np.abs(cl.rho_g - state.rho[0]) / cl.rho_g),
        np.max(np.abs(cl.rho_l - state.rho[1]) / cl.rho_l),
        np.max(np.abs(cl.p - state.p) / cl.p),
    )
    if err > closure_tol:
        raise StepFailure(f"state inconsistent with closure ({err:.3e})", step=m)


__all__ = [
    "DragModel",
    "PhysParams",
    "ProjectionScheme",
    "SchemeConfig",
    "StepFailure",
    "StepInfo",
    "TwoFluidState",
    "kinetic_energy",
    "state_from_alpha",
    "validate_state",
    "weighted_seminorm",
]
