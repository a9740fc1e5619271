"""Shipped scenarios, the Stokes velocity initializer and initial states."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import forms
from .eos import EosParams
from .linalg import SolverConfig, SolverFailure, velocity_layout, p1_layout, assemble
from .mesh import FESpace, build_uniform_mesh
from .scheme import DragModel, PhysParams, ProjectionScheme, SchemeConfig, TwoFluidState, state_from_alpha

log = logging.getLogger(__name__)

SCENARIOS = ("two_gas", "liquid_gas", "pressure_pulse")

# material tables; gamma follows from the unit exponents of A (m^{3 gamma - 1})
TWO_GAS_EOS = EosParams(A_g=3.8395e4, gamma_g=1.4, A_l=1.01325e5, gamma_l=1.7, rho_l0=4.0, p0=1.01325e5, rho_g_ref=2.0)
TWO_GAS_PHYS = PhysParams(mu_g=3.0e-4, mu_l=1.86e-4, drag=DragModel(100.0))
LIQUID_GAS_EOS = EosParams(A_g=3.8395e4, gamma_g=1.4, A_l=1.0e6, gamma_l=2.0, rho_l0=1000.0, p0=1.01325e5, rho_g_ref=2.0)
LIQUID_GAS_PHYS = PhysParams(mu_g=1.86e-4, mu_l=2.3e-3, drag=DragModel(100.0))


def gaussian(x, y, cx, cy, width=30.0):
    return np.exp(-width * ((x - cx) ** 2 + (y - cy) ** 2))


@dataclass
class ScenarioConfig:
    scenario: str
    nx: int = 20
    ny: int | None = None
    dt: float = 2e-3
    t_final: float = 0.4
    eos: EosParams = TWO_GAS_EOS
    phys: PhysParams = TWO_GAS_PHYS
    rho0: tuple[float, float] = (2.0, 4.0)
    phi_center: tuple[float, float] = (0.25, 0.25)
    forcing: float = 0.006  # f = forcing * (y, -x)
    output_every: int = 0   # VTK cadence in steps, 0 = final only
    out_dir: str | None = None
    scheme: dict = field(default_factory=dict)  # extra SchemeConfig fields

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.ny is None:
            self.ny = self.nx
        if not (self.t_final > 0 and self.dt > 0):
            raise ValueError("dt and t_final must be positive")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("mesh resolution must be positive")

    @property
    def n_steps(self) -> int:
        n = int(np.ceil(self.t_final / self.dt - 1e-9))
        return max(n, 1)

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(dt=self.dt, **self.scheme)

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


def scenario_config(name: str, **overrides) -> ScenarioConfig:
    """Desk-scale defaults for each shipped scenario."""
    if name == "two_gas":
        base = dict(dt=2e-3, t_final=0.4, eos=TWO_GAS_EOS, phys=TWO_GAS_PHYS, rho0=(2.0, 4.0),
                    phi_center=(0.25, 0.25), forcing=0.006)
    elif name == "liquid_gas":
        base = dict(dt=1e-4, t_final=0.02, eos=LIQUID_GAS_EOS, phys=LIQUID_GAS_PHYS, rho0=(2.0, 1000.0),
                    phi_center=(0.25, 0.25), forcing=0.01)
    elif name == "pressure_pulse":
        base = dict(nx=10, dt=1e-6, t_final=5e-4, eos=LIQUID_GAS_EOS, phys=LIQUID_GAS_PHYS,
                    rho0=(2.0, 1000.0), phi_center=(0.5, 0.5), forcing=0.0)
    else:
        raise ValueError(f"unknown scenario {name!r}; choose from {SCENARIOS}")
    base.update(overrides)
    return ScenarioConfig(scenario=name, **base)


# ---------------------------------------------------------------- Stokes
@dataclass
class StokesResult:
    u: np.ndarray  # (2, n_vel)
    p: np.ndarray  # (nv,), zero mean
    iterations: int
    residual: float


def stokes_system(space: FESpace, mu_qp: np.ndarray, forcing_qp: np.ndarray):
    """Blocks of -div(mu grad u) + grad p = f, div u = 0 (MINI element)."""
    s = space
    A = forms.assemble_vel(s, forms.vector_block(np.einsum(
        "eq,eqad,eqbd->eab", s.wq * mu_qp, s.vel_grad, s.vel_grad)))
    B = assemble(forms.divergence_coupling(s), velocity_layout(s), p1_layout(s))  # -(q, div v)
    f = forms.scatter_vel(s, forms.vel_load(s, forcing_qp)).ravel()
    return A.tocsr(), B.tocsr(), f


def stokes_solve(
    space: FESpace,
    viscosity: np.ndarray | float,
    forcing: Callable,
    config: SolverConfig | None = None,
) -> StokesResult:
    """Solve the steady Stokes problem with u = 0 on the boundary.

    ``viscosity`` is a nodal P1 field (or a constant); ``forcing(x, y)``
    returns the two components.  The pressure has zero mean, enforced by a
    Lagrange multiplier row; the full system is solved by GMRES with a
    block-diagonal preconditioner (incomplete LU on the velocity block,
    scaled pressure mass on the pressure block).
    """
    s = space
    cfg = config or SolverConfig(rtol=1e-12, atol=1e-15, method="gmres", restart=200)
    mu = np.broadcast_to(np.asarray(viscosity, dtype=float), (s.nv,))
    if np.any(mu <= 0):
        raise ValueError("viscosity must be positive")
    mu_qp = s.p1_qp(mu)
    X, Y = s.qp_xy[..., 0], s.qp_xy[..., 1]
    fx, fy = forcing(X, Y)
    F = np.stack(np.broadcast_arrays(fx, fy), axis=-1).astype(float)
    A, B, f = stokes_system(s, mu_qp, F)

    free_v = np.concatenate([s.vel_free, s.vel_free])
    Aff = A[free_v][:, free_v]
    Bf = B[:, free_v]
    w = s.lumped_mass[:, None]
    nf, n_p = Aff.shape[0], s.nv
    K = sp.bmat([
        [Aff, Bf.T, None],
        [Bf, None, sp.csr_matrix(w)],
        [None, sp.csr_matrix(w.T), None],
    ], format="csc")
    rhs = np.concatenate([f[free_v], np.zeros(n_p + 1)])

    ilu = spla.spilu(Aff.tocsc(), drop_tol=1e-5, fill_factor=20)
    mp = float(np.mean(mu))
    pinv = mp / s.lumped_mass

    def prec(x):
        y = np.empty_like(x)
        y[:nf] = ilu.solve(x[:nf])
        y[nf:nf + n_p] = pinv * x[nf:nf + n_p]
        y[-1] = x[-1]
        return y

    M = spla.LinearOperator(K.shape, matvec=prec, dtype=float)
    count = [0]
    x, _ = spla.gmres(K, rhs, rtol=0.1 * cfg.rtol, atol=0.1 * cfg.atol, restart=cfg.restart,
                      maxiter=max(1, (cfg.maxiter or 10 * K.shape[0]) // cfg.restart), M=M,
                      callback=lambda _: count.__setitem__(0, count[0] + 1), callback_type="pr_norm")
    res = float(np.linalg.norm(rhs - K @ x))
    bn = float(np.linalg.norm(rhs))
    if not res <= cfg.rtol * bn + cfg.atol:
        raise SolverFailure(f"Stokes GMRES residual {res:.3e} above contract", residual=res, iterations=count[0])
    u = np.zeros(2 * s.n_vel)
    u[free_v] = x[:nf]
    p = x[nf:nf + n_p]
    p = p - (s.lumped_mass @ p) / s.lumped_mass.sum()
    return StokesResult(u=u.reshape(2, s.n_vel), p=p, iterations=count[0], residual=res)


def discrete_divergence(space: FESpace, u: np.ndarray, config: SolverConfig | None = None) -> float:
    """L2 norm of the P1 L2-projection of div u."""
    from .linalg import solve

    s = space
    B = assemble(forms.divergence_coupling(s), velocity_layout(s), p1_layout(s))
    M = forms.assemble_p1(s, forms.p1_mass(s))
    b = -(B @ u.ravel())
    cfg = config or SolverConfig(rtol=1e-13, atol=1e-30, method="cg")
    d = solve(M, b, cfg, symmetric_hint=True)
    return float(np.sqrt(max(d @ (M @ d), 0.0)))


# ------------------------------------------------------------ initial state
def build(config: ScenarioConfig) -> tuple[FESpace, ProjectionScheme]:
    mesh = build_uniform_mesh(config.nx, config.ny)
    space = FESpace(mesh)
    return space, ProjectionScheme(space, config.eos, config.phys, config.scheme_config())


def initial_phi_g(config: ScenarioConfig, x, y):
    cx, cy = config.phi_center
    return 0.2 + 0.2 * gaussian(x, y, cx, cy)


def pulse_pressure(config: ScenarioConfig, x, y):
    p0 = config.eos.p0
    return p0 + p0 * gaussian(x, y, 0.5, 0.5)


def init_scenario(config: ScenarioConfig, space: FESpace | None = None) -> TwoFluidState:
    if space is None:
        space = FESpace(build_uniform_mesh(config.nx, config.ny))
    x, y = space.mesh.vertices[:, 0], space.mesh.vertices[:, 1]
    eos = config.eos
    phi_g = initial_phi_g(config, x, y)
    phi = np.stack([phi_g, 1.0 - phi_g])
    if config.scenario == "pressure_pulse":
        p = pulse_pressure(config, x, y)
        rho = np.stack([eos.zeta_inv("g", p), eos.zeta_inv("l", p)])
        return state_from_alpha(space, eos, phi * rho)

    rho = np.stack([np.full_like(x, config.rho0[0]), np.full_like(x, config.rho0[1])])
    mu = phi[0] * config.phys.mu_g + phi[1] * config.phys.mu_l
    a = config.forcing
    st = stokes_solve(space, mu, lambda X, Y: (a * Y, -a * X))
    log.info("Stokes init: %d GMRES iterations, residual %.2e", st.iterations, st.residual)
    return state_from_alpha(space, eos, phi * rho, u=st.u, p_shift=st.p)
