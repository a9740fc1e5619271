"""Acceptance checks shared by the CLI ``check`` command and the test suite.

Each check returns a :class:`CheckResult`; none of them asserts.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import forms
from .eos import EosParams, closure_solve
from .mesh import FESpace, build_uniform_mesh
from .scenarios import (
    LIQUID_GAS_EOS, LIQUID_GAS_PHYS, TWO_GAS_EOS, TWO_GAS_PHYS,
    discrete_divergence, scenario_config, stokes_solve,
)
from .scheme import PhysParams, ProjectionScheme, SchemeConfig, state_from_alpha
from .study import RunSummary, convergence_study, run

PARAMETER_SETS = {"two_gas": (TWO_GAS_EOS, TWO_GAS_PHYS), "liquid_gas": (LIQUID_GAS_EOS, LIQUID_GAS_PHYS)}


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float = 0.0
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number} {self.name}: {self.detail} ({self.elapsed:.1f} s)"


def _timed(fn):
    def wrapper(*a, **kw):
        t0 = time.perf_counter()
        res = fn(*a, **kw)
        res.elapsed = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ------------------------------------------------------------------ closure
def sample_partial_densities(eos: EosParams, n: int, rng, p_range=(1.0, 2.0), phi_range=(0.05, 0.95)):
    """Random (alpha_g, alpha_l) from volume fractions and equilibrium pressures."""
    phi = rng.uniform(*phi_range, n)
    p = eos.p0 * rng.uniform(*p_range, n)
    return phi * eos.zeta_inv("g", p), (1.0 - phi) * eos.zeta_inv("l", p)


def bisection_closure(alpha_g, alpha_l, eos: EosParams, iterations: int = 200):
    """Bisect log p on alpha_g / rho_g(p) + alpha_l / rho_l(p) = 1; returns rho_g."""
    ag, al = np.asarray(alpha_g, float), np.asarray(alpha_l, float)
    # liquid pressure is bounded below by zeta_l(0+); start just above it
    floor = eos.p0 - eos.A_l * eos.rho_l0**eos.gamma_l
    lo = np.full(ag.shape, np.log(max(floor, 0.0) + 1e-6 * eos.p0))
    hi = np.full(ag.shape, np.log(1e4 * eos.p0))

    def g(logp):
        p = np.exp(logp)
        return ag / eos.zeta_inv("g", p) + al / eos.zeta_inv("l", p) - 1.0

    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        pos = g(mid) > 0  # volume too large: pressure must rise
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return eos.zeta_inv("g", np.exp(0.5 * (lo + hi)))


@_timed
def check_closure(n: int = 1000, seed: int = 0, p_range=(1.0, 2.0)) -> CheckResult:
    rng = np.random.default_rng(seed)
    details, ok, data = [], True, {}
    elapsed = 0.0
    for name, (eos, _) in PARAMETER_SETS.items():
        ag, al = sample_partial_densities(eos, n, rng, p_range)
        t0 = time.perf_counter()
        cl = closure_solve(ag, al, eos)
        elapsed += time.perf_counter() - t0
        ref = bisection_closure(ag, al, eos)
        e_rho = float(np.max(np.abs(cl.rho_g - ref) / ref))
        res = np.abs(eos.zeta("g", cl.rho_g) - eos.zeta("l", cl.rho_l)) / cl.p
        e_part = float(np.max(np.abs(ag / cl.rho_g + al / cl.rho_l - 1.0)))
        n_res = int(np.sum(res > 1e-9))
        good = e_rho <= 1e-10 and n_res == 0 and e_part <= 1e-12
        ok &= good
        details.append(f"{name}: rho_g err {e_rho:.1e}, residual max {res.max():.2e}p "
                       f"({n_res} above 1e-9p), partition {e_part:.1e}")
        data[name] = dict(rho_err=e_rho, residual_max=float(res.max()), residual_fail=n_res, partition=e_part)
    ok &= elapsed < 1.0
    details.append(f"solve time {elapsed:.3f} s")
    return CheckResult(1, "closure oracle", ok, "; ".join(details), data=data)


def fd_pressure_gradient(ag, al, eos: EosParams, rel_step: float = 1e-5):
    """Fourth-order central differences of the closure pressure."""
    out = []
    for which in (0, 1):
        base = np.array([ag, al], dtype=float)
        h = rel_step * base[which]

        def p_at(k):
            a = base.copy()
            a[which] = a[which] + k * h
            return np.asarray(closure_solve(a[0], a[1], eos).p)

        out.append((-p_at(2) + 8 * p_at(1) - 8 * p_at(-1) + p_at(-2)) / (12 * h))
    return out


@_timed
def check_pressure_differential(n: int = 100, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    details, ok = [], True
    for name, (eos, _) in PARAMETER_SETS.items():
        ag, al = sample_partial_densities(eos, n, rng)
        cl = closure_solve(ag, al, eos)
        dg, dl = fd_pressure_gradient(ag, al, eos)
        eg = np.max(np.abs(dg - cl.c_squared * cl.rho_l) / (cl.c_squared * cl.rho_l))
        el = np.max(np.abs(dl - cl.c_squared * cl.rho_g) / (cl.c_squared * cl.rho_g))
        ok &= max(eg, el) <= 1e-4
        details.append(f"{name}: dp/da_g err {eg:.1e}, dp/da_l err {el:.1e}")
    return CheckResult(2, "pressure differential", ok, "; ".join(details))


# --------------------------------------------------------------- positivity
def random_step1_input(space: FESpace, rng):
    """Rough nonnegative partial density (some exact zeros) and a random field vanishing on the boundary."""
    alpha = rng.uniform(0.0, 1.0, space.nv) ** 3 * rng.uniform(0.5, 5.0)
    alpha[rng.random(space.nv) < 0.2] = 0.0
    u = rng.normal(size=(2, space.n_vel)) * rng.uniform(0.1, 5.0)
    u[:, : space.nv][:, space.mesh.boundary_vertices] = 0.0
    return alpha, u


@_timed
def check_positivity(trials: int = 50, nx: int = 20, seed: int = 2, variant: str = "fct") -> CheckResult:
    rng = np.random.default_rng(seed)
    space = FESpace(build_uniform_mesh(nx, nx))
    worst = np.inf
    from .linalg import solve
    for _ in range(trials):
        dt = float(rng.uniform(1e-3, 2e-2))
        sch = ProjectionScheme(space, TWO_GAS_EOS, TWO_GAS_PHYS, SchemeConfig(dt=dt, step1_variant=variant))
        alpha, u = random_step1_input(space, rng)
        A, b = sch.step1_system(alpha, u)
        worst = min(worst, float(solve(A, b, sch.config.transport_solver).min()))
    return CheckResult(3, "step-1 positivity", worst >= -1e-10, f"min raw alpha~ over {trials} solves {worst:.2e}",
                       data=dict(worst=worst))


# ------------------------------------------------------------ two_gas run
def reference_run(nx: int = 20, dt: float = 2e-3, t_final: float = 0.4) -> RunSummary:
    return run(scenario_config("two_gas", nx=nx, dt=dt, t_final=t_final), keep_energies=True)


def seminorm_excess(summary: RunSummary) -> float:
    return summary.max_seminorm_growth


@_timed
def check_mass(summary: RunSummary | None = None) -> CheckResult:
    s = summary or reference_run()
    drift = float(np.max(np.abs(s.mass_drift)))
    ok = s.ok and drift <= 1e-8
    return CheckResult(4, "mass conservation", ok, f"{s.steps} steps, max relative mass drift {drift:.2e}"
                       + ("" if s.ok else f", run failed: {s.error}"))


@_timed
def check_energy(summary: RunSummary | None = None) -> CheckResult:
    s = summary or reference_run()
    ok = s.ok and s.max_defect <= 1e-6 and s.telescoped <= 1e-5 and s.max_seminorm_growth <= 1e-8
    return CheckResult(5, "energy budget", ok,
                       f"max step defect {s.max_defect:.2e} E0, telescoped {s.telescoped:.2e} E0, "
                       f"max seminorm growth {s.max_seminorm_growth:.2e}")


# -------------------------------------------------------------- convergence
@_timed
def check_convergence(nx: int = 20, t_final: float = 0.4, dts=(8e-3, 4e-3, 2e-3, 1e-3), ref_dt: float = 2.5e-4,
                      csv_path=None) -> CheckResult:
    cs = convergence_study(scenario_config("two_gas", nx=nx, t_final=t_final), list(dts), ref_dt)
    if csv_path:
        cs.write_csv(csv_path)
    ok = all(0.7 <= cs.orders[v] <= 1.5 and cs.monotone(v) for v in cs.orders)
    det = ", ".join(f"{v} {cs.orders[v]:.2f}{'' if cs.monotone(v) else ' (non-monotone)'}" for v in cs.orders)
    return CheckResult(6, "temporal order", ok, f"fitted orders {det}", data=dict(study=cs))


# ---------------------------------------------------------- rest equilibrium
def rest_state(space: FESpace, eos: EosParams, phi_g: float = 0.3, p_factor: float = 1.0):
    p = p_factor * eos.p0
    alpha = np.stack([
        np.full(space.nv, phi_g * eos.zeta_inv("g", p)),
        np.full(space.nv, (1.0 - phi_g) * eos.zeta_inv("l", p)),
    ])
    return state_from_alpha(space, eos, alpha)


def rest_drift(eos: EosParams, phys: PhysParams, steps: int = 100, nx: int = 8, dt: float = 1e-3) -> float:
    space = FESpace(build_uniform_mesh(nx, nx))
    sch = ProjectionScheme(space, eos, phys, SchemeConfig(dt=dt))
    s0 = rest_state(space, eos)
    s = s0
    for _ in range(steps):
        s, _ = sch.advance(s)
    return max(
        float(np.max(np.abs(s.alpha - s0.alpha) / s0.alpha)),
        float(np.max(np.abs(s.p - s0.p) / s0.p)),
        float(np.max(np.abs(s.u))),
    )


@_timed
def check_rest_equilibrium(steps: int = 100, nx: int = 8) -> CheckResult:
    errs = {name: rest_drift(eos, phys, steps, nx) for name, (eos, phys) in PARAMETER_SETS.items()}
    ok = all(e <= 1e-10 for e in errs.values())
    return CheckResult(7, "rest equilibrium", ok,
                       ", ".join(f"{k} max relative change {v:.1e}" for k, v in errs.items()))


# ------------------------------------------------------------ pressure pulse
@_timed
def check_pressure_pulse(steps: int = 500, nx: int = 10, dt: float = 1e-6) -> CheckResult:
    cfg = scenario_config("pressure_pulse", nx=nx, dt=dt, t_final=steps * dt)
    from .scenarios import build, init_scenario
    space, _ = build(cfg)
    centre = space.mesh.find_vertex(0.5, 0.5)
    p_centre = [float(init_scenario(cfg, space).p[centre])]
    s = run(cfg, progress=lambda st, _: p_centre.append(float(st.p[centre])))
    finite = all(np.all(np.isfinite(getattr(s.state, f))) for f in ("alpha", "p", "u"))
    p_centre = np.array(p_centre)
    ok = (s.ok and s.steps == steps and finite and s.min_alpha >= 0
          and p_centre[-1] < p_centre[0] and p_centre[1] < p_centre[0])
    return CheckResult(8, "pressure pulse", ok,
                       f"{s.steps} steps, min alpha {s.min_alpha:.3e}, centre p {p_centre[0]:.6e} -> {p_centre[-1]:.6e}"
                       + ("" if s.ok else f", run failed: {s.error}"), data=dict(p_centre=p_centre))


# ------------------------------------------------------------------ Stokes
@_timed
def check_stokes(nx: int = 20, forcing: float = 0.006) -> CheckResult:
    cfg = scenario_config("two_gas", nx=nx)
    space = FESpace(build_uniform_mesh(nx, nx))
    x, y = space.mesh.vertices.T
    from .scenarios import initial_phi_g
    phi = initial_phi_g(cfg, x, y)
    mu = phi * cfg.phys.mu_g + (1 - phi) * cfg.phys.mu_l
    st = stokes_solve(space, mu, lambda X, Y: (forcing * Y, -forcing * X))
    div = discrete_divergence(space, st.u)
    bnd = space.mesh.boundary_vertices
    bmax = float(np.max(np.abs(st.u[:, bnd])))
    ok = div <= 1e-8 and bmax == 0.0
    return CheckResult(9, "Stokes initializer", ok, f"||div u||_0 {div:.1e}, max boundary |u| {bmax:.1e}",
                       data=dict(result=st, space=space))


SUITES = {
    "closure": (1, 2),
    "invariants": (3, 4, 7, 8, 9),
    "energy": (5,),
    "convergence": (6,),
}
SUITES["all"] = tuple(sorted(sum(SUITES.values(), ())))

CHECKS = {
    1: check_closure,
    2: check_pressure_differential,
    3: check_positivity,
    4: check_mass,
    5: check_energy,
    6: check_convergence,
    7: check_rest_equilibrium,
    8: check_pressure_pulse,
    9: check_stokes,
}


def run_suite(name: str, report=print) -> list[CheckResult]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    results = []
    shared = None
    for n in SUITES[name]:
        if n in (4, 5):
            if shared is None:
                shared = reference_run()
            res = CHECKS[n](shared)
        else:
            res = CHECKS[n]()
        results.append(res)
        if report:
            report(res.line())
    return results
