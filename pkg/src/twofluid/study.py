"""Time loop with output, and the temporal convergence study."""
from __future__ import annotations

import csv
import logging
import os
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as diag
from . import forms
from .io import write_vtk
from .scenarios import ScenarioConfig, build, init_scenario
from .scheme import StepFailure, TwoFluidState

log = logging.getLogger(__name__)

VARIABLES = ("alpha_g", "alpha_l", "u_g", "u_l", "p")


@dataclass
class RunSummary:
    steps: int
    wall_time: float
    max_defect: float          # largest per-step budget defect, relative to E^0
    telescoped: float          # E^N + sum of dissipations - E^0, relative to E^0
    mass_drift: np.ndarray     # final relative drift per phase
    min_alpha: float
    max_seminorm_growth: float  # max relative growth of the step-3 seminorm
    state: TwoFluidState
    energies: list = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def clamp_dt(config: ScenarioConfig) -> ScenarioConfig:
    if config.dt > config.t_final:
        warnings.warn(f"dt {config.dt} exceeds the final time {config.t_final}; taking one step of {config.t_final}")
        return config.with_(dt=config.t_final)
    return config


def run(config: ScenarioConfig, keep_energies: bool = False, progress=None) -> RunSummary:
    """Advance the scenario to its final time, writing CSV/VTK if ``out_dir`` is set."""
    config = clamp_dt(config)
    space, scheme = build(config)
    state = init_scenario(config, space)
    dt = config.dt
    out = config.out_dir
    csvlog = None
    if out:
        os.makedirs(out, exist_ok=True)
        csvlog = diag.CsvLog(os.path.join(out, "diagnostics.csv"))
        write_vtk(space, state, os.path.join(out, "state_00000.vtk"))

    e0 = diag.energy_report(space, config.eos, config.phys, None, state, dt)
    c0 = diag.conservation_report(space, state)
    ref_mass = c0.mass
    if csvlog:
        csvlog.write(e0, c0)
    E0 = e0.total
    diss = 0.0
    max_defect = 0.0
    sn_growth = -np.inf
    energies = [e0] if keep_energies else []
    error = None
    t_start = time.perf_counter()
    n = config.n_steps
    e = e0
    try:
        for i in range(n):
            prev = state
            state, info = scheme.advance(state)
            e = diag.energy_report(space, config.eos, config.phys, prev, state, dt)
            c = diag.conservation_report(space, state, ref_mass)
            diss += e.dissipation
            max_defect = max(max_defect, e.defect / E0)
            with np.errstate(divide="ignore", invalid="ignore"):
                g = np.where(info.seminorm_old > 0, (info.seminorm_new - info.seminorm_old) / info.seminorm_old,
                             info.seminorm_new)
            sn_growth = max(sn_growth, float(np.max(g)))
            if csvlog:
                csvlog.write(e, c)
            if keep_energies:
                energies.append(e)
            if out and config.output_every and state.m % config.output_every == 0:
                write_vtk(space, state, os.path.join(out, f"state_{state.m:05d}.vtk"))
            if progress:
                progress(state, info)
    except StepFailure as exc:
        error = str(exc)
        log.error("run aborted: %s", exc)
    finally:
        if csvlog:
            csvlog.close()
    if out:
        write_vtk(space, state, os.path.join(out, f"state_{state.m:05d}.vtk"))
    c = diag.conservation_report(space, state, ref_mass)
    return RunSummary(
        steps=state.m,
        wall_time=time.perf_counter() - t_start,
        max_defect=max_defect,
        telescoped=(e.total + diss - E0) / E0,
        mass_drift=c.mass_drift,
        min_alpha=float(c.min_alpha.min()),
        max_seminorm_growth=sn_growth,
        state=state,
        energies=energies,
        error=error,
    )


# ------------------------------------------------------------ convergence
@dataclass
class ConvergenceStudy:
    dts: list
    reference_dt: float
    errors: dict        # var -> list of L2 errors, aligned with dts
    orders: dict        # var -> fitted order

    def __post_init__(self) -> None:
        if not self.reference_dt < min(self.dts):
            raise ValueError("reference dt must be smaller than every study dt")

    def monotone(self, var: str) -> bool:
        e = np.asarray(self.errors[var])
        order = np.argsort(self.dts)[::-1]  # descending dt
        return bool(np.all(np.diff(e[order]) <= 0))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["dt", "var", "l2_error", "fitted_order"])
            for var in VARIABLES:
                for dt, err in zip(self.dts, self.errors[var]):
                    w.writerow([repr(float(dt)), var, repr(float(err)), repr(float(self.orders[var]))])


def l2_errors(space, a: TwoFluidState, b: TwoFluidState) -> dict:
    M = forms.assemble_p1(space, forms.p1_mass(space))
    Mv = forms.assemble_vel(space, forms.vel_mass(space))

    def p1(x):
        return float(np.sqrt(max(x @ (M @ x), 0.0)))

    def vel(u):
        return float(np.sqrt(max(u[0] @ (Mv @ u[0]) + u[1] @ (Mv @ u[1]), 0.0)))

    return {
        "alpha_g": p1(a.alpha[0] - b.alpha[0]),
        "alpha_l": p1(a.alpha[1] - b.alpha[1]),
        "u_g": vel(a.u[0] - b.u[0]),
        "u_l": vel(a.u[1] - b.u[1]),
        "p": p1(a.p - b.p),
    }


def fitted_order(dts, errors) -> float:
    x = np.log(np.asarray(dts, dtype=float))
    y = np.log(np.maximum(np.asarray(errors, dtype=float), 1e-300))
    if len(x) < 2 or np.ptp(x) == 0:
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])


def final_state(config: ScenarioConfig) -> TwoFluidState:
    summary = run(config.with_(out_dir=None))
    if not summary.ok:
        raise StepFailure(f"convergence member dt={config.dt} failed: {summary.error}")
    return summary.state


def convergence_study(base: ScenarioConfig, dts, reference_dt: float) -> ConvergenceStudy:
    dts = sorted((float(d) for d in dts), reverse=True)
    if not reference_dt < min(dts):
        raise ValueError("reference dt must be smaller than every study dt")
    space, _ = build(base)
    ref = final_state(base.with_(dt=reference_dt))
    errors = {v: [] for v in VARIABLES}
    for dt in dts:
        st = final_state(base.with_(dt=dt))
        if abs(st.time - ref.time) > 1e-9 * ref.time:
            raise ValueError(f"dt={dt} does not reach the reference final time {ref.time}")
        err = l2_errors(space, st, ref)
        for v in VARIABLES:
            errors[v].append(err[v])
        log.info("dt=%g errors %s", dt, err)
    orders = {v: fitted_order(dts, errors[v]) for v in VARIABLES}
    return ConvergenceStudy(dts=dts, reference_dt=reference_dt, errors=errors, orders=orders)
