"""Per-step energy and conservation monitors.

The energy of a state is

    E^m = sum_k [ 0.5 ||sqrt(alpha_k) u_k||^2 + int alpha_k e_k(rho_k)
                  + 0.5 dt^2 ||sqrt(phi~_k / rho~_k) grad p||^2 ]

and one step is stable when E^{m+1} + dt (viscous + drag dissipation) <= E^m.
The potential term is the integral of the P1 interpolant of the nodal values
alpha e(rho), so its part linear in alpha is conserved exactly with the mass.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .eos import EosParams
from .mesh import FESpace
from .scheme import PHASES, PhysParams, TwoFluidState, kinetic_energy, weighted_seminorm

CSV_HEADER = "step,time,phase,kinetic,potential,viscous,drag,pseminorm,total,defect,mass,mass_drift,min_alpha,partition_err"


@dataclass
class EnergyReport:
    step: int
    time: float
    kinetic: np.ndarray     # per phase
    potential: np.ndarray
    viscous: np.ndarray     # dt (phi~ tau(u~), grad u~)
    pseminorm: np.ndarray   # 0.5 dt^2 ||sqrt(phi~/rho~) grad p||^2
    drag: float             # dt int C_D phi~_g phi~_l |u~_g - u~_l|^3
    total: float
    defect: float           # E^{m+1} + dissipation - E^m

    @property
    def dissipation(self) -> float:
        return float(self.viscous.sum() + self.drag)


@dataclass
class ConservationReport:
    step: int
    mass: np.ndarray
    mass_drift: np.ndarray  # relative to the reference masses
    min_alpha: np.ndarray
    partition_err: float


def potential_energy(space: FESpace, eos: EosParams, state: TwoFluidState) -> np.ndarray:
    w = space.lumped_mass
    return np.array([w @ (state.alpha[k] * eos.potential_energy(PHASES[k], state.rho[k])) for k in range(2)])


def kinetic(space: FESpace, state: TwoFluidState) -> np.ndarray:
    return np.array([kinetic_energy(space, state.alpha[k], state.u[k]) for k in range(2)])


def pressure_seminorm(space: FESpace, state: TwoFluidState, dt: float) -> np.ndarray:
    return np.array([
        0.5 * dt * dt * weighted_seminorm(space, state.phi_t[k] / state.rho_t[k], state.p) ** 2 for k in range(2)
    ])


def total_energy(space: FESpace, eos: EosParams, state: TwoFluidState, dt: float) -> float:
    return float(
        kinetic(space, state).sum() + potential_energy(space, eos, state).sum()
        + pressure_seminorm(space, state, dt).sum()
    )


def viscous_dissipation(space: FESpace, phys: PhysParams, phi_t: np.ndarray, u_t: np.ndarray, dt: float) -> np.ndarray:
    """dt int phi~ (2 mu |D(u~)|^2 + lam (div u~)^2) per phase."""
    out = np.empty(2)
    for k in range(2):
        G = space.vel_grad_qp(u_t[k])
        D = 0.5 * (G + np.swapaxes(G, -1, -2))
        div = G[..., 0, 0] + G[..., 1, 1]
        dens = 2.0 * phys.mu(k) * np.sum(D * D, axis=(-1, -2)) + phys.lam(k) * div * div
        out[k] = dt * space.integrate(space.p1_qp(phi_t[k]) * dens)
    return out


def drag_dissipation(space: FESpace, phys: PhysParams, phi_t: np.ndarray, u_t: np.ndarray, dt: float) -> float:
    du = space.vel_qp(u_t[0] - u_t[1])
    mag = np.sqrt(np.sum(du * du, axis=-1))
    return dt * phys.drag.C_D * space.integrate(space.p1_qp(phi_t[0]) * space.p1_qp(phi_t[1]) * mag**3)


def energy_report(
    space: FESpace,
    eos: EosParams,
    phys: PhysParams,
    prev: TwoFluidState | None,
    new: TwoFluidState,
    dt: float,
) -> EnergyReport:
    """Energy terms of ``new``; with ``prev=None`` the dissipations and defect are zero."""
    kin = kinetic(space, new)
    pot = potential_energy(space, eos, new)
    ps = pressure_seminorm(space, new, dt)
    total = float(kin.sum() + pot.sum() + ps.sum())
    if prev is None:
        visc, drag, defect = np.zeros(2), 0.0, 0.0
    else:
        visc = viscous_dissipation(space, phys, new.phi_t, new.u_t, dt)
        drag = drag_dissipation(space, phys, new.phi_t, new.u_t, dt)
        defect = total + float(visc.sum()) + drag - total_energy(space, eos, prev, dt)
    return EnergyReport(new.m, new.time, kin, pot, visc, ps, drag, total, defect)


def conservation_report(space: FESpace, state: TwoFluidState, ref_mass: np.ndarray | None = None) -> ConservationReport:
    w = space.lumped_mass
    mass = np.array([w @ state.alpha[k] for k in range(2)])
    ref = mass if ref_mass is None else np.asarray(ref_mass)
    return ConservationReport(
        step=state.m,
        mass=mass,
        mass_drift=(mass - ref) / ref,
        min_alpha=state.alpha.min(axis=1),
        partition_err=float(np.max(np.abs(state.phi[0] + state.phi[1] - 1.0))),
    )


def csv_rows(energy: EnergyReport, cons: ConservationReport) -> list[list]:
    rows = []
    for k in range(2):
        rows.append([
            energy.step, repr(float(energy.time)), PHASES[k],
            *(repr(float(v)) for v in (
                energy.kinetic[k], energy.potential[k], energy.viscous[k], energy.drag,
                energy.pseminorm[k], energy.total, energy.defect, cons.mass[k], cons.mass_drift[k],
                cons.min_alpha[k], cons.partition_err,
            )),
        ])
    return rows


class CsvLog:
    """Append-only diagnostics CSV with the fixed column order."""

    def __init__(self, path):
        self.path = path
        try:
            self._fh = open(path, "w", newline="")
        except OSError as exc:
            raise OSError(f"cannot open diagnostics file {path}: {exc}") from exc
        self._w = csv.writer(self._fh)
        self._w.writerow(CSV_HEADER.split(","))

    def write(self, energy: EnergyReport, cons: ConservationReport) -> None:
        self._w.writerows(csv_rows(energy, cons))

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(reports, path) -> None:
    """Write (EnergyReport, ConservationReport) pairs to ``path``."""
    with CsvLog(path) as log:
        for e, c in reports:
            log.write(e, c)
