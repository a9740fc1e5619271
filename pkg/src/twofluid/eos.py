"""Barotropic equations of state and the pressure-equilibrium closure.

Gas:    zeta_g(z) = A_g z**gamma_g
Liquid: zeta_l(z) = A_l (z**gamma_l - rho_l0**gamma_l) + p0

Given partial densities (alpha_g, alpha_l) the closure finds the unique
rho_g > alpha_g with zeta_g(rho_g) = zeta_l(alpha_l rho_g / (rho_g - alpha_g)).
Internally the unknown is the gap s = rho_g - alpha_g, which keeps
rho_l = alpha_l (alpha_g + s) / s accurate when one phase nearly vanishes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALPHA_MIN = 1e-12
PHASES = ("g", "l")


class ClosureFailure(RuntimeError):
    def __init__(self, message: str, nodes=None):
        super().__init__(message)
        self.nodes = nodes


class EosDomainError(ValueError):
    pass


def phase_index(phase) -> int:
    if phase in (0, "g", "gas"):
        return 0
    if phase in (1, "l", "liquid"):
        return 1
    raise ValueError(f"unknown phase {phase!r}")


@dataclass(frozen=True)
class EosParams:
    A_g: float
    gamma_g: float
    A_l: float
    gamma_l: float
    rho_l0: float
    p0: float
    rho_g_ref: float
    rho_l_ref: float | None = None

    def __post_init__(self) -> None:
        if self.rho_l_ref is None:
            object.__setattr__(self, "rho_l_ref", self.rho_l0)
        for name in ("A_g", "A_l", "rho_l0", "p0", "rho_g_ref", "rho_l_ref"):
            if not getattr(self, name) > 0:
                raise ValueError(f"EOS parameter {name} must be positive")
        if not (self.gamma_g > 1 and self.gamma_l > 1):
            raise ValueError("adiabatic exponents must exceed 1")

    # zeta(z) = A z**gamma + B
    def coeffs(self, phase) -> tuple[float, float, float]:
        if phase_index(phase) == 0:
            return self.A_g, self.gamma_g, 0.0
        return self.A_l, self.gamma_l, self.p0 - self.A_l * self.rho_l0**self.gamma_l

    def ref_density(self, phase) -> float:
        return self.rho_g_ref if phase_index(phase) == 0 else self.rho_l_ref

    def zeta(self, phase, rho):
        A, g, B = self.coeffs(phase)
        if phase_index(phase) == 0:
            return A * np.power(rho, g)
        # A r0^g ((z/r0)^g - 1) + p0; z - r0 is exact near r0
        r0 = self.rho_l0
        return A * r0**g * np.expm1(g * np.log1p((np.asarray(rho) - r0) / r0)) + self.p0

    def zeta_inv(self, phase, p):
        A, g, B = self.coeffs(phase)
        p = np.asarray(p, dtype=float)
        if np.any(~((p - B) / A > 0)):
            raise EosDomainError(f"pressure outside the range of zeta_{PHASES[phase_index(phase)]}")
        if phase_index(phase) == 0:
            out = np.power(p / A, 1.0 / g)
        else:
            r0 = self.rho_l0
            out = r0 * np.exp(np.log1p((p - self.p0) / (A * r0**g)) / g)
        return float(out) if np.ndim(out) == 0 else out

    def sound_speed_sq(self, phase, rho):
        A, g, _ = self.coeffs(phase)
        return A * g * np.power(rho, g - 1.0)

    def potential_energy(self, phase, rho):
        """e(z) = int_{rho_ref}^z zeta(s)/s**2 ds in closed form.

        Written as x*zeta(r)/r + A r**(g-1) h(x) - (B/r) x**2/(1+x) with
        x = z/r - 1, which avoids the cancellation between the two
        antiderivative terms when |B| >> p.
        """
        A, g, B = self.coeffs(phase)
        r = self.ref_density(phase)
        z = np.asarray(rho, dtype=float)
        x = (z - r) / r
        a = g - 1.0
        small = np.abs(x) < 1e-4
        xs = np.where(small, x, 0.0)
        series = 0.5 * (a - 1.0) * xs**2 * (
            1.0 + (a - 2.0) * xs / 3.0 + (a - 2.0) * (a - 3.0) * xs**2 / 12.0
            + (a - 2.0) * (a - 3.0) * (a - 4.0) * xs**3 / 60.0
        )
        xd = np.where(small, 0.0, x)
        direct = np.expm1(a * np.log1p(xd)) / a - xd
        h = np.where(small, series, direct)
        e = x * (A * r**g + B) / r + A * r**a * h - (B / r) * x * x / (1.0 + x)
        return float(e) if np.ndim(e) == 0 else e


@dataclass
class ClosureResult:
    rho_g: np.ndarray | float
    rho_l: np.ndarray | float
    phi_g: np.ndarray | float
    phi_l: np.ndarray | float
    p: np.ndarray | float
    c_squared: np.ndarray | float
    residual: np.ndarray | float
    iterations: np.ndarray | int


def _gap_function(s, ag, al, params: EosParams):
    rho_g = ag + s
    return params.zeta("g", rho_g) - params.zeta("l", al * rho_g / s)


def _gap_derivative(s, ag, al, params: EosParams):
    rho_g = ag + s
    rho_l = al * rho_g / s
    return params.sound_speed_sq("g", rho_g) + params.sound_speed_sq("l", rho_l) * al * ag / s**2


def _snap_stiff_phase(rho_g, rho_l, phi_g, phi_l, ag, al, params: EosParams):
    """Move the stiffer density to the neighbouring double with the smallest
    pressure mismatch, rebuilding the other phase from the volume constraint.

    Near a stiff liquid one ulp of rho_l is worth s_l**2 * ulp in pressure,
    which is the floor on the attainable residual.
    """
    best = (rho_g, rho_l, phi_g, phi_l)
    best_r = np.abs(params.zeta("g", rho_g) - params.zeta("l", rho_l))
    stiff_l = params.sound_speed_sq("l", rho_l) * rho_l >= params.sound_speed_sq("g", rho_g) * rho_g
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        # centre on the stiff density implied by the soft phase's pressure
        p_g = params.zeta("g", rho_g)
        p_l = params.zeta("l", rho_l)
        A_l, g_l, B_l = params.coeffs("l")
        ok_l = (p_g - B_l) / A_l > 0
        centre_l = np.where(ok_l, params.rho_l0 * np.exp(np.log1p((p_g - params.p0) / (A_l * params.rho_l0**g_l)) / g_l), rho_l)
        centre_g = np.power(np.maximum(p_l, 0.0) / params.A_g, 1.0 / params.gamma_g)
        for k in (-3, -2, -1, 0, 1, 2, 3):
            cl = centre_l + k * np.spacing(centre_l)
            cg = centre_g + k * np.spacing(centre_g)
            # stiff liquid: fix rho_l candidate, derive gas; otherwise the reverse
            fl = np.where(stiff_l, al / cl, 1.0 - ag / cg)
            fg = 1.0 - fl
            rg = np.where(stiff_l, ag / fg, cg)
            rl = np.where(stiff_l, cl, al / fl)
            r = np.abs(params.zeta("g", rg) - params.zeta("l", rl))
            better = np.isfinite(r) & (r < best_r) & (fg > 0) & (fl > 0)
            best = tuple(np.where(better, new, old) for new, old in zip((rg, rl, fg, fl), best))
            best_r = np.where(better, r, best_r)
    return best


def closure_solve(alpha_g, alpha_l, params: EosParams, tol: float = 1e-12, max_iter: int = 100) -> ClosureResult:
    """Pressure-equilibrium closure, vectorised over nodes.

    Brackets the gap s on [1e-12 alpha_g, alpha_g] (lower end shrunk and
    upper end doubled as needed), runs Ridder's method to relative tolerance
    ``tol`` in s and polishes with two safeguarded Newton steps.
    """
    scalar = np.ndim(alpha_g) == 0 and np.ndim(alpha_l) == 0
    ag = np.atleast_1d(np.asarray(alpha_g, dtype=float)).copy()
    al = np.atleast_1d(np.asarray(alpha_l, dtype=float)).copy()
    ag, al = np.broadcast_arrays(ag, al)
    ag, al = ag.copy(), al.copy()
    if not (np.all(np.isfinite(ag)) and np.all(np.isfinite(al))):
        bad = np.flatnonzero(~(np.isfinite(ag) & np.isfinite(al)))
        raise ValueError(f"non-finite partial densities at nodes {bad[:10].tolist()}")
    np.maximum(ag, ALPHA_MIN, out=ag)
    np.maximum(al, ALPHA_MIN, out=al)

    f = lambda s: _gap_function(s, ag, al, params)  # noqa: E731
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        lo = 1e-12 * ag
        flo = f(lo)
        for _ in range(40):
            bad = ~(flo < 0)
            if not bad.any():
                break
            lo = np.where(bad, lo * 1e-3, lo)
            flo = f(lo)
        hi = ag.copy()
        fhi = f(hi)
        for _ in range(200):
            bad = ~(fhi > 0)
            if not bad.any():
                break
            hi = np.where(bad, 2.0 * hi, hi)
            fhi = f(hi)
    failed = ~((flo < 0) & (fhi > 0))
    if failed.any():
        nodes = np.flatnonzero(failed)
        raise ClosureFailure(
            f"closure bracket failed at {nodes.size} node(s), first {nodes[0]}: "
            f"alpha=({ag[nodes[0]]:.6e}, {al[nodes[0]]:.6e})",
            nodes=nodes,
        )

    # Ridder iterations on the active set
    x = 0.5 * (lo + hi)
    iters = np.zeros(ag.shape, dtype=np.int64)
    active = np.ones(ag.shape, dtype=bool)
    x_prev = np.full(ag.shape, np.inf)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        a_, b_ = lo[idx], hi[idx]
        fa, fb = flo[idx], fhi[idx]
        ag_i, al_i = ag[idx], al[idx]
        mid = 0.5 * (a_ + b_)
        fm = _gap_function(mid, ag_i, al_i, params)
        root = np.sqrt(fm * fm - fa * fb)
        step = np.where(root > 0, (mid - a_) * np.sign(fa - fb) * fm / np.where(root > 0, root, 1.0), 0.0)
        xn = mid + step
        xn = np.clip(xn, a_, b_)
        fn = _gap_function(xn, ag_i, al_i, params)
        # shrink bracket
        new_a, new_b, new_fa, new_fb = a_.copy(), b_.copy(), fa.copy(), fb.copy()
        c1 = np.sign(fm) != np.sign(fn)
        lo_is_mid = c1 & (mid < xn)
        hi_is_mid = c1 & ~(mid < xn)
        new_a = np.where(lo_is_mid, mid, np.where(hi_is_mid, xn, new_a))
        new_fa = np.where(lo_is_mid, fm, np.where(hi_is_mid, fn, new_fa))
        new_b = np.where(lo_is_mid, xn, np.where(hi_is_mid, mid, new_b))
        new_fb = np.where(lo_is_mid, fn, np.where(hi_is_mid, fm, new_fb))
        c2 = ~c1 & (np.sign(fa) != np.sign(fn))
        new_b = np.where(c2, xn, new_b)
        new_fb = np.where(c2, fn, new_fb)
        c3 = ~c1 & ~c2
        new_a = np.where(c3, xn, new_a)
        new_fa = np.where(c3, fn, new_fa)
        lo[idx], hi[idx], flo[idx], fhi[idx] = new_a, new_b, new_fa, new_fb
        iters[idx] += 1
        x[idx] = xn
        done = (np.abs(xn - x_prev[idx]) <= tol * np.abs(xn)) | (fn == 0) | ((new_b - new_a) <= tol * xn)
        x_prev[idx] = xn
        active[idx[done]] = False

    for _ in range(2):
        fx = _gap_function(x, ag, al, params)
        dx = fx / _gap_derivative(x, ag, al, params)
        xn = x - dx
        x = np.where((xn > lo) & (xn < hi), xn, x)

    rho_g = ag + x
    rho_l = al * rho_g / x
    phi_g = ag / rho_g
    phi_l = x / rho_g
    rho_g, rho_l, phi_g, phi_l = _snap_stiff_phase(rho_g, rho_l, phi_g, phi_l, ag, al, params)
    p = params.zeta("g", rho_g)
    residual = np.abs(p - params.zeta("l", rho_l))
    sg2 = params.sound_speed_sq("g", rho_g)
    sl2 = params.sound_speed_sq("l", rho_l)
    c2 = sl2 * sg2 / (phi_g * rho_l * sl2 + phi_l * rho_g * sg2)
    res = ClosureResult(rho_g, rho_l, phi_g, phi_l, p, c2, residual, iters)
    if scalar:
        res = ClosureResult(*(v.item() for v in (rho_g, rho_l, phi_g, phi_l, p, c2, residual, iters)))
    return res


def mixture_c_squared(closure: ClosureResult, params: EosParams):
    sg2 = params.sound_speed_sq("g", closure.rho_g)
    sl2 = params.sound_speed_sq("l", closure.rho_l)
    return sl2 * sg2 / (closure.phi_g * closure.rho_l * sl2 + closure.phi_l * closure.rho_g * sg2)
