import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from twofluid.checks import bisection_closure, fd_pressure_gradient, sample_partial_densities
from twofluid.eos import ALPHA_MIN, EosDomainError, EosParams, closure_solve, mixture_c_squared
from twofluid.scenarios import LIQUID_GAS_EOS, TWO_GAS_EOS

EOS_SETS = [TWO_GAS_EOS, LIQUID_GAS_EOS]


def test_liquid_reference_point():
    for eos in EOS_SETS:
        assert eos.zeta("l", eos.rho_l0) == eos.p0


def test_gas_table_pressure():
    assert TWO_GAS_EOS.zeta("g", 2.0) == pytest.approx(1.01325e5, rel=1e-3)


@pytest.mark.parametrize("eos", EOS_SETS)
def test_zeta_roundtrip(eos, rng):
    rho = rng.uniform(0.1, 10, 100)
    assert np.allclose(eos.zeta_inv("g", eos.zeta("g", rho)), rho, rtol=1e-12, atol=0)
    rl = eos.rho_l0 * rng.uniform(0.9, 1.3, 100)
    assert np.allclose(eos.zeta_inv("l", eos.zeta("l", rl)), rl, rtol=1e-12, atol=0)


def test_zeta_inv_domain():
    with pytest.raises(EosDomainError):
        TWO_GAS_EOS.zeta_inv("g", -1.0)
    floor = LIQUID_GAS_EOS.p0 - LIQUID_GAS_EOS.A_l * LIQUID_GAS_EOS.rho_l0**2
    with pytest.raises(EosDomainError):
        LIQUID_GAS_EOS.zeta_inv("l", floor - 1.0)


def test_invalid_params():
    with pytest.raises(ValueError):
        EosParams(A_g=1, gamma_g=1.0, A_l=1, gamma_l=2, rho_l0=1, p0=1, rho_g_ref=1)
    with pytest.raises(ValueError):
        EosParams(A_g=-1, gamma_g=1.4, A_l=1, gamma_l=2, rho_l0=1, p0=1, rho_g_ref=1)


def test_sound_speed():
    eos = EosParams(A_g=1.0, gamma_g=1.4, A_l=1.0, gamma_l=2.0, rho_l0=1.0, p0=1.0, rho_g_ref=1.0)
    assert eos.sound_speed_sq("g", 1.0) == pytest.approx(1.4)


@pytest.mark.parametrize("eos", EOS_SETS)
@pytest.mark.parametrize("phase", ["g", "l"])
def test_sound_speed_fd_and_monotone(eos, phase, rng):
    base = 2.0 if phase == "g" else eos.rho_l0
    rho = base * rng.uniform(0.8, 1.5, 50)
    h = 1e-6 * rho
    fd = (eos.zeta(phase, rho + h) - eos.zeta(phase, rho - h)) / (2 * h)
    assert np.allclose(fd, eos.sound_speed_sq(phase, rho), rtol=1e-6)
    s = np.sort(rho)
    assert np.all(np.diff(eos.sound_speed_sq(phase, s)) > 0)


@pytest.mark.parametrize("eos", EOS_SETS)
@pytest.mark.parametrize("phase", ["g", "l"])
def test_potential_energy(eos, phase, rng):
    r = eos.ref_density(phase)
    assert eos.potential_energy(phase, r) == 0.0
    z = r * rng.uniform(0.7, 1.4, 30)
    h = 1e-6 * z
    fd = (eos.potential_energy(phase, z + h) - eos.potential_energy(phase, z - h)) / (2 * h)
    assert np.allclose(fd, eos.zeta(phase, z) / z**2, rtol=1e-6)
    # independent oracle: numerical quadrature of zeta(s)/s^2
    for zz in z[:5]:
        ref, _ = quad(lambda s: eos.zeta(phase, s) / s**2, r, zz, epsabs=0, epsrel=1e-13)
        assert eos.potential_energy(phase, zz) == pytest.approx(ref, rel=1e-8, abs=1e-9 * abs(eos.p0 / r))
    # convexity of z e(z): second difference ~ zeta'(z)/z
    f = lambda x: x * eos.potential_energy(phase, x)  # noqa: E731
    h2 = 1e-3 * z
    second = (f(z + h2) - 2 * f(z) + f(z - h2)) / h2**2
    assert np.all(second > 0)
    assert np.allclose(second, eos.sound_speed_sq(phase, z) / z, rtol=1e-3)


def test_closure_table_point():
    cl = closure_solve(1.0, 2.0, TWO_GAS_EOS)
    # A_g 2^1.4 exceeds p0 by 6e-6 relative, so (2, 4) is the root only to ~1e-8
    assert cl.rho_g == pytest.approx(2.0, rel=1e-7)
    assert cl.rho_l == pytest.approx(4.0, rel=1e-7)
    assert cl.phi_g == pytest.approx(0.5, rel=1e-7)
    assert cl.p == pytest.approx(1.01325e5, rel=1e-3)


@pytest.mark.parametrize("eos", EOS_SETS)
def test_closure_bisection_oracle(eos, rng):
    ag, al = sample_partial_densities(eos, 100, rng)
    cl = closure_solve(ag, al, eos)
    ref = bisection_closure(ag, al, eos)
    assert np.max(np.abs(cl.rho_g - ref) / ref) <= 1e-10
    assert np.max(np.abs(ag / cl.rho_g + al / cl.rho_l - 1.0)) <= 1e-12
    assert np.max(np.abs(cl.phi_g + cl.phi_l - 1)) <= 1e-12
    assert np.allclose(cl.phi_g * cl.rho_g, ag, rtol=1e-12, atol=0)
    assert np.allclose(cl.phi_l * cl.rho_l, al, rtol=1e-12, atol=0)
    assert np.allclose(eos.zeta_inv("g", cl.p), cl.rho_g, rtol=1e-9)
    assert np.allclose(eos.zeta_inv("l", cl.p), cl.rho_l, rtol=1e-9)


def test_closure_residual_two_gas(rng):
    ag, al = sample_partial_densities(TWO_GAS_EOS, 1000, rng)
    cl = closure_solve(ag, al, TWO_GAS_EOS)
    assert np.all(cl.residual <= 1e-9 * cl.p)


def test_closure_residual_liquid_above_float_floor(rng):
    # one ulp of rho_l ~ 1000 moves zeta_l by ~2.3e-4; above 1.2 p0 the attainable
    # best-double residual is below 1e-9 p everywhere
    eos = LIQUID_GAS_EOS
    ag, al = sample_partial_densities(eos, 1000, rng, p_range=(1.2, 2.0))
    cl = closure_solve(ag, al, eos)
    assert np.all(cl.residual <= 1e-9 * cl.p)


def test_closure_scalar_and_errors():
    cl = closure_solve(0.4, 3.0, TWO_GAS_EOS)
    assert isinstance(cl.rho_g, float)
    with pytest.raises(ValueError):
        closure_solve(np.nan, 1.0, TWO_GAS_EOS)


def test_degenerate_gas_limit():
    eos = TWO_GAS_EOS
    al = 5.0  # zeta_l(5) > 0, so pure liquid at this density is admissible
    cl = closure_solve(ALPHA_MIN, al, eos)
    assert cl.phi_g < 1e-9
    assert cl.p == pytest.approx(eos.zeta("l", al), rel=1e-6)


@pytest.mark.parametrize("eos", EOS_SETS)
def test_gap_function_monotone(eos, rng):
    ag, al = sample_partial_densities(eos, 5, rng)
    for a, b in zip(ag, al):
        rg = a * (1 + np.geomspace(1e-6, 1e3, 100))
        f = eos.zeta("g", rg) - eos.zeta("l", b * rg / (rg - a))
        assert np.all(np.diff(f) >= 0)


def test_c_squared_symmetric_phases():
    eos = EosParams(A_g=2.0, gamma_g=1.5, A_l=2.0, gamma_l=1.5, rho_l0=1.0, p0=2.0, rho_g_ref=1.0)
    cl = closure_solve(1.5, 1.5, eos)
    assert cl.phi_g == pytest.approx(0.5)
    s2 = eos.sound_speed_sq("g", 3.0)
    assert cl.c_squared == pytest.approx(s2 / 3.0, rel=1e-12)
    assert mixture_c_squared(cl, eos) == pytest.approx(cl.c_squared, rel=1e-15)


@pytest.mark.parametrize("eos", EOS_SETS)
def test_pressure_differential(eos, rng):
    ag, al = sample_partial_densities(eos, 100, rng)
    cl = closure_solve(ag, al, eos)
    dg, dl = fd_pressure_gradient(ag, al, eos)
    assert np.allclose(dg, cl.c_squared * cl.rho_l, rtol=1e-4)
    assert np.allclose(dl, cl.c_squared * cl.rho_g, rtol=1e-4)


@pytest.mark.parametrize("eos", EOS_SETS)
def test_pressure_one_sided_difference(eos, rng):
    # the forward difference with h = 1e-6 alpha_g stated for this identity
    ag, al = sample_partial_densities(eos, 20, rng)
    h = 1e-6 * ag
    p0 = closure_solve(ag, al, eos)
    p1 = closure_solve(ag + h, al, eos)
    assert np.allclose((p1.p - p0.p) / h, p0.c_squared * p0.rho_l, rtol=1e-4)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.02, 0.98), st.floats(0.6, 3.0), st.sampled_from([0, 1]), st.floats(1e-4, 0.5))
def test_pressure_monotone_in_alpha(phi, pf, which, delta):
    eos = EOS_SETS[which]
    p = pf * eos.p0
    ag, al = phi * eos.zeta_inv("g", p), (1 - phi) * eos.zeta_inv("l", p)
    base = closure_solve(ag, al, eos).p
    assert closure_solve(ag * (1 + delta), al, eos).p >= base
    assert closure_solve(ag, al * (1 + delta), eos).p >= base


@settings(max_examples=60, deadline=None)
@given(st.floats(0.02, 0.98), st.floats(1.0, 2.0), st.sampled_from([0, 1]))
def test_closure_partition_property(phi, pf, which):
    eos = EOS_SETS[which]
    p = pf * eos.p0
    ag, al = phi * eos.zeta_inv("g", p), (1 - phi) * eos.zeta_inv("l", p)
    cl = closure_solve(ag, al, eos)
    assert abs(ag / cl.rho_g + al / cl.rho_l - 1.0) <= 1e-12
    assert cl.phi_g == pytest.approx(phi, rel=1e-9)
    assert cl.p == pytest.approx(p, rel=1e-9)
