"""The nine acceptance criteria, one test each.

Every test prints a ``[PASS]``/``[FAIL]`` line, which is also repeated in the
terminal summary.  Criterion 6 runs a full convergence study (a few minutes).
"""
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from twofluid import checks


def report(res):
    line = res.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    return res


@pytest.fixture(scope="session")
def reference():
    t0 = time.perf_counter()
    s = checks.reference_run()
    return s, time.perf_counter() - t0


def test_criterion_1_closure_oracle():
    res = report(checks.check_closure())
    for name, d in res.data.items():
        assert d["rho_err"] <= 1e-10, name
        assert d["partition"] <= 1e-12, name
        assert d["residual_fail"] == 0, f"{name}: residual {d['residual_max']:.3e} p"
    assert res.passed


def test_criterion_2_pressure_differential():
    res = report(checks.check_pressure_differential())
    assert res.passed and res.elapsed < 1.0


def test_criterion_3_positivity():
    res = report(checks.check_positivity())
    assert res.passed and res.elapsed < 30.0


def test_criterion_4_mass(reference):
    summary, wall = reference
    res = report(checks.check_mass(summary))
    assert summary.ok and summary.steps == 200
    assert np.all(np.abs(summary.mass_drift) <= 1e-8)
    assert res.passed and wall < 300.0


def test_criterion_5_energy(reference):
    summary, _ = reference
    res = report(checks.check_energy(summary))
    assert summary.max_defect <= 1e-6
    assert summary.telescoped <= 1e-5
    assert summary.max_seminorm_growth <= 1e-8
    assert res.passed


@pytest.mark.slow
def test_criterion_6_temporal_order(tmp_path):
    res = report(checks.check_convergence(csv_path=tmp_path / "convergence.csv"))
    study = res.data["study"]
    for v, order in study.orders.items():
        assert 0.7 <= order <= 1.5, (v, order)
        assert study.monotone(v), v
    assert res.passed and res.elapsed < 1800.0


def test_criterion_7_rest_equilibrium():
    res = report(checks.check_rest_equilibrium())
    assert res.passed and res.elapsed < 120.0


def test_criterion_8_pressure_pulse():
    res = report(checks.check_pressure_pulse())
    p = res.data["p_centre"]
    assert p[0] == pytest.approx(2 * 1.01325e5, rel=1e-9)
    assert res.passed and res.elapsed < 300.0


def test_criterion_9_stokes():
    res = report(checks.check_stokes())
    assert res.passed and res.elapsed < 30.0
