import numpy as np
import pytest

from twofluid.checks import rest_state
from twofluid.io import SCALARS, read_vtk_point_data, write_vtk
from twofluid.mesh import FESpace, build_uniform_mesh
from twofluid.scenarios import TWO_GAS_EOS, scenario_config
from twofluid.scheme import state_from_alpha
from twofluid.study import run


def test_unit_mesh_vtk(tmp_path):
    space = FESpace(build_uniform_mesh(1, 1))
    path = tmp_path / "s.vtk"
    write_vtk(space, rest_state(space, TWO_GAS_EOS), path)
    text = path.read_text()
    assert "POINTS 4 double" in text and "CELLS 2 8" in text
    d = read_vtk_point_data(path)
    assert d["points"].shape == (4, 3) and np.all(d["cell_types"] == 5)
    assert d["cells"].shape == (2, 4) and np.all(d["cells"][:, 0] == 3)


def test_roundtrip(tmp_path, space8, rng):
    a = np.stack([rng.uniform(0.5, 1.0, space8.nv), rng.uniform(2.0, 3.0, space8.nv)])
    u = space8.interpolate_velocity(lambda x, y: (np.sin(np.pi * x) * np.sin(np.pi * y), x * y * (1 - x) * (1 - y)))
    st = state_from_alpha(space8, TWO_GAS_EOS, a, u=u)
    path = tmp_path / "s.vtk"
    write_vtk(space8, st, path)
    d = read_vtk_point_data(path)
    assert np.array_equal(d["points"][:, :2], space8.mesh.vertices)
    assert np.array_equal(d["cells"][:, 1:], space8.mesh.triangles)
    for name, val in zip(SCALARS, (st.alpha[0], st.alpha[1], st.phi[0], st.rho[0], st.rho[1], st.p)):
        assert np.array_equal(d[name], val)
    assert np.array_equal(d["u_g"][:, :2].T, st.u[0][:, :space8.nv])


def test_bad_path(tmp_path, space4):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="VTK"):
        write_vtk(space4, rest_state(space4, TWO_GAS_EOS), blocker / "x.vtk")


def test_run_outputs_are_deterministic(tmp_path):
    outs = []
    for tag in ("a", "b"):
        cfg = scenario_config("two_gas", nx=4, dt=1e-3, t_final=3e-3, output_every=2, out_dir=str(tmp_path / tag))
        s = run(cfg)
        assert s.ok and s.steps == 3
        outs.append(tmp_path / tag)
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == ["diagnostics.csv", "state_00000.vtk", "state_00002.vtk", "state_00003.vtk"]
    for n in names:
        assert (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
    assert len((outs[0] / "diagnostics.csv").read_text().splitlines()) == 1 + 2 * 4
