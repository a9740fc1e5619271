"""Structured triangulations, quadrature and P1 / P1-bubble element data.

Vertex ``(i, j)`` of an ``nx`` x ``ny`` grid has index ``j * (nx + 1) + i``.
Every cell is split along its lower-left to upper-right diagonal, so both
triangles of a cell are counter-clockwise.

Velocity fields live in the P1-bubble (MINI) space.  One component is stored
as a vector of length ``n_vertices + n_triangles``: vertex values first,
then one bubble coefficient per triangle.  The bubble is ``27 l1 l2 l3``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class MeshError(ValueError):
    """Invalid mesh arguments or element indices."""


@dataclass(frozen=True)
class Quadrature:
    """Rule on the reference triangle.

    ``points`` are barycentric coordinates (n, 3); ``weights`` sum to one, so
    the physical weight of point q on triangle T is ``weights[q] * |T|``.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int


def degree4_rule() -> Quadrature:
    # symmetric 6-point rule, exact to degree 4
    a = 0.445948490915964886318329253883051
    b = 0.091576213509770743459571463402202
    wa = 0.223381589678011465695007008433118
    wb = 0.109951743655321867638326324900215
    pts = np.array([
        [a, a, 1.0 - 2.0 * a],
        [a, 1.0 - 2.0 * a, a],
        [1.0 - 2.0 * a, a, a],
        [b, b, 1.0 - 2.0 * b],
        [b, 1.0 - 2.0 * b, b],
        [1.0 - 2.0 * b, b, b],
    ])
    w = np.array([wa, wa, wa, wb, wb, wb])
    return Quadrature(points=pts, weights=w, degree=4)


def edge_rule(n: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points on [0, 1] and weights summing to one."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True, eq=False)
class TriMesh:
    vertices: np.ndarray          # (nv, 2)
    triangles: np.ndarray         # (nt, 3), counter-clockwise
    boundary_vertices: np.ndarray  # sorted vertex indices
    boundary_edges: np.ndarray    # (ne, 2) vertex pairs
    boundary_normals: np.ndarray  # (ne, 2) outward unit normals
    n_cells_x: int
    n_cells_y: int
    lengths: tuple[float, float] = (1.0, 1.0)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def barycenters(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def lambda_gradients(self) -> np.ndarray:
        """Gradients of the barycentric coordinates, shape (nt, 3, 2)."""
        p = self.vertices[self.triangles]
        x, y = p[..., 0], p[..., 1]
        twice = 2.0 * self.areas
        g = np.empty((self.n_triangles, 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            g[:, i, 0] = (y[:, j] - y[:, k]) / twice
            g[:, i, 1] = (x[:, k] - x[:, j]) / twice
        return g

    @cached_property
    def is_boundary_vertex(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = True
        return mask

    @property
    def domain_area(self) -> float:
        return float(self.lengths[0] * self.lengths[1])

    def find_vertex(self, x: float, y: float) -> int:
        d = np.hypot(self.vertices[:, 0] - x, self.vertices[:, 1] - y)
        return int(np.argmin(d))


def build_uniform_mesh(nx: int, ny: int, lengths: tuple[float, float] = (1.0, 1.0)) -> TriMesh:
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise MeshError(f"mesh resolution must be positive integers, got ({nx}, {ny})")
    lx, ly = float(lengths[0]), float(lengths[1])
    if not (lx > 0 and ly > 0):
        raise MeshError(f"domain extents must be positive, got {lengths}")
    nx, ny = int(nx), int(ny)

    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    v00 = j * (nx + 1) + i
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    tol = 1e-12 * max(lx, ly)
    x, y = vertices[:, 0], vertices[:, 1]
    on_bnd = (np.abs(x) <= tol) | (np.abs(x - lx) <= tol) | (np.abs(y) <= tol) | (np.abs(y - ly) <= tol)
    boundary_vertices = np.flatnonzero(on_bnd)

    idx = lambda a, b: b * (nx + 1) + a  # noqa: E731
    edges, normals = [], []
    for a in range(nx):
        edges.append((idx(a, 0), idx(a + 1, 0)))
        normals.append((0.0, -1.0))
        edges.append((idx(a + 1, ny), idx(a, ny)))
        normals.append((0.0, 1.0))
    for b in range(ny):
        edges.append((idx(nx, b), idx(nx, b + 1)))
        normals.append((1.0, 0.0))
        edges.append((idx(0, b + 1), idx(0, b)))
        normals.append((-1.0, 0.0))

    return TriMesh(
        vertices=vertices,
        triangles=triangles,
        boundary_vertices=boundary_vertices,
        boundary_edges=np.array(edges, dtype=np.int64),
        boundary_normals=np.array(normals),
        n_cells_x=nx,
        n_cells_y=ny,
        lengths=(lx, ly),
    )


def _check_element(mesh: TriMesh, element: int) -> None:
    if not (0 <= element < mesh.n_triangles):
        raise MeshError(f"element index {element} out of range [0, {mesh.n_triangles})")


def eval_p1(mesh: TriMesh, field: np.ndarray, element: int, barycentric) -> float:
    """Value of a P1 field at a barycentric point of one element."""
    _check_element(mesh, element)
    lam = np.asarray(barycentric, dtype=float)
    if lam.shape != (3,) or np.any(lam < -1e-14) or abs(lam.sum() - 1.0) > 1e-12:
        raise MeshError(f"invalid barycentric coordinates {barycentric}")
    return float(np.dot(np.asarray(field)[mesh.triangles[element]], lam))


def eval_gradient_p1(mesh: TriMesh, field: np.ndarray, element: int | None = None) -> np.ndarray:
    """Elementwise-constant gradient of a P1 field.

    With ``element=None`` returns all element gradients, shape (nt, 2).
    """
    f = np.asarray(field)
    if element is None:
        return np.einsum("ei,eid->ed", f[mesh.triangles], mesh.lambda_gradients)
    _check_element(mesh, element)
    return f[mesh.triangles[element]] @ mesh.lambda_gradients[element]


def bubble(lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam)
    return 27.0 * lam[..., 0] * lam[..., 1] * lam[..., 2]


@dataclass(eq=False)
class FESpace:
    """Precomputed element data shared by every weak form.

    Arrays indexed ``[e, q, ...]`` are per element and quadrature point.
    """

    mesh: TriMesh
    quad: Quadrature = field(default_factory=degree4_rule)

    def __post_init__(self) -> None:
        m = self.mesh
        lam = self.quad.points
        self.nv = m.n_vertices
        self.nt = m.n_triangles
        self.nq = len(self.quad.weights)
        self.n_vel = self.nv + self.nt  # dofs of one velocity component
        self.wq = self.quad.weights[None, :] * m.areas[:, None]  # (nt, nq)
        self.lam = lam  # (nq, 3)
        self.p1_grad = m.lambda_gradients  # (nt, 3, 2)

        # P1-bubble basis: three hats plus the bubble
        self.vel_phi = np.column_stack([lam, bubble(lam)])  # (nq, 4)
        gl = m.lambda_gradients
        l0, l1, l2 = lam[:, 0], lam[:, 1], lam[:, 2]
        gb = 27.0 * (
            (l1 * l2)[None, :, None] * gl[:, None, 0, :]
            + (l0 * l2)[None, :, None] * gl[:, None, 1, :]
            + (l0 * l1)[None, :, None] * gl[:, None, 2, :]
        )  # (nt, nq, 2)
        vg = np.empty((self.nt, self.nq, 4, 2))
        vg[:, :, :3, :] = gl[:, None, :, :]
        vg[:, :, 3, :] = gb
        self.vel_grad = vg

        self.p1_dofs = m.triangles
        self.vel_dofs = np.column_stack([m.triangles, self.nv + np.arange(self.nt)])  # (nt, 4)
        self.qp_xy = np.einsum("qi,eid->eqd", lam, m.vertices[m.triangles])

        # Dirichlet (boundary) velocity dofs of one component; bubbles are interior
        self.vel_free = np.ones(self.n_vel, dtype=bool)
        self.vel_free[m.boundary_vertices] = False
        self.lumped_mass = np.bincount(
            m.triangles.ravel(), weights=np.repeat(m.areas / 3.0, 3), minlength=self.nv
        )

    # -- evaluation at quadrature points -------------------------------
    def p1_qp(self, f: np.ndarray) -> np.ndarray:
        return np.asarray(f)[self.p1_dofs] @ self.lam.T

    def p1_grad_e(self, f: np.ndarray) -> np.ndarray:
        # differences against the first vertex: exact zero for uniform fields
        loc = np.asarray(f)[self.p1_dofs]
        loc = loc[:, 1:] - loc[:, :1]
        return np.einsum("ei,eid->ed", loc, self.p1_grad[:, 1:])

    def vel_qp(self, u: np.ndarray) -> np.ndarray:
        """u: (2, n_vel) -> values (nt, nq, 2)."""
        loc = u[:, self.vel_dofs]  # (2, nt, 4)
        return np.einsum("cea,qa->eqc", loc, self.vel_phi)

    def vel_grad_qp(self, u: np.ndarray) -> np.ndarray:
        """u: (2, n_vel) -> gradients (nt, nq, 2, 2) indexed [comp, d/dx_j]."""
        loc = u[:, self.vel_dofs]
        return np.einsum("cea,eqaj->eqcj", loc, self.vel_grad)

    def div_qp(self, u: np.ndarray) -> np.ndarray:
        g = self.vel_grad_qp(u)
        return g[..., 0, 0] + g[..., 1, 1]

    def integrate(self, values_qp: np.ndarray) -> float:
        return float(np.sum(self.wq * values_qp))

    def integrate_p1(self, f: np.ndarray) -> float:
        return float(self.lumped_mass @ np.asarray(f))

    def vertex_values(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u)[..., : self.nv]

    def zero_velocity(self) -> np.ndarray:
        return np.zeros((2, self.n_vel))

    def interpolate_velocity(self, fn) -> np.ndarray:
        """Nodal interpolant of ``fn(x, y) -> (ux, uy)``; bubble dofs chosen to
        match the barycenter value."""
        m = self.mesh
        u = np.zeros((2, self.n_vel))
        ux, uy = fn(m.vertices[:, 0], m.vertices[:, 1])
        u[0, : self.nv], u[1, : self.nv] = ux, uy
        bx, by = fn(m.barycenters[:, 0], m.barycenters[:, 1])
        u[0, self.nv:] = bx - u[0, m.triangles].mean(axis=1)
        u[1, self.nv:] = by - u[1, m.triangles].mean(axis=1)
        return u
