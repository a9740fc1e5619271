"""Sparse assembly and Krylov solves.

Matrices are ``scipy.sparse.csr_matrix`` with sorted, duplicate-free column
indices.  The Krylov iterations themselves are scipy's; this module owns the
preconditioning, the residual contract and the error reporting.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)


class SolverFailure(RuntimeError):
    def __init__(self, message: str, residual: float = float("nan"), iterations: int = -1):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NumericBreakdown(FloatingPointError):
    pass


class IncompatibleSystem(ValueError):
    pass


METHODS = ("cg", "bicgstab", "gmres")
PRECONDITIONERS = ("jacobi", "ilu", "none")


@dataclass
class SolverConfig:
    rtol: float = 1e-10
    atol: float = 1e-14
    maxiter: int | None = None  # None -> 10 * n
    method: str = "bicgstab"
    restart: int = 50
    preconditioner: str = "jacobi"  # jacobi | ilu | none

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown Krylov method {self.method!r}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("solver tolerances must be positive")
        if self.restart < 1:
            raise ValueError("gmres restart must be >= 1")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")

    def with_(self, **kw) -> "SolverConfig":
        d = dict(self.__dict__)
        d.update(kw)
        return SolverConfig(**d)


@dataclass
class SolverStats:
    """Accumulates iteration counts across calls (one entry per solve)."""

    iterations: list[int] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)

    def record(self, its: int, res: float) -> None:
        self.iterations.append(its)
        self.residuals.append(res)

    @property
    def total(self) -> int:
        return int(sum(self.iterations))


# ---------------------------------------------------------------- assembly
@dataclass(frozen=True)
class Layout:
    """Local-to-global dof map: ``dofs[e]`` lists the global dofs of element e."""

    dofs: np.ndarray
    ndof: int

    @property
    def n_local(self) -> int:
        return self.dofs.shape[1]


def p1_layout(space) -> Layout:
    return Layout(space.p1_dofs, space.nv)


def velocity_layout(space) -> Layout:
    """Both velocity components: local dofs (comp 0 x4, comp 1 x4)."""
    d = space.vel_dofs
    return Layout(np.hstack([d, d + space.n_vel]), 2 * space.n_vel)


def velocity_component_layout(space) -> Layout:
    return Layout(space.vel_dofs, space.n_vel)


def csr_from_local(rows: np.ndarray, cols: np.ndarray, vals: np.ndarray, shape) -> sp.csr_matrix:
    """Sum element contributions ``vals[e, a, b]`` into entry ``(rows[e, a], cols[e, b])``."""
    nt, na = rows.shape
    nb = cols.shape[1]
    r = np.broadcast_to(rows[:, :, None], (nt, na, nb)).ravel()
    c = np.broadcast_to(cols[:, None, :], (nt, na, nb)).ravel()
    A = sp.coo_matrix((np.asarray(vals, dtype=float).ravel(), (r, c)), shape=shape).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble(kernel: Callable, trial: Layout, test: Layout, space=None) -> sp.csr_matrix:
    """Assemble ``A[i, j] = sum_e kernel_e[a, b]`` with ``i = test.dofs[e, a]``,
    ``j = trial.dofs[e, b]``.

    ``kernel`` is either an array (nt, n_test_local, n_trial_local) or a
    callable returning one (called with ``space``).
    """
    local = kernel(space) if callable(kernel) else kernel
    local = np.asarray(local)
    nt = test.dofs.shape[0]
    if trial.dofs.shape[0] != nt:
        raise ValueError("trial and test layouts cover different element counts")
    if local.shape != (nt, test.n_local, trial.n_local):
        raise ValueError(
            f"kernel shape {local.shape} does not match layouts ({nt}, {test.n_local}, {trial.n_local})"
        )
    return csr_from_local(test.dofs, trial.dofs, local, (test.ndof, trial.ndof))


def assemble_vector(local: np.ndarray, layout: Layout) -> np.ndarray:
    local = np.asarray(local)
    if local.shape != layout.dofs.shape:
        raise ValueError(f"local vector shape {local.shape} != {layout.dofs.shape}")
    return np.bincount(layout.dofs.ravel(), weights=local.ravel(), minlength=layout.ndof)


# ------------------------------------------------------------------ solves
def _check_finite(name: str, v: np.ndarray) -> None:
    if not np.all(np.isfinite(v)):
        raise NumericBreakdown(f"non-finite values in {name}")


def _jacobi(A) -> spla.LinearOperator:
    d = A.diagonal().astype(float)
    d[np.abs(d) < 1e-300] = 1.0
    inv = 1.0 / d
    return spla.LinearOperator(A.shape, matvec=lambda x: inv * x, dtype=float)


def ilu_preconditioner(A, drop_tol: float = 1e-4, fill_factor: float = 10.0) -> spla.LinearOperator:
    """Incomplete LU of A wrapped as a preconditioner (not a direct solve)."""
    ilu = spla.spilu(sp.csc_matrix(A), drop_tol=drop_tol, fill_factor=fill_factor)
    return spla.LinearOperator(A.shape, matvec=ilu.solve, dtype=float)


def solve(
    A,
    b: np.ndarray,
    config: SolverConfig | None = None,
    symmetric_hint: bool = False,
    x0: np.ndarray | None = None,
    preconditioner=None,
    stats: SolverStats | None = None,
) -> np.ndarray:
    """Solve ``A x = b`` to ``||b - A x|| <= rtol ||b|| + atol``.

    ``symmetric_hint`` switches the default method to CG.  Raises
    :class:`SolverFailure` when the true residual misses the contract.
    """
    cfg = config or SolverConfig()
    A = sp.csr_matrix(A) if not isinstance(A, spla.LinearOperator) else A
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
    _check_finite("rhs", b)
    if sp.issparse(A):
        _check_finite("matrix", A.data)

    method = "cg" if symmetric_hint and cfg.method == "bicgstab" else cfg.method
    maxiter = cfg.maxiter or 10 * n
    bnorm = float(np.linalg.norm(b))
    target = cfg.rtol * bnorm + cfg.atol
    if bnorm == 0.0 and x0 is None:
        if stats is not None:
            stats.record(0, 0.0)
        return np.zeros(n)

    M = preconditioner
    if M is None and sp.issparse(A):
        if cfg.preconditioner == "jacobi":
            M = _jacobi(A)
        elif cfg.preconditioner == "ilu":
            M = ilu_preconditioner(A)

    count = [0]

    def cb(_):
        count[0] += 1

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    # scipy stops on max(rtol*|b|, atol); aim below the summed target so the
    # recursively updated residual cannot drift out of the contract
    krylov_rtol = 0.5 * cfg.rtol
    res = float(np.linalg.norm(b - A @ x))
    for attempt in range(4):
        if res <= target:
            break
        if method == "cg":
            x, _ = spla.cg(A, b, x0=x, rtol=krylov_rtol, atol=0.5 * cfg.atol, maxiter=maxiter, M=M, callback=cb)
        elif method == "bicgstab":
            x, _ = spla.bicgstab(A, b, x0=x, rtol=krylov_rtol, atol=0.5 * cfg.atol, maxiter=maxiter, M=M, callback=cb)
        else:
            x, _ = spla.gmres(
                A, b, x0=x, rtol=krylov_rtol, atol=0.5 * cfg.atol, restart=cfg.restart,
                maxiter=max(1, maxiter // cfg.restart), M=M, callback=cb, callback_type="pr_norm",
            )
        _check_finite("solution", x)
        res = float(np.linalg.norm(b - A @ x))
        krylov_rtol *= 0.1
    if stats is not None:
        stats.record(count[0], res)
    if res > target:
        raise SolverFailure(
            f"{method} did not reach residual {target:.3e} (final {res:.3e}, {count[0]} iterations)",
            residual=res,
            iterations=count[0],
        )
    return x


def solve_dirichlet(
    A,
    b: np.ndarray,
    fixed: np.ndarray,
    values: np.ndarray | float = 0.0,
    config: SolverConfig | None = None,
    symmetric_hint: bool = False,
    x0: np.ndarray | None = None,
    stats: SolverStats | None = None,
) -> np.ndarray:
    """Solve with ``x[fixed] = values`` by row/column elimination and rhs lift."""
    A = sp.csr_matrix(A)
    n = A.shape[0]
    fixed = np.asarray(fixed)
    if fixed.dtype == bool:
        fixed_mask = fixed
    else:
        fixed_mask = np.zeros(n, dtype=bool)
        fixed_mask[fixed] = True
    free = ~fixed_mask
    g = np.zeros(n)
    values = np.asarray(values, dtype=float)
    if values.ndim == 0:
        g[fixed_mask] = values
    elif values.shape == (n,):
        g[fixed_mask] = values[fixed_mask]
    else:  # one value per fixed dof
        g[fixed_mask] = values
    rhs = b[free] - A[free][:, fixed_mask] @ g[fixed_mask]
    Aff = A[free][:, free]
    xf = solve(Aff, rhs, config, symmetric_hint, None if x0 is None else x0[free], stats=stats)
    x = g.copy()
    x[free] = xf
    return x


def solve_constrained_mean(
    A,
    b: np.ndarray,
    target_mean: float,
    config: SolverConfig | None = None,
    weights: np.ndarray | None = None,
    x0: np.ndarray | None = None,
    stats: SolverStats | None = None,
    rhs_scale: float = 0.0,
) -> np.ndarray:
    """Solve a singular system whose null space is the constants.

    The solution is shifted so that its (``weights``-weighted) mean equals
    ``target_mean``.  The rhs must be orthogonal to constants up to
    ``1e-8 * max(||b||, rhs_scale)``; pass ``rhs_scale`` when ``b`` is a
    residual of a larger rhs.
    """
    n = A.shape[0]
    b = np.asarray(b, dtype=float)
    _check_finite("rhs", b)
    bnorm = float(np.linalg.norm(b))
    proj = abs(b.sum()) / np.sqrt(n)
    if proj > 1e-8 * max(bnorm, rhs_scale):
        raise IncompatibleSystem(
            f"rhs has a component {proj:.3e} along the constants (|b| = {bnorm:.3e})"
        )
    b = b - b.sum() / n
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    cfg = config or SolverConfig(method="cg")
    start = None if x0 is None else np.asarray(x0, dtype=float) - (w @ x0) / w.sum()
    x = solve(A, b, cfg, symmetric_hint=True, x0=start, stats=stats)
    return x + (target_mean - (w @ x) / w.sum())
