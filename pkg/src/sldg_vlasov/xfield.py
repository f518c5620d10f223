"""Spatial side of the solver: periodic DG x-grid, x-advection, Poisson solve.

The x-advection reuses the uniform-grid SLDG update with one precomputed
overlap pair per distinct velocity-DOF speed (speeds never change, so the
pairs are built once before the time loop).  The Poisson equation is
discretized with continuous finite elements of the same degree on the same
cells and solved directly with a zero-mean constraint to fix the periodic
null space.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .basis import DGBasis
from .sldg1d import PERIODIC, OverlapPair, ShiftDecomposition, apply_update, decompose_shift, overlap_pair


class XGrid:
    """Uniform periodic 1D DG grid of n_cells cells and degree `degree`.

    DG nodes at cell interfaces are duplicated; dof ix = cell*(p+1) + node.
    """

    def __init__(self, n_cells: int, degree: int, length: float):
        if n_cells < 4:
            raise ValueError(f"need at least 4 x-cells, got {n_cells}")
        if length <= 0:
            raise ValueError(f"domain length must be positive, got {length}")
        self.n_cells = int(n_cells)
        self.length = float(length)
        self.basis = DGBasis(degree)
        self.degree = self.basis.degree
        self.h = self.length / self.n_cells
        lowers = np.arange(self.n_cells) * self.h
        self.node_coords = lowers[:, None] + 0.5 * (self.basis.nodes + 1.0) * self.h
        self.dof_coords = self.node_coords.ravel()
        self.dof_weights = np.tile(0.5 * self.h * self.basis.weights, self.n_cells)

    @property
    def n_dofs(self) -> int:
        return self.n_cells * (self.degree + 1)


@dataclass(frozen=True)
class _SpeedGroup:
    rows: np.ndarray
    decomp: ShiftDecomposition
    pair: OverlapPair


@dataclass(frozen=True)
class XAdvectionPlan:
    """Velocity-DOF rows grouped by advection speed, with their matrices."""

    n_cells: int
    groups: tuple


def precompute_x_matrices(xgrid: XGrid, speeds, dt: float) -> XAdvectionPlan:
    """One shift decomposition and overlap pair per distinct speed.

    Velocity DOFs sharing the same sweep coordinate share their matrices;
    zero-speed rows get the exact identity pair and are skipped when the
    plan is applied.
    """
    speeds = np.asarray(speeds, dtype=float)
    if not np.isfinite(speeds).all():
        raise ValueError("advection speeds must be finite")
    uniq, inverse = np.unique(speeds, return_inverse=True)
    groups = []
    for u in range(len(uniq)):
        rows = np.nonzero(inverse == u)[0]
        d = decompose_shift(uniq[u], dt, xgrid.h)
        groups.append(_SpeedGroup(rows, d, overlap_pair(xgrid.basis, d.frac)))
    return XAdvectionPlan(xgrid.n_cells, tuple(groups))


def _advect_rows(f, group, n_cells):
    if group.decomp.n_shift == 0 and group.decomp.frac == 0.0:
        return
    block = f[group.rows]
    shape = block.shape
    vals = block.reshape(len(group.rows), n_cells, -1)
    f[group.rows] = apply_update(vals, group.decomp, group.pair, PERIODIC).reshape(shape)


def advect_x(f, plan: XAdvectionPlan, workers: int = 1):
    """Apply the periodic SLDG x-update to every velocity DOF row of f.

    Rows grouped by speed update together; zero-speed rows keep their bits.
    Groups touch disjoint rows, so threading over them cannot change the
    result.  Updates f in place and returns it.
    """
    if workers <= 1:
        for g in plan.groups:
            _advect_rows(f, g, plan.n_cells)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda g: _advect_rows(f, g, plan.n_cells), plan.groups))
    return f


def compute_rho(f, velocity_weights):
    """Charge density at the x DOFs: quadrature of f over velocity space."""
    return np.asarray(velocity_weights) @ f


class PoissonSolver:
    """Direct periodic Poisson solve -phi'' = rho - mean(rho) on continuous FE.

    The FE space shares the grid's cells and degree but single-values the
    interface nodes (n_cells * degree unknowns).  The singular periodic
    stiffness matrix is augmented with the zero-mean constraint and
    factorized once; each step is a pair of triangular solves.
    """

    def __init__(self, xgrid: XGrid):
        self.xgrid = xgrid
        basis = xgrid.basis
        p = xgrid.degree
        n_nodes = xgrid.n_cells * p
        self.n_nodes = n_nodes
        cells = np.arange(xgrid.n_cells)
        self.conn = (cells[:, None] * p + np.arange(p + 1)[None, :]) % n_nodes

        # Stiffness integrand has degree 2p-2: the GLL rule is exact.
        local = (2.0 / xgrid.h) * basis.diff.T @ (basis.weights[:, None] * basis.diff)
        k = np.zeros((n_nodes, n_nodes))
        for c in range(xgrid.n_cells):
            k[np.ix_(self.conn[c], self.conn[c])] += local

        lumped = np.zeros(n_nodes)
        np.add.at(lumped, self.conn.ravel(),
                  np.tile(0.5 * xgrid.h * basis.weights, xgrid.n_cells))
        self._lumped = lumped

        aug = np.zeros((n_nodes + 1, n_nodes + 1))
        aug[:n_nodes, :n_nodes] = k
        aug[:n_nodes, n_nodes] = lumped
        aug[n_nodes, :n_nodes] = lumped
        self._stiffness = k
        self._lu = lu_factor(aug)

    def rhs(self, rho):
        """Load vector of rho - mean(rho), assembled with GLL quadrature."""
        rho = np.asarray(rho, dtype=float)
        rho_bar = (self.xgrid.dof_weights @ rho) / self.xgrid.length
        contrib = self.xgrid.dof_weights * (rho - rho_bar)
        b = np.zeros(self.n_nodes)
        np.add.at(b, self.conn.ravel(), contrib)
        return b

    def solve(self, rho):
        """Mean-zero potential at the FE nodes for charge density rho."""
        b = np.zeros(self.n_nodes + 1)
        b[: self.n_nodes] = self.rhs(rho)
        # Non-finite input propagates to the diagnostics, where the driver
        # aborts with a step index instead of a bare linear-algebra error.
        sol = lu_solve(self._lu, b, check_finite=False)
        return sol[: self.n_nodes]

    def residual(self, phi, rho):
        """Discrete weak residual K phi - b (diagnostic for tests)."""
        return self._stiffness @ phi - self.rhs(rho)

    def electric_field(self, phi):
        """E = -phi' sampled at the DG GLL nodes, one value per x DOF.

        phi is continuous but phi' may jump at cell interfaces; each DG DOF
        takes the derivative from its own element.
        """
        xg = self.xgrid
        phi_loc = phi[self.conn]
        e = -(2.0 / xg.h) * phi_loc @ xg.basis.diff.T
        return e.ravel()


def solve_poisson(rho, xgrid: XGrid):
    """One-shot mean-zero periodic Poisson solve (see PoissonSolver)."""
    return PoissonSolver(xgrid).solve(rho)


def compute_E(phi, xgrid: XGrid):
    """One-shot electric field evaluation from a nodal FE potential."""
    return PoissonSolver(xgrid).electric_field(phi)


def field_energy(e_field, xgrid: XGrid) -> float:
    """Electric field energy, one half the GLL quadrature of E^2 over x."""
    e = np.asarray(e_field, dtype=float)
    return 0.5 * float(xgrid.dof_weights @ (e * e))
