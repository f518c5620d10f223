"""Hybrid fast/slow SLDG sweep over one velocity direction of an AMR mesh.

Conforming cells reuse per-level precomputed overlap matrices (the cost of
the uniform-grid method); nonconforming cells at refinement boundaries
evaluate generalized overlap integrals against every source cell that
intersects the foot interval.  Coarse cells appearing in several pencils
are written back by weighted accumulation.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .basis import DGBasis
from .pencil import PencilSet
from .sldg1d import (
    ABSORBING,
    PERIODIC,
    OverlapPair,
    ShiftDecomposition,
    apply_update,
    check_bc,
    decompose_shift,
    overlap_pair,
)
from .tensor import TensorPermutation
from .vmesh import VelocityMesh


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class LevelMatrices:
    """Per-refinement-level shift decompositions and overlap pairs."""

    speed: float
    dt: float
    n_shift: tuple
    frac: tuple
    pairs: tuple


def precompute_level_matrices(basis: DGBasis, speed: float, dt: float,
                              base_width: float, n_levels: int) -> LevelMatrices:
    """Shift decomposition and overlap pair for each level 0..n_levels-1.

    Level widths halve per level, so each level gets its own fractional
    shift; the resulting pair is reused for every conforming cell at that
    level, which keeps the per-cell cost identical to a uniform grid.
    """
    n_shift, frac, pairs = [], [], []
    for lev in range(n_levels):
        d = decompose_shift(speed, dt, base_width / 2**lev)
        n_shift.append(d.n_shift)
        frac.append(d.frac)
        pairs.append(overlap_pair(basis, d.frac))
    return LevelMatrices(speed, dt, tuple(n_shift), tuple(frac), tuple(pairs))


@dataclass(frozen=True)
class GeneralizedOverlap:
    """Projection block from one source cell onto one destination cell.

    `matrix` already includes the inverse mass matrix; [lo, hi] is the
    overlap of the foot interval with the source cell, in foot coordinates.
    """

    matrix: np.ndarray
    lo: float
    hi: float


def _overlap_blocks(basis, vl, vr, dest_lo, dest_w, src_lo, src_w, disp):
    """Raw generalized overlap matrices for a batch of (dest, src) pairs.

    Entry [n, i, j] integrates the destination basis function i (evaluated
    at the foot point mapped back into the destination cell) against source
    basis function j over [vl[n], vr[n]], scaled by 2/dest_w; the 2p+2-point
    Gauss rule is exact for the degree-2p integrand.
    """
    gq, gw = basis.gauss_nodes, basis.gauss_weights
    half = 0.5 * (vr - vl)
    pts = vl[:, None] + half[:, None] * (gq[None, :] + 1.0)
    wts = half[:, None] * gw[None, :]
    dref = 2.0 * (pts + disp[:, None] - dest_lo[:, None]) / dest_w[:, None] - 1.0
    sref = 2.0 * (pts - src_lo[:, None]) / src_w[:, None] - 1.0
    dest = basis.eval_all(dref)
    src = basis.eval_all(sref)
    raw = np.einsum("nq,nqi,nqj->nij", wts, dest, src, optimize=True)
    raw *= (2.0 / dest_w)[:, None, None]
    return raw


def generalized_overlap(basis: DGBasis, dest_lo: float, dest_width: float,
                        src_lo: float, src_width: float,
                        displacement: float) -> GeneralizedOverlap:
    """Cross-size projection block for a destination/source cell pair.

    The foot interval is the destination cell shifted upstream by
    `displacement`; an empty intersection with the source cell yields the
    zero matrix.
    """
    if dest_width <= 0 or src_width <= 0:
        raise ValueError("cell widths must be positive")
    o = basis.n_nodes
    foot_lo = dest_lo - displacement
    vl = max(foot_lo, src_lo)
    vr = min(foot_lo + dest_width, src_lo + src_width)
    if vr <= vl:
        return GeneralizedOverlap(np.zeros((o, o)), vl, vl)
    raw = _overlap_blocks(
        basis,
        np.array([vl]), np.array([vr]),
        np.array([dest_lo]), np.array([dest_width]),
        np.array([src_lo]), np.array([src_width]),
        np.array([displacement]),
    )[0]
    return GeneralizedOverlap(basis.mass_inv @ raw, vl, vr)


def _fast_sources_ok(s, n_shift, levels, bc):
    """Is same-level index arithmetic valid for destination cell s?

    The integer shift walks n_shift (+1) positions along the pencil; index
    arithmetic equals coordinate arithmetic only when every in-range cell
    between destination and sources sits at the destination's level (a
    level change in between changes the cell widths and breaks the offset).
    The +-2 conforming radius guarantees this for |n_shift| <= 1; larger
    shifts are re-checked here and fall back to the slow path on failure.
    """
    n = len(levels)
    lo_idx = min(s, s - n_shift - 1)
    hi_idx = max(s, s - n_shift)
    lev = levels[s]
    if bc == PERIODIC:
        if hi_idx - lo_idx + 1 >= n:
            return bool((levels == lev).all())
        idx = np.arange(lo_idx, hi_idx + 1) % n
        return bool((levels[idx] == lev).all())
    i0 = max(lo_idx, 0)
    i1 = min(hi_idx, n - 1)
    return bool((levels[i0 : i1 + 1] == lev).all())


def _foot_segments(foot_lo, width, disp, bc, radius):
    """Split a foot interval into in-domain segments.

    Each segment carries the effective displacement mapping its (possibly
    wrapped) coordinates back to destination coordinates.  Periodic feet
    are reduced modulo the domain length first, so arbitrarily large
    displacements wrap cleanly; a reduced foot still straddling the upper
    boundary splits in two.
    """
    foot_hi = foot_lo + width
    if bc == ABSORBING:
        a = max(foot_lo, -radius)
        b = min(foot_hi, radius)
        return [(a, b, disp)] if b > a else []
    span = 2.0 * radius
    k = np.floor((foot_lo + radius) / span)
    a = foot_lo - k * span
    b = foot_hi - k * span
    if b <= radius:
        return [(a, b, disp + k * span)]
    return [(a, radius, disp + k * span),
            (-radius, b - span, disp + (k + 1.0) * span)]


def sweep_pencil(values, lowers, widths, levels, conforming, speed, dt,
                 lm: LevelMatrices, bc, radius, basis: DGBasis,
                 force_slow: bool = False):
    """Hybrid SLDG update of one pencil, batched over leading axes.

    `values` has shape (..., n_cells, p+1) in sweep order.  Conforming
    cells apply the precomputed same-level matrices; the rest locate their
    source cells by coordinate search along the pencil and accumulate
    generalized overlap contributions.  Absorbing boundaries read zero
    outside [-radius, radius]; periodic boundaries wrap foot coordinates
    by multiples of the domain length.
    """
    check_bc(bc)
    values = np.asarray(values, dtype=float)
    n = len(lowers)
    o = basis.n_nodes
    if values.shape[-2:] != (n, o):
        raise SweepError(
            f"pencil values shaped {values.shape[-2:]}, expected ({n}, {o})"
        )
    disp = speed * dt

    # Whole-pencil fast path: a conforming uniform pencil is exactly the
    # uniform-grid method, including its wrap/zero-fill boundary handling.
    if (not force_slow) and bool(conforming.all()) and (levels == levels[0]).all():
        lev = int(levels[0])
        dcmp = ShiftDecomposition(lm.n_shift[lev], lm.frac[lev])
        return apply_update(values, dcmp, lm.pairs[lev], bc)

    out = np.zeros(values.shape)
    uppers = lowers + widths
    slow_dest = []
    for s in range(n):
        lev = int(levels[s])
        ns = lm.n_shift[lev]
        if (not force_slow) and conforming[s] and _fast_sources_ok(s, ns, levels, bc):
            pair = lm.pairs[lev]
            q_same, q_nb = s - ns, s - ns - 1
            acc = 0.0
            for q, mat in ((q_same, pair.same), (q_nb, pair.neighbor)):
                if bc == PERIODIC:
                    acc = acc + values[..., q % n, :] @ mat.T
                elif 0 <= q < n:
                    acc = acc + values[..., q, :] @ mat.T
            out[..., s, :] = acc
        else:
            slow_dest.append(s)

    if slow_dest:
        recs = []
        for s in slow_dest:
            for a, b, de in _foot_segments(lowers[s] - disp, widths[s], disp, bc, radius):
                c0 = int(np.searchsorted(uppers, a, side="right"))
                c1 = int(np.searchsorted(lowers, b, side="left")) - 1
                for c in range(max(c0, 0), min(c1, n - 1) + 1):
                    vl = max(a, lowers[c])
                    vr = min(b, uppers[c])
                    if vr - vl > 1e-14 * widths[s]:
                        recs.append((s, c, vl, vr, de))
        if recs:
            s_idx = np.array([r[0] for r in recs])
            c_idx = np.array([r[1] for r in recs])
            raw = _overlap_blocks(
                basis,
                np.array([r[2] for r in recs]),
                np.array([r[3] for r in recs]),
                lowers[s_idx], widths[s_idx],
                lowers[c_idx], widths[c_idx],
                np.array([r[4] for r in recs]),
            )
            mats = np.matmul(basis.mass_inv, raw)
            for m, (s, c, _, _, _) in enumerate(recs):
                out[..., s, :] += values[..., c, :] @ mats[m].T
    return out


def weighted_writeback(f_in, gather, weights, values):
    """Weighted accumulation of pencil results into the global array.

    Computes f_out = f_in + sum over contributions of w * (value - f_in),
    which reduces to a plain copy for entries with weight one.  `gather`,
    `weights` and `values` are flat, aligned contribution arrays; every
    element of f_in must receive at least one contribution.
    """
    f_in = np.asarray(f_in, dtype=float)
    gather = np.asarray(gather)
    weights = np.asarray(weights, dtype=float)
    values = np.asarray(values, dtype=float)
    counts = np.bincount(gather, minlength=f_in.size)
    if (counts == 0).any():
        missing = int(np.nonzero(counts == 0)[0][0])
        raise SweepError(f"element {missing} has zero total write-back weight")
    out = f_in.copy()
    is_copy = weights == 1.0
    out[gather[is_copy]] = values[is_copy]
    rest = ~is_copy
    if rest.any():
        delta = weights[rest] * (values[rest] - f_in[gather[rest]])
        out += np.bincount(gather[rest], weights=delta, minlength=f_in.size)
    return out


@dataclass
class _PencilGroup:
    """Pencils sharing an identical cell layout, batched into one update."""

    lowers: np.ndarray
    widths: np.ndarray
    levels: np.ndarray
    conforming: np.ndarray
    n_lines: int
    n_cells: int
    gather: np.ndarray        # (n_lines, n_cells*(p+1)) global velocity-DOF ids
    simple: bool              # every entry has weight one
    copy_pos: np.ndarray      # flat positions with weight one
    copy_targets: np.ndarray
    acc_pos: np.ndarray       # flat positions with weight < one
    acc_targets: np.ndarray
    acc_weights: np.ndarray


@dataclass
class SweepPlan:
    """Static gather/scatter layout for sweeping one direction of a mesh."""

    direction: int
    basis: DGBasis
    radius: float
    base_width: float
    n_levels: int
    n_dofs: int
    groups: list


def build_sweep_plan(mesh: VelocityMesh, pset: PencilSet, perm: TensorPermutation,
                     basis: DGBasis) -> SweepPlan:
    """Group congruent pencils and precompute their DOF gather indices.

    Pencils with identical cell layout (same coordinates, widths, levels)
    share their update operator for any speed, so their transverse lines
    are batched into one matrix operation per destination cell.
    """
    o = basis.n_nodes
    n_local = perm.n_local
    lines = perm.lines[pset.direction]

    grouped: dict = {}
    order: list = []
    for q in range(pset.n_pencils):
        sl = pset.pencil_slice(q)
        key = (
            pset.levels[sl].tobytes(),
            pset.lowers[sl].tobytes(),
            pset.widths[sl].tobytes(),
            pset.conforming[sl].tobytes(),
        )
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(q)

    groups = []
    for key in order:
        qs = grouped[key]
        sl0 = pset.pencil_slice(qs[0])
        n_cells = sl0.stop - sl0.start
        gather_rows = []
        weight_rows = []
        for q in qs:
            sl = pset.pencil_slice(q)
            base = pset.cell_ids[sl] * n_local          # (n_cells,)
            w_entry = np.repeat(pset.weights[sl], o)    # (n_cells*o,)
            for t in range(len(lines)):
                gather_rows.append(
                    (base[:, None] + lines[t][None, :]).ravel()
                )
                weight_rows.append(w_entry)
        gather = np.asarray(gather_rows, dtype=np.int64)
        weights = np.asarray(weight_rows)
        is_copy = (weights == 1.0).ravel()
        flat_gather = gather.ravel()
        groups.append(
            _PencilGroup(
                lowers=pset.lowers[sl0].copy(),
                widths=pset.widths[sl0].copy(),
                levels=pset.levels[sl0].copy(),
                conforming=pset.conforming[sl0].copy(),
                n_lines=gather.shape[0],
                n_cells=n_cells,
                gather=gather,
                simple=bool(is_copy.all()),
                copy_pos=np.nonzero(is_copy)[0],
                copy_targets=flat_gather[is_copy],
                acc_pos=np.nonzero(~is_copy)[0],
                acc_targets=flat_gather[~is_copy],
                acc_weights=weights.ravel()[~is_copy],
            )
        )

    n_dofs = mesh.n_cells * n_local
    covered = np.zeros(n_dofs, dtype=np.int64)
    for g in groups:
        covered += np.bincount(g.gather.ravel(), minlength=n_dofs)
    if (covered == 0).any():
        raise SweepError("sweep plan leaves velocity DOFs uncovered")

    return SweepPlan(
        direction=pset.direction,
        basis=basis,
        radius=mesh.radius,
        base_width=mesh.base_width,
        n_levels=int(mesh.levels.max()) + 1,
        n_dofs=n_dofs,
        groups=groups,
    )


def _sweep_column(f, ix, speed, dt, plan, bc, force_slow):
    basis = plan.basis
    o = basis.n_nodes
    lm = precompute_level_matrices(basis, speed, dt, plan.base_width, plan.n_levels)
    fv = np.ascontiguousarray(f[:, ix])
    out = fv.copy()
    for g in plan.groups:
        flat = fv[g.gather]
        res = sweep_pencil(
            flat.reshape(g.n_lines, g.n_cells, o),
            g.lowers, g.widths, g.levels, g.conforming,
            speed, dt, lm, bc, plan.radius, basis, force_slow,
        ).reshape(g.n_lines, -1)
        if g.simple:
            out[g.gather] = res
        else:
            res_flat = res.ravel()
            out[g.copy_targets] = res_flat[g.copy_pos]
            delta = g.acc_weights * (res_flat[g.acc_pos] - fv[g.acc_targets])
            out += np.bincount(g.acc_targets, weights=delta, minlength=out.size)
    f[:, ix] = out


def advect_velocity(f, speeds, dt, plan: SweepPlan, bc: str = ABSORBING,
                    workers: int = 1, force_slow: bool = False):
    """Advect every spatial column of the field along the plan's direction.

    `f` has shape (n_velocity_dofs, n_x_dofs); column ix moves with speed
    speeds[ix].  Columns with exactly zero speed are skipped, leaving their
    bits untouched.  Columns are independent, so they are distributed over
    worker threads; each column's arithmetic is identical regardless of the
    worker count.  Updates f in place and returns it.
    """
    check_bc(bc)
    speeds = np.asarray(speeds, dtype=float)
    if f.shape != (plan.n_dofs, speeds.size):
        raise SweepError(
            f"field shaped {f.shape}, expected ({plan.n_dofs}, {speeds.size})"
        )
    cols = np.nonzero(speeds != 0.0)[0]
    if cols.size == 0:
        return f
    if workers <= 1:
        for ix in cols:
            _sweep_column(f, ix, speeds[ix], dt, plan, bc, force_slow)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(
                lambda ix: _sweep_column(f, ix, speeds[ix], dt, plan, bc, force_slow),
                cols,
            ))
    return f
