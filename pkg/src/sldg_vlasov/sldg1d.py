"""Uniform-grid semi-Lagrangian DG transport along one axis.

The piecewise-polynomial solution is translated exactly along the
characteristic and L2-projected back onto the broken DG space.  On a
uniform pencil every destination cell couples to exactly two upstream
source cells through a pair of overlap matrices that depend only on the
fractional part of the shift, so the matrices are built once per shift
and applied everywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import DGBasis

PERIODIC = "periodic"
ABSORBING = "absorbing"

_ONE_MINUS_ULP = float(np.nextafter(1.0, 0.0))


def check_bc(bc: str) -> str:
    if bc not in (PERIODIC, ABSORBING):
        raise ValueError(f"boundary mode must be {PERIODIC!r} or {ABSORBING!r}, got {bc!r}")
    return bc


@dataclass(frozen=True)
class ShiftDecomposition:
    """Displacement measured in cell widths, split into integer + fractional parts."""

    n_shift: int
    frac: float


def decompose_shift(speed: float, dt: float, width: float) -> ShiftDecomposition:
    """Split speed*dt/width into floor and remainder with the remainder in [0, 1).

    A remainder within one ulp of 1.0 is folded to (n_shift + 1, 0) to avoid
    degenerate zero-width overlap intervals.
    """
    if width <= 0.0:
        raise ValueError(f"cell width must be positive, got {width}")
    if dt <= 0.0:
        raise ValueError(f"time step must be positive, got {dt}")
    ratio = speed * dt / width
    n = math.floor(ratio)
    frac = ratio - n
    if frac >= _ONE_MINUS_ULP:
        n += 1
        frac = 0.0
    return ShiftDecomposition(n, frac)


@dataclass(frozen=True)
class OverlapPair:
    """Same-cell and neighbor-cell projection blocks for one fractional shift.

    `same` acts on source cell i - n_shift, `neighbor` on cell i - n_shift - 1.
    Both already include the inverse mass matrix, so the update is simply
    out_i = same @ u_{i-n} + neighbor @ u_{i-n-1}.
    """

    same: np.ndarray
    neighbor: np.ndarray
    frac: float


def _interval_block(basis: DGBasis, lo: float, hi: float, src_offset: float) -> np.ndarray:
    """Integral of l_j(xi) * l_j'(xi + src_offset) over [lo, hi], indexed [j, j']."""
    half = 0.5 * (hi - lo)
    pts = lo + half * (basis.gauss_nodes + 1.0)
    wts = half * basis.gauss_weights
    dest = basis.eval_all(pts)
    src = basis.eval_all(pts + src_offset)
    return dest.T @ (wts[:, None] * src)


def overlap_pair(basis: DGBasis, frac: float) -> OverlapPair:
    """Build the two overlap matrices for fractional shift frac in [0, 1).

    The matrices realize the exact L2 projection of the translated
    piecewise-degree-p function onto the destination cell.  In destination
    reference coordinates the foot lands in the same-index source cell for
    xi in [2*frac - 1, 1] (source coordinate xi - 2*frac) and in the left
    neighbor for xi in [-1, 2*frac - 1] (source coordinate xi + 2 - 2*frac);
    both integrands have degree 2p, so the 2p+2-point Gauss rule is exact.
    """
    if not 0.0 <= frac < 1.0:
        raise ValueError(f"fractional shift must lie in [0, 1), got {frac}")
    o = basis.n_nodes
    if frac == 0.0:
        return OverlapPair(np.eye(o), np.zeros((o, o)), 0.0)
    split = 2.0 * frac - 1.0
    same_raw = _interval_block(basis, split, 1.0, -2.0 * frac)
    nb_raw = _interval_block(basis, -1.0, split, 2.0 * (1.0 - frac))
    return OverlapPair(basis.mass_inv @ same_raw, basis.mass_inv @ nb_raw, frac)


def shifted_source(values: np.ndarray, k: int, bc: str) -> np.ndarray:
    """Source array with out[..., i, :] = values[..., i - k, :].

    Periodic wraps indices modulo the pencil length; absorbing fills
    out-of-range reads with zeros.
    """
    n = values.shape[-2]
    if bc == PERIODIC:
        return np.roll(values, k, axis=-2)
    if k == 0:
        return values
    out = np.zeros_like(values)
    if k > 0:
        if k < n:
            out[..., k:, :] = values[..., : n - k, :]
    else:
        if -k < n:
            out[..., : n + k, :] = values[..., -k :, :]
    return out


def apply_update(values, decomp: ShiftDecomposition, pair: OverlapPair, bc: str = PERIODIC):
    """One SLDG advection step on a uniform pencil.

    `values` has shape (..., n_cells, p+1); destination cell i draws from
    source cells i - n_shift and i - n_shift - 1 only.
    """
    check_bc(bc)
    values = np.asarray(values, dtype=float)
    if values.ndim < 2:
        raise ValueError("expected pencil values of shape (..., n_cells, p+1)")
    src_same = shifted_source(values, decomp.n_shift, bc)
    src_nb = shifted_source(values, decomp.n_shift + 1, bc)
    return src_same @ pair.same.T + src_nb @ pair.neighbor.T


def projection_oracle(values, displacement: float, width: float, basis: DGBasis,
                      bc: str = PERIODIC):
    """Brute-force reference for apply_update, used only by tests.

    Translates the piecewise polynomial by `displacement` and projects it
    onto each destination cell by direct 50-point Gauss quadrature over
    every overlap subinterval.  Cell i spans [i*width, (i+1)*width).
    """
    check_bc(bc)
    values = np.asarray(values, dtype=float)
    n, o = values.shape
    gq, gw = np.polynomial.legendre.leggauss(50)
    length = n * width
    if bc == PERIODIC:
        n_images = int(abs(displacement) / length) + 2
        images = range(-n_images, n_images + 1)
    else:
        images = (0,)

    out = np.zeros_like(values)
    for i in range(n):
        foot_lo = i * width - displacement
        rhs = np.zeros(o)
        for c in range(n):
            for k in images:
                src_lo = c * width + k * length
                vl = max(foot_lo, src_lo)
                vr = min(foot_lo + width, src_lo + width)
                if vr <= vl:
                    continue
                pts = 0.5 * (vl + vr) + 0.5 * (vr - vl) * gq
                wts = 0.5 * (vr - vl) * gw
                src_vals = basis.eval_all(2.0 * (pts - src_lo) / width - 1.0) @ values[c]
                dest = basis.eval_all(2.0 * (pts + displacement - i * width) / width - 1.0)
                rhs += (2.0 / width) * ((wts * src_vals) @ dest)
        out[i] = basis.mass_inv @ rhs
    return out
