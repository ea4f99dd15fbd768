"""Bony paraproduct decomposition of products of scalar fields.

    a b = T_a b + T_b a + R(a, b)
    T_a b   = sum_{j>=1} S_{j-1} a  Delta_j b
    R(a, b) = sum_{j>=-1} sum_{|k-j|<=1} Delta_k a  Delta_j b

Every product is formed on the 3/2-padded grid, so the decomposition is
exact for fields without Nyquist content.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .littlewood_paley import CutoffSystem, build_cutoffs
from .spectral import Grid, SpectralField, l2_norm


class AliasingError(RuntimeError):
    """The three Bony pieces fail to rebuild the product."""


@dataclass(frozen=True)
class ParaproductSplit:
    t_ab: SpectralField
    t_ba: SpectralField
    remainder: SpectralField

    def total(self) -> SpectralField:
        return self.t_ab + self.t_ba + self.remainder


def _physical_blocks(coeffs: np.ndarray, grid: Grid, cutoffs: CutoffSystem) -> np.ndarray:
    """Blocks of each field on the padded grid, shape (..., n_blocks, m, m, m)."""
    m = cutoffs.multipliers(grid)
    return grid.padded.to_physical(coeffs[..., None, :, :, :] * m)


def _out_shape(a_blocks: np.ndarray, b_blocks: np.ndarray) -> tuple[int, ...]:
    lead = np.broadcast_shapes(a_blocks.shape[:-4], b_blocks.shape[:-4])
    return lead + a_blocks.shape[-3:]


def _t_physical(a_blocks: np.ndarray, b_blocks: np.ndarray, j_range=None) -> np.ndarray:
    """sum_j S_{j-1} a * Delta_j b on the padded grid; row i is block i-1."""
    nb = a_blocks.shape[-4]
    s = np.cumsum(a_blocks, axis=-4)  # s[..., i] = S_i a
    js = range(1, nb - 1) if j_range is None else j_range
    out = np.zeros(_out_shape(a_blocks, b_blocks))
    for j in js:
        if 1 <= j <= nb - 2:
            out += s[..., j - 1, :, :, :] * b_blocks[..., j + 1, :, :, :]
    return out


def _r_physical(a_blocks: np.ndarray, b_blocks: np.ndarray, j_min: int = -1) -> np.ndarray:
    nb = a_blocks.shape[-4]
    out = np.zeros(_out_shape(a_blocks, b_blocks))
    for j in range(max(-1, j_min), nb - 1):
        lo, hi = max(j - 1, -1), min(j + 1, nb - 2)
        near = np.sum(a_blocks[..., lo + 1 : hi + 2, :, :, :], axis=-4)
        out += near * b_blocks[..., j + 1, :, :, :]
    return out


def split_coeffs(a: np.ndarray, b: np.ndarray, grid: Grid, cutoffs: CutoffSystem | None = None) -> np.ndarray:
    """Coefficients of (T_a b, T_b a, R(a, b)) for batched scalar coefficient arrays.

    ``a`` and ``b`` have shape (..., n, n, n); the result has shape (3, ..., n, n, n).
    """
    cutoffs = cutoffs or build_cutoffs()
    pa = _physical_blocks(a, grid, cutoffs)
    pb = _physical_blocks(b, grid, cutoffs)
    phys = np.stack([_t_physical(pa, pb), _t_physical(pb, pa), _r_physical(pa, pb)])
    return grid.padded.from_physical(phys)


def _scalar(f: SpectralField, name: str) -> np.ndarray:
    if f.n_components != 1:
        raise ValueError(f"{name} must be a scalar field")
    return f.coeffs[0]


def para_T(a: SpectralField, b: SpectralField, cutoffs: CutoffSystem | None = None) -> SpectralField:
    """Paraproduct T_a b = sum_{j>=1} S_{j-1}a Delta_j b (low a times high b)."""
    cutoffs = cutoffs or build_cutoffs()
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    grid = a.grid
    pa = _physical_blocks(_scalar(a, "a"), grid, cutoffs)
    pb = _physical_blocks(_scalar(b, "b"), grid, cutoffs)
    return SpectralField(grid, grid.padded.from_physical(_t_physical(pa, pb)))


def para_R(a: SpectralField, b: SpectralField, cutoffs: CutoffSystem | None = None) -> SpectralField:
    """Remainder R(a, b) collecting products of blocks with comparable frequency."""
    cutoffs = cutoffs or build_cutoffs()
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    grid = a.grid
    pa = _physical_blocks(_scalar(a, "a"), grid, cutoffs)
    pb = _physical_blocks(_scalar(b, "b"), grid, cutoffs)
    return SpectralField(grid, grid.padded.from_physical(_r_physical(pa, pb)))


def bony_split(
    a: SpectralField, b: SpectralField, cutoffs: CutoffSystem | None = None, tol: float = 1e-8
) -> ParaproductSplit:
    """Split a*b into T_a b, T_b a and R(a, b); the pieces must rebuild the product."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    grid = a.grid
    parts = split_coeffs(_scalar(a, "a"), _scalar(b, "b"), grid, cutoffs)
    split = ParaproductSplit(*(SpectralField(grid, p) for p in parts))
    direct = grid.padded.product(a.coeffs[0], b.coeffs[0])
    scale = np.sqrt(np.sum(np.abs(direct) ** 2))
    resid = np.sqrt(np.sum(np.abs(parts.sum(axis=0) - direct) ** 2))
    if resid > tol * max(scale, np.finfo(float).tiny):
        raise AliasingError(f"Bony pieces miss the product by relative {resid / scale:.3e}")
    return split


def reconstruction_error(a: SpectralField, b: SpectralField, cutoffs: CutoffSystem | None = None) -> float:
    """Relative L2 gap between T_a b + T_b a + R(a, b) and the dealiased product."""
    grid = a.grid
    parts = split_coeffs(_scalar(a, "a"), _scalar(b, "b"), grid, cutoffs)
    direct = SpectralField(grid, grid.padded.product(a.coeffs[0], b.coeffs[0]))
    scale = l2_norm(direct)
    gap = l2_norm(SpectralField(grid, parts.sum(axis=0)) - direct)
    return gap / scale if scale > 0 else gap


def support_range_error(
    b: SpectralField, v: SpectralField, q: int, cutoffs: CutoffSystem | None = None
) -> tuple[float, float]:
    """Relative gaps from truncating the frequency sums inside Delta_q.

    Returns (gap for Delta_q T_v b with j in [q-2, q+4], gap for
    Delta_q R(b, v) with j >= q-3), each relative to the whole paraproduct
    or remainder (a block that only holds roundoff has no meaningful
    relative error of its own).
    """
    cutoffs = cutoffs or build_cutoffs()
    grid = v.grid
    pb = _physical_blocks(_scalar(b, "b"), grid, cutoffs)
    pv = _physical_blocks(_scalar(v, "v"), grid, cutoffs)
    mq = cutoffs.multipliers(grid)[q + 1]
    phys = np.stack(
        [
            _t_physical(pv, pb),
            _t_physical(pv, pb, j_range=range(q - 2, q + 5)),
            _r_physical(pb, pv),
            _r_physical(pb, pv, j_min=q - 3),
        ]
    )
    whole = grid.padded.from_physical(phys)
    c = whole * mq

    def rel(i):
        scale = np.sqrt(np.sum(np.abs(whole[i]) ** 2))
        gap = np.sqrt(np.sum(np.abs(c[i] - c[i + 1]) ** 2))
        return float(gap / scale) if scale > 0 else float(gap)

    return rel(0), rel(2)


def support_range_check(
    b: SpectralField, v: SpectralField, q: int, cutoffs: CutoffSystem | None = None, tol: float = 1e-10
) -> bool:
    """True when Delta_q(T_v b) only sees j in [q-2, q+4] (and Delta_q R only j >= q-3)."""
    t_gap, r_gap = support_range_error(b, v, q, cutoffs)
    return t_gap <= tol and r_gap <= tol
