"""Weak/Lorentz norms on the time axis, the Q-norm and dyadic level sets.

Time series are uniform samples t_i = i*dt on [0, T) with T = len*dt.
Time integrals are left Riemann sums and sup over t is the sample maximum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft

from .littlewood_paley import CutoffSystem, block_grad_l2_norms, block_l2_norms, build_cutoffs
from .spectral import VOLUME, SpectralField


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    dt: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not np.all(np.isfinite(v)):
            raise ValueError("time series contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.dt

    @property
    def T(self) -> float:
        return self.values.size * self.dt

    def integral(self) -> float:
        return float(np.sum(self.values) * self.dt)


@dataclass(frozen=True)
class BlockSeries:
    """Per-block ||Delta_q v(t)||_2 and ||grad Delta_q v(t)||_2, shape (n_times, n_blocks)."""

    block_l2: np.ndarray
    block_grad_l2: np.ndarray
    dt: float
    q_indices: tuple[int, ...]

    def __post_init__(self):
        b = np.asarray(self.block_l2, dtype=float)
        g = np.asarray(self.block_grad_l2, dtype=float)
        if b.ndim != 2 or b.shape != g.shape or b.shape[1] != len(self.q_indices):
            raise ValueError("block series must share shape (n_times, n_blocks)")
        object.__setattr__(self, "block_l2", b)
        object.__setattr__(self, "block_grad_l2", g)

    def __len__(self) -> int:
        return self.block_l2.shape[0]

    def block(self, q: int) -> TimeSeries:
        return TimeSeries(self.block_l2[:, self.q_indices.index(q)], self.dt)


@dataclass(frozen=True)
class LevelSet:
    k: int
    indices: np.ndarray
    measure: float


@dataclass(frozen=True)
class LevelSetPartition:
    """Sets E_k = {t : 2^-k < h(t)/M <= 2^-(k-1)} over the sampled axis."""

    M: float
    sets: list[LevelSet]
    dt: float
    residual_measure: float = 0.0
    residual_mass: float = 0.0
    residual_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, int))

    @property
    def ks(self) -> list[int]:
        return [s.k for s in self.sets]


def weak_lp_time_norm(f: TimeSeries, p: float) -> float:
    """sup_sigma sigma * |{t : |f(t)| > sigma}|^(1/p).

    The supremum is attained as sigma increases to a sampled value, so only
    the sorted magnitudes need to be visited.
    """
    if not p > 1:
        raise ValueError(f"weak L^p norm needs p > 1, got {p}")
    a = np.sort(np.abs(f.values))[::-1]
    if a.size == 0:
        return 0.0
    measure = np.arange(1, a.size + 1) * f.dt
    return float(np.max(a * measure ** (1.0 / p)))


def lorentz_dual_norm(f: TimeSeries) -> float:
    """sup over sets E of |E|^(-1/2) * int_E |f|, restricted to superlevel sets.

    On sampled data the largest |m| samples maximise int_E |f| among all sets
    of m cells, so scanning prefixes of the decreasing rearrangement is exact.
    """
    a = np.sort(np.abs(f.values))[::-1]
    if a.size == 0:
        return 0.0
    m = np.arange(1, a.size + 1) * f.dt
    return float(np.max(np.cumsum(a) * f.dt / np.sqrt(m)))


def q_norm_sq(blocks: BlockSeries, grad_l2: TimeSeries, grad_integral: float | None = None) -> float:
    """sum_q sup_t 1/2 ||Delta_q v||^2 + int_0^T ||grad v||^2 dt.

    The time integral is a left Riemann sum of ``grad_l2`` unless a more
    accurate value is passed as ``grad_integral``.
    """
    if len(blocks) != len(grad_l2) or not np.isclose(blocks.dt, grad_l2.dt, rtol=1e-12):
        raise ValueError("block and gradient series must share the time axis")
    if len(blocks) == 0:
        return 0.0
    sup_part = np.sum(0.5 * np.max(blocks.block_l2**2, axis=0))
    if grad_integral is None:
        grad_integral = np.sum(grad_l2.values**2) * grad_l2.dt
    return float(sup_part + grad_integral)


def _level_index(ratio: np.ndarray) -> np.ndarray:
    """k with 2^-k < ratio <= 2^-(k-1), exact at powers of two."""
    mant, expo = np.frexp(ratio)
    return np.where(mant == 0.5, 2 - expo, 1 - expo)


def level_sets(h: TimeSeries, floor: float = 1e-14) -> LevelSetPartition:
    """Dyadic level sets of h relative to its maximum.

    Samples with ``h < floor * M`` are left out and reported as residual;
    pass ``floor=0`` to keep every positive sample.
    """
    v = h.values
    if np.any(v < 0):
        raise ValueError("level sets need a nonnegative series")
    M = float(np.max(v, initial=0.0))
    if M == 0.0:
        return LevelSetPartition(0.0, [], h.dt)
    positive = v > 0
    # ratios that underflow to zero cannot be assigned a level
    tail = positive & ((v < floor * M) | (v / M == 0.0))
    kept = positive & ~tail
    ratio = np.where(kept, v / M, 1.0)
    k = _level_index(ratio)
    sets = []
    for kk in np.unique(k[kept]):
        idx = np.flatnonzero(kept & (k == kk))
        sets.append(LevelSet(int(kk), idx, idx.size * h.dt))
    tail_idx = np.flatnonzero(tail)
    return LevelSetPartition(
        M,
        sets,
        h.dt,
        residual_measure=tail_idx.size * h.dt,
        residual_mass=float(np.sum(v[tail_idx]) * h.dt),
        residual_indices=tail_idx,
    )


def block_series(
    fields: Sequence[SpectralField], dt: float, cutoffs: CutoffSystem | None = None
) -> tuple[BlockSeries, TimeSeries]:
    """Block norms and ||grad v||_2 for a sampled trajectory."""
    cutoffs = cutoffs or build_cutoffs()
    grid = fields[0].grid
    b = np.array([block_l2_norms(v, cutoffs) for v in fields])
    g = np.array([block_grad_l2_norms(v, cutoffs) for v in fields])
    grad = np.array(
        [np.sqrt(VOLUME * np.sum(np.abs(v.coeffs) ** 2 * grid.k_deriv_sq)) for v in fields]
    )
    qs = tuple(cutoffs.block_indices(grid))
    return BlockSeries(b, g, dt, qs), TimeSeries(grad, dt)


def embedding_pairs(q_indices: Sequence[int]) -> list[tuple[int, int]]:
    """(q, j) with q - 2 <= j <= q + 4 inside the available block range."""
    lo, hi = min(q_indices), max(q_indices)
    return [(q, j) for q in q_indices for j in range(max(lo, q - 2), min(hi, q + 4) + 1)]


def _block_physical(v: SpectralField, cutoffs: CutoffSystem) -> tuple[np.ndarray, np.ndarray]:
    """Samples of every block and of its gradient, shapes (nb, c, n, n, n) and (nb, c, 3, n, n, n)."""
    grid = v.grid
    m = cutoffs.multipliers(grid)
    half = grid.n // 2 + 1
    blocks_hat = m[:, None, :, :, :half] * v.coeffs[None, :, :, :, :half]
    grads_hat = 1j * grid.k_deriv[None, None, :, :, :, :half] * blocks_hat[:, :, None]
    ax, shape = (-3, -2, -1), grid.shape
    blocks = scipy.fft.irfftn(blocks_hat, s=shape, axes=ax, norm="forward")
    grads = scipy.fft.irfftn(grads_hat, s=shape, axes=ax, norm="forward")
    return blocks, grads


def _pair_matrix(blocks: np.ndarray, grads: np.ndarray, cell_volume: float) -> np.ndarray:
    nb = blocks.shape[0]
    mag = np.sqrt(np.sum(blocks**2, axis=1)).reshape(nb, -1)
    gmag = np.sqrt(np.sum(grads**2, axis=(1, 2))).reshape(nb, -1)
    return gmag @ mag.T * cell_volume


def pair_integrals(v: SpectralField, cutoffs: CutoffSystem | None = None) -> np.ndarray:
    """I[q, j] = int |Delta_j v| |grad Delta_q v| dx by grid quadrature.

    Indices are offset by one: row/column 0 is block -1.
    """
    cutoffs = cutoffs or build_cutoffs()
    return _pair_matrix(*_block_physical(v, cutoffs), v.grid.cell_volume)


def _pair_mask(q_indices: Sequence[int]) -> np.ndarray:
    qs = list(q_indices)
    mask = np.zeros((len(qs), len(qs)), bool)
    for q, j in embedding_pairs(qs):
        mask[qs.index(q), qs.index(j)] = True
    return mask


def embedding_lhs(
    f: TimeSeries, fields: Sequence[SpectralField], cutoffs: CutoffSystem | None = None
) -> float:
    """sum_q sum_{q-2<=j<=q+4} int |f(t)| int |Delta_j v| |grad Delta_q v| dx dt."""
    if len(f) != len(fields):
        raise ValueError("f and the trajectory must share the time axis")
    cutoffs = cutoffs or build_cutoffs()
    mask = _pair_mask(cutoffs.block_indices(fields[0].grid))
    total = 0.0
    for fi, v in zip(np.abs(f.values), fields):
        if fi == 0.0:
            continue
        total += fi * float(np.sum(pair_integrals(v, cutoffs)[mask]))
    return total * f.dt


def separable_embedding_lhs(
    f: TimeSeries, profiles: np.ndarray, w: SpectralField, cutoffs: CutoffSystem | None = None
) -> float:
    """embedding_lhs for v(t) = sum_k profiles[k, t] Delta_k w without a transform per sample.

    Blocks of each Delta_k w are sampled once; Delta_j v(t) is then a
    pointwise combination of those samples.
    """
    cutoffs = cutoffs or build_cutoffs()
    qs = list(cutoffs.block_indices(w.grid))
    profiles = np.asarray(profiles, dtype=float)
    if profiles.shape != (len(qs), len(f)):
        raise ValueError(f"profiles must have shape ({len(qs)}, {len(f)})")
    m = cutoffs.multipliers(w.grid)
    basis = [_block_physical(w.replace(w.coeffs * m[k]), cutoffs) for k in range(len(qs))]
    mask = _pair_mask(qs)
    blocks_t = np.tensordot(profiles.T, np.stack([b[0] for b in basis]), axes=1)
    grads_t = np.tensordot(profiles.T, np.stack([b[1] for b in basis]), axes=1)
    total = 0.0
    for fi, blocks, grads in zip(np.abs(f.values), blocks_t, grads_t):
        if fi == 0.0:
            continue
        total += fi * float(np.sum(_pair_matrix(blocks, grads, w.grid.cell_volume)[mask]))
    return total * f.dt


@dataclass(frozen=True)
class ChainBound:
    """Successive lines of the level-set estimate for int |f| (8/3) 2^q h dt.

    ``lines[0]`` is the left side and ``lines[-1]`` the final bound; each
    line should dominate the previous one.
    """

    lines: tuple[float, ...]

    @property
    def lhs(self) -> float:
        return self.lines[0]

    @property
    def rhs(self) -> float:
        return self.lines[-1]


def chain_bound(f: TimeSeries, h: TimeSeries, q: int) -> ChainBound:
    """Evaluate each step of the dyadic level-set chain for the pair (f, h).

    The chain is
        (8/3)2^q int|f|h
          <= (8/3)2^(q+1) sum_k |E_k|^-1 int_Ek|f| int_Ek h
          <= (8/3)2^(q+1) ||f|| sum_k |E_k|^-1/2 int_Ek h
          <= (8/3)2^(q+1) ||f|| sum_k (sup_Ek h)^1/2 (int_Ek h)^1/2
          <= (8/3)2^(q+1) ||f|| (sum_k sup_Ek h)^1/2 (int h)^1/2
          <= (8/3)2^(q+1) ||f|| sqrt(2) M^1/2 (int h)^1/2
    with ||f|| the superlevel-set dual norm.
    """
    if len(f) != len(h) or not np.isclose(f.dt, h.dt, rtol=1e-12):
        raise ValueError("f and h must share the time axis")
    c = (8.0 / 3.0) * 2.0**q
    af = np.abs(f.values)
    hv = h.values
    dt = h.dt
    parts = level_sets(h, floor=0.0)
    fnorm = lorentz_dual_norm(f)
    l1 = c * float(np.sum(af * hv) * dt)
    if not parts.sets:
        return ChainBound((l1, 0.0, 0.0, 0.0, 0.0, 0.0))
    int_f = np.array([np.sum(af[s.indices]) * dt for s in parts.sets])
    int_h = np.array([np.sum(hv[s.indices]) * dt for s in parts.sets])
    sup_h = np.array([np.max(hv[s.indices]) for s in parts.sets])
    meas = np.array([s.measure for s in parts.sets])
    l2 = 2 * c * float(np.sum(int_f * int_h / meas))
    l3 = 2 * c * fnorm * float(np.sum(int_h / np.sqrt(meas)))
    l4 = 2 * c * fnorm * float(np.sum(np.sqrt(sup_h * int_h)))
    l5 = 2 * c * fnorm * float(np.sqrt(np.sum(sup_h) * np.sum(int_h)))
    l6 = 2 * c * fnorm * float(np.sqrt(2.0 * parts.M * np.sum(hv) * dt))
    return ChainBound((l1, l2, l3, l4, l5, l6))
