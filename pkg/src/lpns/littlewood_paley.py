"""Dyadic cutoff system, Littlewood-Paley blocks and partial sums.

The low-frequency profile ``chi`` is a smooth monotone step ``theta`` that
equals 1 for r <= 1 and 0 for r >= 4/3.  The annular profile is
``phi(r) = theta(r/2) - theta(r)``, supported in 1 < r < 8/3.  Because the
annular pieces telescope,

    chi(r) + sum_{q=0}^{Q} phi(2^-q r) = theta(2^-(Q+1) r),

which is identically 1 once 2^(Q+1) exceeds the largest radius of interest.
Blocks are Fourier multipliers evaluated at |k| for integer wavevectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .spectral import VOLUME, Grid, SpectralField


class UndefinedRatioError(ValueError):
    """Raised when a ratio is requested for an empty dyadic block."""


@dataclass(frozen=True)
class CutoffSystem:
    """Radial profiles chi and phi of a dyadic partition of unity.

    ``sharpness`` scales the exponent of the ``exp(-s/x)`` mollifier used in
    the transition 1 < r < 4/3; larger values give steeper transitions.
    """

    sharpness: float = 1.0
    inner: float = 1.0
    outer: float = 4.0 / 3.0

    def __post_init__(self):
        if not self.sharpness > 0:
            raise ValueError(f"sharpness must be positive, got {self.sharpness}")

    def theta(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        x = (r - self.inner) / (self.outer - self.inner)
        out = np.where(x <= 0, 1.0, 0.0)
        mid = (x > 0) & (x < 1)
        xm = x[mid]
        # theta = s(1-x) / (s(x) + s(1-x)) with s(y) = exp(-sharpness / y)
        out[mid] = expit(-self.sharpness * (1.0 / (1.0 - xm) - 1.0 / xm))
        return out

    def chi(self, r) -> np.ndarray:
        return self.theta(r)

    def phi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.theta(0.5 * r) - self.theta(r)

    def block_profile(self, q: int, r) -> np.ndarray:
        """Multiplier of block q at radius r (chi for q = -1)."""
        if q < -1:
            raise ValueError(f"block index must be >= -1, got {q}")
        if q == -1:
            return self.chi(r)
        return self.phi(np.asarray(r, dtype=float) * 2.0**-q)

    def partition_sum(self, r, q_last: int | None = None) -> np.ndarray:
        """chi + sum_q phi(2^-q r) and chi^2 + sum_q phi^2(2^-q r)."""
        r = np.asarray(r, dtype=float)
        if q_last is None:
            rmax = float(np.max(r, initial=1.0))
            q_last = max(0, math.ceil(math.log2(max(rmax, 1.0))) + 1)
        total = self.chi(r).copy()
        squares = total**2
        for q in range(q_last + 1):
            p = self.block_profile(q, r)
            total += p
            squares += p**2
        return total, squares

    @staticmethod
    def q_max(grid: Grid) -> int:
        """Largest q with (3/4) 2^q <= n/2."""
        return int(math.floor(math.log2(grid.n / 2 / 0.75)))

    def block_indices(self, grid: Grid) -> range:
        return range(-1, self.q_max(grid) + 1)

    def multipliers(self, grid: Grid) -> np.ndarray:
        """Block multipliers on the grid, shape (q_max + 2, n, n, n), row q+1 = block q."""
        return _multipliers(self, grid)

    def resolution_warnings(self, grid: Grid, max_jump: float = 0.5) -> list[str]:
        """Check that the transition of the finest block is sampled by the lattice.

        Flags the cutoff when ``theta`` jumps by more than ``max_jump`` between
        consecutive lattice radii inside the transition band of block q_max.
        """
        q = self.q_max(grid)
        lo, hi = self.inner * 2.0**q, self.outer * 2.0**q
        radii = np.unique(grid.k_mag)
        radii = np.concatenate([[lo], radii[(radii > lo) & (radii < hi)], [hi]])
        jump = float(np.max(np.abs(np.diff(self.theta(radii * 2.0**-q)))))
        if jump > max_jump:
            return [
                f"cutoff transition under-resolved at q={q}: theta jumps by {jump:.3f}"
                f" between lattice radii (sharpness={self.sharpness})"
            ]
        return []


def build_cutoffs(transition_sharpness: float = 1.0) -> CutoffSystem:
    """Dyadic partition of unity with supp chi in B(4/3) and supp phi in (1, 8/3)."""
    return CutoffSystem(sharpness=float(transition_sharpness))


@lru_cache(maxsize=16)
def _multipliers(cutoffs: CutoffSystem, grid: Grid) -> np.ndarray:
    ksq = grid.k_sq
    uniq, inverse = np.unique(ksq, return_inverse=True)
    r = np.sqrt(uniq)
    rows = [cutoffs.block_profile(q, r)[inverse].reshape(grid.shape) for q in cutoffs.block_indices(grid)]
    out = np.stack(rows)
    out.flags.writeable = False
    return out


def _check_q(cutoffs: CutoffSystem, grid: Grid, q: int):
    if q < -1 or q > cutoffs.q_max(grid):
        raise ValueError(f"block index {q} outside [-1, {cutoffs.q_max(grid)}] for n={grid.n}")


def delta_q(v: SpectralField, q: int, cutoffs: CutoffSystem | None = None) -> SpectralField:
    """Littlewood-Paley block of v at index q."""
    cutoffs = cutoffs or build_cutoffs()
    _check_q(cutoffs, v.grid, q)
    m = cutoffs.multipliers(v.grid)[q + 1]
    return v.replace(v.coeffs * m)


def s_j(v: SpectralField, j: int, cutoffs: CutoffSystem | None = None) -> SpectralField:
    """Low-frequency partial sum S_j v = sum_{-1 <= k <= j-1} Delta_k v; S_{-1} = 0."""
    cutoffs = cutoffs or build_cutoffs()
    qmax = cutoffs.q_max(v.grid)
    if j < -1 or j > qmax + 1:
        raise ValueError(f"partial-sum index {j} outside [-1, {qmax + 1}]")
    return v.replace(v.coeffs * partial_sum_multiplier(cutoffs, v.grid, j))


def partial_sum_multiplier(cutoffs: CutoffSystem, grid: Grid, j: int) -> np.ndarray:
    m = cutoffs.multipliers(grid)
    return np.sum(m[: j + 1], axis=0)  # rows for blocks -1 .. j-1


@dataclass(frozen=True)
class DyadicBlocks:
    """All blocks of one field, ``fields[i]`` holds block ``q_indices[i]``."""

    q_indices: tuple[int, ...]
    fields: tuple[SpectralField, ...]

    def __getitem__(self, q: int) -> SpectralField:
        return self.fields[self.q_indices.index(q)]

    def reconstruct(self) -> SpectralField:
        total = self.fields[0]
        for f in self.fields[1:]:
            total = total + f
        return total


def decompose(v: SpectralField, cutoffs: CutoffSystem | None = None) -> DyadicBlocks:
    cutoffs = cutoffs or build_cutoffs()
    m = cutoffs.multipliers(v.grid)
    qs = tuple(cutoffs.block_indices(v.grid))
    return DyadicBlocks(qs, tuple(v.replace(v.coeffs * m[i]) for i in range(len(qs))))


def block_l2_norms(v: SpectralField, cutoffs: CutoffSystem | None = None) -> np.ndarray:
    """||Delta_q v||_2 for q = -1..q_max via Parseval."""
    cutoffs = cutoffs or build_cutoffs()
    power = np.sum(np.abs(v.coeffs) ** 2, axis=0)
    m = cutoffs.multipliers(v.grid)
    return np.sqrt(VOLUME * np.einsum("qxyz,xyz->q", m**2, power))


def block_grad_l2_norms(v: SpectralField, cutoffs: CutoffSystem | None = None) -> np.ndarray:
    """||grad Delta_q v||_2 for q = -1..q_max via Parseval."""
    cutoffs = cutoffs or build_cutoffs()
    power = np.sum(np.abs(v.coeffs) ** 2, axis=0) * v.grid.k_deriv_sq
    m = cutoffs.multipliers(v.grid)
    return np.sqrt(VOLUME * np.einsum("qxyz,xyz->q", m**2, power))


def bernstein_ratio(v: SpectralField, q: int, cutoffs: CutoffSystem | None = None) -> float:
    """||grad Delta_q v||_2 / (2^q ||Delta_q v||_2)."""
    cutoffs = cutoffs or build_cutoffs()
    _check_q(cutoffs, v.grid, q)
    block = block_l2_norms(v, cutoffs)[q + 1]
    if block == 0.0:
        raise UndefinedRatioError(f"block {q} of the field is empty")
    return float(block_grad_l2_norms(v, cutoffs)[q + 1] / (2.0**q * block))
