"""Block energy estimates for the vorticity equation.

The coupling of block q with the nonlinearity,

    2 int Delta_q(B v) : grad Delta_q v dx,

is split along the Bony decomposition of each entry of B into a remainder
piece (J1), a low-v/high-u piece (J2) and a low-u/high-v piece (J3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .littlewood_paley import CutoffSystem, build_cutoffs
from .norms import TimeSeries, lorentz_dual_norm, q_norm_sq, weak_lp_time_norm
from .paraproduct import _physical_blocks, _r_physical, _t_physical
from .solver import RunResult, b_tensor
from .spectral import VOLUME, SpectralField, biot_savart, l2_norm


def _block_pairing(v: SpectralField, x_hat: np.ndarray, cutoffs: CutoffSystem) -> np.ndarray:
    """2 int Delta_q X : grad Delta_q v dx for a tensor X with coefficients (..., 3, 3, n, n, n)."""
    grid = v.grid
    grad_v = 1j * grid.k_deriv[None] * v.coeffs[:, None]  # (i, l) -> d_l v_i
    dens = np.real(np.einsum("ilxyz,...ilxyz->...xyz", np.conj(grad_v), x_hat))
    m2 = cutoffs.multipliers(grid) ** 2
    return 2.0 * VOLUME * np.einsum("qxyz,...xyz->...q", m2, dens)


def tensor_split(v: SpectralField, cutoffs: CutoffSystem | None = None) -> np.ndarray:
    """Coefficients of the three Bony pieces of B v, shape (3, 3, 3, n, n, n).

    Piece 0 is the remainder, 1 the low-v/high-u paraproduct, 2 the
    low-u/high-v paraproduct; the pieces sum to B v.
    """
    cutoffs = cutoffs or build_cutoffs()
    grid = v.grid
    u = biot_savart(v).coeffs
    pv = _physical_blocks(v.coeffs, grid, cutoffs)
    pu = _physical_blocks(u, grid, cutoffs)
    vi, ul = pv[:, None], pu[None, :]
    # entry (i, l) of each piece for the product v_i u_l
    r = _r_physical(vi, ul)
    t_vu = _t_physical(vi, ul)
    t_uv = _t_physical(ul, vi)
    pieces = np.stack([r, t_vu, t_uv])
    pieces = pieces - np.swapaxes(pieces, 1, 2)
    return grid.padded.from_physical(pieces)


def j_integrands(v: SpectralField, cutoffs: CutoffSystem | None = None) -> np.ndarray:
    """J1, J2, J3 integrands at one instant for every block, shape (3, n_blocks)."""
    cutoffs = cutoffs or build_cutoffs()
    return _block_pairing(v, tensor_split(v, cutoffs), cutoffs)


def j_terms(v: SpectralField, q: int, cutoffs: CutoffSystem | None = None) -> tuple[float, float, float]:
    """(J1, J2, J3) integrands for block q."""
    cutoffs = cutoffs or build_cutoffs()
    vals = j_integrands(v, cutoffs)[:, q + 1]
    return float(vals[0]), float(vals[1]), float(vals[2])


def unsplit_integrand(v: SpectralField, cutoffs: CutoffSystem | None = None) -> np.ndarray:
    """2 int Delta_q(B v) : grad Delta_q v dx for every block, from B directly."""
    cutoffs = cutoffs or build_cutoffs()
    return _block_pairing(v, b_tensor(v), cutoffs)


def hardy_young_check(a) -> tuple[float, float]:
    """Return (lhs, lhs / ||a||_2) for the discrete Hardy-Young sum.

    ``a[i]`` is a_j for j = i - 1 (the sequence starts at j = -1) and

        lhs = ( sum_{q>=-1} ( sum_{j>=q-2} 2^((q-2-j)/2) a_j )^2 )^(1/2).

    Young's inequality bounds the ratio by sum_m 2^(-m/2) = 1/(1 - 2^-1/2).
    """
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("Hardy-Young check needs a nonnegative sequence")
    n = a.size
    js = np.arange(n) - 1
    # rows q = -1 .. n (beyond that the inner sum is empty)
    qs = np.arange(-1, n + 1)
    shift = (qs[:, None] - 2) - js[None, :]
    kernel = np.where(shift <= 0, 2.0 ** (0.5 * np.minimum(shift, 0)), 0.0)
    lhs = float(np.sqrt(np.sum((kernel @ a) ** 2)))
    norm = float(np.sqrt(np.sum(a**2)))
    return lhs, (lhs / norm if norm > 0 else 0.0)


HARDY_YOUNG_BOUND = 1.0 / (1.0 - 2.0**-0.5)


def _trapezoid(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.trapezoid(y, x, axis=0) if hasattr(np, "trapezoid") else np.trapz(y, x, axis=0)


@dataclass(frozen=True)
class EnergyCheck:
    """Per-block terms of the integrated energy inequality."""

    lhs: np.ndarray  # sup_t [E_q(t) - E_q(0) + D_q(t)]
    j_totals: np.ndarray  # (3, n_blocks) time integrals of J1, J2, J3
    residual: np.ndarray  # lhs - (|J1| + |J2| + |J3|)
    identity_residual: np.ndarray  # max_t |E_q(t) - E_q(0) + D_q(t) - C_q(t)|
    split_gap: float  # max over samples of |sum_c J_c - unsplit| / scale


def energy_check(result: RunResult) -> EnergyCheck:
    led = result.ledger
    lhs_t = led.energy - led.energy[0] + led.dissipation
    lhs = np.max(lhs_t, axis=0)
    ident = np.max(np.abs(lhs_t - led.coupling), axis=0)
    if not led.has_j_terms:
        raise ValueError("run was made without J-term recording")
    j = led.j_integrands
    totals = _trapezoid(j, led.j_times) if len(led.j_times) > 1 else np.zeros(j.shape[1:])
    resid = lhs - np.sum(np.abs(totals), axis=0)
    gap = np.abs(np.sum(j, axis=1) - led.j_unsplit)
    scale = max(float(np.max(np.abs(j))), np.finfo(float).tiny)
    return EnergyCheck(lhs, totals, resid, ident, float(np.max(gap) / scale))


@dataclass(frozen=True)
class AprioriSummary:
    u_weak: float  # ||u||_{L^2_w(0,T; L^inf)} (sup-sigma form)
    u_dual: float  # superlevel-set dual form of the same norm
    q_norm_sq: float
    v0_sq: float
    q_ratio: float  # ||v||_Q^2 / ||v0||_2^2
    j_sums: tuple[float, float, float]  # sum_q |J_c|
    j_ratios: tuple[float, float, float]  # sum_q |J_c| / (u_weak ||v||_Q^2)
    energy: EnergyCheck | None
    status: str


def apriori_report(result: RunResult) -> AprioriSummary:
    """Measured norms and estimate ratios of a completed run."""
    u_series: TimeSeries = result.u_inf_series
    u_weak = weak_lp_time_norm(u_series, 2.0)
    u_dual = lorentz_dual_norm(u_series)
    qn = q_norm_sq(result.blocks, result.grad_series, grad_integral=float(result.grad_integral[-1]))
    v0_sq = l2_norm(result.v0) ** 2
    energy = None
    j_sums = (0.0, 0.0, 0.0)
    if result.ledger.has_j_terms:
        energy = energy_check(result)
        j_sums = tuple(float(s) for s in np.sum(np.abs(energy.j_totals), axis=1))
    denom = u_weak * qn
    j_ratios = tuple((s / denom if denom > 0 else 0.0) for s in j_sums)
    return AprioriSummary(
        u_weak=u_weak,
        u_dual=u_dual,
        q_norm_sq=qn,
        v0_sq=v0_sq,
        q_ratio=qn / v0_sq if v0_sq > 0 else 0.0,
        j_sums=j_sums,
        j_ratios=j_ratios,
        energy=energy,
        status=result.status,
    )
