"""Pseudo-spectral integrator for the vorticity equation on the 2*pi torus.

    d_t v - Laplace(v) + div(B v) = 0,   B v = v (x) u - u (x) v,   curl u = v

with (a (x) b)_il = a_i b_l and the divergence taken over the second index,
so div(B v) = (u . grad) v - (v . grad) u.  Time stepping is an
integrating-factor Heun scheme: diffusion is integrated exactly and the
nonlinearity explicitly at second order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft

from .littlewood_paley import CutoffSystem, build_cutoffs
from .norms import BlockSeries, TimeSeries
from .spectral import VOLUME, Grid, SpectralField, _cross_k, biot_savart, leray_project

logger = logging.getLogger(__name__)


class BlowUpError(FloatingPointError):
    """Non-finite state encountered; carries the last finite state."""

    def __init__(self, message: str, state: "SolverState"):
        super().__init__(message)
        self.state = state


class CFLError(ValueError):
    """Time step too large for the current velocity."""


@dataclass(frozen=True)
class SolverConfig:
    n: int = 32
    T: float = 1.0
    dt: float = 1e-3
    record_stride: int = 1
    cfl: float = 0.5
    nonlinear: bool = True
    # Paraproduct split of the coupling, sampled every j_stride steps.
    j_terms: bool = False
    j_stride: int = 10
    sharpness: float = 1.0

    def __post_init__(self):
        for name in ("n", "T", "dt", "record_stride", "j_stride", "cfl", "sharpness"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if abs(self.T / self.dt - round(self.T / self.dt)) > 1e-9 * self.T / self.dt:
            raise ValueError(f"T={self.T} is not a whole number of steps dt={self.dt}")
        if self.n_steps % self.record_stride or (self.j_terms and self.n_steps % self.j_stride):
            raise ValueError("record_stride and j_stride must divide the number of steps")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def grid(self) -> Grid:
        return Grid(self.n)

    @property
    def cutoffs(self) -> CutoffSystem:
        return build_cutoffs(self.sharpness)


@dataclass(frozen=True)
class SolverState:
    t: float
    v: SpectralField
    step_index: int = 0


def _velocity_physical(v_coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """v and u = curl^-1 v on the padded grid, stacked as (6, m, m, m)."""
    u = 1j * _cross_k(grid.k_deriv, v_coeffs) * grid.inverse_k_deriv_sq
    return grid.padded.to_physical(np.concatenate([v_coeffs, u]))


def _div_b(v_coeffs: np.ndarray, grid: Grid) -> tuple[np.ndarray, float]:
    """Coefficients of div(Bv) using the antisymmetry of B, and max|u| on the padded grid."""
    phys = _velocity_physical(v_coeffs, grid)
    vp, up = phys[:3], phys[3:]
    umax = float(np.sqrt(np.max(np.einsum("ixyz,ixyz->xyz", up, up))))
    b01 = vp[0] * up[1] - up[0] * vp[1]
    b02 = vp[0] * up[2] - up[0] * vp[2]
    b12 = vp[1] * up[2] - up[1] * vp[2]
    b = grid.padded.from_physical(np.stack([b01, b02, b12]))
    ik = 1j * grid.k_deriv
    out = np.stack(
        [
            ik[1] * b[0] + ik[2] * b[1],
            -ik[0] * b[0] + ik[2] * b[2],
            -ik[0] * b[1] - ik[1] * b[2],
        ]
    )
    return out, umax


def nonlinear_term(v: SpectralField) -> SpectralField:
    """div(B v) = (u . grad) v - (v . grad) u with u from Biot-Savart, dealiased."""
    if not v.is_vector:
        raise ValueError("vorticity must be a vector field")
    return SpectralField(v.grid, _div_b(v.coeffs, v.grid)[0], divergence_free=True)


def b_tensor(v: SpectralField) -> np.ndarray:
    """Coefficients of B_il = v_i u_l - u_i v_l, shape (3, 3, n, n, n), dealiased."""
    grid = v.grid
    phys = _velocity_physical(v.coeffs, grid)
    vp, up = phys[:3], phys[3:]
    prod = vp[:, None] * up[None, :]
    return grid.padded.from_physical(prod - np.swapaxes(prod, 0, 1))


def cfl_limit(u_max: float, n: int, cfl: float = 0.5) -> float:
    return math.inf if u_max == 0 else cfl / (n * u_max)


@dataclass
class RunResult:
    """Recorded trajectory.  Sample i is at ``times[i]``; the last sample is t = T.

    Quantities integrated over [0, T) use every sample except the last.
    """

    times: np.ndarray
    q_indices: tuple[int, ...]
    block_l2: np.ndarray
    block_grad_l2: np.ndarray
    grad_l2: np.ndarray
    grad_integral: np.ndarray  # int_0^t ||grad v||^2 dt (exponential quadrature, every step)
    u_inf: np.ndarray
    vort_l2: np.ndarray
    divergence: np.ndarray
    ledger: "EnergyLedger"
    final_state: SolverState
    v0: SpectralField
    record_dt: float
    truncated: bool = False
    status: str = "ok"
    samples: list[SpectralField] = field(default_factory=list)

    @property
    def blocks(self) -> BlockSeries:
        k = self._open_len()
        return BlockSeries(self.block_l2[:k], self.block_grad_l2[:k], self.record_dt, self.q_indices)

    @property
    def grad_series(self) -> TimeSeries:
        return TimeSeries(self.grad_l2[: self._open_len()], self.record_dt)

    @property
    def u_inf_series(self) -> TimeSeries:
        return TimeSeries(self.u_inf[: self._open_len()], self.record_dt)

    def _open_len(self) -> int:
        # samples on the half-open interval [0, T)
        return len(self.times) - 1 if len(self.times) > 1 and not self.truncated else len(self.times)


@dataclass
class EnergyLedger:
    """Per-block energy bookkeeping at the recorded samples.

    energy[i, q]      1/2 ||Delta_q v(t_i)||^2
    dissipation[i, q] int_0^t_i ||grad Delta_q v||^2 dt (exponential quadrature, every step)
    coupling[i, q]    int_0^t_i int Delta_q(Bv) : grad Delta_q v dx dt (trapezoid, every step)
    unsplit_integrand[i, q]  2 int Delta_q(Bv) : grad Delta_q v dx

    J samples live on their own axis ``j_times`` (every j_stride steps):
    j_integrands[s, c, q]  2 int Delta_q(X_c) : grad Delta_q v dx for the R, T_v u and
                           T_u v pieces X_c of B, with j_unsplit[s, q] the unsplit value.
    """

    times: np.ndarray
    energy: np.ndarray
    dissipation: np.ndarray
    coupling: np.ndarray
    unsplit_integrand: np.ndarray
    j_times: np.ndarray
    j_integrands: np.ndarray
    j_unsplit: np.ndarray

    @property
    def has_j_terms(self) -> bool:
        return self.j_times.size > 0


class VorticitySolver:
    """Integrating-factor Heun stepper with energy bookkeeping."""

    def __init__(self, config: SolverConfig | None = None):
        self.config = config or SolverConfig()
        cfg = self.config
        self.grid = cfg.grid
        self.cutoffs = cfg.cutoffs
        ksq = self.grid.k_sq
        self._decay = np.exp(-ksq * cfg.dt)
        self._m2 = self.cutoffs.multipliers(self.grid) ** 2
        # Dissipation over one step of w(s) = e^{-k^2 s} v + (1 - e^{-k^2 s}) f / k^2,
        # the exact solution for a forcing f frozen over the step:
        #   int_0^dt k^2 |w|^2 ds = w_vv |v|^2 + w_vf 2 Re(conj(v) f) + w_ff |f|^2
        e = self._decay
        inv = np.where(ksq > 0, 1.0 / np.where(ksq > 0, ksq, 1.0), 0.0)
        self._diss_weight = 0.5 * (1.0 - e**2)
        self._diss_cross = 0.5 * (1.0 - e) ** 2 * inv
        self._diss_force = inv * (cfg.dt - 2.0 * (1.0 - e) * inv + 0.5 * (1.0 - e**2) * inv)

    def _rhs(self, v_coeffs: np.ndarray) -> tuple[np.ndarray, float]:
        """-div(Bv) and max|u| on the padded grid (0 when the nonlinearity is off)."""
        if not self.config.nonlinear:
            return np.zeros_like(v_coeffs), 0.0
        f, umax = _div_b(v_coeffs, self.grid)
        return -f, umax

    def rhs(self, v_coeffs: np.ndarray) -> np.ndarray:
        return self._rhs(v_coeffs)[0]

    def _advance(self, v: np.ndarray, f0: np.ndarray) -> np.ndarray:
        dt, e = self.config.dt, self._decay
        pred = e * (v + dt * f0)
        f1 = self.rhs(pred)
        new = e * (v + 0.5 * dt * f0) + 0.5 * dt * f1
        return leray_project(SpectralField(self.grid, new)).coeffs

    def step(self, state: SolverState) -> SolverState:
        """Advance one step of size dt; raises CFLError or BlowUpError."""
        v = state.v.coeffs
        f0, umax = self._rhs(v)
        self._check_cfl(umax)
        new = self._advance(v, f0)
        if not np.all(np.isfinite(new)):
            raise BlowUpError(f"non-finite vorticity at t={state.t + self.config.dt:g}", state)
        return SolverState(state.t + self.config.dt, SpectralField(self.grid, new, True), state.step_index + 1)

    def _check_cfl(self, umax: float):
        # advection-free runs (umax = 0) have no CFL restriction
        limit = cfl_limit(umax, self.grid.n, self.config.cfl)
        if self.config.dt > limit * (1 + 1e-12):
            raise CFLError(f"dt={self.config.dt:g} exceeds CFL limit {limit:.3g} for max|u|={umax:.3g}")

    def _step_dissipation(self, v: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Per-mode int k^2 |v|^2 over one step, forcing f held at its step average."""
        vv = np.sum(np.abs(v) ** 2, axis=0)
        if not self.config.nonlinear:
            return self._diss_weight * vv
        vf = np.real(np.sum(np.conj(v) * f, axis=0))
        ff = np.sum(np.abs(f) ** 2, axis=0)
        return self._diss_weight * vv + 2.0 * self._diss_cross * vf + self._diss_force * ff

    def _coupling(self, v: np.ndarray, div_b: np.ndarray) -> np.ndarray:
        """int Delta_q(Bv) : grad Delta_q v dx for every block (via Parseval)."""
        dens = -np.real(np.sum(np.conj(v) * div_b, axis=0))
        return VOLUME * np.einsum("qxyz,xyz->q", self._m2, dens)

    def _energy(self, v: np.ndarray) -> np.ndarray:
        return 0.5 * VOLUME * np.einsum("qxyz,xyz->q", self._m2, np.sum(np.abs(v) ** 2, axis=0))

    def run(self, v0: SpectralField, keep_samples: bool = False, q_limit: float | None = None) -> RunResult:
        """Integrate from v0 over [0, T], recording every ``record_stride`` steps.

        With ``q_limit`` the run stops (status "q-limit") once the running
        Q-norm squared exceeds it; the Q-norm is nondecreasing in T.
        """
        from .energy import j_integrands

        cfg = self.config
        grid = self.grid
        if v0.grid != grid or not v0.is_vector:
            raise ValueError("initial vorticity must be a vector field on the solver grid")
        biot_savart(v0)  # rejects nonzero mean
        v = leray_project(v0).coeffs
        qs = tuple(self.cutoffs.block_indices(grid))
        keys = ("t", "b", "g", "grad", "gint", "uinf", "l2", "div", "E", "D", "C", "U", "jt", "J", "JU")
        rows: dict[str, list] = {key: [] for key in keys}
        samples: list[SpectralField] = []
        dissipation = np.zeros(len(qs))
        coupling = np.zeros(len(qs))
        grad_integral = 0.0
        state = SolverState(0.0, SpectralField(grid, v, True))
        f_cur, u_cur = self._rhs(v)
        c_cur = self._coupling(v, -f_cur)
        status, truncated = "ok", False

        def record(st: SolverState, c_now: np.ndarray):
            vf = st.v
            vc = vf.coeffs
            power = np.sum(np.abs(vc) ** 2, axis=0)
            rows["t"].append(st.t)
            rows["b"].append(np.sqrt(VOLUME * np.einsum("qxyz,xyz->q", self._m2, power)))
            rows["g"].append(np.sqrt(VOLUME * np.einsum("qxyz,xyz->q", self._m2, power * grid.k_deriv_sq)))
            rows["grad"].append(np.sqrt(VOLUME * np.sum(power * grid.k_deriv_sq)))
            rows["gint"].append(grad_integral)
            rows["l2"].append(np.sqrt(VOLUME * np.sum(power)))
            rows["uinf"].append(_linf(biot_savart(vf).coeffs))
            rows["div"].append(float(np.max(np.abs(np.einsum("i...,i...->...", grid.k_deriv, vc)), initial=0.0)))
            rows["E"].append(self._energy(vc))
            rows["D"].append(dissipation.copy())
            rows["C"].append(coupling.copy())
            rows["U"].append(2.0 * c_now)
            if keep_samples:
                samples.append(vf)

        def record_j(st: SolverState, c_now: np.ndarray):
            rows["jt"].append(st.t)
            rows["J"].append(j_integrands(st.v, self.cutoffs) if cfg.nonlinear else np.zeros((3, len(qs))))
            rows["JU"].append(2.0 * c_now)

        record(state, c_cur)
        sup_energy = rows["E"][0].copy()
        if cfg.j_terms:
            record_j(state, c_cur)
        # overflow on the way to a blow-up is detected and reported below
        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(cfg.n_steps):
                v = state.v.coeffs
                try:
                    self._check_cfl(u_cur)
                except CFLError as exc:
                    logger.warning("%s", exc)
                    status, truncated = "cfl", True
                    break
                new = self._advance(v, f_cur)
                if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > 1e150:
                    logger.warning("blow-up at t=%g", state.t + cfg.dt)
                    status, truncated = "blowup", True
                    break
                f_next, u_next = self._rhs(new)
                weighted = self._step_dissipation(v, 0.5 * (f_cur + f_next))
                dissipation += VOLUME * np.einsum("qxyz,xyz->q", self._m2, weighted)
                grad_integral += VOLUME * float(np.sum(weighted))
                c_next = self._coupling(new, -f_next)
                coupling += 0.5 * cfg.dt * (c_cur + c_next)
                state = SolverState((i + 1) * cfg.dt, SpectralField(grid, new, True), i + 1)
                f_cur, c_cur, u_cur = f_next, c_next, u_next
                if (i + 1) % cfg.record_stride == 0:
                    record(state, c_cur)
                    if q_limit is not None:
                        np.maximum(sup_energy, rows["E"][-1], out=sup_energy)
                        if float(np.sum(sup_energy)) + grad_integral > q_limit:
                            status, truncated = "q-limit", True
                            break
                if cfg.j_terms and (i + 1) % cfg.j_stride == 0:
                    record_j(state, c_cur)

        ledger = EnergyLedger(
            times=np.array(rows["t"]),
            energy=np.array(rows["E"]),
            dissipation=np.array(rows["D"]),
            coupling=np.array(rows["C"]),
            unsplit_integrand=np.array(rows["U"]),
            j_times=np.array(rows["jt"]),
            j_integrands=np.array(rows["J"]).reshape(-1, 3, len(qs)),
            j_unsplit=np.array(rows["JU"]).reshape(-1, len(qs)),
        )
        return RunResult(
            times=np.array(rows["t"]),
            q_indices=qs,
            block_l2=np.array(rows["b"]),
            block_grad_l2=np.array(rows["g"]),
            grad_l2=np.array(rows["grad"]),
            grad_integral=np.array(rows["gint"]),
            u_inf=np.array(rows["uinf"]),
            vort_l2=np.array(rows["l2"]),
            divergence=np.array(rows["div"]),
            ledger=ledger,
            final_state=state,
            v0=SpectralField(grid, leray_project(v0).coeffs, True),
            record_dt=cfg.dt * cfg.record_stride,
            truncated=truncated,
            status=status,
            samples=samples,
        )


def _linf(u: np.ndarray) -> float:
    x = scipy.fft.ifftn(u, axes=(-3, -2, -1), norm="forward").real
    return float(np.sqrt(np.max(np.sum(x**2, axis=0))))


def step(state: SolverState, config: SolverConfig | None = None) -> SolverState:
    config = config or SolverConfig(n=state.v.grid.n)
    if config.n != state.v.grid.n:
        config = replace(config, n=state.v.grid.n)
    return VorticitySolver(config).step(state)


def run(
    v0: SpectralField, config: SolverConfig | None = None, keep_samples: bool = False, q_limit: float | None = None
) -> RunResult:
    config = config or SolverConfig(n=v0.grid.n)
    return VorticitySolver(config).run(v0, keep_samples=keep_samples, q_limit=q_limit)
