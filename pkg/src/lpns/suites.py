"""Inequality suites and simulation experiments behind the command line.

Every suite takes an :class:`ExperimentConfig` and returns a
:class:`SuiteOutput` with pass/fail rows, empirical constants and CSV
series.  Random draws use ``default_rng([seed, stream])`` with a fixed
stream per suite, so suites are reproducible independently of each other.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .energy import HARDY_YOUNG_BOUND, apriori_report, hardy_young_check
from .littlewood_paley import CutoffSystem, bernstein_ratio, build_cutoffs, decompose
from .norms import (
    TimeSeries,
    block_series,
    chain_bound,
    separable_embedding_lhs,
    level_sets,
    lorentz_dual_norm,
    q_norm_sq,
    weak_lp_time_norm,
)
from .paraproduct import reconstruction_error, support_range_error
from .report import CheckRow, ExperimentConfig, check, mode_vector
from .solver import RunResult, SolverConfig, run
from .spectral import (
    Grid,
    SpectralField,
    abc_velocity,
    curl,
    l2_norm,
    linf_norm,
    random_field,
    random_velocity,
    transform,
)

_STREAMS = {
    "partition": 1,
    "bernstein": 2,
    "lorentz": 3,
    "embedding": 4,
    "paraproduct": 5,
    "solver": 6,
    "apriori": 7,
    "hardy-young": 8,
    "calibration": 9,
}
DT_SAFETY = 0.8
Q_BOUND = 2.0


@dataclass
class SuiteOutput:
    checks: list[CheckRow] = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    series: dict[str, tuple[list[str], list]] = field(default_factory=dict)
    status: str = "ok"


def _rng(config: ExperimentConfig, stream: str, *extra: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, _STREAMS[stream], *extra])


# ---------------------------------------------------------------- initial data


def initial_velocity(config: ExperimentConfig, grid: Grid, rng: np.random.Generator) -> SpectralField:
    """Divergence-free velocity of the configured family with max|u| = amplitude on the grid."""
    if config.init == "abc":
        u = abc_velocity(grid, config.abc_a, config.abc_b, config.abc_c)
    elif config.init == "single-mode":
        u = single_mode_velocity(grid, mode_vector(config.mode))
    else:
        kmax = config.kmax or grid.n / 4
        u = random_velocity(grid, rng, config.kmin, kmax)
    return u * (config.amplitude / linf_norm(u))


def single_mode_velocity(grid: Grid, mode: tuple[int, int, int]) -> SpectralField:
    """u = a cos(k.x) with a perpendicular to k; the nonlinearity vanishes identically."""
    k = np.array(mode, dtype=float)
    if np.any(np.abs(k) >= grid.n / 2):
        raise ValueError(f"mode {mode} is not resolved on n={grid.n}")
    axis = np.eye(3)[int(np.argmin(np.abs(k)))]
    a = np.cross(k, axis)
    a /= np.linalg.norm(a)
    phase = np.einsum("i,ixyz->xyz", k, grid.coordinates)
    f = transform(a[:, None, None, None] * np.cos(phase), grid)
    return f.replace(f.coeffs, divergence_free=True)


def stable_dt(base_dt: float, n: int, amplitude: float, cfl: float) -> float:
    """Halve ``base_dt`` until it sits below DT_SAFETY times the CFL limit."""
    dt = base_dt
    while amplitude > 0 and dt > DT_SAFETY * cfl / (n * amplitude):
        dt /= 2
    return dt


def series_rows(result: RunResult) -> tuple[list[str], list]:
    header = ["t"] + [f"block_q{q}" for q in result.q_indices] + ["grad_l2", "u_inf"]
    rows = [
        [float(t), *map(float, b), float(g), float(u)]
        for t, b, g, u in zip(result.times, result.block_l2, result.grad_l2, result.u_inf)
    ]
    return header, rows


# ------------------------------------------------------------------- partition


def suite_partition(config: ExperimentConfig) -> SuiteOutput:
    out = SuiteOutput()
    grid = Grid(config.n)
    cut = build_cutoffs(config.sharpness)
    radii = np.sqrt(np.unique(grid.k_sq))
    total, squares = cut.partition_sum(radii, cut.q_max(grid))
    out.checks.append(check("partition_sum_error", np.max(np.abs(total - 1.0)), 1e-10, "telescoping cutoff sum"))
    out.checks.append(
        check(
            "partition_squares",
            np.max(squares),
            1.0 + 1e-10,
            "telescoping cutoff sum",
            lower=1.0 / 3.0,
            note=f"measured minimum {np.min(squares):.6f}",
        )
    )
    out.constants["partition_squares_min"] = float(np.min(squares))
    rng = _rng(config, "partition")
    worst = 0.0
    for _ in range(config.reconstruction_fields):
        v = random_field(grid, rng, kmin=1.0, kmax=math.inf)
        gap = l2_norm(decompose(v, cut).reconstruct() - v) / l2_norm(v)
        worst = max(worst, gap)
    out.checks.append(check("block_reconstruction", worst, 1e-10, "partition of unity"))
    for msg in cut.resolution_warnings(grid):
        out.checks.append(CheckRow("cutoff_resolution", 1.0, 0.0, False, "lattice sampling", note=msg))
    return out


# ------------------------------------------------------------------- bernstein

BERNSTEIN_LOWER = 0.75
BERNSTEIN_UPPER = 8.0 / 3.0


def suite_bernstein(config: ExperimentConfig) -> SuiteOutput:
    out = SuiteOutput()
    grid = Grid(config.n)
    cut = build_cutoffs(config.sharpness)
    rng = _rng(config, "bernstein")
    qs = range(0, cut.q_max(grid) + 1)
    all_ratios = []
    for i in range(config.bernstein_fields):
        v = random_field(grid, rng, kmin=1.0, kmax=math.inf)
        ratios = [bernstein_ratio(v, q, cut) for q in qs]
        all_ratios.append(ratios)
        out.checks.append(
            check(
                f"bernstein[{i}]",
                max(ratios),
                BERNSTEIN_UPPER + 1e-10,
                "Bernstein annulus bounds",
                lower=BERNSTEIN_LOWER - 1e-10,
                note=f"min {min(ratios):.6f}",
            )
        )
    arr = np.array(all_ratios)
    out.constants["bernstein_min"] = float(arr.min())
    out.constants["bernstein_max"] = float(arr.max())
    out.series["bernstein.csv"] = (["field"] + [f"q{q}" for q in qs], [[i, *map(float, r)] for i, r in enumerate(arr)])
    return out


# --------------------------------------------------------------------- lorentz


def inverse_sqrt_oracle(samples: int = 100_000) -> TimeSeries:
    """f(t) = t^(-1/2) on (0, 1) sampled at the right end of each cell."""
    dt = 1.0 / samples
    t = (np.arange(samples) + 1) * dt
    return TimeSeries(t**-0.5, dt)


def suite_lorentz(config: ExperimentConfig) -> SuiteOutput:
    out = SuiteOutput()
    f = inverse_sqrt_oracle()
    weak = weak_lp_time_norm(f, 2.0)
    dual = lorentz_dual_norm(f)
    out.checks.append(check("weak_l2_inverse_sqrt", weak, 1.02, "analytic oracle", lower=0.98))
    out.checks.append(check("dual_inverse_sqrt", dual, 2.04, "analytic oracle", lower=1.96))
    rng = _rng(config, "lorentz")
    worst_dual = 0.0
    worst_chain = -math.inf
    worst_cover = 0.0
    for _ in range(50):
        nt = int(rng.integers(16, 257))
        f = TimeSeries(np.abs(rng.standard_cauchy(nt)), 1.0 / nt)
        h = TimeSeries(rng.exponential(size=nt) ** 3, 1.0 / nt)
        worst_dual = max(worst_dual, lorentz_dual_norm(f) / (2.0 * weak_lp_time_norm(f, 2.0)))
        lines = np.array(chain_bound(f, h, int(rng.integers(0, 5))).lines)
        worst_chain = max(worst_chain, float(np.max((lines[:-1] - lines[1:]) / lines[1:])))
        parts = level_sets(h, floor=0.0)
        covered = sum(s.measure for s in parts.sets) + parts.residual_measure
        worst_cover = max(worst_cover, abs(covered - np.count_nonzero(h.values) * h.dt))
    out.checks.append(check("dual_vs_weak", worst_dual, 1.0 + 1e-12, "rearrangement inequality"))
    out.checks.append(check("level_set_chain_monotone", worst_chain, 1e-12, "level-set chain"))
    out.checks.append(check("level_set_cover", worst_cover, 1e-12, "partition of the support"))
    return out


# ------------------------------------------------------------------- embedding


def embedding_trial(grid: Grid, cut: CutoffSystem, rng: np.random.Generator, nt: int = 16):
    """One randomized (f, v) pair; returns (lhs, ||f||, ||v||_Q^2).

    v(t) = sum_q a_q(t) Delta_q w for a random field w and random smooth
    positive profiles a_q; f is drawn from power laws, steps, bumps and noise.
    """
    qs = list(cut.block_indices(grid))
    dt = 1.0 / nt
    t = (np.arange(nt) + 1) * dt
    w = random_field(grid, rng, kmin=1.0, kmax=math.inf)
    blocks = decompose(w, cut)
    rates = rng.uniform(0.0, 3.0, len(qs))
    freqs = rng.uniform(0.0, 3.0, len(qs))
    phases = rng.uniform(0.0, 2 * np.pi, len(qs))
    weights = rng.uniform(0.2, 1.0, len(qs))
    profiles = weights[:, None] * np.exp(-rates[:, None] * t) * (1.5 + np.sin(2 * np.pi * freqs[:, None] * t + phases[:, None]))
    fields = []
    for i in range(nt):
        c = sum(profiles[k, i] * blocks.fields[k].coeffs for k in range(len(qs)))
        fields.append(SpectralField(grid, c))
    kind = int(rng.integers(0, 4))
    if kind == 0:
        fv = t ** -rng.uniform(0.0, 0.5)
    elif kind == 1:
        fv = np.where(t < rng.uniform(0.05, 1.0), rng.uniform(0.5, 2.0), rng.uniform(0.0, 0.5))
    elif kind == 2:
        fv = np.exp(-(((t - rng.uniform(0, 1)) / rng.uniform(0.05, 0.5)) ** 2))
    else:
        fv = np.abs(rng.standard_normal(nt))
    f = TimeSeries(fv, dt)
    bs, grad = block_series(fields, dt, cut)
    lhs = separable_embedding_lhs(f, profiles, w, cut)
    return lhs, lorentz_dual_norm(f), q_norm_sq(bs, grad)


def suite_embedding(config: ExperimentConfig) -> SuiteOutput:
    out = SuiteOutput()
    grid = Grid(config.embedding_n)
    cut = build_cutoffs(config.sharpness)
    rng = _rng(config, "embedding")
    ratios = []
    for _ in range(config.embedding_trials):
        lhs, fnorm, qn = embedding_trial(grid, cut, rng)
        ratios.append(lhs / (fnorm * qn))
    ratios = np.array(ratios)
    running = np.maximum.accumulate(ratios)
    burn = min(50, len(ratios))
    late = ratios[burn:] / running[burn - 1 : -1] if len(ratios) > burn else np.zeros(1)
    c_emp = float(ratios.max())
    out.constants["C_emb"] = c_emp
    out.checks.append(check("embedding_constant_finite", c_emp, math.inf, "empirical", note="f measured in the dual norm"))
    out.checks.append(
        check("embedding_constant_stable", float(np.max(late, initial=0.0)), 1.05, "empirical", note=f"after {burn} trials")
    )
    out.series["embedding.csv"] = (["trial", "ratio", "running_max"], [[i, float(r), float(m)] for i, (r, m) in enumerate(zip(ratios, running))])
    return out


# ----------------------------------------------------------------- paraproduct


def suite_paraproduct(config: ExperimentConfig) -> SuiteOutput:
    out = SuiteOutput()
    grid = Grid(config.n)
    cut = build_cutoffs(config.sharpness)
    rng = _rng(config, "paraproduct")
    worst = 0.0
    for _ in range(config.paraproduct_pairs):
        a = random_field(grid, rng, components=1)
        b = random_field(grid, rng, components=1)
        worst = max(worst, reconstruction_error(a, b, cut))
    out.checks.append(check("bony_reconstruction", worst, 1e-10, "Bony decomposition"))
    b = random_field(grid, rng, kmin=1.0, kmax=grid.n / 3, components=1)
    v = random_field(grid, rng, kmin=1.0, kmax=grid.n / 3, components=1)
    t_worst = r_worst = 0.0
    for q in cut.block_indices(grid):
        t_gap, r_gap = support_range_error(b, v, q, cut)
        t_worst, r_worst = max(t_worst, t_gap), max(r_worst, r_gap)
    out.checks.append(check("paraproduct_support_range", t_worst, 1e-10, "frequency support arithmetic"))
    out.checks.append(check("remainder_support_range", r_worst, 1e-10, "frequency support arithmetic"))
    return out


# ---------------------------------------------------------------------- solver


def order_ratio(n: int, seed: int = 0, amplitude: float = 1.0, T: float = 0.25, steps: Sequence[int] = (32, 64, 128)):
    """Self-convergence ratio |v_dt - v_dt/2| / |v_dt/2 - v_dt/4| on a smooth random field."""
    grid = Grid(n)
    u = random_velocity(grid, np.random.default_rng(seed), kmin=1.0, kmax=3.0)
    v0 = curl(u * (amplitude / linf_norm(u)))
    finals = [run(v0, SolverConfig(n=n, T=T, dt=T / s, record_stride=s)).final_state.v for s in steps]
    e = [l2_norm(a - b) for a, b in zip(finals, finals[1:])]
    return e[0] / e[1], e


def suite_solver(config: ExperimentConfig) -> SuiteOutput:
    out = SuiteOutput()
    grid = Grid(config.n)
    rng = _rng(config, "solver")
    u0 = initial_velocity(config, grid, rng)
    v0 = curl(u0)
    cfg = SolverConfig(
        n=config.n,
        T=config.T,
        dt=config.dt,
        record_stride=config.record_stride,
        cfl=config.cfl,
        nonlinear=config.nonlinear,
        sharpness=config.sharpness,
    )
    res = run(v0, cfg)
    out.series["solver_series.csv"] = series_rows(res)
    out.status = "blowup" if res.status == "blowup" else "ok"
    out.checks.append(check("solver_completed", float(res.truncated), 0.0, "integration status", note=res.status))
    out.checks.append(check("divergence_free", float(np.max(res.divergence)), 1e-10, "Leray projection"))
    v0n = res.vort_l2[0]
    if config.init in ("abc", "single-mode") and v0n > 0:
        rate = 1.0 if config.init == "abc" else float(np.sum(np.square(mode_vector(config.mode))))
        decay = np.exp(-rate * res.times)
        err = float(np.max(np.abs(res.vort_l2 - decay * v0n)) / v0n)
        out.checks.append(check("decay_error", err, 1e-6, "exact solution"))
        umax0 = res.u_inf[0]
        uerr = float(np.max(np.abs(res.u_inf - decay * umax0)))
        out.checks.append(check("u_inf_decay_error", uerr, 1e-5, "exact solution"))
    ratio, errs = order_ratio(config.n, seed=config.seed)
    out.checks.append(check("order_two_ratio", ratio, 4.5, "second-order scheme", lower=3.5, note=f"errors {errs[0]:.3e}, {errs[1]:.3e}"))
    return out


# --------------------------------------------------------------------- apriori


@dataclass(frozen=True)
class AprioriRun:
    seed: int
    amplitude: float
    dt: float
    status: str
    u_weak: float
    u_dual: float
    q_ratio: float
    v0_sq: float
    j_ratios: tuple[float, float, float]
    energy_residual: float  # max_q residual / ||v0||^2
    identity_residual: float
    split_gap: float
    series: tuple[list[str], list] | None = None


def apriori_run(
    n: int,
    amplitude: float,
    seed: int,
    base_dt: float = 2.0**-7,
    cfl: float = 0.5,
    j_terms: bool = True,
    j_stride: int = 4,
    nonlinear: bool = True,
    sharpness: float = 1.0,
    kmin: float = 2.0,
    kmax: float | None = None,
    q_limit: bool = False,
    keep_series: bool = False,
) -> AprioriRun:
    """One seeded small-data run on [0, 1] with random-band initial data."""
    grid = Grid(n)
    u = random_velocity(grid, np.random.default_rng(seed), kmin, kmax)
    v0 = curl(u * (amplitude / linf_norm(u)))
    dt = stable_dt(base_dt, n, amplitude, cfl) if nonlinear else base_dt
    steps = int(round(1.0 / dt))
    cfg = SolverConfig(
        n=n,
        T=1.0,
        dt=dt,
        cfl=cfl,
        nonlinear=nonlinear,
        j_terms=j_terms,
        j_stride=math.gcd(j_stride, steps),
        sharpness=sharpness,
    )
    v0_sq = l2_norm(v0) ** 2
    res = run(v0, cfg, q_limit=Q_BOUND * v0_sq if q_limit else None)
    rep = apriori_report(res)
    if rep.energy is not None:
        e_res = float(np.max(rep.energy.residual)) / v0_sq
        i_res = float(np.max(rep.energy.identity_residual)) / v0_sq
        gap = rep.energy.split_gap
    else:
        e_res = i_res = gap = math.nan
    return AprioriRun(
        seed=seed,
        amplitude=amplitude,
        dt=dt,
        status=res.status,
        u_weak=rep.u_weak,
        u_dual=rep.u_dual,
        q_ratio=rep.q_ratio,
        v0_sq=v0_sq,
        j_ratios=rep.j_ratios,
        energy_residual=e_res,
        identity_residual=i_res,
        split_gap=gap,
        series=series_rows(res) if keep_series else None,
    )


def _apriori_job(kwargs: dict) -> AprioriRun:
    return apriori_run(**kwargs)


def map_runs(jobs: list[dict], parallel: int = 1) -> list[AprioriRun]:
    """Run jobs in order; with ``parallel > 1`` in worker processes (results keep job order)."""
    if parallel <= 1 or len(jobs) <= 1:
        return [_apriori_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(_apriori_job, jobs))


def seed_list(config: ExperimentConfig, stream: str, count: int) -> list[int]:
    return [int(s) for s in _rng(config, stream).integers(0, 2**31 - 1, size=count)]


def suite_apriori(config: ExperimentConfig) -> SuiteOutput:
    out = SuiteOutput()
    jobs = [
        dict(
            n=config.n,
            amplitude=config.amplitude,
            seed=s,
            base_dt=config.apriori_dt,
            cfl=config.cfl,
            j_stride=config.j_stride,
            nonlinear=config.nonlinear,
            sharpness=config.sharpness,
            kmin=config.kmin,
            kmax=config.kmax or None,
            keep_series=True,
        )
        for s in seed_list(config, "apriori", config.seeds)
    ]
    runs = map_runs(jobs, config.parallel_seeds)
    for i, r in enumerate(runs):
        tag = f"apriori[{i}]"
        out.checks.append(check(f"{tag}.q_ratio", r.q_ratio, Q_BOUND, "a priori bound", note=f"u_weak {r.u_weak:.4g}"))
        out.checks.append(check(f"{tag}.energy_residual", r.energy_residual, 1e-6, "block energy inequality"))
        out.checks.append(check(f"{tag}.split_gap", r.split_gap, 1e-10, "Bony decomposition"))
        out.checks.append(check(f"{tag}.j_ratios_finite", max(r.j_ratios), math.inf, "empirical"))
        if r.status == "blowup":
            out.status = "blowup"
        out.series[f"apriori_{i:02d}.csv"] = r.series
    for c in range(3):
        out.constants[f"C_J{c + 1}"] = float(max(r.j_ratios[c] for r in runs))
    out.constants["apriori_max_q_ratio"] = float(max(r.q_ratio for r in runs))
    out.constants["apriori_max_u_weak"] = float(max(r.u_weak for r in runs))
    out.constants["apriori_max_identity_residual"] = float(max(r.identity_residual for r in runs))
    return out


# ---------------------------------------------------------------- hardy-young


def suite_hardy_young(config: ExperimentConfig) -> SuiteOutput:
    out = SuiteOutput()
    rng = _rng(config, "hardy-young")
    worst = 0.0
    L = config.hy_length
    for i in range(config.hy_sequences):
        kind = i % 4
        if kind == 0:
            a = rng.uniform(size=L)
        elif kind == 1:
            a = rng.exponential(size=L) ** 3
        elif kind == 2:
            a = rng.uniform(size=L) * (rng.uniform(size=L) < 0.1)
        else:
            a = 2.0 ** (-rng.uniform(0, 1) * np.abs(np.arange(L) - rng.integers(0, L)))
        worst = max(worst, hardy_young_check(a)[1])
    out.checks.append(check("hardy_young_random", worst, HARDY_YOUNG_BOUND + 1e-10, "Young convolution bound"))
    gap = 0.0
    for j0 in range(L):
        a = np.zeros(L)
        a[j0] = 1.0
        gap = max(gap, abs(hardy_young_check(a)[1] - math.sqrt(2.0 - 2.0 ** -(j0 + 2))))
    out.checks.append(check("hardy_young_one_hot", gap, 1e-12, "geometric series"))
    out.checks.append(check("hardy_young_zero", hardy_young_check(np.zeros(L))[1], 0.0, "trivial"))
    out.constants["hardy_young_max_ratio"] = worst
    return out


SUITE_FUNCS: dict[str, Callable[[ExperimentConfig], SuiteOutput]] = {
    "partition": suite_partition,
    "bernstein": suite_bernstein,
    "lorentz": suite_lorentz,
    "embedding": suite_embedding,
    "paraproduct": suite_paraproduct,
    "solver": suite_solver,
    "apriori": suite_apriori,
    "hardy-young": suite_hardy_young,
}
