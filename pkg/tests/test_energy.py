import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lpns.energy import (
    HARDY_YOUNG_BOUND,
    apriori_report,
    energy_check,
    hardy_young_check,
    j_integrands,
    j_terms,
    tensor_split,
    unsplit_integrand,
)
from lpns.solver import SolverConfig, b_tensor, run
from lpns.spectral import (
    SpectralField,
    abc_velocity,
    curl,
    l2_norm,
    linf_norm,
    random_velocity,
    transform,
    zeros,
)


def _vorticity(grid, rng, amplitude=1.0):
    u = random_velocity(grid, rng)
    return curl(u * (amplitude / linf_norm(u)))


def test_zero_field_has_zero_terms(grid8):
    assert np.all(j_integrands(zeros(grid8)) == 0.0)
    assert np.all(unsplit_integrand(zeros(grid8)) == 0.0)


def test_beltrami_terms_vanish(grid16):
    v = abc_velocity(grid16, 1.0, 0.5, 0.25)
    assert np.max(np.abs(b_tensor(v))) <= 1e-14
    assert np.max(np.abs(j_integrands(v))) <= 1e-12


def test_split_matches_unsplit(grid16, rng):
    v = _vorticity(grid16, rng)
    j = j_integrands(v)
    ref = unsplit_integrand(v)
    assert np.max(np.abs(j.sum(axis=0) - ref)) <= 1e-12 * np.max(np.abs(j))
    pieces = tensor_split(v)
    assert np.max(np.abs(pieces.sum(axis=0) - b_tensor(v))) <= 1e-13 * np.max(np.abs(b_tensor(v)))
    # every piece is antisymmetric like B itself
    assert np.max(np.abs(pieces + np.swapaxes(pieces, 1, 2))) == 0.0


def test_low_frequency_field_is_pure_remainder(grid16):
    # unit modes all sit in block -1, so both paraproducts are empty
    x1, x2, x3 = grid16.coordinates
    u = transform(np.stack([np.cos(x2) + np.sin(x3), np.cos(x3), 0.5 * np.sin(x1)]), grid16)
    v = curl(u)
    pieces = tensor_split(v)
    b = b_tensor(v)
    assert np.max(np.abs(b)) > 0.1
    assert np.max(np.abs(pieces[1:])) <= 1e-15
    assert np.max(np.abs(pieces[0] - b)) <= 1e-14
    assert np.max(np.abs(j_integrands(v)[1:])) <= 1e-14


def test_j_terms_reads_one_block(grid8, rng):
    v = _vorticity(grid8, rng)
    assert j_terms(v, 1) == tuple(j_integrands(v)[:, 2])


def test_hardy_young_one_hot_closed_form():
    # one nonzero entry at index i: lhs^2 = sum_{m=-(i+2)}^{0} 2^m = 2 - 2^-(i+2)
    for L in (1, 5, 64):
        for i in range(L):
            a = np.zeros(L)
            a[i] = 3.0
            lhs, ratio = hardy_young_check(a)
            assert ratio == pytest.approx(math.sqrt(2.0 - 2.0 ** -(i + 2)), rel=1e-14)
            assert lhs == pytest.approx(3.0 * ratio, rel=1e-14)


def test_hardy_young_constant_sequence_approaches_bound():
    ratio = hardy_young_check(np.ones(4096))[1]
    assert 0.95 * HARDY_YOUNG_BOUND < ratio < HARDY_YOUNG_BOUND


def test_hardy_young_edge_cases():
    assert hardy_young_check(np.zeros(4)) == (0.0, 0.0)
    with pytest.raises(ValueError):
        hardy_young_check([1.0, -1.0])


@given(a=arrays(np.float64, st.integers(1, 64), elements=st.floats(0.0, 1e6)))
def test_hardy_young_bound_property(a):
    assert hardy_young_check(a)[1] <= HARDY_YOUNG_BOUND + 1e-10


def test_energy_check_small_data(grid8, rng):
    v0 = _vorticity(grid8, rng, amplitude=0.5)
    res = run(v0, SolverConfig(n=8, T=0.25, dt=2.0**-7, j_terms=True, j_stride=4))
    chk = energy_check(res)
    v0_sq = l2_norm(v0) ** 2
    assert np.max(chk.identity_residual) <= 1e-5 * v0_sq
    assert np.max(chk.residual) <= 1e-6 * v0_sq
    assert chk.split_gap <= 1e-10
    assert chk.j_totals.shape == (3, len(res.q_indices))


def test_energy_identity_is_second_order(grid8, rng):
    v0 = _vorticity(grid8, rng, amplitude=2.0)
    resid = []
    for dt in (2.0**-6, 2.0**-7):
        res = run(v0, SolverConfig(n=8, T=0.25, dt=dt, j_terms=True, j_stride=4))
        resid.append(np.max(energy_check(res).identity_residual))
    assert 3.0 <= resid[0] / resid[1] <= 5.0


def test_energy_check_needs_j_terms(grid8, rng):
    res = run(_vorticity(grid8, rng), SolverConfig(n=8, T=0.05, dt=0.01))
    with pytest.raises(ValueError):
        energy_check(res)
    rep = apriori_report(res)
    assert rep.energy is None and rep.j_sums == (0.0, 0.0, 0.0)


def test_apriori_report_linear_mode(grid16):
    c = np.zeros((3,) + grid16.shape, complex)
    c[2, 1, 1, 0] = c[2, -1, -1, 0] = 0.5
    v0 = SpectralField(grid16, c)
    res = run(v0, SolverConfig(n=16, T=1.0, dt=2.0**-6, nonlinear=False))
    rep = apriori_report(res)
    # no stretching: Q = (1/2) sum_q phi_q^2 ||v0||^2 + (1/2)(1 - e^{-4}) ||v0||^2 <= ||v0||^2
    assert rep.q_ratio <= 1.0
    assert rep.q_ratio >= 0.5 * (1 - math.exp(-4.0)) + 0.25
    assert rep.u_weak <= rep.u_dual <= 2 * rep.u_weak
    assert rep.status == "ok"
