import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpns.spectral import (
    VOLUME,
    Grid,
    SpectralField,
    abc_velocity,
    biot_savart,
    curl,
    dealiased_product,
    divergence,
    gradient,
    inner,
    inverse_transform,
    l2_norm,
    leray_project,
    linf_norm,
    random_field,
    random_velocity,
    transform,
    zeros,
)


def test_grid_rejects_bad_sizes():
    for bad in (4, 12, 30, 0):
        with pytest.raises(ValueError):
            Grid(bad)
    with pytest.raises(TypeError):
        Grid(16.0)
    assert Grid(8).box_length == pytest.approx(2 * np.pi)


def test_wavenumbers_fft_order(grid8):
    assert list(grid8.wavenumbers) == [0, 1, 2, 3, -4, -3, -2, -1]
    # derivative wavevectors drop the Nyquist entry
    assert grid8.k_deriv[0][4, 0, 0] == 0.0
    assert grid8.k[0][4, 0, 0] == -4.0


def test_zero_field_transforms_to_zero(grid8):
    f = transform(np.zeros((3,) + grid8.shape), grid8)
    assert np.all(f.coeffs == 0)
    assert l2_norm(f) == 0.0 and linf_norm(f) == 0.0


def test_cos_x1_coefficients(grid16):
    x1 = grid16.coordinates[0]
    f = transform(np.cos(x1), grid16)
    c = f.coeffs[0]
    assert c[1, 0, 0] == pytest.approx(0.5, abs=1e-15)
    assert c[-1, 0, 0] == pytest.approx(0.5, abs=1e-15)
    c = c.copy()
    c[1, 0, 0] = c[-1, 0, 0] = 0
    assert np.max(np.abs(c)) < 1e-15


def test_cos_x1_norms(grid16):
    f = transform(np.cos(grid16.coordinates[0]), grid16)
    # int cos^2 over the box = (2 pi)^3 / 2
    assert l2_norm(f) == pytest.approx((2 * np.pi) ** 1.5 / math.sqrt(2), rel=1e-14)
    assert linf_norm(f) == pytest.approx(1.0, rel=1e-14)


def test_round_trip_and_parseval(grid16, rng):
    x = rng.standard_normal((3,) + grid16.shape)
    f = transform(x, grid16)
    back = inverse_transform(f)
    assert np.linalg.norm(back - x) / np.linalg.norm(x) <= 1e-12
    grid_l2 = math.sqrt(np.sum(x**2) * grid16.cell_volume)
    assert l2_norm(f) == pytest.approx(grid_l2, rel=1e-12)
    assert f.hermitian_error() < 1e-15


def test_transform_rejects_complex_and_wrong_shape(grid8):
    with pytest.raises(TypeError):
        transform(np.zeros(grid8.shape, complex), grid8)
    with pytest.raises(ValueError):
        transform(np.zeros((2,) + grid8.shape), grid8)


def test_field_is_immutable(grid8):
    f = zeros(grid8)
    with pytest.raises(ValueError):
        f.coeffs[0, 0, 0, 0] = 1.0


def test_curl_hand_example(grid16):
    x2 = grid16.coordinates[1]
    u = transform(np.stack([np.sin(x2), 0 * x2, 0 * x2]), grid16)
    w = inverse_transform(curl(u))
    assert np.max(np.abs(w[0])) < 1e-14
    assert np.max(np.abs(w[1])) < 1e-14
    assert np.max(np.abs(w[2] + np.cos(x2))) < 1e-14


def test_curl_of_constant_is_zero(grid8):
    u = transform(np.ones((3,) + grid8.shape), grid8)
    assert np.max(np.abs(curl(u).coeffs)) == 0.0


def test_curl_rejects_scalar(grid8):
    with pytest.raises(ValueError):
        curl(zeros(grid8, 1))


def test_abc_is_curl_eigenfield(grid16):
    u = abc_velocity(grid16, 1.0, 0.7, 0.3)
    assert l2_norm(curl(u) - u) / l2_norm(u) < 1e-14
    assert l2_norm(biot_savart(u) - u) / l2_norm(u) < 1e-14


def test_div_curl_vanishes(grid16, rng):
    w = random_field(grid16, rng)
    assert curl(w).divergence_error() <= 1e-12
    assert np.max(np.abs(divergence(curl(w)).coeffs)) <= 1e-12


def test_leray_fixes_solenoidal_and_kills_gradients(grid16, rng):
    u = random_velocity(grid16, rng)
    assert l2_norm(leray_project(u) - u) / l2_norm(u) <= 1e-12
    g = random_field(grid16, rng, components=1)
    grad = gradient(g)
    p = leray_project(grad)
    assert l2_norm(p) <= 1e-12 * l2_norm(grad)


def test_leray_idempotent_and_self_adjoint(grid16, rng):
    a = random_field(grid16, rng)
    b = random_field(grid16, rng)
    pa = leray_project(a)
    assert l2_norm(leray_project(pa) - pa) <= 1e-12 * l2_norm(pa)
    assert inner(pa, b) == pytest.approx(inner(a, leray_project(b)), abs=1e-12 * l2_norm(a) * l2_norm(b))


def test_leray_keeps_mean(grid8):
    c = np.zeros((3,) + grid8.shape, complex)
    c[:, 0, 0, 0] = [1.0, 2.0, 3.0]
    assert np.allclose(leray_project(SpectralField(grid8, c)).coeffs[:, 0, 0, 0], [1, 2, 3])


def test_biot_savart_inverts_curl(grid16, rng):
    v = curl(random_velocity(grid16, rng))
    u = biot_savart(v)
    assert l2_norm(curl(u) - v) / l2_norm(v) <= 1e-12
    assert u.divergence_error() <= 1e-12


def test_biot_savart_hand_example(grid16):
    x2 = grid16.coordinates[1]
    v = transform(np.stack([0 * x2, 0 * x2, -np.cos(x2)]), grid16)
    u = inverse_transform(biot_savart(v))
    assert np.max(np.abs(u[0] - np.sin(x2))) < 1e-14
    assert np.max(np.abs(u[1:])) < 1e-14


def test_biot_savart_zero_and_mean(grid8):
    assert l2_norm(biot_savart(zeros(grid8))) == 0.0
    c = np.zeros((3,) + grid8.shape, complex)
    c[2, 0, 0, 0] = 1.0
    with pytest.raises(ValueError, match="nonzero mean"):
        biot_savart(SpectralField(grid8, c))


def test_linf_refinement_consistency(rng):
    coarse = Grid(16)
    fine = Grid(32)
    f = random_field(coarse, rng, components=1)
    # spectral interpolation of the same coefficients onto the finer grid
    c = np.zeros((1,) + fine.shape, complex)
    kv = coarse.wavenumbers
    idx = np.ix_(kv % 32, kv % 32, kv % 32)
    c[0][idx] = f.coeffs[0]
    g = SpectralField(fine, c)
    assert linf_norm(f) <= linf_norm(g) * (1 + 1e-2)


def test_random_field_band_and_norm(grid16, rng):
    f = random_field(grid16, rng, kmin=2, kmax=4)
    assert l2_norm(f) == pytest.approx(1.0, rel=1e-13)
    mag = grid16.k_mag
    outside = (mag < 2) | (mag > 4) | grid16.nyquist_mask
    assert np.max(np.abs(f.coeffs[:, outside])) == 0.0
    assert f.hermitian_error() < 1e-15


def test_dealiased_product_exact_for_resolved_modes(grid16):
    x1, x2, _ = grid16.coordinates
    a = transform(np.cos(3 * x1 + 2 * x2), grid16)
    b = transform(np.sin(4 * x1 - x2), grid16)
    ab = dealiased_product(a, b)
    ref = transform(np.cos(3 * x1 + 2 * x2) * np.sin(4 * x1 - x2), grid16)
    assert l2_norm(ab - ref) <= 1e-12 * l2_norm(ref)


def test_dealiased_product_drops_aliases(grid16):
    # |k| = 7 + 7 = 14 aliases to -2 on n = 16; padding must not fold it back
    x1 = grid16.coordinates[0]
    a = transform(np.cos(7 * x1), grid16)
    prod = dealiased_product(a, a).coeffs[0]
    assert prod[0, 0, 0] == pytest.approx(0.5, abs=1e-14)
    assert abs(prod[2, 0, 0]) < 1e-14 and abs(prod[-2, 0, 0]) < 1e-14


@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.1, 10.0))
def test_parseval_and_linearity_property(seed, scale):
    grid = Grid(8)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((3,) + grid.shape)
    f = transform(x, grid)
    assert l2_norm(f * scale) == pytest.approx(scale * l2_norm(f), rel=1e-12)
    assert l2_norm(f) ** 2 == pytest.approx(np.sum(x**2) * VOLUME / grid.n**3, rel=1e-12)
