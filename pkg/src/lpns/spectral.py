"""Real fields on the periodic box [0, 2*pi)^3 in Fourier representation.

Coefficients use the ``norm="forward"`` convention: the forward transform
carries the 1/n^3 factor, so a coefficient is independent of the grid size
and ``cos(x1)`` has coefficient 1/2 at k = (+-1, 0, 0).  L2 norms include the
(2*pi)^3 box volume so they equal the continuum integrals.

Derivatives use integer wavevectors with the Nyquist entry (k = -n/2) set
to zero, the usual convention for odd derivatives on even grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

VOLUME = (2.0 * np.pi) ** 3
_AXES = (-3, -2, -1)


@dataclass(frozen=True)
class Grid:
    """Uniform n^3 grid on the 2*pi-periodic box."""

    n: int

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise TypeError(f"grid size must be an integer, got {n!r}")
        if n < 8 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {n}")

    @property
    def box_length(self) -> float:
        return 2.0 * np.pi

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers in FFT order, ``{0, 1, ..., n/2-1, -n/2, ..., -1}``."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).round().astype(np.int64)

    @cached_property
    def k(self) -> np.ndarray:
        """Wavevectors, shape (3, n, n, n)."""
        kk = self.wavenumbers.astype(float)
        return np.stack(np.meshgrid(kk, kk, kk, indexing="ij"))

    @cached_property
    def k_deriv(self) -> np.ndarray:
        """Wavevectors used for differentiation (Nyquist entries zeroed)."""
        kk = self.wavenumbers.astype(float)
        kk[self.n // 2] = 0.0
        return np.stack(np.meshgrid(kk, kk, kk, indexing="ij"))

    @cached_property
    def k_sq(self) -> np.ndarray:
        return np.sum(self.k**2, axis=0)

    @cached_property
    def k_mag(self) -> np.ndarray:
        return np.sqrt(self.k_sq)

    @cached_property
    def k_deriv_sq(self) -> np.ndarray:
        return np.sum(self.k_deriv**2, axis=0)

    @cached_property
    def inverse_k_deriv_sq(self) -> np.ndarray:
        """1/|k|^2 with the derivative wavevectors, 0 where |k| vanishes."""
        ksq = self.k_deriv_sq
        return np.where(ksq > 0, 1.0 / np.where(ksq > 0, ksq, 1.0), 0.0)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True where any wavevector component equals -n/2."""
        return np.any(self.k == -self.n // 2, axis=0)

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Physical grid points x_j = 2*pi*j/n, shape (3, n, n, n)."""
        x = np.arange(self.n) * (2.0 * np.pi / self.n)
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))

    @property
    def cell_volume(self) -> float:
        return (2.0 * np.pi / self.n) ** 3

    @cached_property
    def padded(self) -> "PaddedTransform":
        return PaddedTransform(self)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real scalar (1 component) or vector (3) field.

    The coefficient array has shape ``(components, n, n, n)`` and is stored
    read-only; operations always return new fields.
    """

    grid: Grid
    coeffs: np.ndarray
    divergence_free: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.ndim == 3:
            c = c[np.newaxis]
        if c.ndim != 4 or c.shape[1:] != self.grid.shape or c.shape[0] not in (1, 3):
            raise ValueError(
                f"coefficients must have shape (1|3, {self.grid.n}, {self.grid.n}, {self.grid.n}),"
                f" got {np.shape(self.coeffs)}"
            )
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n_components(self) -> int:
        return self.coeffs.shape[0]

    @property
    def is_vector(self) -> bool:
        return self.n_components == 3

    def replace(self, coeffs: np.ndarray, divergence_free: bool | None = None) -> "SpectralField":
        flag = self.divergence_free if divergence_free is None else divergence_free
        return SpectralField(self.grid, coeffs, flag)

    def component(self, i: int) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs[i : i + 1])

    def _check_compatible(self, other: "SpectralField"):
        if self.grid != other.grid or self.n_components != other.n_components:
            raise ValueError("fields live on different grids or have different ranks")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(
            self.grid, self.coeffs + other.coeffs, self.divergence_free and other.divergence_free
        )

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(
            self.grid, self.coeffs - other.coeffs, self.divergence_free and other.divergence_free
        )

    def __neg__(self) -> "SpectralField":
        return self.replace(-self.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        if not np.isscalar(scalar):
            return NotImplemented
        return self.replace(self.coeffs * scalar)

    __rmul__ = __mul__

    def hermitian_error(self) -> float:
        """max |c(-k) - conj(c(k))| over all k and components."""
        c = self.coeffs
        flipped = np.roll(c[:, ::-1, ::-1, ::-1], 1, axis=(1, 2, 3))
        return float(np.max(np.abs(flipped - np.conj(c)), initial=0.0))

    def divergence_error(self) -> float:
        """max_k |k . c(k)| relative to max_k |c(k)|."""
        if not self.is_vector:
            raise ValueError("divergence needs a vector field")
        kdot = np.abs(np.einsum("i...,i...->...", self.grid.k_deriv, self.coeffs))
        scale = np.max(np.abs(self.coeffs), initial=0.0)
        return float(np.max(kdot) / scale) if scale > 0 else 0.0


def zeros(grid: Grid, components: int = 3) -> SpectralField:
    return SpectralField(grid, np.zeros((components,) + grid.shape, complex), components == 3)


def transform(samples: np.ndarray, grid: Grid | None = None) -> SpectralField:
    """Forward DFT of real samples shaped (n, n, n) or (3, n, n, n)."""
    samples = np.asarray(samples)
    if np.iscomplexobj(samples):
        raise TypeError("samples must be real")
    if grid is None:
        grid = Grid(int(samples.shape[-1]))
    if samples.ndim == 3:
        samples = samples[np.newaxis]
    if samples.shape[1:] != grid.shape:
        raise ValueError(f"expected samples on a {grid.n}^3 grid, got shape {samples.shape}")
    return SpectralField(grid, scipy.fft.fftn(samples, axes=_AXES, norm="forward"))


def inverse_transform(field: SpectralField) -> np.ndarray:
    """Physical samples of ``field``; scalar fields come back as (n, n, n)."""
    out = scipy.fft.ifftn(field.coeffs, axes=_AXES, norm="forward").real
    return out[0] if field.n_components == 1 else out


def gradient_coeffs(field: SpectralField) -> np.ndarray:
    """Coefficients of d_l f_i as an array of shape (components, 3, n, n, n)."""
    return 1j * field.grid.k_deriv[np.newaxis] * field.coeffs[:, np.newaxis]


def gradient(field: SpectralField) -> SpectralField:
    if field.is_vector:
        raise ValueError("gradient field of a vector is a tensor; use gradient_coeffs")
    return SpectralField(field.grid, gradient_coeffs(field)[0])


def divergence(field: SpectralField) -> SpectralField:
    if not field.is_vector:
        raise ValueError("divergence needs a vector field")
    return SpectralField(field.grid, np.sum(1j * field.grid.k_deriv * field.coeffs, axis=0))


def _cross_k(k: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            k[1] * c[2] - k[2] * c[1],
            k[2] * c[0] - k[0] * c[2],
            k[0] * c[1] - k[1] * c[0],
        ]
    )


def curl(u: SpectralField) -> SpectralField:
    """``curl u`` with coefficients ``i k x u(k)``."""
    if not u.is_vector:
        raise ValueError("curl needs a vector field")
    return SpectralField(u.grid, 1j * _cross_k(u.grid.k_deriv, u.coeffs), divergence_free=True)


def leray_project(w: SpectralField) -> SpectralField:
    """Remove the gradient part: w(k) - k (k . w(k)) / |k|^2 for k != 0."""
    if not w.is_vector:
        raise ValueError("Leray projection needs a vector field")
    k = w.grid.k_deriv
    ksq = w.grid.k_deriv_sq
    kdotw = np.einsum("i...,i...->...", k, w.coeffs)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(ksq > 0, kdotw / np.where(ksq > 0, ksq, 1.0), 0.0)
    return SpectralField(w.grid, w.coeffs - k * factor, divergence_free=True)


def biot_savart(v: SpectralField, atol: float = 1e-12) -> SpectralField:
    """Velocity u with ``curl u = v``, ``div u = 0`` and zero mean.

    Raises ValueError when ``v`` carries mass on a wavevector that has no
    resolvable derivative (the mean mode and the pure Nyquist corners).
    """
    if not v.is_vector:
        raise ValueError("Biot-Savart needs a vector field")
    ksq = v.grid.k_deriv_sq
    singular = ksq == 0
    scale = max(float(np.max(np.abs(v.coeffs), initial=0.0)), 1.0)
    if np.max(np.abs(v.coeffs[:, singular]), initial=0.0) > atol * scale:
        raise ValueError("vorticity has a nonzero mean; no periodic velocity exists")
    inv = v.grid.inverse_k_deriv_sq
    return SpectralField(v.grid, 1j * _cross_k(v.grid.k_deriv, v.coeffs) * inv, divergence_free=True)


def l2_norm(f: SpectralField) -> float:
    """Continuum L2 norm over the box via Parseval."""
    return float(np.sqrt(VOLUME * np.sum(np.abs(f.coeffs) ** 2)))


def inner(f: SpectralField, g: SpectralField) -> float:
    """Continuum L2 inner product of two real fields."""
    return float(VOLUME * np.real(np.vdot(f.coeffs, g.coeffs)))


def linf_norm(f: SpectralField) -> float:
    """Max over grid points of the pointwise (Euclidean) magnitude."""
    x = inverse_transform(f)
    if f.n_components == 1:
        return float(np.max(np.abs(x)))
    return float(np.sqrt(np.max(np.sum(x**2, axis=0))))


def band_mask(grid: Grid, kmin: float, kmax: float) -> np.ndarray:
    """Wavevectors with kmin <= |k| <= kmax and no Nyquist component."""
    return (grid.k_mag >= kmin) & (grid.k_mag <= kmax) & ~grid.nyquist_mask


def random_field(
    grid: Grid,
    rng: np.random.Generator,
    kmin: float = 2.0,
    kmax: float | None = None,
    components: int = 3,
) -> SpectralField:
    """Band-limited Gaussian field (real, Hermitian) with unit L2 norm.

    The default band is ``2 <= |k| <= n/4``.  Nyquist modes are never excited.
    """
    if kmax is None:
        kmax = grid.n / 4
    noise = rng.standard_normal((components,) + grid.shape)
    c = scipy.fft.fftn(noise, axes=_AXES, norm="forward")
    c = c * band_mask(grid, kmin, kmax)
    f = SpectralField(grid, c)
    norm = l2_norm(f)
    return f * (1.0 / norm) if norm > 0 else f


def random_velocity(grid: Grid, rng: np.random.Generator, kmin: float = 2.0, kmax: float | None = None):
    """Divergence-free band-limited velocity with unit L2 norm."""
    u = leray_project(random_field(grid, rng, kmin, kmax, 3))
    return u * (1.0 / l2_norm(u))


def abc_velocity(grid: Grid, a: float = 1.0, b: float = 1.0, c: float = 1.0) -> SpectralField:
    """Arnold-Beltrami-Childress flow; satisfies curl u = u."""
    x1, x2, x3 = grid.coordinates
    u = np.stack(
        [
            a * np.sin(x3) + c * np.cos(x2),
            b * np.sin(x1) + a * np.cos(x3),
            c * np.sin(x2) + b * np.cos(x1),
        ]
    )
    f = transform(u, grid)
    return f.replace(f.coeffs, divergence_free=True)


class PaddedTransform:
    """Physical-space products with 3/2-rule zero padding.

    Fields are lifted to a (3n/2)^3 grid, multiplied pointwise, and the
    product is truncated back to n^3.  For inputs without Nyquist content
    the retained coefficients are exact (no aliasing).  Nyquist modes are
    dropped on the way in and on the way out.
    """

    def __init__(self, grid: Grid):
        n = grid.n
        m = 3 * n // 2
        self.grid = grid
        self.m = m
        kv = grid.wavenumbers
        keep = np.flatnonzero(kv != -n // 2)
        self._sel = keep
        self._tgt = kv[keep] % m
        self._neg_tgt = (-kv[keep]) % m
        self._zpos = np.arange(n // 2)  # kz = 0 .. n/2-1
        self._zneg = np.arange(n // 2 + 1, n)  # kz = -(n/2-1) .. -1
        self._zneg_src = -kv[self._zneg]

    def to_physical(self, coeffs: np.ndarray) -> np.ndarray:
        """Real samples on the padded grid; leading axes are batch axes."""
        lead = coeffs.shape[:-3]
        m = self.m
        half = np.zeros(lead + (m, m, m // 2 + 1), complex)
        half[(Ellipsis,) + np.ix_(self._tgt, self._tgt, self._zpos)] = coeffs[
            (Ellipsis,) + np.ix_(self._sel, self._sel, self._zpos)
        ]
        return scipy.fft.irfftn(half, s=(m, m, m), axes=_AXES, norm="forward")

    def from_physical(self, samples: np.ndarray) -> np.ndarray:
        """Coefficients on the n^3 grid of real samples on the padded grid."""
        n = self.grid.n
        h = scipy.fft.rfftn(samples, axes=_AXES, norm="forward")
        out = np.zeros(samples.shape[:-3] + (n, n, n), complex)
        out[(Ellipsis,) + np.ix_(self._sel, self._sel, self._zpos)] = h[
            (Ellipsis,) + np.ix_(self._tgt, self._tgt, self._zpos)
        ]
        out[(Ellipsis,) + np.ix_(self._sel, self._sel, self._zneg)] = np.conj(
            h[(Ellipsis,) + np.ix_(self._neg_tgt, self._neg_tgt, self._zneg_src)]
        )
        return out

    def product(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Dealiased coefficients of the pointwise product of a and b."""
        return self.from_physical(self.to_physical(a) * self.to_physical(b))


def dealiased_product(a: SpectralField, b: SpectralField) -> SpectralField:
    """Pointwise product of two scalar fields, or componentwise for equal ranks."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return SpectralField(a.grid, a.grid.padded.product(a.coeffs, b.coeffs))
