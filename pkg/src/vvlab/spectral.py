"""Periodic grid, Fourier transforms, differential operators and Biot-Savart.

Fields are stored as full (non-real-FFT) coefficient arrays normalised so that
``f(x) = sum_k F[k] exp(i k.x)``; a constant ``c`` therefore has ``F[0,0] = c``
and ``cos(x)`` has ``1/2`` at ``k = (+-1, 0)``.  Axis 0 is ``x``, axis 1 is ``y``.

The Nyquist row/column has no Hermitian partner, so first-derivative
multipliers set its wavenumber to zero.  Radial multipliers (Laplacian, heat
kernel, Littlewood-Paley tables) use the true wavenumber everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from scipy.optimize import minimize

from .errors import GridMismatch, NonZeroMean, NotDivergenceFree

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Grid:
    n_points: int = 64
    box_length: float = TWO_PI

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 8, got {n!r}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_points, self.n_points)

    @property
    def scale(self) -> float:
        """Physical wavenumber of integer mode 1."""
        return TWO_PI / self.box_length

    @cached_property
    def index(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer wavenumbers (i1, i2) on the FFT lattice."""
        m = np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).round().astype(int)
        return np.meshgrid(m, m, indexing="ij")

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        i1, i2 = self.index
        return i1 * self.scale, i2 * self.scale

    @cached_property
    def derivative_wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        k1, k2 = self.wavenumbers
        i1, i2 = self.index
        nyq = self.n_points // 2
        return np.where(np.abs(i1) == nyq, 0.0, k1), np.where(np.abs(i2) == nyq, 0.0, k2)

    @cached_property
    def k_squared(self) -> np.ndarray:
        k1, k2 = self.wavenumbers
        return k1**2 + k2**2

    @cached_property
    def k_norm(self) -> np.ndarray:
        return np.sqrt(self.k_squared)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        i1, i2 = self.index
        return np.maximum(np.abs(i1), np.abs(i2)) <= self.n_points / 3

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.n_points) * (self.box_length / self.n_points)
        return np.meshgrid(x, x, indexing="ij")

    @property
    def max_frequency(self) -> float:
        return float(self.k_norm.max())

    @property
    def min_frequency(self) -> float:
        return self.scale


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise GridMismatch(f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}")

    # arithmetic ------------------------------------------------------------
    def _check(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise GridMismatch(f"{self.grid} vs {other.grid}")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.real and other.real)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.real)

    def __mul__(self, c):
        if isinstance(c, SpectralField):
            return multiply(self, c)
        real = self.real and np.isreal(c)
        return SpectralField(self.grid, self.coeffs * c, bool(real))

    __rmul__ = __mul__

    @property
    def mean(self) -> complex:
        return self.coeffs[0, 0]

    def values(self) -> np.ndarray:
        return inverse_transform(self)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.real)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        c = self.coeffs
        # F[-k] sits at index (-i) mod n
        flipped = np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1))
        scale = max(np.abs(c).max(), 1e-300)
        return bool(np.abs(c - np.conj(flipped)).max() <= tol * scale)


@dataclass(frozen=True, eq=False)
class VectorField:
    u1: SpectralField
    u2: SpectralField

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise GridMismatch("vector components live on different grids")

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @property
    def components(self) -> tuple[SpectralField, SpectralField]:
        return (self.u1, self.u2)

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other):
        return VectorField(self.u1 + other.u1, self.u2 + other.u2)

    def __sub__(self, other):
        return VectorField(self.u1 - other.u1, self.u2 - other.u2)

    def __neg__(self):
        return VectorField(-self.u1, -self.u2)

    def __mul__(self, c):
        return VectorField(self.u1 * c, self.u2 * c)

    __rmul__ = __mul__

    def map(self, fn) -> "VectorField":
        return VectorField(fn(self.u1), fn(self.u2))


Field = Union[SpectralField, VectorField]


# transforms -----------------------------------------------------------------

def forward_transform(samples: np.ndarray, grid: Grid | None = None) -> SpectralField:
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[0] != samples.shape[1]:
        raise ValueError(f"expected square 2D samples, got shape {samples.shape}")
    if grid is None:
        grid = Grid(samples.shape[0])
    elif samples.shape != grid.shape:
        raise GridMismatch(f"samples {samples.shape} vs grid {grid.shape}")
    real = not np.iscomplexobj(samples)
    coeffs = np.fft.fft2(samples) / samples.size
    return SpectralField(grid, coeffs, real)


def inverse_transform(F: SpectralField) -> np.ndarray:
    out = np.fft.ifft2(F.coeffs) * F.coeffs.size
    return out.real.copy() if F.real else out


def from_function(grid: Grid, fn) -> SpectralField:
    """Sample ``fn(x, y)`` on the collocation grid and transform."""
    x, y = grid.coordinates
    return forward_transform(np.asarray(fn(x, y), dtype=float), grid)


def constant(grid: Grid, c: float) -> SpectralField:
    coeffs = np.zeros(grid.shape, dtype=complex)
    coeffs[0, 0] = c
    return SpectralField(grid, coeffs)


def zeros(grid: Grid) -> SpectralField:
    return SpectralField(grid, np.zeros(grid.shape, dtype=complex))


def apply_multiplier(F: SpectralField, m: np.ndarray) -> SpectralField:
    return SpectralField(F.grid, F.coeffs * m, F.real)


# differential operators -----------------------------------------------------

def partial(F: SpectralField, axis: int) -> SpectralField:
    k = F.grid.derivative_wavenumbers[axis]
    return SpectralField(F.grid, 1j * k * F.coeffs, F.real)


def gradient(F: SpectralField) -> VectorField:
    return VectorField(partial(F, 0), partial(F, 1))


def perp_gradient(F: SpectralField) -> VectorField:
    """(-d_y F, d_x F)."""
    return VectorField(-partial(F, 1), partial(F, 0))


def divergence(V: VectorField) -> SpectralField:
    return partial(V.u1, 0) + partial(V.u2, 1)


def curl(V: VectorField) -> SpectralField:
    return partial(V.u2, 0) - partial(V.u1, 1)


def laplacian(F: SpectralField) -> SpectralField:
    return SpectralField(F.grid, -F.grid.k_squared * F.coeffs, F.real)


def _require_mean_free(F: SpectralField):
    scale = sup_norm(F)
    if abs(F.mean) > 1e-12 * scale:
        raise NonZeroMean(f"field mean {F.mean!r} exceeds 1e-12 * sup|F| = {1e-12 * scale:.3e}")


def inv_laplacian(F: SpectralField) -> SpectralField:
    _require_mean_free(F)
    k2 = F.grid.k_squared
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(k2 > 0, -F.coeffs / np.where(k2 > 0, k2, 1.0), 0.0)
    return SpectralField(F.grid, out, F.real)


def biot_savart(omega: SpectralField) -> VectorField:
    """Divergence-free velocity with vorticity ``omega``: v = perp_grad(inv_lap(omega))."""
    return perp_gradient(inv_laplacian(omega))


def helmholtz_project(V: VectorField) -> VectorField:
    """Leray projection, symbol delta_ij - k_i k_j / |k|^2 (identity on the mean)."""
    k1, k2 = V.grid.derivative_wavenumbers
    ksq = k1**2 + k2**2
    safe = np.where(ksq > 0, ksq, 1.0)
    kdotu = (k1 * V.u1.coeffs + k2 * V.u2.coeffs) / safe
    kdotu = np.where(ksq > 0, kdotu, 0.0)
    return VectorField(V.u1.with_coeffs(V.u1.coeffs - k1 * kdotu),
                       V.u2.with_coeffs(V.u2.coeffs - k2 * kdotu))


def check_divergence_free(V: VectorField, tol: float = 1e-10) -> None:
    k1, k2 = V.grid.derivative_wavenumbers
    kdotu = np.abs(k1 * V.u1.coeffs + k2 * V.u2.coeffs)
    kmag = np.sqrt(k1**2 + k2**2) * np.sqrt(np.abs(V.u1.coeffs) ** 2 + np.abs(V.u2.coeffs) ** 2)
    scale = kmag.max()
    if scale > 0 and kdotu.max() > tol * scale:
        raise NotDivergenceFree(f"max |k.u(k)| = {kdotu.max():.3e} vs scale {scale:.3e}")


# dealiasing, products, norms ------------------------------------------------

def dealias(F: SpectralField) -> SpectralField:
    return SpectralField(F.grid, np.where(F.grid.dealias_mask, F.coeffs, 0.0), F.real)


def multiply(f: SpectralField, g: SpectralField, dealiased: bool = True) -> SpectralField:
    """Pseudo-spectral product; 2/3-rule truncated unless ``dealiased=False``."""
    if f.grid != g.grid:
        raise GridMismatch(f"{f.grid} vs {g.grid}")
    prod = forward_transform(inverse_transform(f) * inverse_transform(g), f.grid)
    return dealias(prod) if dealiased else prod


def dot(v: VectorField, w: VectorField) -> SpectralField:
    return multiply(v.u1, w.u1) + multiply(v.u2, w.u2)


def advect(v: VectorField, F: SpectralField) -> SpectralField:
    """Dealiased ``v . grad F``."""
    return dot(v, gradient(F))


def sup_norm(F: Field) -> float:
    """Max absolute value on the collocation grid; componentwise max for vectors."""
    if isinstance(F, VectorField):
        return max(sup_norm(F.u1), sup_norm(F.u2))
    return float(np.abs(inverse_transform(F)).max())


def restrict(F: SpectralField, grid: Grid) -> SpectralField:
    """Spectral truncation or zero-padding onto ``grid`` (same box length)."""
    if F.grid.box_length != grid.box_length:
        raise GridMismatch("restriction requires equal box lengths")
    n_src, n_dst = F.grid.n_points, grid.n_points
    i1, i2 = grid.index
    keep = (np.abs(i1) < min(n_src, n_dst) // 2) & (np.abs(i2) < min(n_src, n_dst) // 2)
    out = np.zeros(grid.shape, dtype=complex)
    out[keep] = F.coeffs[i1[keep] % n_src, i2[keep] % n_src]
    return SpectralField(grid, out, F.real)


def peak_norm(F: SpectralField, candidates: int = 8) -> float:
    """Off-grid maximum of ``|f|`` for a real field.

    Starts from the largest grid samples and refines each by maximising the
    trigonometric polynomial itself; never smaller than :func:`sup_norm`.
    """
    values = inverse_transform(F)
    grid_max = float(np.abs(values).max())
    if grid_max == 0.0:
        return 0.0
    nz = np.abs(F.coeffs) > 0
    c = F.coeffs[nz]
    k1, k2 = (k[nz] for k in F.grid.wavenumbers)

    def negative_square(p):
        phase = np.exp(1j * (k1 * p[0] + k2 * p[1]))
        f = (c * phase).sum().real
        fx = (1j * k1 * c * phase).sum().real
        fy = (1j * k2 * c * phase).sum().real
        return -f * f, np.array([-2 * f * fx, -2 * f * fy])

    x, y = F.grid.coordinates
    flat = np.argsort(np.abs(values), axis=None)[::-1][:candidates]
    best = grid_max
    for idx in flat:
        start = np.array([x.flat[idx], y.flat[idx]])
        res = minimize(negative_square, start, jac=True, method="BFGS", options={"gtol": 1e-14})
        best = max(best, float(np.sqrt(max(-res.fun, 0.0))))
    return best
