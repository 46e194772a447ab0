"""Periodic scalar and vector fields with spectral representation.

Everything lives on the 2*pi-periodic torus in d = 2 or 3 dimensions,
sampled on a uniform N^d grid with N a power of two. A field is either a
table of real samples (RealField) or a table of complex Fourier
coefficients indexed by integer wavevectors in FFT layout (SpectralField).

The transforms use the norm="forward" convention so that coeff(0) equals
the field mean; "zero mean" is then a single testable coefficient. L^p
norms use the unnormalized Lebesgue measure on [0, 2*pi)^d.

Products of two fields are formed in physical space on a 3N/2 zero-padded
grid, which makes them exact convolutions for the retained modes whenever
both factors are band-limited to |xi_i| <= N/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MIN_POINTS = 16


class FieldError(ValueError):
    """Invalid field data or incompatible operands."""


class SymbolError(ValueError):
    """Fourier multiplier symbol is not finite on the resolved modes."""


class Grid:
    """Uniform N^d sampling of the 2*pi-periodic torus.

    Precomputes integer wavevector component arrays (broadcastable along
    each axis), |xi| and |xi|^2 tables, and physical coordinates. Instances
    are immutable after construction; equality is by (d, N).
    """

    def __init__(self, d: int, n: int):
        if d not in (2, 3):
            raise FieldError(f"dimension must be 2 or 3, got {d}")
        if n < MIN_POINTS or n & (n - 1):
            raise FieldError(f"N must be a power of two >= {MIN_POINTS}, got {n}")
        self.d = d
        self.n = n
        self.shape = (n,) * d
        self.dx = 2.0 * math.pi / n
        self.cell_volume = self.dx**d
        self.origin = (0,) * d

        k1d = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
        shapes = [tuple(n if ax == i else 1 for ax in range(d)) for i in range(d)]
        self.xi = tuple(k1d.reshape(shapes[i]) for i in range(d))
        self.xi_float = tuple(x.astype(np.float64) for x in self.xi)
        self.rho2 = sum(x * x for x in self.xi_float)  # full (n,)*d array
        self.rho = np.sqrt(self.rho2)
        self.rho_safe = self.rho.copy()
        self.rho_safe[self.origin] = 1.0  # avoids 0-division; origin fixed by callers
        x1d = np.arange(n) * self.dx
        self.x = tuple(x1d.reshape(shapes[i]) for i in range(d))

    @property
    def max_wavenumber(self) -> int:
        return self.n // 2

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and (self.d, self.n) == (other.d, other.n)

    def __hash__(self) -> int:
        return hash((self.d, self.n))

    def __repr__(self) -> str:
        return f"Grid(d={self.d}, n={self.n})"


@dataclass
class RealField:
    """Real sample table of a periodic scalar."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise FieldError(f"sample table shape {self.values.shape} != {self.grid.shape}")
        if not np.isfinite(self.values).all():
            raise FieldError("sample table contains non-finite values")

    def copy(self) -> "RealField":
        return RealField(self.grid, self.values.copy())


@dataclass
class SpectralField:
    """Complex Fourier coefficient table in FFT layout, coeff(0) = mean."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != self.grid.shape:
            raise FieldError(f"coefficient table shape {self.coeffs.shape} != {self.grid.shape}")
        if not np.isfinite(self.coeffs).all():
            raise FieldError("coefficient table contains non-finite values")

    @property
    def mean(self) -> float:
        return float(self.coeffs[self.grid.origin].real)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())


@dataclass
class VectorField:
    """d spectral components of a periodic vector field (e.g. a velocity)."""

    grid: Grid
    components: tuple

    def __post_init__(self):
        self.components = tuple(self.components)
        if len(self.components) != self.grid.d:
            raise FieldError(f"expected {self.grid.d} components, got {len(self.components)}")
        for c in self.components:
            if c.grid != self.grid:
                raise FieldError("component grids differ")

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i):
        return self.components[i]


def forward_transform(f: RealField) -> SpectralField:
    return SpectralField(f.grid, np.fft.fftn(f.values, norm="forward"))


def inverse_transform(f: SpectralField) -> RealField:
    v = np.fft.ifftn(f.coeffs, norm="forward")
    scale = max(1.0, float(np.max(np.abs(v.real))))
    if float(np.max(np.abs(v.imag))) > 1e-8 * scale:
        raise FieldError("coefficients are not Hermitian-symmetric: inverse is not real")
    return RealField(f.grid, np.ascontiguousarray(v.real))


def hermitian_symmetry_error(f: SpectralField) -> float:
    """max |coeff(-xi) - conj(coeff(xi))| over the table."""
    c = f.coeffs
    rev = c[tuple(slice(None, None, -1) for _ in range(c.ndim))]
    for ax in range(c.ndim):
        rev = np.roll(rev, 1, axis=ax)
    return float(np.max(np.abs(c - np.conj(rev))))


def require_mean_zero(f: SpectralField, tol: float = 1e-12) -> None:
    scale = max(1.0, float(np.max(np.abs(f.coeffs))))
    if abs(f.coeffs[f.grid.origin]) > tol * scale:
        raise FieldError(f"field has nonzero mean {f.coeffs[f.grid.origin]:.3e}")


# ---------------------------------------------------------------------------
# Fourier multipliers

def evaluate_symbol(grid: Grid, symbol) -> np.ndarray:
    """Evaluate a symbol callable (xi_tuple, rho) -> table on the grid.

    A non-finite value at the origin is replaced by 0 (the convention for
    homogeneous symbols); a non-finite value at any resolved nonzero
    wavevector is an error.
    """
    table = np.asarray(symbol(grid.xi_float, grid.rho), dtype=np.complex128)
    table = np.ascontiguousarray(np.broadcast_to(table, grid.shape)).copy()
    if not np.isfinite(table[grid.origin]):
        table[grid.origin] = 0.0
    if not np.isfinite(table).all():
        raise SymbolError("symbol is non-finite at a resolved nonzero wavevector")
    return table


def apply_multiplier(f: SpectralField, symbol) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * evaluate_symbol(f.grid, symbol))


def derivative_symbol(axis: int):
    return lambda xi, rho: 1j * xi[axis]


def fractional_laplacian_symbol(beta: float):
    # rho**beta is 0 at the origin for beta > 0
    return lambda xi, rho: rho**beta + 0j


def partial_derivative(f: SpectralField, axis: int) -> SpectralField:
    return SpectralField(f.grid, 1j * f.grid.xi_float[axis] * f.coeffs)


def gradient(f: SpectralField) -> VectorField:
    return VectorField(f.grid, tuple(partial_derivative(f, c) for c in range(f.grid.d)))


# ---------------------------------------------------------------------------
# Norms

def lp_norm(f: RealField, p, *, oversample: bool = False) -> float:
    """L^p norm over [0, 2*pi)^d by the rectangle rule; p = inf is a grid max.

    With oversample=True the p = inf norm is taken on a 2x zero-padded grid,
    which band-limited fields need to attain their true maximum.
    """
    p = float(p)
    if not p >= 1.0:
        raise FieldError(f"p must lie in [1, inf], got {p}")
    if math.isinf(p):
        values = _oversampled_values(f) if oversample else f.values
        return float(np.max(np.abs(values)))
    return float((np.sum(np.abs(f.values) ** p) * f.grid.cell_volume) ** (1.0 / p))


def _oversampled_values(f: RealField, factor: int = 2) -> np.ndarray:
    c = np.fft.fftn(f.values, norm="forward")
    padded = pad_spectrum(c, factor * f.grid.n)
    return np.fft.ifftn(padded, norm="forward").real


def l2_norm_spectral(f: SpectralField) -> float:
    """L^2 norm via Plancherel: (2*pi)^{d/2} times the l^2 norm of coeffs."""
    return (2.0 * math.pi) ** (f.grid.d / 2.0) * float(np.linalg.norm(f.coeffs))


def hm_seminorm(f: SpectralField, m: int) -> float:
    """Homogeneous H^m seminorm, |xi|^m weights in Plancherel."""
    w = f.grid.rho ** m
    return (2.0 * math.pi) ** (f.grid.d / 2.0) * float(np.linalg.norm(w * f.coeffs))


# ---------------------------------------------------------------------------
# Zero padding, dealiasing, products

def pad_spectrum(coeffs: np.ndarray, m: int) -> np.ndarray:
    """Embed an n^d coefficient table in an m^d table (m >= n), FFT layout."""
    n = coeffs.shape[0]
    if m == n:
        return coeffs.copy()
    if m < n:
        raise FieldError("pad target smaller than source")
    d = coeffs.ndim
    lo = (m - n) // 2
    out = np.zeros((m,) * d, dtype=np.complex128)
    out[tuple(slice(lo, lo + n) for _ in range(d))] = np.fft.fftshift(coeffs)
    return np.fft.ifftshift(out)


def truncate_spectrum(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Keep the centered n^d block of an m^d coefficient table."""
    m = coeffs.shape[0]
    if n == m:
        return coeffs.copy()
    if n > m:
        raise FieldError("truncation target larger than source")
    d = coeffs.ndim
    lo = (m - n) // 2
    block = np.fft.fftshift(coeffs)[tuple(slice(lo, lo + n) for _ in range(d))]
    return np.fft.ifftshift(block)


def dealias_mask(grid: Grid) -> np.ndarray:
    """2/3-rule mask: keep modes with |xi_i| <= N//3 on every axis."""
    cutoff = grid.n // 3
    keep = np.ones(grid.shape, dtype=bool)
    for x in grid.xi:
        keep &= np.abs(x) <= cutoff
    return keep


def apply_dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * dealias_mask(f.grid))


def multiply_coeffs(grid: Grid, ca: np.ndarray, cb: np.ndarray, pad_factor: float = 1.5) -> np.ndarray:
    """Coefficients of the pointwise product, via a zero-padded grid."""
    m = int(round(grid.n * pad_factor))
    a = np.fft.ifftn(pad_spectrum(ca, m), norm="forward").real
    b = np.fft.ifftn(pad_spectrum(cb, m), norm="forward").real
    return truncate_spectrum(np.fft.fftn(a * b, norm="forward"), grid.n)


def multiply_fields(a: SpectralField, b: SpectralField) -> SpectralField:
    if a.grid != b.grid:
        raise FieldError("operands live on different grids")
    return SpectralField(a.grid, multiply_coeffs(a.grid, a.coeffs, b.coeffs))


def advection_term(u: VectorField, theta: SpectralField) -> SpectralField:
    """Spectrum of u . grad(theta), dealiased products."""
    grid = theta.grid
    if u.grid != grid:
        raise FieldError("velocity and scalar live on different grids")
    acc = np.zeros(grid.shape, dtype=np.complex128)
    for c in range(grid.d):
        dtheta = 1j * grid.xi_float[c] * theta.coeffs
        acc += multiply_coeffs(grid, u[c].coeffs, dtheta)
    return SpectralField(grid, acc)
