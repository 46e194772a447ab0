"""Named synthetic initial conditions and random test fields."""

from __future__ import annotations

import numpy as np

from .fields import FieldError, Grid, RealField, SpectralField, forward_transform, inverse_transform


def single_mode(grid: Grid, k: int, axis: int = 0) -> RealField:
    """cos(k * x_axis), a mean-zero single Fourier mode pair."""
    if not 1 <= k <= grid.max_wavenumber - 1:
        raise FieldError(f"mode {k} not resolved on N={grid.n}")
    values = np.cos(k * grid.x[axis]) * np.ones(grid.shape)
    return RealField(grid, values)


def dyadic_profile(grid: Grid, alpha: float, j_lo: int = 0, j_hi: int | None = None,
                   axis: int = 0) -> RealField:
    """Sum of one axis mode per octave, |xi| = 2^j, amplitude 2^{-j*alpha}.

    Modes at exact powers of two are picked up by exactly one shell, so the
    shell L^inf norms equal the amplitudes and a Holder fit is exact.
    """
    if j_hi is None:
        j_hi = int(np.log2(grid.n // 2)) - 1
    if 2**j_hi > grid.max_wavenumber - 1:
        raise FieldError("top octave not resolved")
    values = np.zeros(grid.shape)
    for j in range(j_lo, j_hi + 1):
        values = values + 2.0 ** (-j * alpha) * np.cos((2**j) * grid.x[axis])
    return RealField(grid, values * np.ones(grid.shape))


def holder_profile(grid: Grid, alpha: float, seed: int, j_lo: int = 1,
                   j_hi: int | None = None) -> RealField:
    """Random-phase field with octave-band L^inf amplitudes 2^{-j*alpha}.

    Band j holds the lattice modes with 2^{j-1} < |xi| <= 2^j; each band is
    rescaled so its own grid maximum is exactly 2^{-j*alpha}.
    """
    if j_hi is None:
        j_hi = int(np.log2(grid.n // 2)) - 1
    rng = np.random.default_rng(seed)
    noise = np.fft.fftn(rng.standard_normal(grid.shape), norm="forward")
    total = np.zeros(grid.shape)
    for j in range(j_lo, j_hi + 1):
        band = (grid.rho > 2.0 ** (j - 1)) & (grid.rho <= 2.0**j)
        if not band.any():
            continue
        piece = np.fft.ifftn(np.where(band, noise, 0.0), norm="forward").real
        peak = np.max(np.abs(piece))
        if peak == 0.0:
            continue
        total = total + piece * (2.0 ** (-j * alpha) / peak)
    return RealField(grid, total)


def gaussian_bump(grid: Grid, width: float) -> RealField:
    """Mean-removed Gaussian bump of the given width, centered at pi*(1,..,1)."""
    if width <= 0:
        raise FieldError("width must be positive")
    r2 = sum((x - np.pi) ** 2 for x in grid.x)
    values = np.exp(-r2 / (2.0 * width**2)) * np.ones(grid.shape)
    values -= values.mean()
    return RealField(grid, values)


def random_band_limited(grid: Grid, seed: int, r_lo: float = 1.0,
                        r_hi: float | None = None) -> SpectralField:
    """Hermitian random field supported on r_lo <= |xi| <= r_hi, mean zero.

    The default r_hi = N/4 keeps the spectrum inside the region where the
    dyadic partition of unity sums to one exactly.
    """
    if r_hi is None:
        r_hi = grid.n / 4.0
    rng = np.random.default_rng(seed)
    noise = np.fft.fftn(rng.standard_normal(grid.shape), norm="forward")
    mask = (grid.rho >= r_lo) & (grid.rho <= r_hi)
    coeffs = np.where(mask, noise, 0.0)
    coeffs[grid.origin] = 0.0
    return SpectralField(grid, coeffs)


def random_shell_field(grid: Grid, decomp, j: int, seed: int) -> SpectralField:
    """Random field projected onto a single Littlewood-Paley shell."""
    f = random_band_limited(grid, seed, r_lo=1.0, r_hi=grid.n / 2.0)
    return decomp.project_shell(f, j)


def aligned_shell_field(grid: Grid, decomp, j: int, seed: int) -> SpectralField:
    """Single-shell field with random magnitudes but a common phase.

    Aligned phases make the field peak coherently, which is what saturates
    the Bernstein embedding constant; random-phase fields sit a factor
    ~sqrt(modes) below it.
    """
    rng = np.random.default_rng(seed)
    mags = np.abs(np.fft.fftn(rng.standard_normal(grid.shape), norm="forward"))
    mags[grid.origin] = 0.0
    return decomp.project_shell(SpectralField(grid, mags.astype(np.complex128)), j)


def build_initial_condition(grid: Grid, spec: dict, seed: int) -> RealField:
    """Dispatch a config-style initial condition description."""
    kind = spec.get("kind")
    if kind == "single_mode":
        return single_mode(grid, int(spec["k"]), axis=int(spec.get("axis", 0)))
    if kind == "holder_profile":
        alpha = spec["alpha"]
        if isinstance(alpha, str):
            num, _, den = alpha.partition("/")
            alpha = float(num) / float(den or "1")
        return holder_profile(grid, float(alpha), seed)
    if kind == "gaussian_bump":
        return gaussian_bump(grid, float(spec["width"]))
    if kind == "dyadic_profile":
        alpha = spec["alpha"]
        if isinstance(alpha, str):
            num, _, den = alpha.partition("/")
            alpha = float(num) / float(den or "1")
        return dyadic_profile(grid, float(alpha))
    if kind == "snapshot":
        from .persist import load_field

        field = load_field(spec["path"])
        if isinstance(field, SpectralField):
            field = inverse_transform(field)
        if field.grid != grid:
            raise FieldError("snapshot grid does not match configured grid")
        return field
    raise FieldError(f"unknown initial condition kind {kind!r}")
