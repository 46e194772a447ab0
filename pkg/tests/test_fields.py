import math

import numpy as np
import pytest

from besovlab import synthetic
from besovlab.fields import (
    FieldError,
    Grid,
    RealField,
    SpectralField,
    SymbolError,
    advection_term,
    apply_dealias,
    apply_multiplier,
    dealias_mask,
    derivative_symbol,
    forward_transform,
    fractional_laplacian_symbol,
    hermitian_symmetry_error,
    inverse_transform,
    l2_norm_spectral,
    lp_norm,
    multiply_fields,
    pad_spectrum,
    truncate_spectrum,
)


class TestGrid:
    def test_valid(self):
        g = Grid(2, 64)
        assert g.shape == (64, 64)
        assert g.max_wavenumber == 32

    @pytest.mark.parametrize("d,n", [(1, 64), (4, 64), (2, 48), (2, 8), (3, 17)])
    def test_invalid(self, d, n):
        with pytest.raises(FieldError):
            Grid(d, n)

    def test_wavevectors_integer_layout(self):
        g = Grid(2, 64)
        assert g.xi[0][0, 0] == 0
        assert g.xi[0][1, 0] == 1
        assert g.xi[0][-1, 0] == -1
        assert g.xi[0][32, 0] == -32


class TestTransforms:
    def test_constant_field(self, grid64):
        f = RealField(grid64, np.ones(grid64.shape))
        F = forward_transform(f)
        assert F.coeffs[0, 0] == pytest.approx(1.0)
        rest = np.abs(F.coeffs).ravel()
        assert np.sort(rest)[-2] < 1e-14

    def test_single_mode_coefficients(self, grid64):
        F = forward_transform(synthetic.single_mode(grid64, 4))
        assert F.coeffs[4, 0] == pytest.approx(0.5, abs=1e-14)
        assert F.coeffs[-4, 0] == pytest.approx(0.5, abs=1e-14)
        others = F.coeffs.copy()
        others[4, 0] = others[-4, 0] = 0.0
        assert np.max(np.abs(others)) < 1e-14

    def test_round_trip(self, grid64, rng):
        f = RealField(grid64, rng.standard_normal(grid64.shape))
        back = inverse_transform(forward_transform(f))
        rel = np.max(np.abs(back.values - f.values)) / np.max(np.abs(f.values))
        assert rel <= 1e-12

    def test_mean_is_coeff0(self, grid64, rng):
        f = RealField(grid64, rng.standard_normal(grid64.shape))
        assert forward_transform(f).mean == pytest.approx(f.values.mean(), abs=1e-15)

    def test_nonfinite_rejected(self, grid64):
        bad = np.ones(grid64.shape)
        bad[3, 5] = np.nan
        with pytest.raises(FieldError):
            RealField(grid64, bad)


class TestMultipliers:
    def test_identity(self, grid64, rng):
        F = forward_transform(RealField(grid64, rng.standard_normal(grid64.shape)))
        out = apply_multiplier(F, lambda xi, rho: np.ones_like(rho) + 0j)
        assert np.array_equal(out.coeffs, F.coeffs)

    def test_derivative_of_sine(self, grid64):
        f = RealField(grid64, np.sin(grid64.x[0]) * np.ones(grid64.shape))
        out = inverse_transform(apply_multiplier(forward_transform(f), derivative_symbol(0)))
        expected = np.cos(grid64.x[0]) * np.ones(grid64.shape)
        assert np.max(np.abs(out.values - expected)) < 1e-12

    def test_fractional_laplacian_eigenvalue(self, grid64):
        # |xi|^{3/2} on the |xi| = 4 mode multiplies by 4^{3/2} = 8
        F = forward_transform(synthetic.single_mode(grid64, 4))
        out = inverse_transform(apply_multiplier(F, fractional_laplacian_symbol(1.5)))
        expected = 8.0 * np.cos(4 * grid64.x[0]) * np.ones(grid64.shape)
        assert np.max(np.abs(out.values - expected)) < 1e-11

    def test_linearity(self, grid64, rng):
        f = forward_transform(RealField(grid64, rng.standard_normal(grid64.shape)))
        g = forward_transform(RealField(grid64, rng.standard_normal(grid64.shape)))
        sym = fractional_laplacian_symbol(1.5)
        combo = SpectralField(grid64, 2.0 * f.coeffs - 3.0 * g.coeffs)
        lhs = apply_multiplier(combo, sym).coeffs
        rhs = 2.0 * apply_multiplier(f, sym).coeffs - 3.0 * apply_multiplier(g, sym).coeffs
        scale = np.max(np.abs(lhs))
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale

    def test_symbol_error_off_origin(self, grid64, rng):
        F = forward_transform(RealField(grid64, rng.standard_normal(grid64.shape)))

        def bad(xi, rho):
            out = np.ones_like(rho)
            out[1, 0] = np.inf
            return out

        with pytest.raises(SymbolError):
            apply_multiplier(F, bad)

    def test_homogeneous_symbol_origin_convention(self, grid64, rng):
        F = forward_transform(RealField(grid64, rng.standard_normal(grid64.shape)))
        with np.errstate(divide="ignore"):
            out = apply_multiplier(F, lambda xi, rho: rho**-1.0)
        assert out.coeffs[0, 0] == 0.0


class TestNorms:
    def test_l2_closed_form(self, grid64):
        # integral of sin^2 over [0, 2pi)^2 is 2 pi^2
        f = RealField(grid64, np.sin(grid64.x[0]) * np.ones(grid64.shape))
        assert lp_norm(f, 2) == pytest.approx(math.pi * math.sqrt(2.0), rel=1e-12)

    def test_zero_field(self, grid64):
        z = RealField(grid64, np.zeros(grid64.shape))
        for p in (1, 2, 4, math.inf):
            assert lp_norm(z, p) == 0.0

    def test_linf_cosine(self, grid64):
        f = synthetic.single_mode(grid64, 4)
        assert lp_norm(f, math.inf) == pytest.approx(1.0, abs=1e-13)
        assert lp_norm(f, math.inf, oversample=True) == pytest.approx(1.0, abs=1e-13)

    def test_invalid_p(self, grid64):
        f = synthetic.single_mode(grid64, 4)
        with pytest.raises(FieldError):
            lp_norm(f, 0.5)

    def test_parseval(self, grid64, rng):
        f = RealField(grid64, rng.standard_normal(grid64.shape))
        quad = lp_norm(f, 2)
        plancherel = l2_norm_spectral(forward_transform(f))
        assert abs(quad - plancherel) <= 1e-10 * quad


class TestHermitianSymmetry:
    def test_real_field_is_hermitian(self, grid64, rng):
        F = forward_transform(RealField(grid64, rng.standard_normal(grid64.shape)))
        assert hermitian_symmetry_error(F) < 1e-14

    def test_real_symbol_preserves_symmetry(self, grid64, rng):
        F = forward_transform(RealField(grid64, rng.standard_normal(grid64.shape)))
        out = apply_multiplier(F, fractional_laplacian_symbol(1.5))
        assert hermitian_symmetry_error(out) < 1e-12
        inverse_transform(out)  # must not raise

    def test_broken_symmetry_rejected(self, grid64):
        c = np.zeros(grid64.shape, dtype=complex)
        c[1, 0] = 1.0  # no conjugate partner
        with pytest.raises(FieldError):
            inverse_transform(SpectralField(grid64, c))


class TestPaddingProducts:
    def test_pad_truncate_round_trip(self, grid64, rng):
        c = forward_transform(RealField(grid64, rng.standard_normal(grid64.shape))).coeffs
        assert np.array_equal(truncate_spectrum(pad_spectrum(c, 96), 64), c)

    def test_pad_preserves_function_values(self, grid64):
        f = synthetic.single_mode(grid64, 4)
        padded = pad_spectrum(forward_transform(f).coeffs, 128)
        values = np.fft.ifftn(padded, norm="forward").real
        big = Grid(2, 128)
        expected = np.cos(4 * big.x[0]) * np.ones(big.shape)
        assert np.max(np.abs(values - expected)) < 1e-12

    def test_product_of_cosines(self, grid64):
        # cos(3x) cos(5x) = (cos 8x + cos 2x)/2: exact convolution
        a = forward_transform(synthetic.single_mode(grid64, 3))
        b = forward_transform(synthetic.single_mode(grid64, 5))
        prod = multiply_fields(a, b)
        expected = 0.5 * (np.cos(8 * grid64.x[0]) + np.cos(2 * grid64.x[0])) * np.ones(grid64.shape)
        assert np.max(np.abs(inverse_transform(prod).values - expected)) < 1e-13

    def test_advection_of_single_mode_vanishes(self, grid64):
        # divergence-free u built from one mode pair is orthogonal to grad theta
        from besovlab import drift

        theta = apply_dealias(forward_transform(synthetic.single_mode(grid64, 4)))
        u = drift.velocity_from_theta(theta, drift.SQG())
        adv = advection_term(u, theta)
        assert np.max(np.abs(adv.coeffs)) < 1e-14


class TestDealias:
    def test_mask_cutoff(self, grid64):
        mask = dealias_mask(grid64)
        assert mask[21, 0] and mask[0, 21]
        assert not mask[22, 0] and not mask[0, 22] and not mask[32, 32]

    def test_apply(self, grid64, rng):
        F = forward_transform(RealField(grid64, rng.standard_normal(grid64.shape)))
        out = apply_dealias(F)
        assert np.max(np.abs(out.coeffs[22, :])) == 0.0
