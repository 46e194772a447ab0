import math

import numpy as np
import pytest

from besovlab import synthetic
from besovlab.dyadic import (
    BesovIndex,
    DegenerateFitError,
    DyadicDecomposition,
    ShellProfile,
    Trajectory,
    almost_orthogonality_constant,
    bernstein_derivative_ratio,
    bernstein_embedding_constant,
    besov_norm,
    besov_report,
    chemin_lerner_norm,
    classical_time_besov_norm,
    holder_estimate,
    holder_norm,
    interpolation_slack,
    orthogonality_ratio,
    partition_field_residual,
)
from besovlab.fields import (
    FieldError,
    RealField,
    SpectralField,
    apply_multiplier,
    forward_transform,
    l2_norm_spectral,
    lp_norm,
)


class TestShellProfile:
    def test_support(self):
        prof = ShellProfile()
        assert prof.support_contained()
        assert prof(np.array([1.0]))[0] == 1.0
        assert prof(np.array([2.0]))[0] == 0.0
        assert prof(np.array([0.5]))[0] == 0.0

    def test_partition_of_unity(self):
        prof = ShellProfile()
        r = np.geomspace(1.0, 128.0, 8192)
        assert prof.partition_residual(r) <= 1e-12

    def test_values_in_unit_interval(self):
        prof = ShellProfile()
        vals = prof(np.linspace(0.4, 2.2, 1000))
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)


class TestProjections:
    def test_single_mode_lives_in_one_shell(self, grid64, decomp64):
        # |xi| = 4 sits at psi(4 / 2^j): 1 at j = 2, 0 elsewhere
        f = forward_transform(synthetic.single_mode(grid64, 4))
        scale = l2_norm_spectral(f)
        for j in decomp64.shells():
            norm = l2_norm_spectral(decomp64.project_shell(f, j))
            if j == 2:
                assert norm == pytest.approx(scale, rel=1e-12)
            else:
                assert norm <= 1e-13 * scale

    def test_zero_field(self, grid64, decomp64):
        z = SpectralField(grid64, np.zeros(grid64.shape, dtype=complex))
        assert l2_norm_spectral(decomp64.project_shell(z, 2)) == 0.0

    def test_out_of_range(self, grid64, decomp64):
        f = forward_transform(synthetic.single_mode(grid64, 4))
        with pytest.raises(FieldError):
            decomp64.project_shell(f, decomp64.j_max + 1)

    def test_shell_sum_reconstructs(self, grid64, decomp64):
        f = synthetic.random_band_limited(grid64, 5)
        assert partition_field_residual(f, decomp64) <= 1e-12

    def test_low_pass_endpoints(self, grid64, decomp64):
        f = synthetic.random_band_limited(grid64, 6)
        assert l2_norm_spectral(decomp64.low_pass(f, decomp64.j_min)) == 0.0
        full = decomp64.low_pass(f, decomp64.j_max + 1)
        rel = l2_norm_spectral(SpectralField(grid64, full.coeffs - f.coeffs)) / l2_norm_spectral(f)
        assert rel <= 1e-12

    def test_low_pass_captures_mode_four(self, grid64, decomp64):
        # shells 0..3 fully cover |xi| = 4, so S_4 f = f for f = cos(4 x1)
        f = forward_transform(synthetic.single_mode(grid64, 4))
        s4 = decomp64.low_pass(f, 4)
        rel = l2_norm_spectral(SpectralField(grid64, s4.coeffs - f.coeffs)) / l2_norm_spectral(f)
        assert rel <= 1e-12

    def test_low_pass_range(self, grid64, decomp64):
        f = forward_transform(synthetic.single_mode(grid64, 4))
        with pytest.raises(FieldError):
            decomp64.low_pass(f, decomp64.j_max + 2)


class TestBesov:
    def test_single_shell_value(self, grid64, decomp64):
        g = synthetic.random_shell_field(grid64, decomp64, 2, seed=9)
        a = lp_norm(decomp64.shell_physical(g, 2), 2)
        idx = BesovIndex(s=1.0, p=2.0, q=math.inf)
        value = besov_norm(g, idx, decomp64)
        # leakage into neighbors stays within 20 percent of the direct term
        assert value == pytest.approx(4.0 * a, rel=0.2)
        assert value >= 4.0 * a * (1 - 1e-12)

    def test_zero(self, grid64, decomp64):
        z = SpectralField(grid64, np.zeros(grid64.shape, dtype=complex))
        assert besov_norm(z, BesovIndex(1.0, 2.0, 2.0), decomp64) == 0.0

    def test_single_mode_sup_norm(self, grid64, decomp64):
        # cos(4 x1): only shell 2, scaled by 2^{j s} = 4 at s = 1
        f = forward_transform(synthetic.single_mode(grid64, 4))
        value = besov_norm(f, BesovIndex(1.0, math.inf, math.inf), decomp64)
        assert value == pytest.approx(4.0, rel=1e-12)

    def test_mean_nonzero_rejected(self, grid64):
        decomp = DyadicDecomposition(grid64)
        f = forward_transform(RealField(grid64, 1.0 + synthetic.single_mode(grid64, 4).values))
        with pytest.raises(FieldError):
            besov_norm(f, BesovIndex(1.0, 2.0, 2.0), decomp)

    def test_report_breakdown(self, grid64, decomp64):
        f = forward_transform(synthetic.single_mode(grid64, 4))
        rep = besov_report(f, BesovIndex(1.0, 2.0, 2.0), decomp64)
        assert rep["index"] == {"s": 1.0, "p": "2", "q": "2"}
        assert len(rep["shell_breakdown"]) == decomp64.num_shells

    def test_linf_below_shell_sum(self, grid64, decomp64):
        # the borderline embedding: |f|_inf <= sum_j |Delta_j f|_inf
        f = synthetic.random_band_limited(grid64, 12)
        linf = np.max(np.abs(np.fft.ifftn(f.coeffs, norm="forward").real))
        total = float(np.sum(decomp64.shell_norms(f, math.inf)))
        assert linf <= total * (1 + 1e-12)


def _manual_trajectory(times, j_min, j_max, p, rows):
    rows = np.asarray(rows, dtype=float)
    return Trajectory(
        times=np.asarray(times, dtype=float),
        j_min=j_min,
        j_max=j_max,
        p_list=(p,),
        shell_norms={float(p): rows},
        field_l2=np.zeros(len(times)),
        field_linf=np.zeros(len(times)),
    )


class TestCheminLerner:
    def test_constant_single_shell(self):
        # constant A on shell 2 over |I| = 1: tilde-norm = |I|^{1/2} 2^{2s} A
        a = 0.7
        rows = np.zeros((5, 5))
        rows[:, 2] = a
        traj = _manual_trajectory(np.linspace(0.0, 1.0, 5), 0, 4, 2.0, rows)
        value = chemin_lerner_norm(traj, 2.0, BesovIndex(1.0, 2.0, math.inf))
        assert value == pytest.approx(4.0 * a, rel=1e-12)

    def test_zero_trajectory(self):
        traj = _manual_trajectory([0.0, 1.0], 0, 4, 2.0, np.zeros((2, 5)))
        assert chemin_lerner_norm(traj, 2.0, BesovIndex(1.0, 2.0, 2.0)) == 0.0

    def test_q_equals_r_matches_classical_order(self, rng):
        rows = rng.uniform(0.1, 2.0, size=(9, 5))
        traj = _manual_trajectory(np.linspace(0.0, 0.8, 9), 0, 4, 2.0, rows)
        idx = BesovIndex(1.0, 2.0, 2.0)
        tilde = chemin_lerner_norm(traj, 2.0, idx)
        classical = classical_time_besov_norm(traj, 2.0, idx)
        assert tilde == pytest.approx(classical, rel=1e-10)

    def test_mismatched_p(self):
        traj = _manual_trajectory([0.0, 1.0], 0, 4, 2.0, np.zeros((2, 5)))
        with pytest.raises(FieldError):
            chemin_lerner_norm(traj, 2.0, BesovIndex(1.0, 4.0, 2.0))

    def test_r_infinity_takes_sup(self):
        rows = np.zeros((3, 5))
        rows[:, 2] = [0.5, 2.0, 1.0]
        traj = _manual_trajectory([0.0, 0.5, 1.0], 0, 4, 2.0, rows)
        value = chemin_lerner_norm(traj, math.inf, BesovIndex(0.0, 2.0, math.inf))
        assert value == pytest.approx(2.0)


class TestHolder:
    def test_exact_dyadic_profile(self, grid64, decomp64):
        f = forward_transform(synthetic.dyadic_profile(grid64, 1.0 / 3.0))
        alpha, residual = holder_estimate(f, decomp64)
        assert alpha == pytest.approx(1.0 / 3.0, abs=1e-6)
        assert residual <= 1e-6

    def test_single_mode_degenerate(self, grid64, decomp64):
        f = forward_transform(synthetic.single_mode(grid64, 4))
        with pytest.raises(DegenerateFitError):
            holder_estimate(f, decomp64)

    def test_heat_smoothing_increases_alpha(self, grid64, decomp64):
        f = forward_transform(synthetic.dyadic_profile(grid64, 0.25))
        estimates = []
        for t in (0.0, 0.01, 0.02, 0.03):
            smoothed = apply_multiplier(f, lambda xi, rho, t=t: np.exp(-t * rho**2) + 0j)
            estimates.append(holder_estimate(smoothed, decomp64)[0])
        assert all(b > a for a, b in zip(estimates, estimates[1:]))

    def test_holder_norm_of_profile(self, grid64, decomp64):
        # dyadic profile with exponent a has sup_j 2^{j a} |Delta_j|_inf = 1
        f = forward_transform(synthetic.dyadic_profile(grid64, 0.25))
        value = holder_norm(f, 0.25, decomp64)
        linf = lp_norm(synthetic.dyadic_profile(grid64, 0.25), math.inf)
        assert value == pytest.approx(max(1.0, linf), rel=1e-10)


class TestShellInvariants:
    def test_orthogonality(self, grid64, decomp64):
        f = synthetic.random_band_limited(grid64, 3)
        for j in decomp64.shells():
            for k in decomp64.shells():
                if abs(j - k) >= 2:
                    assert orthogonality_ratio(f, decomp64, j, k) <= 1e-12

    def test_almost_orthogonality(self, grid64, decomp64):
        for seed in range(4):
            f = synthetic.random_band_limited(grid64, 40 + seed)
            assert almost_orthogonality_constant(f, decomp64) <= 2.0

    def test_bernstein_derivative(self, grid64, decomp64):
        for j in decomp64.shells():
            g = synthetic.random_shell_field(grid64, decomp64, j, seed=60 + j)
            for p in (2.0, math.inf):
                assert bernstein_derivative_ratio(g, decomp64, j, p, oversample=True) <= 1.0

    def test_bernstein_embedding_stability(self, grid64, decomp64):
        consts = []
        for j in decomp64.shells():
            g = synthetic.aligned_shell_field(grid64, decomp64, j, seed=80 + j)
            consts.append(bernstein_embedding_constant(g, decomp64, j, 2.0, math.inf))
        assert max(consts) / min(consts) <= 4.0

    def test_interpolation(self, grid64, decomp64):
        for j in decomp64.shells():
            g = decomp64.shell_physical(synthetic.random_band_limited(grid64, 90), j)
            assert interpolation_slack(g, 2.0, 5.0) >= -1e-12
