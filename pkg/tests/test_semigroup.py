import numpy as np
import pytest

from aniso_lp.norms import apply_phase, besov_norm
from aniso_lp.randfields import random_field, random_solenoidal
from aniso_lp.semigroup import (EpsParams, damping_bound_check, duhamel,
                                heat_apply, smoothing_check_41,
                                smoothing_check_42)
from aniso_lp.spectral_core import (SpectralField3, h_block, laplacian_eps,
                                    v_block)

from conftest import field_from


class TestEpsParams:
    def test_strict_range_accepted(self):
        p = EpsParams(0.1, 0.1, 0.5, 0.02)
        rep = p.validate()
        assert rep["strict"] and rep["transport"] and rep["pressure"]

    def test_out_of_range_rejected_then_allowed(self):
        with pytest.raises(ValueError):
            EpsParams(0.1, 0.4, 0.5, 0.02).validate()
        rep = EpsParams(0.1, 0.4, 0.5, 0.02).validate(allow_out_of_range=True)
        assert not rep["strict"]

    def test_eps_domain(self):
        with pytest.raises(ValueError):
            EpsParams(0.0, 0.1, 0.5, 0.02)
        with pytest.raises(ValueError):
            EpsParams(1.5, 0.1, 0.5, 0.02)


class TestHeat:
    def test_t_zero_identity(self, grid16, rng):
        f = random_field(grid16, rng)
        assert (heat_apply(f, 0.0, 0.5) - f).l2() == 0.0

    def test_single_mode_factor(self, grid16):
        f = field_from(grid16, lambda x1, x2, x3: np.cos(x1 + 2 * x3))
        out = heat_apply(f, 1.0, 0.5)  # mu = 1 + 0.25*4 = 2
        assert (out - np.exp(-2.0) * f).l2() < 1e-13

    def test_semigroup_property(self, grid16, rng):
        f = random_field(grid16, rng)
        a = heat_apply(heat_apply(f, 0.3, 0.4), 0.7, 0.4)
        b = heat_apply(f, 1.0, 0.4)
        assert (a - b).l2() < 1e-12 * max(b.l2(), 1e-300)

    def test_negative_time_rejected(self, grid16, rng):
        with pytest.raises(ValueError):
            heat_apply(random_field(grid16, rng), -0.1, 0.5)

    def test_contraction_in_besov(self, grid16, rng):
        f = random_field(grid16, rng)
        for idx in ((1.0, 0.5), (0.0, -0.5)):
            before = besov_norm(f, idx)
            after = besov_norm(heat_apply(f, 0.5, 0.3), idx)
            assert after <= before * (1 + 1e-12)

    def test_commutes_with_blocks_and_phase(self, grid16, rng):
        f = random_field(grid16, rng)
        a = heat_apply(h_block(f, 1), 0.2, 0.5)
        b = h_block(heat_apply(f, 0.2, 0.5), 1)
        assert (a - b).l2() < 1e-14
        a = heat_apply(apply_phase(f, 0.05), 0.2, 0.5)
        b = apply_phase(heat_apply(f, 0.2, 0.5), 0.05)
        assert (a - b).l2() < 1e-12


class TestDuhamel:
    def test_zero_forcing(self, grid16):
        z = SpectralField3.zero(grid16)
        assert duhamel([(0.0, z)], 1.0, 0.5).l2() == 0.0

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError):
            duhamel([], 1.0, 0.5)

    def test_constant_forcing_closed_form(self, grid16, rng):
        f0 = random_field(grid16, rng)
        t, eps = 2.0, 0.5
        out = duhamel([(0.0, f0)], t, eps)
        mu = grid16.ksq_h[:, :, None] + eps**2 * grid16.ksq3[None, None, :]
        w = np.where(mu > 0, -np.expm1(-t * mu) / np.maximum(mu, 1e-300), t)
        exact = SpectralField3(grid16, f0.coeffs * w[None])
        assert (out - exact).l2() < 1e-13 * max(exact.l2(), 1e-300)

    def test_linearity(self, grid16, rng):
        f = random_field(grid16, rng)
        g = random_field(grid16, rng)
        series = lambda h: [(0.0, h), (0.5, 2.0 * h)]
        lhs = duhamel(series(f + 0.5 * g), 1.0, 0.3)
        rhs = duhamel(series(f), 1.0, 0.3) + 0.5 * duhamel(series(g), 1.0, 0.3)
        assert (lhs - rhs).l2() < 1e-12 * max(rhs.l2(), 1e-300)

    def test_bad_times_rejected(self, grid16, rng):
        f = random_field(grid16, rng)
        with pytest.raises(ValueError):
            duhamel([(0.1, f)], 1.0, 0.5)
        with pytest.raises(ValueError):
            duhamel([(0.0, f), (0.0, f)], 1.0, 0.5)

    def test_duhamel_solves_the_ode(self, grid16, rng):
        # within a constant-forcing segment the integrator is exact, so a
        # centered difference of E in t satisfies dE/dt = D_eps E + f
        f0 = random_field(grid16, rng)
        eps, t, h = 0.5, 0.7, 1e-4
        series = [(0.0, f0)]
        e_plus = duhamel(series, t + h, eps)
        e_minus = duhamel(series, t - h, eps)
        dEdt = (1.0 / (2 * h)) * (e_plus - e_minus)
        rhs = laplacian_eps(duhamel(series, t, eps), eps) + f0
        assert (dEdt - rhs).l2() < 1e-6 * max(rhs.l2(), 1e-300)


class TestSmoothing41:
    def test_zero_field(self, grid16):
        z = SpectralField3.zero(grid16, 3)
        assert smoothing_check_41(z, 0.1, (1.0, 0.5), 0.0, 1, 0.2) == 0.0

    def test_rinf_beta0_ratio_is_one(self, grid16):
        # sup-in-time of the decaying blocks is the t = 0 value, which is the
        # data norm itself
        x1f = field_from(grid16, lambda x1, x2, x3: np.cos(x1) * np.sin(x3))
        v0 = SpectralField3(grid16, np.concatenate(
            [x1f.coeffs, np.zeros_like(x1f.coeffs), np.zeros_like(x1f.coeffs)]))
        ratio = smoothing_check_41(v0, 0.1, (1.0, 0.5), 0.0, np.inf, 0.2, line=1)
        assert abs(ratio - 1.0) < 1e-10

    def test_invalid_exponents(self, grid16, rng):
        v0 = random_solenoidal(grid16, rng)
        with pytest.raises(ValueError):
            smoothing_check_41(v0, 0.1, (1.0, 0.5), 3.0, 1, 0.2)
        with pytest.raises(ValueError):
            smoothing_check_41(v0, 0.1, (1.0, 0.5), 0.0, 5, 0.2)

    def test_line2_requires_divergence_free(self, grid16, rng):
        v0 = random_field(grid16, rng, ncomp=3)  # not projected
        with pytest.raises(ValueError):
            smoothing_check_41(v0, 0.1, (1.0, 0.5), 0.0, 1, 0.2, line=2)

    def test_line2_runs_on_solenoidal(self, grid16, rng):
        v0 = random_solenoidal(grid16, rng)
        r = smoothing_check_41(v0, 0.1, (1.0, 0.5), 0.0, 1, 0.2, line=2, nt=100)
        assert np.isfinite(r) and r >= 0


class TestSmoothing42:
    def test_exponent_ordering_enforced(self, grid16, rng):
        series = [(0.0, random_field(grid16, rng))]
        with pytest.raises(ValueError, match="r2 <= r1"):
            smoothing_check_42(series, 0.1, (1.0, 0.5), 0.0, 1, 2, 0.2)

    def test_ratio_finite(self, grid16, rng):
        series = [(0.0, random_field(grid16, rng)),
                  (0.5, random_field(grid16, rng))]
        r = smoothing_check_42(series, 0.1, (1.0, 0.5), 0.0, 1, 1, 0.2,
                               T=10.0, nt=80)
        assert np.isfinite(r) and r > 0


class TestDamping:
    def test_zero_profile(self):
        assert damping_bound_check(4.0, np.zeros(10), 2) == 0.0

    def test_constant_profile_closed_form(self):
        # unit rate on [0, 1] with c lam 2^l = 10
        val = damping_bound_check(10.0, np.ones(100), 0, c=1.0, dt=0.01)
        assert abs(val - (1.0 - np.exp(-10.0))) < 1e-12

    def test_bound_holds_for_random_profiles(self, rng):
        for _ in range(50):
            th = np.abs(rng.standard_normal(rng.integers(3, 100)))
            lam = float(rng.uniform(0.5, 30))
            ell = int(rng.integers(-2, 7))
            c = float(rng.uniform(0.2, 3.0))
            val = damping_bound_check(lam, th, ell, c=c,
                                      dt=float(rng.uniform(1e-3, 0.2)))
            assert val <= 1.0 / c * (1.0 + 1e-12)

    def test_negative_sample_rejected(self):
        with pytest.raises(ValueError):
            damping_bound_check(4.0, [0.1, -0.2], 1)
