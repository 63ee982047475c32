import numpy as np
import pytest

from aniso_lp.norms import apply_phase, besov_norm
from aniso_lp.paraproduct import (PositivityError, bony, compose_G,
                                  double_bony, g_smallness_check,
                                  paraproduct_band, product_law_fit,
                                  validate_product_indices)
from aniso_lp.randfields import random_field
from aniso_lp.spectral_core import (Grid, SpectralField3, build_cutoffs,
                                    dealias, h_block, multiply)

from conftest import field_from


class TestBonyReconstruction:
    def test_zero_inputs(self, grid16):
        z = SpectralField3.zero(grid16)
        p = bony(z, z, "iso")
        for piece in (p.T, p.R, p.Tbar, p.alt_T, p.alt_script_R):
            assert piece.l2() == 0.0

    @pytest.mark.parametrize("direction", ["iso", "horizontal", "vertical"])
    def test_random_reconstruction(self, grid32, rng, direction):
        a = random_field(grid32, rng)
        b = random_field(grid32, rng)
        ab = multiply(a, b)
        p = bony(a, b, direction)
        ref = ab.l2()
        assert (p.T + p.R + p.Tbar - ab).l2() < 1e-12 * ref
        assert (p.alt_T + p.alt_script_R - ab).l2() < 1e-12 * ref

    def test_double_reconstruction(self, grid32, rng):
        a = random_field(grid32, rng)
        b = random_field(grid32, rng)
        ab = multiply(a, b)
        pieces = double_bony(a, b)
        assert len(pieces) == 9
        total = sum(pieces.values(), SpectralField3.zero(grid32))
        assert (total - ab).l2() < 1e-12 * ab.l2()

    def test_separated_modes_all_in_T(self):
        # frequency 2 sits far below the band of 16, so T carries everything
        grid = Grid.cubic(64)
        a = field_from(grid, lambda x1, x2, x3: np.cos(2 * x1))
        b = field_from(grid, lambda x1, x2, x3: np.cos(16 * x1))
        ab = multiply(a, b)
        p = bony(a, b, "horizontal")
        assert (p.T - ab).l2() < 1e-12 * ab.l2()
        assert p.Tbar.l2() < 1e-12 * ab.l2()
        assert p.R.l2() < 1e-12 * ab.l2()

    def test_horizontal_only_a_kills_vertical_blocks(self, grid16, rng):
        # a independent of x3 has only the vertical low band; against a
        # vertical-mean-free b, every piece that puts a vertical dyadic block
        # (or the zero-mode pairing) on a vanishes
        from aniso_lp.spectral_core import v_mean
        a = field_from(grid16, lambda x1, x2, x3: np.cos(2 * x1) * np.cos(x2))
        b = random_field(grid16, rng)
        b = b - v_mean(b)
        pieces = double_bony(a, b)
        for tag in ("T_R", "T_Tb", "R_R", "R_Tb", "Tb_R", "Tb_Tb"):
            assert pieces[tag].l2() < 1e-12, tag

    def test_bilinearity(self, grid16, rng):
        a1 = random_field(grid16, rng)
        a2 = random_field(grid16, rng)
        b = random_field(grid16, rng)
        p1 = bony(a1, b, "horizontal")
        p2 = bony(a2, b, "horizontal")
        p12 = bony(a1 + 2.0 * a2, b, "horizontal")
        for attr in ("T", "R", "Tbar"):
            lhs = getattr(p12, attr)
            rhs = getattr(p1, attr) + 2.0 * getattr(p2, attr)
            assert (lhs - rhs).l2() < 1e-12 * max(rhs.l2(), 1e-300)

    def test_frequency_localization(self, grid32, rng):
        # each T band j feeds only output bands k with |k - j| <= 4
        a = random_field(grid32, rng)
        b = random_field(grid32, rng)
        for j in (1, 2, 3):
            tj = paraproduct_band(a, b, "horizontal", j)
            ref = max(tj.l2(), 1e-300)
            for k in grid32.h_bands:
                if abs(k - j) > 4:
                    assert h_block(tj, k).l2() < 1e-12 * ref


def double_bony_oracle(a, b):
    """Independent slow evaluation of the nine pieces by explicit mask loops."""
    grid = a.grid
    cut = build_cutoffs()
    npts = grid.npoints

    def hmask(kind, k):
        if kind == "S":
            return cut.chi(grid.kh * 2.0 ** -(k - 1))[:, :, None]
        if kind == "D":
            return cut.phi(grid.kh * 2.0**-k)[:, :, None]
        if kind == "Dt":
            return sum(cut.phi(grid.kh * 2.0**-j)
                       for j in (k - 1, k, k + 1))[:, :, None]
        return (grid.kh == 0).astype(float)[:, :, None]

    def vmask(kind, el):
        if kind == "S":
            return cut.chi(grid.k3abs * 2.0 ** -(el - 1))[None, None, :]
        if kind == "D":
            return cut.phi(grid.k3abs * 2.0**-el)[None, None, :]
        if kind == "Dt":
            return sum(cut.phi(grid.k3abs * 2.0**-j)
                       for j in (el - 1, el, el + 1))[None, None, :]
        return (grid.k3abs == 0).astype(float)[None, None, :]

    op_pairs = {"T": ("S", "D"), "R": ("D", "Dt"), "Tb": ("D", "S")}
    out = {}
    for hop, (ha_kind, hb_kind) in op_pairs.items():
        for vop, (va_kind, vb_kind) in op_pairs.items():
            acc = np.zeros(grid.shape)
            h_list = [(hmask(ha_kind, k), hmask(hb_kind, k))
                      for k in grid.h_bands]
            if hop == "R":
                h_list.append((hmask("mean", 0), hmask("mean", 0)))
            v_list = [(vmask(va_kind, el), vmask(vb_kind, el))
                      for el in grid.v_bands]
            if vop == "R":
                v_list.append((vmask("mean", 0), vmask("mean", 0)))
            for hA, hB in h_list:
                for vA, vB in v_list:
                    fa = np.fft.ifftn(a.coeffs[0] * hA * vA).real * npts
                    fb = np.fft.ifftn(b.coeffs[0] * hB * vB).real * npts
                    acc += fa * fb
            piece = dealias(SpectralField3.from_values(grid, acc))
            out["%s_%s" % (hop, vop)] = piece
    return out


class TestDoubleBonyOracle:
    def test_pieces_match_brute_force(self, grid16, rng):
        a = random_field(grid16, rng)
        b = random_field(grid16, rng)
        fast = double_bony(a, b)
        slow = double_bony_oracle(a, b)
        for tag in fast:
            ref = max(slow[tag].l2(), 1e-300)
            assert (fast[tag] - slow[tag]).l2() < 1e-11 * max(ref, 1.0), tag


class TestComposeG:
    def test_zero(self, grid16):
        z = SpectralField3.zero(grid16)
        assert compose_G(z).l2() == 0.0

    def test_constant_one_maps_to_half(self, grid16):
        ones = SpectralField3.from_values(grid16, np.ones(grid16.shape))
        out = compose_G(ones)
        expect = SpectralField3.from_values(grid16, 0.5 * np.ones(grid16.shape))
        assert (out - expect).l2() < 1e-14

    def test_taylor_remainder_third_order(self, grid16, rng):
        # G(a) - (a - a^2) = O(a^3): halving the amplitude cuts the error 8x
        a = random_field(grid16, rng, amplitude=0.1)
        errs = []
        for scale in (1.0, 0.5):
            asc = scale * a
            approx = asc - multiply(asc, asc)
            errs.append((compose_G(asc) - approx).l2())
        ratio = errs[0] / errs[1]
        assert 6.0 < ratio < 10.0

    def test_positivity_violation_raises(self, grid16):
        bad = SpectralField3.from_values(grid16, -1.5 * np.ones(grid16.shape))
        with pytest.raises(PositivityError):
            compose_G(bad)

    def test_vector_rejected(self, grid16, rng):
        with pytest.raises(ValueError):
            compose_G(random_field(grid16, rng, ncomp=3))


class TestGSmallness:
    def test_zero_reports_zero(self, grid16):
        z = SpectralField3.zero(grid16)
        rep = g_smallness_check([z], [0.05], (1.0, 0.5))
        assert rep["precondition_ok"] and rep["ratio"] == 0.0

    def test_tiny_mode_ratio_near_one(self, grid16):
        a = field_from(grid16, lambda x1, x2, x3:
                       1e-3 * np.cos(x1) * np.cos(x3))
        rep = g_smallness_check([a], [0.02], (1.0, 0.5))
        assert rep["precondition_ok"]
        assert abs(rep["ratio"] - 1.0) < 5e-3
        assert rep["ok"]

    def test_precondition_violation_skips(self, grid16, rng):
        a = random_field(grid16, rng, amplitude=0.5)
        rep = g_smallness_check([a], [0.05], (1.0, 0.5), eps_small=1e-6)
        assert rep["precondition_ok"] is False and rep["ratio"] is None

    def test_random_small_fields_bounded_by_two(self, grid16, rng):
        for _ in range(10):
            a = random_field(grid16, rng)
            scale = besov_norm(apply_phase(a, 0.05), (1.0, 0.5))
            a = a * (0.01 / scale)
            rep = g_smallness_check([a], [0.05], (1.0, 0.5))
            assert rep["precondition_ok"] and rep["ratio"] <= 2.0


class TestProductLaws:
    def test_zero_field_gives_zero_ratio(self, grid16):
        rep = product_law_fit(((0.5, 0.25), (0.5, 0.25)), 0, grid16,
                              law="two_term")
        assert rep["max_ratio"] == 0.0

    def test_validators_accept_and_reject(self):
        validate_product_indices("two_term", ((0.5, 0.25), (0.5, 0.25)))
        with pytest.raises(ValueError):
            validate_product_indices("two_term", ((1.5, 0.25), (0.5, 0.25)))
        with pytest.raises(ValueError):
            validate_product_indices("two_term", ((0.5, 0.6), (0.5, 0.25)))
        sig = (1.0, 0.0, 0.5, 0.5, 1.0, 0.0, 0.0, 1.0)
        sv = (0.5, 0.0, 0.25, 0.25, 0.0, 0.5, 0.5, 0.0)
        validate_product_indices("eight_term", (sig, sv))
        bad = (2.0, -1.0, 0.5, 0.5, 1.0, 0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            validate_product_indices("eight_term", (bad, sv))
        with pytest.raises(ValueError):
            validate_product_indices("unknown", ())

    def test_fit_report_shape_and_determinism(self, grid16):
        rep1 = product_law_fit(((0.5, 0.25), (0.5, 0.25)), 5, grid16,
                               law="two_term", seed=11)
        rep2 = product_law_fit(((0.5, 0.25), (0.5, 0.25)), 5, grid16,
                               law="two_term", seed=11)
        assert rep1 == rep2
        assert rep1["max_ratio"] >= rep1["median_ratio"] > 0
        assert len(rep1["ratios"]) == 5

    def test_phase_uniformity(self, grid16):
        r0 = product_law_fit(((0.5, 0.25), (0.5, 0.25)), 10, grid16,
                             law="two_term", phase_r=0.0, seed=4)
        r1 = product_law_fit(((0.5, 0.25), (0.5, 0.25)), 10, grid16,
                             law="two_term", phase_r=0.05, seed=4)
        # the bound is uniform in the phase: same order of magnitude
        assert r1["max_ratio"] < 4.0 * r0["max_ratio"]

    def test_cl_variant_runs(self, grid16):
        rep = product_law_fit(((1.0, 0.5), (0.0, 0.0), (0.5, 0.25), (0.5, 0.25)),
                              3, grid16, law="cl_two_pair", seed=2)
        assert rep["max_ratio"] > 0
