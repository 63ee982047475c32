"""Bony decompositions, product-law ratio fits, and the composition r/(1+r).

A product ab is split into frequency interactions through dyadic pairings.
With S_j the low-pass below band j (directional mean included) the pieces are

    T(a, b)  = sum_j S_{j-1} a * D_j b          (low-high)
    Tbar     = T(b, a)                          (high-low)
    R(a, b)  = sum_j D_j a * Dtilde_j b         (high-high), Dtilde_j = D_{j-1}+D_j+D_{j+1}
    scriptR  = sum_j D_j a * S_{j+2} b          (two-piece remainder)

so that ab = T + R + Tbar = T + scriptR.  On the torus the product of the two
directional means is covered by no band pairing; both remainders carry that
single extra term, which makes the reconstruction identities grid-exact.

All physical-space products are dealiased (2/3 rule), applied identically to
each piece and to ab, so the identities hold to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .norms import (NormAccumulator, apply_phase, as_index, besov_norm,
                    cl_accumulate, cl_norm)
from .randfields import random_field
from .spectral_core import (Grid, SpectralField3, batch_spectra, batch_values,
                            dealias, default_cutoffs, half_spectrum, multiply)

__all__ = [
    "BonyPieces",
    "PositivityError",
    "bony",
    "double_bony",
    "paraproduct_band",
    "validate_product_indices",
    "product_law_fit",
    "compose_G",
    "g_smallness_check",
]

DIRECTIONS = ("iso", "horizontal", "vertical")


class PositivityError(ValueError):
    """The pointwise density floor 1 + a dropped to or below zero."""


# ---------------------------------------------------------------------------
# directional band machinery
# ---------------------------------------------------------------------------

def _direction_data(grid: Grid, direction: str):
    """Band list plus factor builders for one direction.

    Factors are ('sep', w_h(n1, n2), w_v(n3)) for the separable directions and
    ('full', m(n1, n2, n3)) for the isotropic one.
    """
    cut = default_cutoffs()
    ones_h = np.ones((grid.n1, grid.n2))
    ones_v = np.ones(grid.n3)
    if direction == "horizontal":
        bands = grid.h_bands
        block = lambda j: ("sep", cut.phi(grid.kh * 2.0**-j), ones_v)
        lowpass = lambda j: ("sep", cut.chi(grid.kh * 2.0**-j), ones_v)
        tilde = lambda j: ("sep", sum(cut.phi(grid.kh * 2.0**-jj)
                                      for jj in (j - 1, j, j + 1)), ones_v)
        mean = ("sep", grid.h_mean_mask, ones_v)
    elif direction == "vertical":
        bands = grid.v_bands
        block = lambda j: ("sep", ones_h, cut.phi(grid.k3abs * 2.0**-j))
        lowpass = lambda j: ("sep", ones_h, cut.chi(grid.k3abs * 2.0**-j))
        tilde = lambda j: ("sep", ones_h, sum(cut.phi(grid.k3abs * 2.0**-jj)
                                              for jj in (j - 1, j, j + 1)))
        mean = ("sep", ones_h, grid.v_mean_mask)
    elif direction == "iso":
        bands = grid.iso_bands
        block = lambda j: ("full", cut.phi(grid.kmod * 2.0**-j))
        lowpass = lambda j: ("full", cut.chi(grid.kmod * 2.0**-j))
        tilde = lambda j: ("full", sum(cut.phi(grid.kmod * 2.0**-jj)
                                       for jj in (j - 1, j, j + 1)))
        mean = ("full", grid.iso_mean_mask)
    else:
        raise ValueError("direction must be one of %r" % (DIRECTIONS,))
    return bands, block, lowpass, tilde, mean


def _pair_masks(grid: Grid, direction: str, op: str):
    """Factor pairs (factor_a, factor_b) whose products tile one operator."""
    bands, block, lowpass, tilde, mean = _direction_data(grid, direction)
    if op == "T":
        return [(lowpass(j - 1), block(j)) for j in bands]
    if op == "Tb":
        return [(block(j), lowpass(j - 1)) for j in bands]
    if op == "R":
        pairs = [(block(j), tilde(j)) for j in bands]
        pairs.append((mean, mean))  # torus zero-mode pairing
        return pairs
    if op == "scriptR":
        pairs = [(block(j), lowpass(j + 2)) for j in bands]
        pairs.append((mean, mean))
        return pairs
    raise ValueError("unknown operator %r" % (op,))


def _half_stack(grid: Grid, factors) -> np.ndarray:
    """Stack factors as multipliers on the half spectrum, shape (P, n1, n2, h)."""
    h = grid.n3 // 2 + 1
    out = np.empty((len(factors), grid.n1, grid.n2, h))
    for i, fac in enumerate(factors):
        if fac[0] == "sep":
            out[i] = fac[1][:, :, None] * fac[2][None, None, :h]
        else:
            out[i] = fac[1][:, :, :h]
    return out


def _combine_factors(fa, fb):
    """Product of two separable factors (used by the double decomposition)."""
    return ("sep", fa[1] * fb[1], fa[2] * fb[2])


def _assemble(a: SpectralField3, b: SpectralField3, pairs) -> SpectralField3:
    """sum over pairs of dealias(F^-1(ma a^) * F^-1(mb b^)), batched via rFFTs."""
    grid = a.grid
    if not pairs:
        return SpectralField3.zero(grid, a.ncomp)
    ma = _half_stack(grid, [p[0] for p in pairs])
    mb = _half_stack(grid, [p[1] for p in pairs])
    out = np.empty((a.ncomp,) + grid.shape)
    for c in range(a.ncomp):
        ah = half_spectrum(a.coeffs[c], grid.n3)
        bh = half_spectrum(b.coeffs[c], grid.n3)
        fa = batch_values(grid, ma * ah[None])
        fb = batch_values(grid, mb * bh[None])
        out[c] = np.einsum("pabc,pabc->abc", fa, fb)
    return dealias(SpectralField3(grid, batch_spectra(grid, out)))


@dataclass
class BonyPieces:
    """Three-piece and two-piece decompositions of one product."""

    T: SpectralField3
    R: SpectralField3
    Tbar: SpectralField3
    alt_T: SpectralField3
    alt_script_R: SpectralField3


def bony(a: SpectralField3, b: SpectralField3, direction: str = "iso") -> BonyPieces:
    """Bony decomposition of the (dealiased) product ab in one direction."""
    if a.grid != b.grid:
        raise ValueError("grid mismatch")
    t = _assemble(a, b, _pair_masks(a.grid, direction, "T"))
    r = _assemble(a, b, _pair_masks(a.grid, direction, "R"))
    tbar = _assemble(a, b, _pair_masks(a.grid, direction, "Tb"))
    script_r = _assemble(a, b, _pair_masks(a.grid, direction, "scriptR"))
    return BonyPieces(T=t, R=r, Tbar=tbar, alt_T=t, alt_script_R=script_r)


def paraproduct_band(a: SpectralField3, b: SpectralField3, direction: str,
                     j: int) -> SpectralField3:
    """Single band of T: dealias(S_{j-1} a * D_j b).  Used to probe localization."""
    bands, block, lowpass, _, _ = _direction_data(a.grid, direction)
    return _assemble(a, b, [(lowpass(j - 1), block(j))])


DOUBLE_OPS = ("T", "R", "Tb")


def double_bony(a: SpectralField3, b: SpectralField3) -> dict[str, SpectralField3]:
    """Nine-piece decomposition: horizontal and vertical pairings composed.

    Keys are two-letter tags, horizontal operator first: 'T_T', 'T_R', ...,
    'Tb_Tb'.  The nine pieces sum to the dealiased product exactly.
    """
    if a.grid != b.grid:
        raise ValueError("grid mismatch")
    grid = a.grid
    hpairs = {op: _pair_masks(grid, "horizontal", op) for op in DOUBLE_OPS}
    vpairs = {op: _pair_masks(grid, "vertical", op) for op in DOUBLE_OPS}
    out = {}
    for hop in DOUBLE_OPS:
        for vop in DOUBLE_OPS:
            pairs = [(_combine_factors(ha, va), _combine_factors(hb, vb))
                     for ha, hb in hpairs[hop] for va, vb in vpairs[vop]]
            out["%s_%s" % (hop, vop)] = _assemble(a, b, pairs)
    return out


# ---------------------------------------------------------------------------
# product laws
# ---------------------------------------------------------------------------

def validate_product_indices(law: str, indices) -> tuple[tuple, tuple]:
    """Check index admissibility for a product law; returns (sigmas, ss).

    law 'eight_term': indices = (sigmas, ss) with 8 entries each and
        equal positive pair sums, sigma_{1,4,5,8} <= 1, s_{1,4,6,7} <= 1/2.
    law 'two_term': indices = ((s1h, s1v), (s2h, s2v)) with sigmas <= 1,
        s's <= 1/2 and positive sums.
    law 'cl_two_pair': four pairs with sigmas <= 1, s1 and s4 <= 1/2,
        equal positive sums per slot.
    """
    if law == "eight_term":
        sigmas, ss = indices
        sigmas, ss = tuple(map(float, sigmas)), tuple(map(float, ss))
        if len(sigmas) != 8 or len(ss) != 8:
            raise ValueError("eight_term law needs 8 sigma and 8 s entries")
        ssum = sigmas[0] + sigmas[1]
        vsum = ss[0] + ss[1]
        for i in (2, 4, 6):
            if abs(sigmas[i] + sigmas[i + 1] - ssum) > 1e-12:
                raise ValueError("sigma pair sums must agree")
            if abs(ss[i] + ss[i + 1] - vsum) > 1e-12:
                raise ValueError("s pair sums must agree")
        if ssum <= 0 or vsum <= 0:
            raise ValueError("pair sums must be positive")
        for i in (0, 3, 4, 7):
            if sigmas[i] > 1.0 + 1e-12:
                raise ValueError("sigma_%d must be <= 1" % (i + 1,))
        for i in (0, 3, 5, 6):
            if ss[i] > 0.5 + 1e-12:
                raise ValueError("s_%d must be <= 1/2" % (i + 1,))
        return sigmas, ss
    if law == "two_term":
        (s1, t1), (s2, t2) = indices
        if s1 > 1 or s2 > 1 or s1 + s2 <= 0:
            raise ValueError("need sigma_i <= 1 with positive sum")
        if t1 > 0.5 or t2 > 0.5 or t1 + t2 <= 0:
            raise ValueError("need s_i <= 1/2 with positive sum")
        return (s1, s2), (t1, t2)
    if law == "cl_two_pair":
        pairs = [tuple(map(float, p)) for p in indices]
        if len(pairs) != 4:
            raise ValueError("cl_two_pair law needs 4 index pairs")
        sig = [p[0] for p in pairs]
        sv = [p[1] for p in pairs]
        if any(x > 1.0 + 1e-12 for x in sig):
            raise ValueError("sigmas must be <= 1")
        if sig[0] + sig[1] <= 0 or abs(sig[0] + sig[1] - sig[2] - sig[3]) > 1e-12:
            raise ValueError("sigma sums must be positive and agree")
        if sv[0] > 0.5 + 1e-12 or sv[3] > 0.5 + 1e-12:
            raise ValueError("s_1 and s_4 must be <= 1/2")
        if sv[0] + sv[1] <= 0 or abs(sv[0] + sv[1] - sv[2] - sv[3]) > 1e-12:
            raise ValueError("s sums must be positive and agree")
        return tuple(sig), tuple(sv)
    raise ValueError("unknown law %r" % (law,))


def product_law_fit(indices, trials: int, grid: Grid, *, law: str = "eight_term",
                    phase_r: float = 0.0, seed: int = 0,
                    envelope_delta: float = 0.3) -> dict:
    """Empirical constant for one product law over random phase-weighted fields.

    Returns {'index_tuple', 'trials', 'grid', 'max_ratio', 'median_ratio',
    'seed', 'ratios'}.  Ratios are LHS / RHS with the convention 0/0 -> 0.
    """
    sigmas, ss = validate_product_indices(law, indices)
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        a = random_field(grid, rng, envelope_delta)
        b = random_field(grid, rng, envelope_delta)
        if law == "cl_two_pair":
            ratios.append(_cl_law_ratio(a, b, sigmas, ss, phase_r, rng,
                                        envelope_delta))
            continue
        ab = multiply(a, b)
        a_p = apply_phase(a, phase_r)
        b_p = apply_phase(b, phase_r)
        ab_p = apply_phase(ab, phase_r)
        lhs_idx = (sigmas[0] + sigmas[1] - 1.0, ss[0] + ss[1] - 0.5)
        lhs = besov_norm(ab_p, lhs_idx)
        if law == "eight_term":
            rhs = sum(besov_norm(a_p, (sigmas[i], ss[i]))
                      * besov_norm(b_p, (sigmas[i + 1], ss[i + 1]))
                      for i in (0, 2, 4, 6))
        else:
            rhs = besov_norm(a_p, (sigmas[0], ss[0])) * besov_norm(b_p, (sigmas[1], ss[1]))
        ratios.append(0.0 if rhs == 0.0 else lhs / rhs)
    ratios = np.asarray(ratios)
    return {
        "law": law,
        "index_tuple": [list(sigmas), list(ss)],
        "trials": trials,
        "grid": list(grid.shape),
        "phase_r": phase_r,
        "max_ratio": float(ratios.max()) if trials else 0.0,
        "median_ratio": float(np.median(ratios)) if trials else 0.0,
        "seed": seed,
        "ratios": [float(r) for r in ratios],
    }


def _cl_law_ratio(a0, b0, sigmas, ss, phase_r, rng, envelope_delta) -> float:
    """Two-sample Chemin-Lerner law with (p, p1, p2, p3, p4) = (1, inf, 1, inf, 1)."""
    grid = a0.grid
    a1 = random_field(grid, rng, envelope_delta)
    b1 = random_field(grid, rng, envelope_delta)
    acc_a = NormAccumulator(grid)
    acc_b = NormAccumulator(grid)
    acc_ab = NormAccumulator(grid)
    for a, b in ((a0, b0), (a1, b1)):
        acc_a = cl_accumulate_phase(acc_a, a, phase_r, 0.5)
        acc_b = cl_accumulate_phase(acc_b, b, phase_r, 0.5)
        acc_ab = cl_accumulate_phase(acc_ab, multiply(a, b), phase_r, 0.5)
    lhs_idx = (sigmas[0] + sigmas[1] - 1.0, ss[0] + ss[1] - 0.5)
    lhs = cl_norm(acc_ab, 1, lhs_idx)
    rhs = (cl_norm(acc_a, np.inf, (sigmas[0], ss[0])) * cl_norm(acc_b, 1, (sigmas[1], ss[1]))
           + cl_norm(acc_a, np.inf, (sigmas[2], ss[2])) * cl_norm(acc_b, 1, (sigmas[3], ss[3])))
    return 0.0 if rhs == 0.0 else lhs / rhs


def cl_accumulate_phase(acc: NormAccumulator, f: SpectralField3, r: float,
                        dt: float) -> NormAccumulator:
    return cl_accumulate(acc, apply_phase(f, r), dt)


# ---------------------------------------------------------------------------
# composition G(a) = a / (1 + a)
# ---------------------------------------------------------------------------

def compose_G(a: SpectralField3) -> SpectralField3:
    """Pointwise a/(1+a) in physical space, dealiased on return.

    Raises PositivityError when min(1 + a) <= 0; that signals loss of the
    density floor the whole scheme assumes.
    """
    if a.is_vector:
        raise ValueError("compose_G expects a scalar field")
    vals = a.values()
    floor = float((1.0 + vals).min())
    if floor <= 0.0:
        raise PositivityError("density floor violated: min(1 + a) = %g" % floor)
    return dealias(SpectralField3.from_values(a.grid, vals / (1.0 + vals)))


def g_smallness_check(a_fields, band_values, idx, eps_small: float = 0.01,
                      dt: float = 1.0) -> dict:
    """Verify ||[G(a)]_Phi|| <= 2 ||a_Phi|| in L-tilde-infinity at index ``idx``.

    ``a_fields`` is a time series of unphased fields, ``band_values`` the
    matching analytic band r(t).  The check runs only when the smallness
    precondition ||a_Phi||_{Linf(B^{1,1/2})} <= eps_small holds; otherwise it
    is reported as skipped.
    """
    idx = as_index(idx)
    grid = a_fields[0].grid
    acc_a = NormAccumulator(grid)
    for a, r in zip(a_fields, band_values):
        acc_a = cl_accumulate_phase(acc_a, a, r, dt)
    smallness = cl_norm(acc_a, np.inf, (1.0, 0.5))
    report = {"smallness": smallness, "eps_small": eps_small}
    if smallness > eps_small * (1.0 + 1e-9):
        report.update({"precondition_ok": False, "ratio": None, "ok": False})
        return report
    acc_g = NormAccumulator(grid)
    for a, r in zip(a_fields, band_values):
        acc_g = cl_accumulate_phase(acc_g, compose_G(a), r, dt)
    num = cl_norm(acc_g, np.inf, idx)
    den = cl_norm(acc_a, np.inf, idx)
    ratio = 0.0 if den == 0.0 else num / den
    report.update({"precondition_ok": True, "ratio": ratio, "ok": ratio <= 2.0})
    return report
