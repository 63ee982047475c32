"""Spectral representation on the periodic torus with anisotropic dyadic analysis.

Fields live on a uniform grid over [0, L)^3 (default L = 2*pi) and are stored
as complex Fourier coefficients c(xi) such that

    f(x) = sum_xi c(xi) * exp(i xi . x),

with xi running over the integer wavevectors of the grid (scaled by 2*pi/L).
Under this convention the L2 norm uses the *normalized* measure (mean over the
torus), so Parseval reads ||f||_L2 = sqrt(sum |c(xi)|^2); a unit-amplitude
cosine mode has norm 1/sqrt(2).

Dyadic analysis splits horizontal frequencies |xi_h| = sqrt(xi_1^2 + xi_2^2)
and the vertical frequency |xi_3| independently through a smooth radial cutoff
pair (chi, phi) with

    supp phi subseteq {3/4 <= tau <= 8/3},   supp chi subseteq {tau <= 4/3},
    sum_j phi(2^-j tau) = 1  (tau > 0),      chi(tau) + sum_{j>=0} phi(2^-j tau) = 1.

On the torus each direction's dyadic bands form a finite set; the directional
mean (zero frequency in that direction) is annihilated by every band and is
carried by the low-pass operators instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Grid",
    "CutoffPair",
    "SpectralField3",
    "build_cutoffs",
    "default_cutoffs",
    "h_block",
    "v_block",
    "iso_block",
    "h_lowpass",
    "v_lowpass",
    "iso_lowpass",
    "grad_h",
    "d3",
    "div_h",
    "div",
    "laplacian_eps",
    "nabla_eps",
    "nabla_sup_eps",
    "leray_project",
    "dealias",
    "write_snapshot",
    "read_snapshot",
]


# ---------------------------------------------------------------------------
# cutoff pair
# ---------------------------------------------------------------------------

def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly increasing between."""
    t = np.asarray(t, dtype=float)
    lo = t <= 0.0
    hi = t >= 1.0
    mid = ~(lo | hi)
    out = np.empty_like(t)
    out[lo] = 0.0
    out[hi] = 1.0
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


@dataclass(frozen=True)
class CutoffPair:
    """Radial cutoff profiles (chi, phi) generating all dyadic projectors.

    Both callables accept scalars or arrays of tau >= 0.
    """

    chi: Callable[[np.ndarray], np.ndarray]
    phi: Callable[[np.ndarray], np.ndarray]


def build_cutoffs() -> CutoffPair:
    """Construct the cutoff pair from a mollified step.

    chi equals 1 on [0, 3/4], transitions smoothly on [3/4, 4/3] via the
    standard exp(-1/t) bump, and vanishes beyond 4/3.  phi(tau) is the dyadic
    difference chi(tau/2) - chi(tau), which telescopes to the partition of
    unity identities.
    """
    lo, hi = 0.75, 4.0 / 3.0
    width = hi - lo

    def chi(tau):
        tau = np.abs(np.asarray(tau, dtype=float))
        return 1.0 - _smooth_step((tau - lo) / width)

    def phi(tau):
        tau = np.abs(np.asarray(tau, dtype=float))
        return chi(tau / 2.0) - chi(tau)

    return CutoffPair(chi=chi, phi=phi)


_DEFAULT_CUTOFFS: CutoffPair | None = None


def default_cutoffs() -> CutoffPair:
    global _DEFAULT_CUTOFFS
    if _DEFAULT_CUTOFFS is None:
        _DEFAULT_CUTOFFS = build_cutoffs()
    return _DEFAULT_CUTOFFS


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid, n1 x n2 x n3 modes over a box of side L.

    Wavenumbers per axis are the integers [-n/2, n/2) scaled by 2*pi/L
    (plain integers for the default box).  All derived mode tables are cached.
    """

    n1: int
    n2: int
    n3: int
    L: float = 2.0 * math.pi

    def __post_init__(self):
        for n in (self.n1, self.n2, self.n3):
            if n < 8 or n % 2 != 0:
                raise ValueError("grid sizes must be even and >= 8, got %r" % (n,))
        if self.L <= 0:
            raise ValueError("box side must be positive")

    @classmethod
    def cubic(cls, n: int, L: float = 2.0 * math.pi) -> "Grid":
        return cls(n, n, n, L)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def npoints(self) -> int:
        return self.n1 * self.n2 * self.n3

    # -- wavenumbers -------------------------------------------------------
    def _axis_wavenumbers(self, n: int) -> np.ndarray:
        return np.fft.fftfreq(n, d=1.0 / n) * (2.0 * math.pi / self.L)

    @cached_property
    def k1(self) -> np.ndarray:
        return self._axis_wavenumbers(self.n1)

    @cached_property
    def k2(self) -> np.ndarray:
        return self._axis_wavenumbers(self.n2)

    @cached_property
    def k3(self) -> np.ndarray:
        return self._axis_wavenumbers(self.n3)

    @cached_property
    def kh(self) -> np.ndarray:
        """|xi_h| on the (xi1, xi2) plane, shape (n1, n2)."""
        return np.sqrt(self.k1[:, None] ** 2 + self.k2[None, :] ** 2)

    @cached_property
    def k3abs(self) -> np.ndarray:
        return np.abs(self.k3)

    @cached_property
    def kmod(self) -> np.ndarray:
        """|xi| over the full grid, shape (n1, n2, n3)."""
        return np.sqrt(self.kh[:, :, None] ** 2 + self.k3[None, None, :] ** 2)

    @cached_property
    def ksq_h(self) -> np.ndarray:
        return self.kh**2

    @cached_property
    def ksq3(self) -> np.ndarray:
        return self.k3**2

    @cached_property
    def kmax_mod(self) -> float:
        return float(self.kmod.max())

    # -- dyadic band ranges --------------------------------------------------
    def _band_range(self, radii: np.ndarray) -> list[int]:
        vals = radii[radii > 0]
        if vals.size == 0:
            return []
        rmin, rmax = float(vals.min()), float(vals.max())
        # phi(2^-j r) != 0 requires 3/4 < 2^-j r < 8/3
        jlo = math.floor(math.log2(rmin / (8.0 / 3.0)))
        jhi = math.ceil(math.log2(rmax / 0.75))
        cut = default_cutoffs()
        out = []
        for j in range(jlo, jhi + 1):
            if np.any(cut.phi(vals * 2.0**-j) > 0.0):
                out.append(j)
        return out

    @cached_property
    def h_bands(self) -> list[int]:
        return self._band_range(self.kh.ravel())

    @cached_property
    def v_bands(self) -> list[int]:
        return self._band_range(self.k3abs)

    @cached_property
    def iso_bands(self) -> list[int]:
        return self._band_range(self.kmod.ravel())

    # -- cached band weights -------------------------------------------------
    @cached_property
    def h_weights(self) -> np.ndarray:
        """phi(2^-k |xi_h|) for k in h_bands, shape (K, n1, n2)."""
        cut = default_cutoffs()
        return np.stack([cut.phi(self.kh * 2.0**-k) for k in self.h_bands])

    @cached_property
    def v_weights(self) -> np.ndarray:
        """phi(2^-l |xi_3|) for l in v_bands, shape (Lb, n3)."""
        cut = default_cutoffs()
        return np.stack([cut.phi(self.k3abs * 2.0**-el) for el in self.v_bands])

    @cached_property
    def h_weights_sq(self) -> np.ndarray:
        return self.h_weights**2

    @cached_property
    def v_weights_sq(self) -> np.ndarray:
        return self.v_weights**2

    # -- masks ---------------------------------------------------------------
    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule retention mask: integer index |m_axis| <= n_axis/3."""
        m1 = np.abs(np.fft.fftfreq(self.n1, d=1.0 / self.n1)) <= self.n1 / 3.0
        m2 = np.abs(np.fft.fftfreq(self.n2, d=1.0 / self.n2)) <= self.n2 / 3.0
        m3 = np.abs(np.fft.fftfreq(self.n3, d=1.0 / self.n3)) <= self.n3 / 3.0
        return m1[:, None, None] & m2[None, :, None] & m3[None, None, :]

    @cached_property
    def h_mean_mask(self) -> np.ndarray:
        """Projector onto the horizontal-mean plane xi_h = 0, shape (n1, n2)."""
        return (self.kh == 0.0).astype(float)

    @cached_property
    def v_mean_mask(self) -> np.ndarray:
        return (self.k3abs == 0.0).astype(float)

    @cached_property
    def iso_mean_mask(self) -> np.ndarray:
        return (self.kmod == 0.0).astype(float)

    @cached_property
    def inv_ksq(self) -> np.ndarray:
        """1/|xi|^2 with the zero mode mapped to 0."""
        ksq = self.kmod**2
        out = np.zeros_like(ksq)
        nz = ksq > 0
        out[nz] = 1.0 / ksq[nz]
        return out


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

class SpectralField3:
    """A scalar or 3-vector field stored as Fourier coefficients.

    ``coeffs`` has shape (ncomp, n1, n2, n3) with ncomp in {1, 3} (2-component
    horizontal quantities are stored with a zero third component).  Real-valued
    fields satisfy conjugate symmetry c(-xi) = conj(c(xi)); all constructors
    and operators in this module preserve it.  Instances are treated as
    immutable values: operations return new fields.
    """

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: Grid, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.ndim == 3:
            coeffs = coeffs[None]
        if coeffs.shape[1:] != grid.shape or coeffs.shape[0] not in (1, 2, 3):
            raise ValueError("coefficient shape %r does not match grid %r"
                             % (coeffs.shape, grid.shape))
        self.grid = grid
        self.coeffs = coeffs

    # -- constructors --------------------------------------------------------
    @classmethod
    def zero(cls, grid: Grid, ncomp: int = 1) -> "SpectralField3":
        return cls(grid, np.zeros((ncomp,) + grid.shape, dtype=np.complex128))

    @classmethod
    def from_values(cls, grid: Grid, values: np.ndarray) -> "SpectralField3":
        """Build a field from real physical samples, shape ([ncomp,] n1, n2, n3)."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 3:
            values = values[None]
        coeffs = np.fft.fftn(values, axes=(-3, -2, -1)) / grid.npoints
        return cls(grid, coeffs)

    # -- basic info ----------------------------------------------------------
    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[0]

    @property
    def is_vector(self) -> bool:
        return self.ncomp > 1

    def component(self, i: int) -> "SpectralField3":
        return SpectralField3(self.grid, self.coeffs[i : i + 1])

    def values(self) -> np.ndarray:
        """Physical-space samples (real part), shape (ncomp, n1, n2, n3)."""
        return batch_values(self.grid, self.coeffs)

    def l2(self) -> float:
        """L2 norm under the normalized (mean) measure on the torus."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def conj_symmetry_error(self) -> float:
        flipped = self.coeffs
        for ax in (-3, -2, -1):
            flipped = np.flip(np.roll(flipped, -1, axis=ax), axis=ax)
        return float(np.max(np.abs(flipped.conj() - self.coeffs)))

    def copy(self) -> "SpectralField3":
        return SpectralField3(self.grid, self.coeffs.copy())

    # -- algebra ---------------------------------------------------------------
    def _check(self, other: "SpectralField3"):
        if other.grid != self.grid or other.ncomp != self.ncomp:
            raise ValueError("field mismatch")

    def __add__(self, other: "SpectralField3") -> "SpectralField3":
        self._check(other)
        return SpectralField3(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField3") -> "SpectralField3":
        self._check(other)
        return SpectralField3(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c: float) -> "SpectralField3":
        return SpectralField3(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField3":
        return SpectralField3(self.grid, -self.coeffs)

    def multiplier(self, m: np.ndarray) -> "SpectralField3":
        """Apply a diagonal Fourier multiplier (broadcast over components)."""
        return SpectralField3(self.grid, self.coeffs * m[None])


def as_vector(components: Sequence[SpectralField3]) -> SpectralField3:
    grid = components[0].grid
    return SpectralField3(grid, np.concatenate([c.coeffs for c in components]))


# ---------------------------------------------------------------------------
# dyadic block projectors
# ---------------------------------------------------------------------------

def _h_multiplier(grid: Grid, w: np.ndarray) -> np.ndarray:
    return w[:, :, None]


def _v_multiplier(grid: Grid, w: np.ndarray) -> np.ndarray:
    return w[None, None, :]


def h_block(f: SpectralField3, k: int, cutoffs: CutoffPair | None = None) -> SpectralField3:
    """Horizontal dyadic block: multiply by phi(2^-k |xi_h|)."""
    cut = cutoffs or default_cutoffs()
    return f.multiplier(_h_multiplier(f.grid, cut.phi(f.grid.kh * 2.0**-k)))


def v_block(f: SpectralField3, el: int, cutoffs: CutoffPair | None = None) -> SpectralField3:
    """Vertical dyadic block: multiply by phi(2^-l |xi_3|)."""
    cut = cutoffs or default_cutoffs()
    return f.multiplier(_v_multiplier(f.grid, cut.phi(f.grid.k3abs * 2.0**-el)))


def iso_block(f: SpectralField3, j: int, cutoffs: CutoffPair | None = None) -> SpectralField3:
    """Isotropic dyadic block: multiply by phi(2^-j |xi|)."""
    cut = cutoffs or default_cutoffs()
    return f.multiplier(cut.phi(f.grid.kmod * 2.0**-j))


def h_lowpass(f: SpectralField3, k: int, cutoffs: CutoffPair | None = None) -> SpectralField3:
    """Horizontal low-pass: chi(2^-k |xi_h|).  Includes the horizontal mean."""
    cut = cutoffs or default_cutoffs()
    return f.multiplier(_h_multiplier(f.grid, cut.chi(f.grid.kh * 2.0**-k)))


def v_lowpass(f: SpectralField3, el: int, cutoffs: CutoffPair | None = None) -> SpectralField3:
    cut = cutoffs or default_cutoffs()
    return f.multiplier(_v_multiplier(f.grid, cut.chi(f.grid.k3abs * 2.0**-el)))


def iso_lowpass(f: SpectralField3, j: int, cutoffs: CutoffPair | None = None) -> SpectralField3:
    cut = cutoffs or default_cutoffs()
    return f.multiplier(cut.chi(f.grid.kmod * 2.0**-j))


def h_mean(f: SpectralField3) -> SpectralField3:
    """Projector onto the xi_h = 0 plane (the horizontal mean)."""
    return f.multiplier(_h_multiplier(f.grid, f.grid.h_mean_mask))


def v_mean(f: SpectralField3) -> SpectralField3:
    return f.multiplier(_v_multiplier(f.grid, f.grid.v_mean_mask))


def iso_mean(f: SpectralField3) -> SpectralField3:
    return f.multiplier(f.grid.iso_mean_mask)


# ---------------------------------------------------------------------------
# differential operators (exact diagonal multipliers)
# ---------------------------------------------------------------------------

def _deriv(f: SpectralField3, axis: int) -> np.ndarray:
    g = f.grid
    k = (g.k1, g.k2, g.k3)[axis]
    shape = [1, 1, 1]
    shape[axis] = -1
    return f.coeffs * (1j * k.reshape(shape))[None]


def grad_h(f: SpectralField3) -> SpectralField3:
    """Horizontal gradient of a scalar, returned as a vector with zero third slot."""
    if f.is_vector:
        raise ValueError("grad_h expects a scalar field")
    g = f.grid
    out = np.concatenate([_deriv(f, 0), _deriv(f, 1),
                          np.zeros((1,) + g.shape, dtype=np.complex128)])
    return SpectralField3(g, out)


def d3(f: SpectralField3) -> SpectralField3:
    """Vertical derivative, applied componentwise."""
    return SpectralField3(f.grid, _deriv(f, 2))


def d1(f: SpectralField3) -> SpectralField3:
    return SpectralField3(f.grid, _deriv(f, 0))


def d2(f: SpectralField3) -> SpectralField3:
    return SpectralField3(f.grid, _deriv(f, 1))


def grad(f: SpectralField3) -> SpectralField3:
    if f.is_vector:
        raise ValueError("grad expects a scalar field")
    out = np.concatenate([_deriv(f, 0), _deriv(f, 1), _deriv(f, 2)])
    return SpectralField3(f.grid, out)


def div_h(v: SpectralField3) -> SpectralField3:
    """Horizontal divergence of a vector field (uses the first two components)."""
    if not v.is_vector:
        raise ValueError("div_h expects a vector field")
    out = _deriv(v.component(0), 0) + _deriv(v.component(1), 1)
    return SpectralField3(v.grid, out)


def div(v: SpectralField3) -> SpectralField3:
    if v.ncomp != 3:
        raise ValueError("div expects a 3-component field")
    out = (_deriv(v.component(0), 0) + _deriv(v.component(1), 1)
           + _deriv(v.component(2), 2))
    return SpectralField3(v.grid, out)


def laplacian_eps(f: SpectralField3, eps: float) -> SpectralField3:
    """Anisotropic Laplacian Delta_h + eps^2 d3^2 as the multiplier -(|xi_h|^2 + eps^2 xi3^2)."""
    g = f.grid
    m = -(g.ksq_h[:, :, None] + (eps**2) * g.ksq3[None, None, :])
    return f.multiplier(m)


def nabla_eps(f: SpectralField3, eps: float) -> SpectralField3:
    """Scaled gradient (d1, d2, eps*d3) of a scalar."""
    if f.is_vector:
        raise ValueError("nabla_eps expects a scalar field")
    out = np.concatenate([_deriv(f, 0), _deriv(f, 1), eps * _deriv(f, 2)])
    return SpectralField3(f.grid, out)


def nabla_sup_eps(f: SpectralField3, eps: float) -> SpectralField3:
    """Anisotropic pressure gradient (d1, d2, eps^2*d3) of a scalar."""
    if f.is_vector:
        raise ValueError("nabla_sup_eps expects a scalar field")
    out = np.concatenate([_deriv(f, 0), _deriv(f, 1), (eps**2) * _deriv(f, 2)])
    return SpectralField3(f.grid, out)


def div_eps(v: SpectralField3, eps: float) -> SpectralField3:
    """Scaled divergence d1 v1 + d2 v2 + eps d3 v3 (adjoint of -nabla_eps)."""
    if v.ncomp != 3:
        raise ValueError("div_eps expects a 3-component field")
    out = (_deriv(v.component(0), 0) + _deriv(v.component(1), 1)
           + eps * _deriv(v.component(2), 2))
    return SpectralField3(v.grid, out)


def leray_project(v: SpectralField3) -> SpectralField3:
    """Orthogonal projection onto divergence-free fields; zero mode untouched."""
    if v.ncomp != 3:
        raise ValueError("leray_project expects a 3-component field")
    g = v.grid
    kx = g.k1[:, None, None]
    ky = g.k2[None, :, None]
    kz = g.k3[None, None, :]
    kdotv = kx * v.coeffs[0] + ky * v.coeffs[1] + kz * v.coeffs[2]
    scale = kdotv * g.inv_ksq
    out = v.coeffs.copy()
    out[0] -= kx * scale
    out[1] -= ky * scale
    out[2] -= kz * scale
    return SpectralField3(g, out)


def dealias(f: SpectralField3) -> SpectralField3:
    """Zero every coefficient outside the 2/3 ball (per-axis integer rule)."""
    return f.multiplier(f.grid.dealias_mask.astype(float))


def multiply(a: SpectralField3, b: SpectralField3) -> SpectralField3:
    """Pointwise physical-space product of two scalars, dealiased on output."""
    if a.grid != b.grid:
        raise ValueError("grid mismatch")
    g = a.grid
    vals = batch_values(g, a.coeffs) * batch_values(g, b.coeffs)
    return dealias(SpectralField3(g, batch_spectra(g, vals)))


# ---------------------------------------------------------------------------
# real-FFT helpers (fields are real; the half spectrum carries everything)
# ---------------------------------------------------------------------------

def half_spectrum(coeffs: np.ndarray, n3: int) -> np.ndarray:
    """Slice the nonnegative-xi3 half of a conjugate-symmetric spectrum."""
    return coeffs[..., : n3 // 2 + 1]


def full_from_half(half: np.ndarray, n3: int) -> np.ndarray:
    """Rebuild the full spectrum from the half spectrum of a real field."""
    h = n3 // 2 + 1
    full = np.empty(half.shape[:-1] + (n3,), dtype=np.complex128)
    full[..., :h] = half
    mirror = np.conj(half[..., 1 : n3 // 2])
    for ax in (-3, -2):
        mirror = np.flip(np.roll(mirror, -1, axis=ax), axis=ax)
    full[..., h:] = mirror[..., ::-1]
    return full


def batch_values(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Physical samples of a batch of conjugate-symmetric spectra (..., n1, n2, n3)."""
    return np.fft.irfftn(half_spectrum(coeffs, grid.n3), s=grid.shape,
                         axes=(-3, -2, -1)) * grid.npoints


def batch_spectra(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Full spectra of a batch of real physical arrays."""
    half = np.fft.rfftn(values, axes=(-3, -2, -1)) / grid.npoints
    return full_from_half(half, grid.n3)


# ---------------------------------------------------------------------------
# snapshot files
# ---------------------------------------------------------------------------

def write_snapshot(field: SpectralField3, path, time: float = 0.0) -> None:
    """Write a field as a JSON header line plus raw little-endian (re, im) pairs.

    Coefficients are written row-major in FFT index order, one component after
    another.
    """
    header = {
        "n1": field.grid.n1,
        "n2": field.grid.n2,
        "n3": field.grid.n3,
        "L": field.grid.L,
        "components": field.ncomp,
        "time": float(time),
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(field.coeffs, dtype="<c16").tobytes())


def read_snapshot(path) -> tuple[SpectralField3, float]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        grid = Grid(header["n1"], header["n2"], header["n3"], header["L"])
        ncomp = int(header["components"])
        raw = fh.read()
    coeffs = np.frombuffer(raw, dtype="<c16").reshape((ncomp,) + grid.shape)
    return SpectralField3(grid, coeffs.astype(np.complex128)), float(header["time"])
