"""Reproducible random fields with an analytic spectral envelope.

White noise is sampled in physical space (which keeps conjugate symmetry
exact) and shaped by exp(-envelope_delta * |xi|) so that phase-weighted norms
stay finite for bands below the envelope.  Fields are dealiased and have zero
mean by construction.
"""

from __future__ import annotations

import numpy as np

from .spectral_core import Grid, SpectralField3, dealias, leray_project

__all__ = ["random_field", "random_solenoidal"]


def random_field(grid: Grid, rng: np.random.Generator, envelope_delta: float = 0.3,
                 ncomp: int = 1, amplitude: float = 1.0,
                 dealiased: bool = True) -> SpectralField3:
    """Gaussian field with spectral envelope exp(-envelope_delta |xi|)."""
    noise = rng.standard_normal((ncomp,) + grid.shape)
    f = SpectralField3.from_values(grid, noise)
    env = np.exp(-envelope_delta * grid.kmod)
    env[grid.kmod == 0.0] = 0.0
    out = f.multiplier(env)
    if dealiased:
        out = dealias(out)
    norm = out.l2()
    if norm > 0:
        out = out * (amplitude / norm)
    return out


def random_solenoidal(grid: Grid, rng: np.random.Generator,
                      envelope_delta: float = 0.3,
                      amplitude: float = 1.0) -> SpectralField3:
    """Divergence-free random vector field, unit L2 norm times ``amplitude``."""
    v = random_field(grid, rng, envelope_delta, ncomp=3, amplitude=1.0)
    v = leray_project(v)
    norm = v.l2()
    if norm > 0:
        v = v * (amplitude / norm)
    return v
