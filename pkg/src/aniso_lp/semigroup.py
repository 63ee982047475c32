"""Anisotropic heat semigroup, its Duhamel integral, and smoothing-rate checks.

The semigroup acts diagonally: each mode decays by exp(-t mu) with
mu = |xi_h|^2 + eps^2 xi_3^2.  The Duhamel integral of a piecewise-constant
forcing is integrated exactly per mode (exponential-integrator weights), which
removes all stiffness from the dissipative term.

The smoothing checks compare phase-weighted Chemin-Lerner norms of the
propagated field against the matching data norm; the ratio is the empirical
constant of the estimate, whose uniformity in eps is the testable content.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .norms import NormAccumulator, apply_phase, as_index, besov_norm, cl_norm
from .spectral_core import Grid, SpectralField3

__all__ = [
    "EpsParams",
    "heat_apply",
    "duhamel",
    "smoothing_check_41",
    "smoothing_check_42",
    "damping_bound_check",
]


@dataclass(frozen=True)
class EpsParams:
    """Scaling parameters (eps, alpha, beta, gamma) of the rescaled system."""

    eps: float
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if not (0.0 < self.eps <= 1.0):
            raise ValueError("eps must lie in (0, 1]")

    def constraint_report(self) -> dict:
        """Which published parameter ranges this tuple satisfies.

        'strict' is the range the solver validates against; the two looser
        families appear in intermediate statements and are logged only.
        """
        a, b, g = self.alpha, self.beta, self.gamma
        strict = (0.0 < a < 1.0 / 3.0 and b > 2.0 * a
                  and 0.0 < g < min((b - 2.0 * a) / 5.0, (1.0 - 3.0 * a) / 5.0))
        transport = (0.0 < a < 0.5 and b > a
                     and 0.0 < g < min((b - a) / 2.0, (1.0 - 2.0 * a) / 4.0))
        pressure = (0.0 < a < 1.0 / 3.0 and b > 2.0 * a
                    and 0.0 < g <= min((b - 2.0 * a) / 2.0, (1.0 - 3.0 * a) / 4.0))
        return {"strict": strict, "transport": transport, "pressure": pressure}

    def validate(self, allow_out_of_range: bool = False) -> dict:
        report = self.constraint_report()
        if not report["strict"] and not allow_out_of_range:
            raise ValueError("parameters outside the strict admissible range: %r"
                             % (report,))
        return report


def _mu(grid: Grid, eps: float) -> np.ndarray:
    return grid.ksq_h[:, :, None] + (eps**2) * grid.ksq3[None, None, :]


def heat_apply(f: SpectralField3, t: float, eps: float) -> SpectralField3:
    """Anisotropic heat flow: multiply each mode by exp(-t (|xi_h|^2 + eps^2 xi3^2))."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t == 0.0:
        return f.copy()
    return f.multiplier(np.exp(-t * _mu(f.grid, eps)))


def heat_step_pair(grid: Grid, dt: float, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """(exp(-dt mu), (1 - exp(-dt mu))/mu) with the zero mode weight = dt."""
    mu = _mu(grid, eps)
    decay = np.exp(-dt * mu)
    w = np.empty_like(mu)
    nz = mu > 0
    w[nz] = -np.expm1(-dt * mu[nz]) / mu[nz]
    w[~nz] = dt
    return decay, w


def duhamel(forcing_samples, t: float, eps: float) -> SpectralField3:
    """integral_0^t exp((t-t') Delta_eps) f(t') dt' for piecewise-constant forcing.

    ``forcing_samples`` is a sequence of (t_i, field) with t_0 = 0 <= ... < t;
    sample i is held constant on [t_i, t_{i+1}) and the last one up to t.
    Each segment is integrated exactly per mode.
    """
    samples = list(forcing_samples)
    if not samples:
        raise ValueError("empty forcing series")
    times = [float(ti) for ti, _ in samples]
    if times[0] != 0.0 or any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise ValueError("sample times must start at 0 and increase")
    grid = samples[0][1].grid
    ncomp = samples[0][1].ncomp
    out = np.zeros((ncomp,) + grid.shape, dtype=np.complex128)
    bounds = times + [float(t)]
    for i, (_, f) in enumerate(samples):
        t0, t1 = bounds[i], min(bounds[i + 1], float(t))
        if t1 <= t0:
            continue
        decay, w = heat_step_pair(grid, t1 - t0, eps)
        tail = np.exp(-(float(t) - t1) * _mu(grid, eps))
        out += f.coeffs * (tail * w)[None]
    return SpectralField3(grid, out)


# ---------------------------------------------------------------------------
# smoothing-estimate checks
# ---------------------------------------------------------------------------

def _time_grid(T: float, n: int) -> np.ndarray:
    """Geometric grid resolving the fast initial decay, starting at 0."""
    return np.concatenate([[0.0], np.geomspace(T * 1e-8, T, n)])


def _cl_accumulate_series(grid: Grid, tables: np.ndarray, times: np.ndarray,
                          p, idx) -> float:
    """Chemin-Lerner norm from per-block tables sampled on a time grid."""
    idx = as_index(idx)
    from .norms import _index_weights
    w = _index_weights(grid, idx)
    if p in (np.inf, float("inf")):
        per_block = tables.max(axis=0)
    else:
        per_block = np.trapezoid(tables**p, times, axis=0) ** (1.0 / p)
    return float(np.sum(w * per_block))


def smoothing_check_41(v0: SpectralField3, eps: float, idx, beta_exp: float,
                       r, delta: float, *, line: int = 1, T: float = 200.0,
                       nt: int = 400) -> float:
    """Ratio of the heat-flow Chemin-Lerner norm to its data norm.

    line 1: eps^(beta/r) ||[e^{t D_eps} v0]_Phi||_{Lr(B^{sigma,s})} vs
            ||e^{delta|D|} v0||_{B^{sigma-(2-beta)/r, s-beta/r}}.
    line 2: same left side for the vertical component only, measured against
            the horizontal data norm one index up/down (uses div v0 = 0).
    Phase is the static band Phi = delta |xi|.
    """
    if not (0.0 <= beta_exp <= 2.0):
        raise ValueError("beta exponent must lie in [0, 2]")
    if r not in (1, 2, np.inf, float("inf")):
        raise ValueError("r must be 1, 2 or inf")
    idx = as_index(idx)
    grid = v0.grid
    rinv = 0.0 if r in (np.inf, float("inf")) else 1.0 / r
    if line == 1:
        probe = apply_phase(v0, delta)
        data_idx = (idx.sigma - (2.0 - beta_exp) * rinv, idx.s - beta_exp * rinv)
        data = besov_norm(apply_phase(v0, delta), data_idx)
    elif line == 2:
        if v0.ncomp != 3:
            raise ValueError("line 2 needs the full velocity")
        from .spectral_core import div
        vd = div(v0)
        if vd.l2() > 1e-8 * max(v0.l2(), 1e-300):
            raise ValueError("line 2 requires a divergence-free field")
        probe = apply_phase(v0.component(2), delta)
        vh = SpectralField3(grid, v0.coeffs[:2])
        data_idx = (idx.sigma + 1.0 - (2.0 - beta_exp) * rinv,
                    idx.s - 1.0 - beta_exp * rinv)
        data = besov_norm(apply_phase(vh, delta), data_idx)
    else:
        raise ValueError("line must be 1 or 2")

    from .norms import block_l2_table
    times = _time_grid(T, nt)
    mu = _mu(grid, eps)
    tables = []
    for t in times:
        ft = probe.multiplier(np.exp(-t * mu))
        tables.append(block_l2_table(ft))
    tables = np.stack(tables)
    lhs = (eps ** (beta_exp * rinv)) * _cl_accumulate_series(grid, tables, times, r, idx)
    return 0.0 if data == 0.0 else lhs / data


def smoothing_check_42(forcing_samples, eps: float, idx, beta_exp: float,
                       r1, r2, delta: float, *, T: float | None = None,
                       nt: int = 200) -> float:
    """Duhamel smoothing ratio at exponents (r1, r2), 1/r = 1 + 1/r1 - 1/r2.

    ``forcing_samples`` is the (t_i, field) series of ``duhamel``; the left
    side is measured on a refined time grid over [0, T].
    """
    def _inv(r):
        return 0.0 if r in (np.inf, float("inf")) else 1.0 / r

    if _inv(r2) < _inv(r1):
        raise ValueError("need r2 <= r1")
    if not (0.0 <= beta_exp <= 2.0):
        raise ValueError("beta exponent must lie in [0, 2]")
    idx = as_index(idx)
    rinv = 1.0 + _inv(r1) - _inv(r2)
    samples = list(forcing_samples)
    grid = samples[0][1].grid
    t_end = T if T is not None else max(10.0, 2.0 * samples[-1][0] + 10.0)

    from .norms import block_l2_table
    times = np.linspace(0.0, t_end, nt)
    tables = np.stack([block_l2_table(apply_phase(duhamel(samples, t, eps), delta))
                       for t in times])
    lhs = (eps ** (beta_exp * rinv)) * _cl_accumulate_series(
        grid, tables, times, r1, idx)

    data_idx = (idx.sigma - (2.0 - beta_exp) * rinv, idx.s - beta_exp * rinv)
    ftables = np.stack([block_l2_table(apply_phase(f, delta))
                        for _, f in samples])
    # piecewise-constant forcing: exact rectangle widths up to t_end
    edges = np.asarray([ti for ti, _ in samples] + [t_end])
    widths = np.maximum(np.diff(edges), 0.0)
    from .norms import _index_weights
    w = _index_weights(grid, as_index(data_idx))
    if r2 in (np.inf, float("inf")):
        per_block = ftables.max(axis=0)
    else:
        per_block = np.tensordot(widths, ftables**r2, axes=(0, 0)) ** (1.0 / r2)
    rhs = float(np.sum(w * per_block))
    return 0.0 if rhs == 0.0 else lhs / rhs


# ---------------------------------------------------------------------------
# analyticity damping
# ---------------------------------------------------------------------------

def damping_bound_check(lam: float, theta_dot_samples, ell: int,
                        c: float = 1.0, dt: float = 1.0) -> float:
    """lam 2^l times the damped band-consumption integral; always <= 1/c.

    The integral int_0^T exp(-c lam 2^l int_{t'}^T thdot) thdot(t') dt' is
    evaluated exactly for piecewise-constant thdot >= 0, where it telescopes
    to (1 - exp(-c lam 2^l Theta(T))) / (c lam 2^l).
    """
    th = np.asarray(theta_dot_samples, dtype=float)
    if th.size and th.min() < 0:
        raise ValueError("theta-dot samples must be nonnegative")
    kappa = c * lam * 2.0**ell
    total = float(np.sum(th) * dt)
    integral = -np.expm1(-kappa * total) / kappa
    return lam * 2.0**ell * integral
