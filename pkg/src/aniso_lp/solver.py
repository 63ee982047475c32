"""Semi-implicit pseudo-spectral integration of the rescaled slow-variable flow.

The system advanced here couples a transported density perturbation a to a
velocity v with anisotropic dissipation:

    dt a + eps^(1-alpha) v . grad a = 0,
    (1 + eps^beta a)(dt v + eps^(1-alpha) v . grad v) - D_eps v + grad_sup_eps q = 0,
    div v = 0,

with q from the degenerate elliptic pressure solve.  One step performs

  (i)   explicit transport of a (spectral advection, dealiased products),
  (ii)  pressure solve at the step-start state,
  (iii) momentum update by the first-order exponential integrator: the heat
        factor is exact per mode and the forcing (advection, density
        correction, pressure gradient) is frozen over the step,
  (iv)  Leray projection (velocity kept mean-free),
  (v)   band consumption theta advanced explicitly with the step-start phase,
  (vi)  per-block Chemin-Lerner accumulators sampled at the step start
        (left-endpoint rectangles).

The analytic band r(t) = delta - lam * theta(t) shrinks as the weighted
velocity norms feed theta; the run halts when it would cross zero.  Aggregate
norm bookkeeping (psi1..psi4) and the bootstrap monitor follow the
accumulators and are reported per step.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .norms import (NormAccumulator, PhaseState, apply_phase, block_l2_table,
                    cl_norm, x_norms, _index_weights, as_index)
from .paraproduct import PositivityError, compose_G
from .pressure import PressureConfig, PressureError, pressure_solve
from .randfields import random_field, random_solenoidal
from .semigroup import EpsParams, heat_step_pair
from .spectral_core import (Grid, SpectralField3, as_vector, d3, dealias, div,
                            div_h, grad, grad_h, laplacian_eps, leray_project,
                            multiply, nabla_eps, nabla_sup_eps, write_snapshot)

__all__ = [
    "SolverState",
    "RunConfig",
    "DiagnosticsRecord",
    "RunResult",
    "build_profile",
    "make_ill_prepared",
    "theta_dot",
    "step",
    "run",
    "epsilon_zero",
    "transport_estimate_monitor",
    "write_run_outputs",
]

THETA_H_INDICES = lambda g: [(1.0, 0.5), (1.0 - g, 0.5 + g), (1.0 + g, 0.5 - g)]
THETA_H_HIGH = lambda g: (-g, 1.5 + g)
THETA_V_INDICES = lambda g: [(1.0, 0.5), (1.0 + g, 0.5 - g)]
THETA_V_HIGH = lambda g: (-g, 1.5 + g)

PSI1_INDICES = lambda g: [(1.0, 0.5), (1.0 + g, 0.5 - g), (1.0 - g, 0.5 + g)]
PSI1_HIGH = lambda g: (g, 1.5 - g)
PSI2_INDICES = lambda g: [(0.0, 0.5), (g, 0.5 - g), (-g, 0.5 + g)]
PSI3_LOW = lambda g: [(2.0, 0.5), (2.0 + g, 0.5 - g), (2.0 - g, 0.5 + g)]
PSI3_HIGH = lambda g: [(0.0, 2.5), (g, 2.5 - g), (-g, 2.5 + g)]
PSI4_LOW = lambda g: [(1.0, 0.5), (1.0 + g, 0.5 - g), (1.0 - g, 0.5 + g)]
PSI4_HIGH = lambda g: [(0.0, 1.5), (g, 1.5 - g), (-g, 1.5 + g)]


# ---------------------------------------------------------------------------
# named analytic data profiles
# ---------------------------------------------------------------------------

def _mesh(grid: Grid):
    axes = [np.linspace(0.0, grid.L, n, endpoint=False)
            for n in (grid.n1, grid.n2, grid.n3)]
    return np.meshgrid(*axes, indexing="ij")


def build_profile(grid: Grid, spec: dict, rng: np.random.Generator) -> SpectralField3:
    """Construct a named analytic profile on the grid.

    Scalar profiles: zero, single_mode, random_scalar.
    Vector profiles: zero_vector, curl_mode, taylor_green_h, random_solenoidal.
    """
    name = spec.get("name", "zero")
    amp = float(spec.get("amplitude", 0.0))
    if name == "zero":
        return SpectralField3.zero(grid, 1)
    if name == "zero_vector":
        return SpectralField3.zero(grid, 3)
    if name == "single_mode":
        m1, m2, m3 = spec.get("mode", [1, 0, 2])
        x1, x2, x3 = _mesh(grid)
        vals = amp * np.cos(m1 * x1) * np.cos(m2 * x2) * np.cos(m3 * x3)
        return dealias(SpectralField3.from_values(grid, vals))
    if name == "random_scalar":
        return random_field(grid, rng, spec.get("envelope_delta", 0.3),
                            amplitude=amp)
    if name == "curl_mode":
        mh = int(spec.get("mode_h", 1))
        mv = int(spec.get("mode_v", 1))
        c = amp / max(mh, mv)
        x1, _, x3 = _mesh(grid)
        v1 = c * mv * np.cos(mh * x1) * np.sin(mv * x3)
        v3 = -c * mh * np.sin(mh * x1) * np.cos(mv * x3)
        vals = np.stack([v1, np.zeros_like(v1), v3])
        return dealias(SpectralField3.from_values(grid, vals))
    if name == "taylor_green_h":
        x1, x2, _ = _mesh(grid)
        vals = np.stack([amp * np.sin(x1) * np.cos(x2),
                         -amp * np.cos(x1) * np.sin(x2),
                         np.zeros_like(x1)])
        return dealias(SpectralField3.from_values(grid, vals))
    if name == "random_solenoidal":
        return random_solenoidal(grid, rng, spec.get("envelope_delta", 0.3),
                                 amplitude=amp)
    raise ValueError("unknown profile %r" % (name,))


# ---------------------------------------------------------------------------
# ill-prepared data
# ---------------------------------------------------------------------------

def _slow_vertical(f: SpectralField3, eps: float) -> SpectralField3:
    """Realize x3 -> eps*x3 on the same torus.

    When every active vertical mode m3 has integer eps*m3 the coefficients are
    reindexed exactly; otherwise the slow field is sampled on the grid and the
    trigonometric interpolation error is measured at staggered points.  An
    error above 1e-8 raises ValueError.
    """
    grid = f.grid
    m3 = np.rint(np.fft.fftfreq(grid.n3, d=1.0 / grid.n3)).astype(int)
    active = np.where(np.any(np.abs(f.coeffs) > 0, axis=(0, 1, 2)))[0]
    targets = eps * m3[active]
    if np.all(np.abs(targets - np.rint(targets)) < 1e-9):
        out = np.zeros_like(f.coeffs)
        index_of = {int(m): i for i, m in enumerate(m3)}
        for src, tgt in zip(active, np.rint(targets).astype(int)):
            out[:, :, :, index_of[int(tgt)]] += f.coeffs[:, :, :, src]
        return SpectralField3(grid, out)

    # spectral interpolation fallback
    x3 = np.linspace(0.0, grid.L, grid.n3, endpoint=False)

    def eval_at(x3_points):
        phase = np.exp(1j * np.outer(m3 * eps, x3_points))   # (n3, npts)
        mixed = np.tensordot(f.coeffs, phase, axes=([3], [0]))
        vals = np.fft.ifftn(mixed, axes=(1, 2)) * (grid.n1 * grid.n2)
        return vals.real

    vals = eval_at(x3)
    out = SpectralField3.from_values(grid, vals)
    stag = x3 + 0.5 * grid.L / grid.n3
    direct = eval_at(stag)
    phase = np.exp(1j * np.outer(m3, stag))
    interp = np.tensordot(out.coeffs, phase, axes=([3], [0]))
    interp = (np.fft.ifftn(interp, axes=(1, 2)) * (grid.n1 * grid.n2)).real
    scale = max(np.abs(direct).max(), 1e-300)
    err = np.abs(direct - interp).max() / scale
    if err > 1e-8:
        raise ValueError("slow variable not representable on this grid "
                         "(interpolation error %.3e)" % err)
    return out


def prepare_rescaled(a0_profile: SpectralField3,
                     v0_profile: SpectralField3) -> tuple[SpectralField3, SpectralField3]:
    """Dealias, project and de-mean the profiles into solver-ready data."""
    grid = a0_profile.grid
    v0 = leray_project(dealias(v0_profile))
    coeffs = v0.coeffs.copy()
    coeffs[:, 0, 0, 0] = 0.0
    v0 = SpectralField3(grid, coeffs)
    return dealias(a0_profile), v0


def make_ill_prepared(a0_profile: SpectralField3, v0_profile: SpectralField3,
                      params: EpsParams):
    """Rescaled data for the solver plus the physical pair for demonstration.

    Returns ((a0, v0), (rho0, u0)) where rho0 = 1 + eps^beta a0(x_h, eps x3)
    and u0 = (eps^(1-alpha) v0_h, eps^-alpha v0_3)(x_h, eps x3).  The vertical
    component of u0 carries the large factor eps^-alpha: nothing about this
    data is small as eps shrinks.
    """
    grid = a0_profile.grid
    a0, v0 = prepare_rescaled(a0_profile, v0_profile)
    eps, alpha, beta = params.eps, params.alpha, params.beta
    a_slow = _slow_vertical(a0, eps)
    v_slow = _slow_vertical(v0, eps)
    one = SpectralField3.zero(grid, 1).coeffs
    one[0, 0, 0, 0] = 1.0
    rho0 = SpectralField3(grid, one + (eps**beta) * a_slow.coeffs)
    u_coeffs = v_slow.coeffs.copy()
    u_coeffs[0] *= eps ** (1.0 - alpha)
    u_coeffs[1] *= eps ** (1.0 - alpha)
    u_coeffs[2] *= eps ** (-alpha)
    u0 = SpectralField3(grid, u_coeffs)
    return (a0, v0), (rho0, u0)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "grid_n", "L", "eps", "alpha", "beta", "gamma", "delta", "lam", "dt",
    "t_end", "pressure", "seed", "a0", "v0", "bootstrap_c", "linear_only",
    "allow_out_of_range", "snapshot_interval", "output_dir",
}


@dataclass
class RunConfig:
    """Resolved solver configuration; everything physical is explicit."""

    grid_n: int = 32
    L: float = 2.0 * math.pi
    eps: float = 0.1
    alpha: float = 0.1
    beta: float = 0.5
    gamma: float = 0.02
    delta: float = 0.4
    lam: float = 4.0
    dt: float = 0.01
    t_end: float = 1.0
    pressure: PressureConfig = field(default_factory=PressureConfig)
    seed: int = 0
    a0: dict = field(default_factory=lambda: {"name": "zero"})
    v0: dict = field(default_factory=lambda: {"name": "zero_vector"})
    bootstrap_c: float = 1.0
    linear_only: bool = False
    allow_out_of_range: bool = False
    snapshot_interval: int = 0
    output_dir: str | None = None

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        self.params().validate(self.allow_out_of_range)

    def params(self) -> EpsParams:
        return EpsParams(self.eps, self.alpha, self.beta, self.gamma)

    def grid(self) -> Grid:
        return Grid.cubic(self.grid_n, self.L)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise ValueError("unknown config keys: %s" % sorted(unknown))
        d = dict(d)
        if "pressure" in d and isinstance(d["pressure"], dict):
            d["pressure"] = PressureConfig(**d["pressure"])
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


@dataclass
class DiagnosticsRecord:
    t: float
    theta: float
    band: float
    psi1: float
    psi2: float
    psi3: float
    psi4: float
    psi: float
    energy: float
    div_residual: float
    pressure_iters: int
    pressure_residual: float
    min_density: float

    COLUMNS = ("t", "theta", "band", "psi1", "psi2", "psi3", "psi4", "psi",
               "energy", "div_residual", "pressure_iters", "pressure_residual",
               "min_density")


@dataclass
class SolverState:
    a: SpectralField3
    v: SpectralField3
    q: SpectralField3
    t: float
    phase: PhaseState
    acc: dict
    theta_history: list
    last_pressure: tuple = (0, 0.0)

    @property
    def band(self) -> float:
        return self.phase.band


class BandExhausted(RuntimeError):
    pass


def _new_accumulators(grid: Grid) -> dict:
    names = ("a", "vh", "v3", "v", "gradh_q", "gradeps_q")
    return {n: NormAccumulator(grid) for n in names}


def _phased_tables(state: SolverState, params: EpsParams):
    """Block tables of the phase-weighted fields at the current band."""
    grid = state.a.grid
    r = state.band
    if r < 0:
        raise BandExhausted("analytic band exhausted")
    mult = np.exp(r * grid.kmod)
    ta = block_l2_table(state.a.multiplier(mult))
    tv = [block_l2_table(state.v.component(i).multiplier(mult))
          for i in range(3)]
    return mult, ta, tv[0] + tv[1], tv[2]


def _weighted(grid: Grid, table: np.ndarray, idx) -> float:
    return float(np.sum(_index_weights(grid, as_index(idx)) * table))


def theta_dot_tables(grid: Grid, t_vh: np.ndarray, t_v3: np.ndarray,
                     params: EpsParams) -> float:
    g = params.gamma
    e = params.eps
    horiz = sum(_weighted(grid, t_vh, idx) for idx in THETA_H_INDICES(g))
    horiz += e ** (1.0 + g) * _weighted(grid, t_vh, THETA_H_HIGH(g))
    vert = sum(_weighted(grid, t_v3, idx) for idx in THETA_V_INDICES(g))
    vert += e ** (1.0 + g) * _weighted(grid, t_v3, THETA_V_HIGH(g))
    return e ** (1.0 - params.alpha) * horiz + e**g * vert


def theta_dot(state: SolverState, params: EpsParams) -> float:
    """Band-consumption rate: weighted Besov norms of the phased velocity."""
    _, _, t_vh, t_v3 = _phased_tables(state, params)
    return theta_dot_tables(state.a.grid, t_vh, t_v3, params)


def psi_values(state: SolverState, params: EpsParams) -> tuple[float, float, float, float]:
    grid = state.a.grid
    g, e = params.gamma, params.eps
    acc = state.acc
    inf = np.inf
    psi1 = sum(cl_norm(acc["a"], inf, i) for i in PSI1_INDICES(g))
    psi1 += e ** (3 * params.alpha + 3 * g) * cl_norm(acc["a"], inf, PSI1_HIGH(g))
    psi2 = sum(cl_norm(acc["v"], inf, i) for i in PSI2_INDICES(g))
    low_h = sum(cl_norm(acc["vh"], 1, i) for i in PSI3_LOW(g))
    high_h = sum(cl_norm(acc["vh"], 1, i) for i in PSI3_HIGH(g))
    low_3 = sum(cl_norm(acc["v3"], 1, i) for i in PSI3_LOW(g))
    high_3 = sum(cl_norm(acc["v3"], 1, i) for i in PSI3_HIGH(g))
    psi3 = e ** (2 * params.alpha + 2 * g) * (low_h + e**2 * high_h) \
        + low_3 + e**2 * high_3
    low_h = sum(cl_norm(acc["vh"], 2, i) for i in PSI4_LOW(g))
    high_h = sum(cl_norm(acc["vh"], 2, i) for i in PSI4_HIGH(g))
    low_3 = sum(cl_norm(acc["v3"], 2, i) for i in PSI4_LOW(g))
    high_3 = sum(cl_norm(acc["v3"], 2, i) for i in PSI4_HIGH(g))
    psi4 = e ** (params.alpha + g) * (low_h + e * high_h) + low_3 + e * high_3
    return psi1, psi2, psi3, psi4


def _advect(v: SpectralField3, f: SpectralField3) -> SpectralField3:
    """v . grad f for scalar f, dealiased physical products."""
    g = grad(f)
    out = multiply(v.component(0), g.component(0))
    out = out + multiply(v.component(1), g.component(1))
    out = out + multiply(v.component(2), g.component(2))
    return out


def _forcing(a: SpectralField3, v: SpectralField3, q: SpectralField3,
             params: EpsParams) -> SpectralField3:
    """F1 + F2 + F3 at the step start (advection, density drag, pressure push)."""
    eps = params.eps
    f1 = [-(eps ** (1.0 - params.alpha)) * _advect(v, v.component(i))
          for i in range(3)]
    G = compose_G(a * (eps**params.beta))
    lap_v = [laplacian_eps(v.component(i), eps) for i in range(3)]
    f2 = [-1.0 * multiply(G, lap_v[i]) for i in range(3)]
    gq = nabla_sup_eps(q, eps)
    f3 = [multiply(G, gq.component(i)) - gq.component(i) for i in range(3)]
    return as_vector([f1[i] + f2[i] + f3[i] for i in range(3)])


def step(state: SolverState, dt: float, params: EpsParams,
         cfg: RunConfig) -> SolverState:
    """Advance one step; accumulators are sampled at the step start."""
    grid = state.a.grid
    eps = params.eps

    mult, ta, t_vh, t_v3 = _phased_tables(state, params)

    if cfg.linear_only:
        q = SpectralField3.zero(grid)
        iters, res = 0, 0.0
        a_new = state.a
        decay, _ = heat_step_pair(grid, dt, eps)
        v_new = SpectralField3(grid, state.v.coeffs * decay[None])
    else:
        q, iters, res = pressure_solve(state.a, state.v, params, cfg.pressure)
        adv = _advect(state.v, state.a)
        a_new = state.a - (dt * eps ** (1.0 - params.alpha)) * adv
        force = _forcing(state.a, state.v, q, params)
        decay, w = heat_step_pair(grid, dt, eps)
        v_new = SpectralField3(
            grid, state.v.coeffs * decay[None] + force.coeffs * w[None])
    v_new = leray_project(v_new)
    vc = v_new.coeffs.copy()
    vc[:, 0, 0, 0] = 0.0
    v_new = SpectralField3(grid, vc)

    # accumulate the step-start samples (left endpoint); q holds on [t, t+dt)
    state.acc["a"].update_table(ta, dt)
    state.acc["vh"].update_table(t_vh, dt)
    state.acc["v3"].update_table(t_v3, dt)
    state.acc["v"].update_table(t_vh + t_v3, dt)
    state.acc["gradh_q"].update_table(
        block_l2_table(grad_h(q).multiplier(mult)), dt)
    state.acc["gradeps_q"].update_table(
        block_l2_table(nabla_eps(q, eps).multiplier(mult)), dt)

    thdot = theta_dot_tables(grid, t_vh, t_v3, params)
    theta_new = state.phase.theta + dt * thdot
    state.theta_history.append((state.t, state.phase.theta, thdot))

    phase_new = PhaseState(state.phase.delta, state.phase.lam, theta_new,
                           state.phase.gamma)
    return SolverState(a_new, v_new, q, state.t + dt, phase_new, state.acc,
                       state.theta_history, (iters, res))


@dataclass
class RunResult:
    records: list
    verdict: str
    t_halt: float | None
    first_bootstrap_violation: dict | None
    params: EpsParams
    config: RunConfig
    x1: float
    x2: float
    x3: float
    theta_final: float
    theta_max: float
    psi_final: float
    psi_max: float
    pressure_y_norm: float
    pressure_z_norm: float
    accumulators: dict
    data_norms: dict
    state: SolverState | None = None


def _pressure_norms(acc: dict, gamma: float) -> tuple[float, float]:
    y = cl_norm(acc["gradh_q"], 1, (-1.0, 0.5)) \
        + cl_norm(acc["gradeps_q"], 1, (-1.0 + gamma, 0.5 - gamma))
    z = cl_norm(acc["gradeps_q"], 1, (gamma, 0.5 - gamma)) \
        + cl_norm(acc["gradeps_q"], 1, (-gamma, 0.5 + gamma))
    return y, z


def run(config: RunConfig, output_dir: str | None = None) -> RunResult:
    """Integrate to t_end or halt; returns diagnostics and the verdict.

    Verdicts: completed, band_exhausted, density_lost, pressure_failed.  The
    bootstrap monitor flags the first time theta or psi crosses the thresholds
    4 C eps^gamma X2 and 4 C (X1 + X3).
    """
    grid = config.grid()
    params = config.params()
    rng = np.random.default_rng(config.seed)
    a_prof = build_profile(grid, config.a0, rng)
    v_prof = build_profile(grid, config.v0, rng)
    a0, v0 = prepare_rescaled(a_prof, v_prof)

    if config.delta * grid.kmax_mod > 700.0:
        raise ValueError("delta too large for this grid (phase overflow)")

    x1, x2, x3 = x_norms(a0, v0, config.delta, config.gamma)
    theta_thresh = 4.0 * config.bootstrap_c * params.eps**config.gamma * x2
    psi_thresh = 4.0 * config.bootstrap_c * (x1 + x3)

    a0_d = apply_phase(a0, config.delta)
    data_tables = {"a": block_l2_table(a0_d)}

    phase = PhaseState(config.delta, config.lam, 0.0, config.gamma)
    state = SolverState(a0, v0, SpectralField3.zero(grid), 0.0, phase,
                        _new_accumulators(grid), [])

    records: list[DiagnosticsRecord] = []
    verdict = "completed"
    t_halt = None
    violation = None
    theta_max = 0.0
    psi_max = 0.0
    nsteps = 0
    eps_beta = params.eps**params.beta

    while state.t < config.t_end - 1e-12 * config.t_end:
        dt = min(config.dt, config.t_end - state.t)
        try:
            state = step(state, dt, params, config)
        except BandExhausted:
            verdict, t_halt = "band_exhausted", state.t
            break
        except PositivityError:
            verdict, t_halt = "density_lost", state.t
            break
        except PressureError:
            verdict, t_halt = "pressure_failed", state.t
            break
        nsteps += 1

        if state.band < 0.0:
            verdict, t_halt = "band_exhausted", state.t
            break
        dens = 1.0 + eps_beta * state.a.values()[0]
        min_density = float(dens.min())
        if min_density <= 0.0:
            verdict, t_halt = "density_lost", state.t
            break

        psi1, psi2, psi3, psi4 = psi_values(state, params)
        psi = psi1 + psi2 + psi3 + psi4
        theta = state.phase.theta
        theta_max = max(theta_max, theta)
        psi_max = max(psi_max, psi)
        if violation is None:
            if theta > theta_thresh:
                violation = {"time": state.t, "kind": "theta",
                             "value": theta, "threshold": theta_thresh}
            elif psi > psi_thresh:
                violation = {"time": state.t, "kind": "psi",
                             "value": psi, "threshold": psi_thresh}
        vnorm = state.v.l2()
        div_res = 0.0 if vnorm == 0 else div(state.v).l2() / vnorm
        records.append(DiagnosticsRecord(
            t=state.t, theta=theta, band=state.band, psi1=psi1, psi2=psi2,
            psi3=psi3, psi4=psi4, psi=psi, energy=vnorm**2,
            div_residual=div_res, pressure_iters=state.last_pressure[0],
            pressure_residual=state.last_pressure[1], min_density=min_density))

        if config.snapshot_interval and output_dir \
                and nsteps % config.snapshot_interval == 0:
            path = Path(output_dir) / ("snapshot_v_%06d.bin" % nsteps)
            path.parent.mkdir(parents=True, exist_ok=True)
            write_snapshot(state.v, path, time=state.t)

    if verdict == "completed":
        # fold the final fields into the sup-in-time records
        try:
            _, ta, t_vh, t_v3 = _phased_tables(state, params)
            state.acc["a"].observe_max(ta)
            state.acc["vh"].observe_max(t_vh)
            state.acc["v3"].observe_max(t_v3)
            state.acc["v"].observe_max(t_vh + t_v3)
        except BandExhausted:
            pass

    y_norm, z_norm = _pressure_norms(state.acc, config.gamma)
    psi_final = sum(psi_values(state, params))
    result = RunResult(
        records=records, verdict=verdict, t_halt=t_halt,
        first_bootstrap_violation=violation, params=params, config=config,
        x1=x1, x2=x2, x3=x3, theta_final=state.phase.theta,
        theta_max=theta_max, psi_final=psi_final, psi_max=psi_max,
        pressure_y_norm=y_norm, pressure_z_norm=z_norm,
        accumulators=state.acc, data_norms=data_tables, state=state)
    if output_dir is not None:
        write_run_outputs(result, output_dir)
    return result


def write_run_outputs(result: RunResult, output_dir) -> None:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config.to_dict()
    with open(out / "config.json", "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
    with open(out / "diagnostics.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DiagnosticsRecord.COLUMNS)
        for r in result.records:
            w.writerow([repr(getattr(r, c)) for c in DiagnosticsRecord.COLUMNS])
    with open(out / "verdict.json", "w") as fh:
        json.dump({"verdict": result.verdict, "t_halt": result.t_halt,
                   "first_bootstrap_violation": result.first_bootstrap_violation},
                  fh, indent=2, sort_keys=True)
    with open(out / "pressure_report.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "iters", "residual", "Y_norm_partial", "Z_norm_partial"])
        for r in result.records:
            w.writerow([repr(r.t), r.pressure_iters, repr(r.pressure_residual),
                        "", ""])


# ---------------------------------------------------------------------------
# closed-form smallness threshold
# ---------------------------------------------------------------------------

def epsilon_zero(C: float, K0: float, delta: float, x2_norm: float,
                 beta: float, gamma: float, eps_small: float) -> float:
    """Smallest of the four closed-form admissibility bounds on eps."""
    for v in (C, K0, delta, x2_norm, beta, gamma, eps_small):
        if v <= 0:
            raise ValueError("all inputs must be positive")
    return min(
        (eps_small / K0) ** (1.0 / beta),
        (1.0 / (2.0 * C * K0)) ** (1.0 / (beta - gamma)),
        (1.0 / (8.0 * C * K0)) ** (1.0 / gamma),
        (delta / (16.0 * C**2 * x2_norm)) ** (1.0 / gamma),
    )


# ---------------------------------------------------------------------------
# transport propagation monitor
# ---------------------------------------------------------------------------

def transport_estimate_monitor(results) -> dict:
    """Implied constants for the phased-transport propagation bound.

    For each run and each density index, compares the accumulated
    sup-in-time norm of the phased density against
    data + (1/lam + eps^(1-alpha) ||v||_{L1 B^{2,1/2}}) * LHS; the implied
    constant is the multiplier that turns the bound into an equality.
    """
    if not isinstance(results, (list, tuple)):
        results = [results]
    report = {"runs": []}
    all_consts = []
    for res in results:
        grid = res.config.grid()
        g = res.config.gamma
        indices = PSI1_INDICES(g) + [PSI1_HIGH(g)]
        vterm = (res.params.eps ** (1.0 - res.params.alpha)
                 * cl_norm(res.accumulators["v"], 1, (2.0, 0.5)))
        lam = res.config.lam
        entry = {"lam": lam, "eps": res.params.eps, "indices": []}
        data_table = res.data_norms["a"]
        for idx in indices:
            lhs = cl_norm(res.accumulators["a"], np.inf, idx)
            data = _weighted(grid, data_table, idx)
            denom = (1.0 / lam + vterm) * lhs
            implied = 0.0 if denom == 0.0 else max(0.0, (lhs - data) / denom)
            entry["indices"].append({"index": list(idx), "lhs": lhs,
                                     "data": data, "implied_c": implied})
            all_consts.append(implied)
        report["runs"].append(entry)
    positive = [c for c in all_consts if c > 0]
    if len(positive) >= 2:
        report["stable"] = max(positive) < 2.0 * float(np.median(positive)) + 1e-300
    else:
        report["stable"] = True
    return report
