"""Anisotropic Littlewood-Paley toolbox and desk-scale rescaled-flow solver."""

from .spectral_core import (CutoffPair, Grid, SpectralField3, build_cutoffs,
                            dealias, div, div_h, d3, grad_h, h_block,
                            h_lowpass, iso_block, iso_lowpass, laplacian_eps,
                            leray_project, nabla_eps, nabla_sup_eps,
                            read_snapshot, v_block, v_lowpass, write_snapshot)
from .norms import (AnisoBesovIndex, NormAccumulator, PhaseState, apply_phase,
                    besov_norm, cl_accumulate, cl_norm, interpolation_check,
                    x_norms)
from .paraproduct import (BonyPieces, PositivityError, bony, compose_G,
                          double_bony, g_smallness_check, product_law_fit)
from .semigroup import (EpsParams, damping_bound_check, duhamel, heat_apply,
                        smoothing_check_41, smoothing_check_42)
from .pressure import (PressureConfig, PressureError, pressure_estimate_monitor,
                       pressure_solve, pressure_terms)
from .solver import (DiagnosticsRecord, RunConfig, RunResult, SolverState,
                     build_profile, epsilon_zero, make_ill_prepared, run, step,
                     theta_dot, transport_estimate_monitor)
from .verify import SUITES, SuiteReport, eps_sweep, run_suite, save_report

__version__ = "0.1.0"
