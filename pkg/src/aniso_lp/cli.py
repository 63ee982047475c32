"""Command-line entry point binding JSON configs to suites and solver runs.

Exit codes: 0 success/pass, 1 suite failure (stability criterion violated),
2 precondition or configuration error, 3 runtime halt under --strict.
Human-readable diagnostics go to stderr; machine output goes to files under
the report directory (flag --output, else $ANISO_LP_REPORT_DIR, else
./reports).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .norms import x_norms
from .paraproduct import PositivityError
from .pressure import PressureConfig, PressureError, pressure_solve
from .randfields import random_field, random_solenoidal
from .solver import (RunConfig, build_profile, prepare_rescaled, run,
                     write_run_outputs)
from .spectral_core import Grid, SpectralField3
from .verify import SUITES, eps_sweep, run_suite, save_report

__all__ = ["main", "entry"]


def _report_dir(args) -> Path:
    if getattr(args, "output", None):
        return Path(args.output)
    env = os.environ.get("ANISO_LP_REPORT_DIR")
    return Path(env) if env else Path("reports")


def _parse_overrides(pairs) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ValueError("override %r is not key=value" % item)
        key, raw = item.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _load_config(path: str | None, overrides: dict) -> RunConfig:
    data = {}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
    data.update(overrides)
    return RunConfig.from_dict(data)


def _add_common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--set", dest="overrides", action="append", metavar="K=V",
                   help="config override, repeatable")
    p.add_argument("--output", help="output / report directory")
    p.add_argument("--seed", type=int, help="seed override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aniso-lp",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run an inequality suite")
    p.add_argument("--suite", required=True, choices=SUITES)
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--trials", type=int)
    _add_common(p)

    p = sub.add_parser("run", help="integrate the rescaled system")
    p.add_argument("--strict", action="store_true",
                   help="exit 3 when the run halts early")
    _add_common(p)

    p = sub.add_parser("sweep", help="eps sweep of solver runs")
    p.add_argument("--eps", required=True,
                   help="comma-separated eps values, e.g. 0.2,0.1,0.05")
    p.add_argument("--jobs", type=int, default=1,
                   help="concurrent sweep members")
    _add_common(p)

    p = sub.add_parser("norms", help="data norms of the configured profiles")
    _add_common(p)

    p = sub.add_parser("pressure-check", help="one pressure solve from config")
    _add_common(p)
    return parser


def _cmd_verify(args) -> int:
    options = _parse_overrides(args.overrides)
    options.setdefault("grid_n", args.grid)
    if args.trials is not None:
        options["trials"] = args.trials
    if args.seed is not None:
        options["seed"] = args.seed
    report = run_suite(args.suite, options)
    outdir = _report_dir(args)
    path = save_report(report, outdir, "suite_%s" % args.suite)
    print("suite %s: %s (report: %s)"
          % (args.suite, "PASS" if report.passed else "FAIL", path),
          file=sys.stderr)
    return 0 if report.passed else 1


def _resolved_config(args) -> RunConfig:
    overrides = _parse_overrides(args.overrides)
    if args.seed is not None:
        overrides["seed"] = args.seed
    return _load_config(args.config, overrides)


def _cmd_run(args) -> int:
    cfg = _resolved_config(args)
    outdir = _report_dir(args)
    result = run(cfg, output_dir=str(outdir))
    print("run verdict: %s (t_halt=%s)" % (result.verdict, result.t_halt),
          file=sys.stderr)
    if result.verdict != "completed" and args.strict:
        return 3
    return 0


def _cmd_sweep(args) -> int:
    eps_list = [float(x) for x in args.eps.split(",") if x]
    if not eps_list:
        raise ValueError("empty eps list")
    overrides = _parse_overrides(args.overrides)
    if args.seed is not None:
        overrides["seed"] = args.seed
    template = {}
    if args.config:
        with open(args.config) as fh:
            template = json.load(fh)
    template.update(overrides)
    RunConfig.from_dict(template)  # validate before launching members
    outdir = _report_dir(args)
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            singles = list(pool.map(_sweep_member,
                                    [(template, e) for e in eps_list]))
        report = _merge_sweep(template, eps_list, singles)
        save_report(report, outdir, "eps_sweep")
    else:
        report = eps_sweep(template, eps_list, output_dir=outdir)
    print("sweep slope: %s  degenerate: %s" % (report["slope"],
                                               report["degenerate"]),
          file=sys.stderr)
    return 0


def _sweep_member(arg):
    template, eps = arg
    return eps_sweep(dict(template), [eps])


def _merge_sweep(template, eps_list, singles) -> dict:
    import numpy as np
    runs = [s["runs"][0] for s in singles]
    thetas = [r["theta_max"] for r in runs]
    if all(t > 0 for t in thetas) and len(thetas) >= 2:
        slope = float(np.polyfit(np.log(np.asarray(eps_list, dtype=float)),
                                 np.log(np.asarray(thetas)), 1)[0])
        degenerate = False
    else:
        slope, degenerate = None, True
    return {"kind": "eps_sweep", "template": template,
            "eps_list": [float(e) for e in eps_list], "runs": runs,
            "slope": slope, "degenerate": degenerate,
            "all_completed": all(r["verdict"] == "completed" for r in runs)}


def _cmd_norms(args) -> int:
    cfg = _resolved_config(args)
    import numpy as np
    grid = cfg.grid()
    rng = np.random.default_rng(cfg.seed)
    a0, v0 = prepare_rescaled(build_profile(grid, cfg.a0, rng),
                              build_profile(grid, cfg.v0, rng))
    x1, x2, x3 = x_norms(a0, v0, cfg.delta, cfg.gamma)
    outdir = _report_dir(args)
    save_report({"x1": x1, "x2": x2, "x3": x3,
                 "config": cfg.to_dict()}, outdir, "data_norms")
    print("X1=%.6g X2=%.6g X3=%.6g" % (x1, x2, x3), file=sys.stderr)
    return 0


def _cmd_pressure_check(args) -> int:
    cfg = _resolved_config(args)
    import numpy as np
    grid = cfg.grid()
    rng = np.random.default_rng(cfg.seed)
    a0, v0 = prepare_rescaled(build_profile(grid, cfg.a0, rng),
                              build_profile(grid, cfg.v0, rng))
    q, iters, res = pressure_solve(a0, v0, cfg.params(), cfg.pressure)
    outdir = _report_dir(args)
    save_report({"iters": iters, "residual": res,
                 "config": cfg.to_dict()}, outdir, "pressure_check")
    print("pressure solve: %d iters, residual %.3e" % (iters, res),
          file=sys.stderr)
    return 0


_COMMANDS = {
    "verify": _cmd_verify,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "norms": _cmd_norms,
    "pressure-check": _cmd_pressure_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, json.JSONDecodeError, TypeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except (PressureError, PositivityError) as exc:
        print("runtime halt: %s" % exc, file=sys.stderr)
        return 3


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
