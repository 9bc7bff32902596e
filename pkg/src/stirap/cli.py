"""Command-line entry point: ``stirap {design,simulate,sweep,verify}``.

Boundary units are ns for times, cyclic MHz for amplitudes; everything is
converted to seconds and rad/s before reaching the library.  Values are
resolved as flags > ``--config`` file > built-in defaults.  Exit codes: 0
success, 1 runtime or numerical failure, 2 invalid specification.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

from . import experiments as ex
from .designer import DesignSpec, SetKind, design
from .propagator import IntegrationError, evolve_oracle, simulate_design

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2

#: acceptance thresholds shared by ``simulate --verify`` and ``verify``
ORACLE_TOL = 1e-6
NORM_TOL = 1e-9


class UsageError(Exception):
    pass


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _add_design_flags(p):
    p.add_argument("--epsilon", type=float, help="infidelity amplitude; infidelity is epsilon**2")
    p.add_argument("--r", type=float, help="normalised separation t_s/sigma (negative)")
    p.add_argument("--sigma-ns", type=float, help="Gaussian width in ns")
    p.add_argument("--alpha", type=float, default=1.0, help="pump/Stokes peak ratio")
    p.add_argument("--set", dest="set_kind", choices=["1", "2"], default="2", help="parameter set")
    p.add_argument("--omega-multiplier", type=float, default=1.0, help="headroom factor on the minimum amplitude")


def _add_sim_flags(p):
    p.add_argument("--omega-mhz", type=float, help="override pump peak Omega01/(2 pi) in MHz")
    p.add_argument("--step-ns", type=float, help="integration step in ns (default sigma/1000)")
    p.add_argument("--delta01-mhz", type=float, default=0.0)
    p.add_argument("--delta12-mhz", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stirap", description="Design and simulate truncated three-level adiabatic transfer pulses.")
    parser.add_argument("--config", help="flat key = value file with default flag values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="design a truncated pulse pair")
    _add_design_flags(p)
    p.add_argument("--json", help="also write the record to this file")

    p = sub.add_parser("simulate", help="design and propagate from |0>")
    _add_design_flags(p)
    _add_sim_flags(p)
    p.add_argument("--decimation", type=int, default=1, help="record every N-th step")
    p.add_argument("--output", help="CSV path for the time series")
    p.add_argument("--verify", action="store_true", help="cross-check against the exponential propagator")

    p = sub.add_parser("verify", help="integrator cross-checks on a design")
    _add_design_flags(p)
    _add_sim_flags(p)

    p = sub.add_parser("sweep", help="regenerate a parameter sweep")
    p.add_argument("--kind", choices=[k.value for k in ex.SweepKind])
    p.add_argument("--from-sidecar", help="re-run the grid stored in a JSON sidecar")
    p.add_argument("--points", type=int, help="points per axis")
    p.add_argument("--nt-min", type=float)
    p.add_argument("--nt-max", type=float)
    p.add_argument("--r-max", type=float, help="most negative r (largest |r|) on the axis")
    p.add_argument("--r-min", type=float, help="r closest to zero on the axis")
    p.add_argument("--sigma-min-ns", type=float)
    p.add_argument("--sigma-max-ns", type=float)
    p.add_argument("--sigma-ns", type=float, help="fixed width for the criteria sweep")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--epsilons", help="comma-separated epsilon list for truncation curves")
    p.add_argument("--quoted-epsilons", action="store_true", help="epsilon set reproducing the reference durations at r=-1.5, sigma=40 ns")
    p.add_argument("--tailored", action="store_true", help="population map: tailored design only")
    p.add_argument("--baseline", action="store_true", help="population map: fixed baseline only")
    p.add_argument("--baseline-nt", type=float)
    p.add_argument("--baseline-omega-mhz", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", help="output directory (default $STIRAP_OUTPUT_DIR or ./stirap_out)")
    return parser


def parse_args(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    if known.config:
        config = read_config(known.config)
        # apply config values as defaults of the selected subcommand only
        command = next((a for a in argv if a in {"design", "simulate", "verify", "sweep"}), None)
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        if command is not None:
            sp = subparsers.choices[command]
            valid = {a.dest: a for a in sp._actions}
            for key, value in config.items():
                if key not in valid:
                    raise UsageError(f"unknown config key {key!r} for {command}")
                action = valid[key]
                if isinstance(action, argparse._StoreTrueAction):
                    value = value.lower() in {"1", "true", "yes", "on"}
                elif action.type is not None:
                    value = action.type(value)
                sp.set_defaults(**{key: value})
    return parser.parse_args(argv)


def _spec(args) -> DesignSpec:
    missing = [f for f in ("epsilon", "r", "sigma_ns") if getattr(args, f) is None]
    if missing:
        raise UsageError("missing required design parameters: " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return DesignSpec(args.epsilon, args.r, args.sigma_ns * 1e-9, args.alpha, SetKind.parse(args.set_kind),
                      args.omega_multiplier)


def _design_payload(result) -> dict:
    record = result.to_record()
    record.update(pulse_area_ok=result.pulse_area_ok, extrapolated=result.extrapolated,
                  threshold=result.threshold, warnings=list(result.warnings))
    return record


def _sim_kwargs(args):
    return {
        "omega_cyclic": None if args.omega_mhz is None else args.omega_mhz * 1e6,
        "step": None if args.step_ns is None else args.step_ns * 1e-9,
        "delta01": 2 * math.pi * args.delta01_mhz * 1e6,
        "delta12": 2 * math.pi * args.delta12_mhz * 1e6,
    }


def cmd_design(args) -> int:
    result = design(_spec(args))
    payload = _design_payload(result)
    text = json.dumps(payload, indent=2)
    print(text)
    if args.json:
        Path(args.json).write_text(text + "\n")
    return EXIT_OK


def _summary_line(rec) -> str:
    p0, p1, p2 = rec.final_populations
    return f"p0={p0:.6f} p1={p1:.6f} p2={p2:.6f} norm_drift={rec.norm_drift:.3e} steps={rec.n_steps}"


def cmd_simulate(args) -> int:
    if args.decimation < 1:
        raise UsageError("--decimation must be >= 1")
    result = design(_spec(args))
    kw = _sim_kwargs(args)
    rec = simulate_design(result, decimation=args.decimation, **kw)
    if args.output:
        rec.to_csv(args.output)
    print(f"T_ns={result.T * 1e9:.4f} " + _summary_line(rec))
    if args.verify:
        kw["step"] = rec.step / 4
        oracle = simulate_design(result, integrator=evolve_oracle, **kw)
        delta = abs(oracle.final_p2 - rec.final_p2)
        ok = delta <= ORACLE_TOL
        print(f"oracle_p2={oracle.final_p2:.9f} delta_p2={delta:.3e} {'ok' if ok else 'FAIL'}")
        if not ok:
            return EXIT_RUNTIME
    return EXIT_OK


def cmd_verify(args) -> int:
    result = design(_spec(args))
    kw = _sim_kwargs(args)
    rec = simulate_design(result, **kw)
    kw_oracle = dict(kw, step=rec.step / 4)
    oracle = simulate_design(result, integrator=evolve_oracle, **kw_oracle)
    delta = abs(oracle.final_p2 - rec.final_p2)
    sigma = result.spec.sigma
    ref = simulate_design(result, integrator=evolve_oracle, **dict(kw, step=sigma / 20000)).final_p2
    e1 = abs(simulate_design(result, **dict(kw, step=sigma / 20)).final_p2 - ref)
    e2 = abs(simulate_design(result, **dict(kw, step=sigma / 40)).final_p2 - ref)
    ratio = e1 / e2 if e2 > 0 else math.inf
    checks = {
        "oracle_agreement": (delta <= ORACLE_TOL, f"|dp2|={delta:.3e} <= {ORACLE_TOL:g}"),
        "norm_drift": (rec.norm_drift <= NORM_TOL, f"{rec.norm_drift:.3e} <= {NORM_TOL:g}"),
        "fourth_order": (8.0 <= ratio <= 32.0, f"error ratio {ratio:.2f} in [8, 32]"),
    }
    print(_summary_line(rec))
    for name, (ok, detail) in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for ok, _ in checks.values()) else EXIT_RUNTIME


_GRID_FLAGS = ("points", "nt_min", "nt_max", "r_max", "r_min", "sigma_min_ns", "sigma_max_ns", "sigma_ns",
               "epsilon", "epsilons", "quoted_epsilons", "tailored", "baseline", "baseline_nt", "baseline_omega_mhz")

_KIND_FLAGS = {
    ex.SweepKind.THETA_F: {"points", "nt_min", "nt_max", "r_max", "r_min"},
    ex.SweepKind.TRUNCATION: {"points", "r_max", "r_min", "epsilons", "quoted_epsilons"},
    ex.SweepKind.CRITERIA: {"points", "r_max", "r_min", "epsilon", "sigma_ns"},
    ex.SweepKind.POPULATION: {"points", "r_max", "r_min", "sigma_min_ns", "sigma_max_ns", "epsilon", "tailored",
                              "baseline", "baseline_nt", "baseline_omega_mhz"},
    ex.SweepKind.COST: {"points", "r_max", "r_min", "sigma_min_ns", "sigma_max_ns", "epsilon"},
}


def _given(args, name) -> bool:
    value = getattr(args, name)
    return value not in (None, False)


def _pick(value, default):
    return default if value is None else value


def grid_from_args(args) -> ex.SweepGrid:
    """Resolve sweep flags into a grid, rejecting flags the chosen kind does not use."""
    if args.from_sidecar:
        extra = [f for f in _GRID_FLAGS if _given(args, f)] + (["kind"] if args.kind else [])
        if extra:
            raise UsageError("--from-sidecar cannot be combined with grid flags: " + ", ".join(extra))
        grid, _ = ex.load_sidecar(args.from_sidecar)
        return grid
    if args.kind is None:
        raise UsageError("sweep needs --kind or --from-sidecar")
    kind = ex.SweepKind(args.kind)
    stray = [f for f in _GRID_FLAGS if _given(args, f) and f not in _KIND_FLAGS[kind]]
    if stray:
        raise UsageError(f"flags not used by --kind {kind.value}: " + ", ".join("--" + f.replace("_", "-") for f in stray))
    if args.points is not None and args.points < 2:
        raise UsageError("--points must be >= 2")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    for flag in ("r_max", "r_min"):
        if getattr(args, flag) is not None and getattr(args, flag) >= 0:
            raise UsageError(f"--{flag.replace('_', '-')} must be negative")
    r_far = _pick(args.r_max, -4.0)
    if kind is ex.SweepKind.THETA_F:
        points = _pick(args.points, ex.DEFAULT_POINTS)
        return ex.theta_f_grid((_pick(args.nt_min, 0.0), _pick(args.nt_max, 4.0)), (r_far, args.r_min), points)
    r_near = _pick(args.r_min, -0.1)
    if kind is ex.SweepKind.TRUNCATION:
        if args.quoted_epsilons and args.epsilons:
            raise UsageError("--epsilons and --quoted-epsilons are mutually exclusive")
        if args.quoted_epsilons:
            eps = ex.QUOTED_EPSILONS
        elif args.epsilons:
            eps = tuple(float(v) for v in args.epsilons.split(","))
        else:
            eps = ex.DEFAULT_EPSILONS
        for e in eps:
            DesignSpec(e, -1.0, 1.0)  # validates epsilon before any work
        return ex.truncation_grid(eps, (r_far, r_near), _pick(args.points, ex.DEFAULT_POINTS))
    epsilon = _pick(args.epsilon, 0.05)
    DesignSpec(epsilon, -1.0, 1.0)
    if kind is ex.SweepKind.CRITERIA:
        return ex.criteria_grid((r_far, r_near), _pick(args.points, 40), epsilon, _pick(args.sigma_ns, 30.0) * 1e-9)
    sigma_ns = (_pick(args.sigma_min_ns, 5.0), _pick(args.sigma_max_ns, 100.0))
    if not 0 < sigma_ns[0] < sigma_ns[1]:
        raise UsageError("need 0 < --sigma-min-ns < --sigma-max-ns")
    points = _pick(args.points, ex.DEFAULT_POINTS)
    if kind is ex.SweepKind.COST:
        return ex.map_grid(kind, sigma_ns, (r_near, r_far), points, epsilon)
    if args.tailored and args.baseline:
        variants = ("baseline", "tailored")
    elif args.tailored:
        variants = ("tailored",)
    elif args.baseline:
        variants = ("baseline",)
    else:
        variants = ("baseline", "tailored")
    return ex.map_grid(kind, sigma_ns, (r_near, r_far), points, epsilon,
                       _pick(args.baseline_nt, 3.0), _pick(args.baseline_omega_mhz, 45.0), variants)


def cmd_sweep(args) -> int:
    grid = grid_from_args(args)
    out_dir = Path(args.out_dir) if args.out_dir else ex.default_output_dir()
    result, wall = ex.timed_sweep(grid, args.jobs)
    config = {"grid": grid.to_dict(), "jobs": args.jobs, "out_dir": str(out_dir)}
    csv_path, json_path = ex.write_sweep(result, out_dir, config=config, wall_seconds=wall)
    print(f"wrote {csv_path} ({len(result.rows)} rows) and {json_path}")
    for key, value in result.summary.items():
        print(f"{key}={value}")
    return EXIT_OK


COMMANDS = {"design": cmd_design, "simulate": cmd_simulate, "verify": cmd_verify, "sweep": cmd_sweep}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            return COMMANDS[args.command](args)
    except (ValueError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (IntegrationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
