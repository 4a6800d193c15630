"""Command line front end: pattern scenarios and the convergence study.

Two subcommands:

    autochemo simulate --config run.cfg [--preset case1] [--out dir]
                       [--snapshot-every N] [--format csv|vtk|both] [--seed S]
    autochemo converge --levels 8,16,32,64 [--T 1.0] [--out dir]

The config file is flat ``key = value`` text ('#' starts a comment).
Recognized keys: mode, preset, out, snapshot_every, format, plus any
scenario field (nx, ny, Lx, Ly, dt, T, init, seed, blob_amplitude,
gaussian_width, p_amplitude, perturbation, name) and any model
parameter (s, g, k, D_c, D_p, gamma, gamma2).  Command line flags
override config values.

Without --snapshot-every, snapshots fall on the scenario's preset
snapshot times; with it, every N-th step.  The initial state is always
written.  Exit codes: 0 success, 1 configuration error, 2 solver
failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import time
from dataclasses import dataclass

from .experiments import (PRESETS, ScenarioSpec, UnknownInitError,
                          UnknownPresetError, get_preset, init_scenario,
                          pattern_metrics, run_convergence_study)
from .io import DiagnosticsLog, snapshot_path, write_snapshot
from .linalg import SolverError
from .mesh import build_mesh
from .stepper import Stepper

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Malformed configuration input."""


@dataclass
class RunConfig:
    """Resolved options of one CLI invocation."""

    mode: str                  # "scenario" | "converge"
    spec: ScenarioSpec | None
    out_dir: str
    snapshot_every: int | None   # None -> use spec.snapshot_times
    formats: tuple
    verbosity: int


_INT_KEYS = {"nx", "ny", "seed", "snapshot_every"}
_FLOAT_KEYS = {"Lx", "Ly", "dt", "T", "blob_amplitude", "gaussian_width",
               "p_amplitude", "perturbation"}
_PARAM_KEYS = {"s", "g", "k", "D_c", "D_p", "gamma", "gamma2"}
_STR_KEYS = {"mode", "preset", "init", "out", "format", "name"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _PARAM_KEYS | _STR_KEYS


def parse_config(path: str) -> dict:
    """Flat key = value file -> dict of strings."""
    cfg = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', "
                                  f"got '{raw.strip()}'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _ALL_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key '{key}'; "
                                  f"valid keys: {', '.join(sorted(_ALL_KEYS))}")
            cfg[key] = value
    return cfg


def _coerce(key: str, value: str):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS or key in _PARAM_KEYS:
            return float(value)
    except ValueError:
        raise ConfigError(f"key '{key}': cannot parse '{value}'") from None
    return value


def build_scenario_spec(cfg: dict, preset_flag: str | None,
                        seed_flag: int | None) -> ScenarioSpec:
    """Preset (flag wins over config) plus field/parameter overrides."""
    preset = preset_flag or cfg.get("preset")
    spec = get_preset(preset) if preset else ScenarioSpec()
    field_over = {k: _coerce(k, v) for k, v in cfg.items()
                  if k in (_INT_KEYS | _FLOAT_KEYS | {"init", "name"})
                  and k != "snapshot_every"}
    param_over = {k: _coerce(k, v) for k, v in cfg.items() if k in _PARAM_KEYS}
    if seed_flag is not None:
        field_over["seed"] = seed_flag
    try:
        if param_over:
            field_over["params"] = dataclasses.replace(spec.params, **param_over)
        return dataclasses.replace(spec, **field_over) if field_over else spec
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _snapshot_steps(spec: ScenarioSpec, every: int | None) -> set:
    """Step indices to snapshot; index 0 (initial data) is always included."""
    if every is not None:
        steps = set(range(0, spec.n_steps + 1, every))
    else:
        steps = {round(t / spec.dt) for t in spec.snapshot_times
                 if t <= spec.T * (1 + 1e-12)}
    steps.add(0)
    return steps


def _cmd_simulate(args) -> int:
    cfg = parse_config(args.config) if args.config else {}
    if not cfg and args.preset is None:
        raise ConfigError("nothing to run: pass --config and/or --preset")
    if cfg.get("mode", "scenario") != "scenario":
        raise ConfigError(f"config mode '{cfg['mode']}' does not match the "
                          f"'simulate' subcommand (expected 'scenario')")
    spec = build_scenario_spec(cfg, args.preset, args.seed)

    every = args.snapshot_every
    if every is None and "snapshot_every" in cfg:
        every = _coerce("snapshot_every", cfg["snapshot_every"])
    if every is not None and every < 1:
        raise ConfigError(f"snapshot interval must be >= 1, got {every}")
    fmt = args.format or cfg.get("format", "csv")
    if fmt not in ("csv", "vtk", "both"):
        raise ConfigError(f"unknown format '{fmt}', expected csv, vtk or both")
    run = RunConfig(
        mode="scenario",
        spec=spec,
        out_dir=args.out or cfg.get("out") or f"results_{spec.name}",
        snapshot_every=every,
        formats=("csv", "vtk") if fmt == "both" else (fmt,),
        verbosity=args.verbose,
    )

    os.makedirs(run.out_dir, exist_ok=True)
    mesh = build_mesh(spec.nx, spec.ny, spec.Lx, spec.Ly)
    stepper = Stepper(mesh, spec.params, spec.dt)
    state = init_scenario(spec, mesh)
    wanted = _snapshot_steps(spec, run.snapshot_every)

    def emit(st):
        for f in run.formats:
            path = snapshot_path(run.out_dir, "snapshot", st.step, f)
            write_snapshot(st, mesh, f, path)
        if run.verbosity:
            print(f"snapshot at step {st.step} (t={st.t:g})")

    t0 = time.perf_counter()
    emit(state)
    with DiagnosticsLog(os.path.join(run.out_dir, "diagnostics.csv")) as log:
        def hook(st, diag):
            log.append(st.step, diag)
            if st.step in wanted:
                emit(st)

        state = stepper.advance(state, spec.n_steps, hook=hook)
    elapsed = time.perf_counter() - t0

    m = pattern_metrics(state, mesh)
    print(f"scenario {spec.name}: {spec.n_steps} steps to t={state.t:g} "
          f"in {elapsed:.1f}s")
    print(f"  mass={stepper.assembler.integrate(state.rho):.6f} "
          f"rho in [{m.rho_min:.4f}, {m.rho_max:.4f}] std={m.rho_std:.4f}")
    print(f"  c in [{m.c_min:.4f}, {m.c_max:.4f}] mean|p|={m.p_mean:.4f} "
          f"modes=({m.mode_x:.4f}, {m.mode_y:.4f})")
    print(f"  outputs in {run.out_dir}")
    return 0


def _cmd_converge(args) -> int:
    try:
        levels = [int(part) for part in args.levels.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse levels '{args.levels}'") from None
    result = run_convergence_study(levels, T=args.T)
    print(result.table())
    if args.out:
        paths = result.write_csv(args.out)
        print("rate tables: " + ", ".join(paths))
    return 0


class _Parser(argparse.ArgumentParser):
    # usage problems are configuration errors: exit 1, not argparse's 2
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="autochemo",
                     description="Characteristic Galerkin simulation of "
                                 "autochemotactic pattern formation")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a pattern-formation scenario")
    sim.add_argument("--config", help="flat key = value config file")
    sim.add_argument("--preset", help=f"one of: {', '.join(sorted(PRESETS))}")
    sim.add_argument("--out", help="output directory")
    sim.add_argument("--snapshot-every", type=int, dest="snapshot_every",
                     help="snapshot every N steps (default: preset times)")
    sim.add_argument("--format", choices=("csv", "vtk", "both"))
    sim.add_argument("--seed", type=int, help="random seed override")
    sim.add_argument("-v", "--verbose", action="count", default=0)

    conv = sub.add_parser("converge", help="run the convergence study")
    conv.add_argument("--levels", default="8,16,32,64",
                      help="comma-separated mesh resolutions")
    conv.add_argument("--T", type=float, default=1.0, help="final time")
    conv.add_argument("--out", help="directory for rate-table CSVs")
    conv.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_converge(args)
    except (ConfigError, UnknownPresetError, UnknownInitError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
