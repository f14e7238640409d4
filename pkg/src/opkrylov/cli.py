"""Command-line interface.

Subcommands: run (one experiment), sweep (a parameter sweep), validate (check a
config without running), oracle (dense self-test battery). Exit codes: 0 on
success, 2 for configuration errors, 3 for I/O errors, 4 for engine or
numerical failures, 1 for anything unexpected.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .config import (ExperimentConfig, SweepConfig, load_experiment_config,
                     load_sweep_config, _read_toml)
from .exceptions import ConfigError, StateError
from .runner import emit_outputs, run_experiment, run_sweep

OUTPUT_ROOT_ENV = "OPKRYLOV_OUTPUT_ROOT"


def list_presets() -> list[str]:
    presets_dir = resources.files("opkrylov") / "presets"
    return sorted(p.name[:-5] for p in presets_dir.iterdir()
                  if p.name.endswith(".toml"))


def preset_path(name: str) -> Path:
    presets_dir = resources.files("opkrylov") / "presets"
    candidate = presets_dir / f"{name}.toml"
    if not candidate.is_file():
        raise ConfigError("preset", f"unknown preset {name!r}; "
                          f"available: {list_presets()}")
    return Path(str(candidate))


def _resolve_config_arg(args) -> Path:
    if args.preset:
        return preset_path(args.preset)
    return Path(args.config)


def _default_output_root(explicit: str | None, fallback: str) -> Path:
    if explicit:
        return Path(explicit)
    env = os.environ.get(OUTPUT_ROOT_ENV)
    if env:
        return Path(env) / fallback
    return Path(fallback)


def _is_sweep_file(path: Path) -> bool:
    return "sweep" in _read_toml(path)


def _cmd_run(args) -> int:
    path = _resolve_config_arg(args)
    if _is_sweep_file(path):
        raise ConfigError("sweep", f"{path} is a sweep config; use the sweep command")
    cfg = load_experiment_config(path)
    if args.label:
        from dataclasses import replace
        cfg = replace(cfg, run_label=str(args.label))
    out_dir = args.output or cfg.output_dir
    out_path = _default_output_root(out_dir, cfg.run_label)
    result = run_experiment(cfg)
    written = emit_outputs(result, out_path)
    print(f"run complete: {len(written)} files in {out_path}")
    for run_name in ("lanczos_run", "arnoldi_run"):
        run = getattr(result, run_name)
        if run is not None:
            status = (f"terminated, K={run.krylov_dim}" if run.terminated
                      else f"{run.steps} steps, not terminated")
            print(f"  {run_name.split('_')[0]}: {status}")
    return 0


def _cmd_sweep(args) -> int:
    path = _resolve_config_arg(args)
    if not _is_sweep_file(path):
        raise ConfigError("sweep", f"{path} has no [sweep] table; use the run command")
    sweep = load_sweep_config(path)
    fallback = sweep.output_root or (args.preset or Path(path).stem)
    root = _default_output_root(args.output, str(fallback))
    root = run_sweep(sweep, root)
    import json
    manifest = json.loads((root / "manifest.json").read_text())
    failed = [p for p in manifest["points"] if p["status"] != "ok"]
    print(f"sweep complete: {len(manifest['points'])} points in {root}, "
          f"{len(failed)} failed")
    for point in failed:
        print(f"  FAILED {point['dir']}: {point['error']}")
    return 0 if not failed else 4


def _cmd_validate(args) -> int:
    path = _resolve_config_arg(args)
    if _is_sweep_file(path):
        sweep = load_sweep_config(path)
        n_points = len(sweep.points())
        print(f"ok: sweep config with {n_points} points "
              f"(axes: {', '.join(a.name for a in sweep.axes)})")
    else:
        cfg = load_experiment_config(path)
        print(f"ok: experiment config (N={cfg.n_sites}, engine={cfg.engine}, "
              f"mode={cfg.jump_mode.value})")
    return 0


def _cmd_oracle(args) -> int:
    """Dense self-test battery: vectorized route against direct evaluation."""
    import numpy as np

    import scipy.linalg

    from .analysis import extract_series, moments_bn
    from .krylov import arnoldi, check_recurrence_residual, lanczos
    from .oracles import action_equivalence_deviation, bohr_frequencies
    from .spin_algebra import (JumpMode, build_jump_operators, build_tfim,
                               site_operator)
    from .superop import (build_lindbladian, build_liouvillian, hermitian_split,
                          normalized, vectorize_operator)

    n = args.n
    if not 1 <= n <= 4:
        raise ConfigError("oracle.n", f"battery supports n in 1..4, got {n}")
    rng = np.random.default_rng(20250819)
    hamiltonian = build_tfim(n, -1.05, 0.5)
    checks: list[tuple[str, bool, str]] = []

    worst = 0.0
    for mode in JumpMode:
        jumps = build_jump_operators(n, 0.1, 0.1, mode)
        l_op = build_lindbladian(hamiltonian, jumps)
        dev = action_equivalence_deviation(l_op, hamiltonian, jumps,
                                           args.samples, rng)
        worst = max(worst, dev)
    checks.append(("action equivalence (all modes)", worst < 1e-11,
                   f"max dev {worst:.3e}"))

    l_closed = build_liouvillian(hamiltonian)
    spec = np.sort(scipy.linalg.eigvals(l_closed.dense()).real)
    expected = bohr_frequencies(hamiltonian)
    dev = float(np.max(np.abs(spec - expected)))
    checks.append(("closed spectrum = Bohr frequencies", dev < 1e-8,
                   f"max dev {dev:.3e}"))

    jumps = build_jump_operators(n, 0.1, 0.1, JumpMode.FULL)
    l_full = build_lindbladian(hamiltonian, jumps)
    herm, anti = hermitian_split(l_full)
    recon = herm.dense() + 1j * anti.dense() - l_full.dense()
    h_dev = float(np.max(np.abs(herm.dense() - herm.dense().conj().T)))
    checks.append(("hermitian split reconstructs L", float(np.max(np.abs(recon))) < 1e-12
                   and h_dev < 1e-12, f"recon {np.max(np.abs(recon)):.3e}"))

    seed = normalized(vectorize_operator(site_operator(n, max(1, (n + 1) // 2), "z")))
    arn = arnoldi(l_closed, seed, max_steps=40)
    lan = lanczos(l_closed, seed, max_steps=40, full_reorth=True)
    sub = extract_series(arn, "arnoldi_subdiag").values
    k = min(len(sub), len(lan.b))
    dev = float(np.max(np.abs(sub[:k] - lan.b[:k]))) if k else 0.0
    checks.append(("closed Arnoldi = reorth Lanczos", dev < 1e-8,
                   f"max dev {dev:.3e} over {k}"))

    arn_open = arnoldi(l_full, seed, max_steps=40)
    resid = check_recurrence_residual(arn_open, l_full)
    checks.append(("Arnoldi recurrence residual", resid < 1e-8, f"{resid:.3e}"))

    b_mom = moments_bn(l_closed, seed, count=min(5, len(lan.b)))
    k = min(len(b_mom), len(lan.b))
    dev = float(np.max(np.abs(b_mom[:k] - lan.b[:k]))) if k else 0.0
    checks.append(("moment recursion = Lanczos", dev < 1e-6,
                   f"max dev {dev:.3e} over {k}"))

    all_ok = True
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        all_ok &= ok
    return 0 if all_ok else 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opkrylov",
        description="Operator-growth analysis for dissipative spin chains")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p, output_help):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--config", help="path to a TOML config file")
        group.add_argument("--preset", help=f"bundled preset name; "
                                            f"one of {list_presets()}")
        p.add_argument("--output", help=output_help)

    p_run = sub.add_parser("run", help="run one experiment")
    add_config_args(p_run, "output directory (default: run label)")
    p_run.add_argument("--label", help="override the run label")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    add_config_args(p_sweep, "output root directory (default: config stem)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate", help="validate a config without running")
    group = p_val.add_mutually_exclusive_group(required=True)
    group.add_argument("--config")
    group.add_argument("--preset")
    p_val.set_defaults(func=_cmd_validate, output=None)

    p_oracle = sub.add_parser("oracle",
                              help="dense self-test battery at small N")
    p_oracle.add_argument("--n", type=int, default=2, help="chain length (1..4)")
    p_oracle.add_argument("--samples", type=int, default=20,
                          help="random operators per equivalence check")
    p_oracle.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (StateError, ValueError, ArithmeticError) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # pragma: no cover - defensive
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
