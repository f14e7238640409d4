"""Experiment runner: builds the generator, runs the engines, emits outputs.

All CSV emission is deterministic: floats are printed with %.17g (binary64
round-trips exactly), series kinds appear in a fixed order, and no randomness
enters the pipeline, so rerunning a config byte-reproduces every CSV. meta.json
carries timing and is the one file allowed to differ between reruns.
"""

from __future__ import annotations

import json
import time
from contextlib import nullcontext
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .analysis import (CoefficientSeries, GrowthFit, GrowthThresholds,
                       SeriesKind, WavefunctionSeries, classify_growth,
                       extract_series, fluctuation_average, ritz_values,
                       wavefunctions)
from .config import ExperimentConfig, SweepConfig
from .exceptions import ConfigError
from .krylov import ArnoldiRun, LanczosRun, arnoldi, lanczos
from .spin_algebra import build_jump_operators, build_tfim, site_operator
from .superop import (SuperOperator, build_lindbladian, normalized,
                      vectorize_operator)

KIND_ORDER = (SeriesKind.LANCZOS_B, SeriesKind.ARNOLDI_SUBDIAG,
              SeriesKind.ARNOLDI_SUPERDIAG, SeriesKind.ARNOLDI_DIAG_ABS,
              SeriesKind.SUBDIAG_ASYMMETRY)

_LANCZOS_KINDS = (SeriesKind.LANCZOS_B,)
_ARNOLDI_KINDS = (SeriesKind.ARNOLDI_SUBDIAG, SeriesKind.ARNOLDI_SUPERDIAG,
                  SeriesKind.ARNOLDI_DIAG_ABS, SeriesKind.SUBDIAG_ASYMMETRY)


@dataclass
class RunResult:
    """Everything one experiment produced, before any file I/O."""

    config: ExperimentConfig
    lanczos_run: LanczosRun | None = None
    arnoldi_run: ArnoldiRun | None = None
    series: dict[SeriesKind, CoefficientSeries] = field(default_factory=dict)
    smoothed: dict[SeriesKind, CoefficientSeries] = field(default_factory=dict)
    growth: dict[SeriesKind, GrowthFit] = field(default_factory=dict)
    ritz: np.ndarray | None = None
    waves: dict[str, WavefunctionSeries] = field(default_factory=dict)
    wall_time_s: float = 0.0


def build_generator(cfg: ExperimentConfig) -> SuperOperator:
    """Assemble the vectorized generator the config describes."""
    hamiltonian = build_tfim(cfg.n_sites, cfg.g, cfg.h)
    jumps = build_jump_operators(cfg.n_sites, cfg.alpha, cfg.gamma, cfg.jump_mode)
    return build_lindbladian(hamiltonian, jumps)


def seed_vector(cfg: ExperimentConfig):
    op = site_operator(cfg.n_sites, cfg.seed_site, cfg.seed_pauli)
    return normalized(vectorize_operator(op))


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    cfg.validate()
    if cfg.time_grid is not None and not cfg.retain_basis:
        raise ConfigError("experiment.time_grid",
                          "wavefunctions need retain_basis = true")
    started = time.perf_counter()
    guard = threadpool_limits(limits=1) if cfg.reproducible else nullcontext()
    result = RunResult(config=cfg)
    with guard:
        l_op = build_generator(cfg)
        seed = seed_vector(cfg)
        if cfg.engine in ("lanczos", "both"):
            result.lanczos_run = lanczos(l_op, seed, cfg.max_steps, cfg.tol,
                                         full_reorth=cfg.effective_reorth,
                                         retain_basis=cfg.retain_basis)
        if cfg.engine in ("arnoldi", "both"):
            result.arnoldi_run = arnoldi(l_op, seed, cfg.max_steps, cfg.tol,
                                         retain_basis=cfg.retain_basis)

        thresholds = GrowthThresholds(beta_linear=cfg.growth.beta_linear,
                                      beta_sublinear=cfg.growth.beta_sublinear,
                                      r2_linear=cfg.growth.r2_linear)
        window = (cfg.growth.window_lo, cfg.growth.window_hi)
        for run, kinds in ((result.lanczos_run, _LANCZOS_KINDS),
                           (result.arnoldi_run, _ARNOLDI_KINDS)):
            if run is None:
                continue
            for kind in kinds:
                series = extract_series(run, kind)
                result.series[kind] = series
                if len(series) > 0:
                    result.smoothed[kind] = fluctuation_average(
                        series, cfg.smoothing.s, cfg.smoothing.n_start)
                try:
                    result.growth[kind] = classify_growth(series, window, thresholds)
                except ValueError:
                    pass  # window underpopulated for this run; no fit recorded

        if cfg.compute_ritz and result.arnoldi_run is not None:
            result.ritz = ritz_values(result.arnoldi_run)
        if cfg.time_grid is not None:
            times = cfg.time_grid.times()
            if result.lanczos_run is not None:
                result.waves["lanczos"] = wavefunctions(l_op, result.lanczos_run, times)
            if result.arnoldi_run is not None:
                result.waves["arnoldi"] = wavefunctions(l_op, result.arnoldi_run, times)
    result.wall_time_s = time.perf_counter() - started
    return result


def _fmt(value: float) -> str:
    return f"{float(value):.17g}"


def emit_outputs(result: RunResult, out_dir) -> list[Path]:
    """Write the run's files into out_dir; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    written: list[Path] = []

    path = out_dir / "coefficients.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n,kind,value,smoothed_value\n")
        for kind in KIND_ORDER:
            series = result.series.get(kind)
            if series is None:
                continue
            smoothed = result.smoothed.get(kind)
            for pos, (n, value) in enumerate(zip(series.n_index, series.values)):
                tail = _fmt(smoothed.values[pos]) if smoothed is not None else ""
                fh.write(f"{n},{kind.value},{_fmt(value)},{tail}\n")
    written.append(path)

    if cfg.emit_hessenberg and result.arnoldi_run is not None:
        path = out_dir / "hessenberg.csv"
        hess = result.arnoldi_run.hessenberg
        rows, cols = hess.shape
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("row,col,re,im\n")
            for i in range(rows):
                # Upper-Hessenberg band only; below it are structural zeros.
                for j in range(max(0, i - 1), cols):
                    val = hess[i, j]
                    fh.write(f"{i},{j},{_fmt(val.real)},{_fmt(val.imag)}\n")
        written.append(path)

    if result.ritz is not None:
        path = out_dir / "ritz.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("re,im\n")
            for val in result.ritz:
                fh.write(f"{_fmt(val.real)},{_fmt(val.imag)}\n")
        written.append(path)

    if result.growth:
        path = out_dir / "growth.json"
        payload = {}
        for kind in KIND_ORDER:
            fit = result.growth.get(kind)
            if fit is None:
                continue
            beta = fit.beta if np.isfinite(fit.beta) else None
            payload[kind.value] = {"slope": fit.slope, "fit_quality": fit.fit_quality,
                                   "beta": beta, "label": fit.label.value,
                                   "window": list(fit.window)}
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        written.append(path)

    # One engine -> the plain filename; both engines -> suffixed files.
    for engine, waves in sorted(result.waves.items()):
        if len(result.waves) == 1:
            path = out_dir / "wavefunctions.csv"
        else:
            path = out_dir / f"wavefunctions_{engine}.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,n,re,im,norm,complexity\n")
            for ti, t in enumerate(waves.times):
                norm, comp = _fmt(waves.norm[ti]), _fmt(waves.complexity[ti])
                for n in range(waves.phi.shape[0]):
                    val = waves.phi[n, ti]
                    fh.write(f"{_fmt(t)},{n},{_fmt(val.real)},{_fmt(val.imag)},"
                             f"{norm},{comp}\n")
        written.append(path)

    meta = {
        "config": cfg.to_mapping(),
        "version": __version__,
        "wall_time_s": result.wall_time_s,
        "runs": {},
    }
    if result.lanczos_run is not None:
        run = result.lanczos_run
        meta["runs"]["lanczos"] = {
            "steps": run.steps, "terminated": run.terminated,
            "krylov_dim": run.krylov_dim, "scale": run.scale,
            "full_reorth": run.full_reorth,
            "orthogonality_defect": run.orthogonality_defect,
        }
    if result.arnoldi_run is not None:
        run = result.arnoldi_run
        meta["runs"]["arnoldi"] = {
            "steps": run.steps, "terminated": run.terminated,
            "krylov_dim": run.krylov_dim, "scale": run.scale,
            "orthogonality_defect": run.orthogonality_defect,
        }
    path = out_dir / "meta.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    written.append(path)
    return written


def format_param(value) -> str:
    """Directory-name rendering of one sweep parameter value."""
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def point_dirname(params: dict) -> str:
    return "__".join(f"{name}={format_param(value)}" for name, value in params.items())


def _run_point(cfg: ExperimentConfig, out_dir: str) -> None:
    result = run_experiment(cfg)
    emit_outputs(result, out_dir)


def run_sweep(sweep: SweepConfig, output_root) -> Path:
    """Run every sweep point, then write manifest.json; returns the root dir.

    A failing point is recorded in the manifest with its error message and
    does not stop the remaining points.
    """
    root = Path(output_root)
    root.mkdir(parents=True, exist_ok=True)
    points = sweep.points()
    jobs = []
    for params, cfg in points:
        dirname = point_dirname(params)
        cfg = replace(cfg, output_dir=None, run_label=dirname)
        jobs.append((params, cfg, dirname))

    entries = []
    if sweep.parallelism > 1:
        import multiprocessing

        with multiprocessing.Pool(processes=sweep.parallelism) as pool:
            handles = [pool.apply_async(_run_point, (cfg, str(root / dirname)))
                       for _, cfg, dirname in jobs]
            for (params, _, dirname), handle in zip(jobs, handles):
                try:
                    handle.get()
                    entries.append({"params": params, "dir": dirname,
                                    "status": "ok", "error": None})
                except Exception as exc:
                    entries.append({"params": params, "dir": dirname,
                                    "status": "error", "error": str(exc)})
    else:
        for params, cfg, dirname in jobs:
            try:
                _run_point(cfg, str(root / dirname))
                entries.append({"params": params, "dir": dirname,
                                "status": "ok", "error": None})
            except Exception as exc:
                entries.append({"params": params, "dir": dirname,
                                "status": "error", "error": str(exc)})

    manifest = {
        "axes": [{"name": axis.name, "values": list(axis.values)}
                 for axis in sweep.axes],
        "base_config": sweep.base.to_mapping(),
        "closed_at_zero_alpha": sweep.closed_at_zero_alpha,
        "points": entries,
    }
    with open(root / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return root
