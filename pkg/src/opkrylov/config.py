"""Experiment and sweep configuration: TOML loading, validation, round-trips.

An experiment file holds one ``[experiment]`` table; a sweep file additionally
holds a ``[sweep]`` table with one or more ``[[sweep.axis]]`` entries. The same
mapping shape is echoed into each run's meta.json, and ``from_mapping`` on that
echo reproduces the config object exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .exceptions import ConfigError
from .spin_algebra import PAULI_LABELS, JumpMode

ENGINES = ("lanczos", "arnoldi", "both")

# The integrable/chaotic field pairs the `regime` shorthand expands to.
REGIMES = {
    "integrable": (-1.05, 0.0),
    "chaotic": (-1.05, 0.5),
}


@dataclass(frozen=True)
class SmoothingConfig:
    s: int = 5
    n_start: int = 41


@dataclass(frozen=True)
class TimeGrid:
    start: float
    stop: float
    num: int

    def times(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


@dataclass(frozen=True)
class GrowthConfig:
    """Growth-classification window and thresholds, recorded with the run."""

    window_lo: int = 5
    window_hi: int = 30
    beta_linear: float = 0.9
    beta_sublinear: float = 0.75
    r2_linear: float = 0.98


@dataclass(frozen=True)
class ExperimentConfig:
    n_sites: int = 6
    g: float = -1.05
    h: float = 0.5
    alpha: float = 0.0
    gamma: float = 0.0
    jump_mode: JumpMode = JumpMode.FULL
    seed_site: int = 3
    seed_pauli: str = "z"
    engine: str = "both"
    max_steps: int = 60
    tol: float = 1e-10
    reorth: bool | None = None
    smoothing: SmoothingConfig = SmoothingConfig()
    time_grid: TimeGrid | None = None
    growth: GrowthConfig = GrowthConfig()
    emit_hessenberg: bool = True
    compute_ritz: bool = True
    retain_basis: bool = True
    reproducible: bool = True
    output_dir: str | None = None

    def __post_init__(self) -> None:
        if isinstance(self.jump_mode, str):
            object.__setattr__(self, "jump_mode", JumpMode.parse(self.jump_mode))
    run_label: str = "run"

    def validate(self, prefix: str = "experiment") -> None:
        def bad(name: str, message: str):
            raise ConfigError(f"{prefix}.{name}", message)

        if self.n_sites < 1:
            bad("n_sites", f"must be >= 1, got {self.n_sites}")
        if self.alpha < 0:
            bad("alpha", f"must be >= 0, got {self.alpha}")
        if self.gamma < 0:
            bad("gamma", f"must be >= 0, got {self.gamma}")
        if not 1 <= self.seed_site <= self.n_sites:
            bad("seed_site", f"must be in 1..{self.n_sites}, got {self.seed_site}")
        if self.seed_pauli not in PAULI_LABELS:
            bad("seed_pauli", f"must be one of {PAULI_LABELS}, got {self.seed_pauli!r}")
        if self.engine not in ENGINES:
            bad("engine", f"must be one of {ENGINES}, got {self.engine!r}")
        if self.max_steps < 1:
            bad("max_steps", f"must be >= 1, got {self.max_steps}")
        if not self.tol > 0:
            bad("tol", f"must be > 0, got {self.tol}")
        if self.smoothing.s < 1:
            bad("smoothing.s", f"must be >= 1, got {self.smoothing.s}")
        if self.smoothing.n_start < 1:
            bad("smoothing.n_start", f"must be >= 1, got {self.smoothing.n_start}")
        if self.time_grid is not None and self.time_grid.num < 1:
            bad("time_grid.num", f"must be >= 1, got {self.time_grid.num}")
        g = self.growth
        if g.window_hi < g.window_lo:
            bad("growth.window_hi", f"window [{g.window_lo}, {g.window_hi}] is empty")
        if not 0 < g.beta_sublinear <= g.beta_linear:
            bad("growth.beta_sublinear",
                f"need 0 < beta_sublinear <= beta_linear, got "
                f"{g.beta_sublinear} vs {g.beta_linear}")
        if not 0 < g.r2_linear <= 1:
            bad("growth.r2_linear", f"must be in (0, 1], got {g.r2_linear}")

    @property
    def effective_reorth(self) -> bool:
        """Reorthogonalization default: on for closed runs, off when jumps exist."""
        if self.reorth is not None:
            return self.reorth
        if self.jump_mode is JumpMode.CLOSED:
            return True
        has_damping = (self.alpha > 0 and
                       self.jump_mode in (JumpMode.FULL, JumpMode.BOUNDARY_ONLY))
        has_dephasing = (self.gamma > 0 and
                         self.jump_mode in (JumpMode.FULL, JumpMode.DEPHASING_ONLY))
        return not (has_damping or has_dephasing)

    def to_mapping(self) -> dict:
        out = {
            "n_sites": self.n_sites, "g": self.g, "h": self.h,
            "alpha": self.alpha, "gamma": self.gamma,
            "jump_mode": self.jump_mode.value,
            "seed_site": self.seed_site, "seed_pauli": self.seed_pauli,
            "engine": self.engine, "max_steps": self.max_steps, "tol": self.tol,
            "reorth": self.reorth,
            "smoothing": {"s": self.smoothing.s, "n_start": self.smoothing.n_start},
            "time_grid": None,
            "growth": {"window_lo": self.growth.window_lo,
                       "window_hi": self.growth.window_hi,
                       "beta_linear": self.growth.beta_linear,
                       "beta_sublinear": self.growth.beta_sublinear,
                       "r2_linear": self.growth.r2_linear},
            "emit_hessenberg": self.emit_hessenberg,
            "compute_ritz": self.compute_ritz,
            "retain_basis": self.retain_basis,
            "reproducible": self.reproducible,
            "output_dir": self.output_dir,
            "run_label": self.run_label,
        }
        if self.time_grid is not None:
            out["time_grid"] = {"start": self.time_grid.start,
                                "stop": self.time_grid.stop,
                                "num": self.time_grid.num}
        return out

    @classmethod
    def from_mapping(cls, mapping: dict, prefix: str = "experiment") -> ExperimentConfig:
        """Build and validate a config from a TOML table or meta.json echo."""
        if not isinstance(mapping, dict):
            raise ConfigError(prefix, f"expected a table, got {type(mapping).__name__}")
        data = dict(mapping)

        # `regime` is shorthand for the (g, h) field pair.
        regime = data.pop("regime", None)
        if regime is not None:
            if "g" in data or "h" in data:
                raise ConfigError(f"{prefix}.regime",
                                  "conflicts with explicit g/h values")
            if regime not in REGIMES:
                raise ConfigError(f"{prefix}.regime",
                                  f"must be one of {sorted(REGIMES)}, got {regime!r}")
            data["g"], data["h"] = REGIMES[regime]

        # `[experiment.output]` nests dir/label; flatten it.
        output = data.pop("output", None)
        if output is not None:
            extra = set(output) - {"dir", "label"}
            if extra:
                raise ConfigError(f"{prefix}.output",
                                  f"unknown keys {sorted(extra)}")
            if "dir" in output:
                data["output_dir"] = str(output["dir"])
            if "label" in output:
                data["run_label"] = str(output["label"])

        known = {
            "n_sites", "g", "h", "alpha", "gamma", "jump_mode", "seed_site",
            "seed_pauli", "engine", "max_steps", "tol", "reorth", "smoothing",
            "time_grid", "growth", "emit_hessenberg", "compute_ritz",
            "retain_basis", "reproducible", "output_dir", "run_label",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{prefix}.{sorted(unknown)[0]}", "unknown key")

        kwargs: dict = {}
        for name in ("n_sites", "seed_site", "max_steps"):
            if name in data:
                kwargs[name] = _as_int(data[name], f"{prefix}.{name}")
        for name in ("g", "h", "alpha", "gamma", "tol"):
            if name in data:
                kwargs[name] = _as_float(data[name], f"{prefix}.{name}")
        for name in ("emit_hessenberg", "compute_ritz", "retain_basis", "reproducible"):
            if name in data:
                kwargs[name] = _as_bool(data[name], f"{prefix}.{name}")
        if data.get("reorth") is not None:
            kwargs["reorth"] = _as_bool(data["reorth"], f"{prefix}.reorth")
        for name in ("seed_pauli", "engine", "run_label"):
            if name in data:
                kwargs[name] = str(data[name])
        if "output_dir" in data and data["output_dir"] is not None:
            kwargs["output_dir"] = str(data["output_dir"])
        if "jump_mode" in data:
            try:
                kwargs["jump_mode"] = JumpMode.parse(data["jump_mode"])
            except ValueError as exc:
                raise ConfigError(f"{prefix}.jump_mode", str(exc)) from None
        if "smoothing" in data:
            table = data["smoothing"]
            if not isinstance(table, dict):
                raise ConfigError(f"{prefix}.smoothing", "expected a table")
            kwargs["smoothing"] = SmoothingConfig(
                s=_as_int(table.get("s", 5), f"{prefix}.smoothing.s"),
                n_start=_as_int(table.get("n_start", 41), f"{prefix}.smoothing.n_start"))
        if data.get("time_grid") is not None:
            table = data["time_grid"]
            if not isinstance(table, dict) or not {"stop", "num"} <= set(table):
                raise ConfigError(f"{prefix}.time_grid",
                                  "expected a table with stop and num (start optional)")
            kwargs["time_grid"] = TimeGrid(
                start=_as_float(table.get("start", 0.0), f"{prefix}.time_grid.start"),
                stop=_as_float(table["stop"], f"{prefix}.time_grid.stop"),
                num=_as_int(table["num"], f"{prefix}.time_grid.num"))
        if "growth" in data:
            table = data["growth"]
            if not isinstance(table, dict):
                raise ConfigError(f"{prefix}.growth", "expected a table")
            base = GrowthConfig()
            kwargs["growth"] = GrowthConfig(
                window_lo=_as_int(table.get("window_lo", base.window_lo),
                                  f"{prefix}.growth.window_lo"),
                window_hi=_as_int(table.get("window_hi", base.window_hi),
                                  f"{prefix}.growth.window_hi"),
                beta_linear=_as_float(table.get("beta_linear", base.beta_linear),
                                      f"{prefix}.growth.beta_linear"),
                beta_sublinear=_as_float(table.get("beta_sublinear", base.beta_sublinear),
                                         f"{prefix}.growth.beta_sublinear"),
                r2_linear=_as_float(table.get("r2_linear", base.r2_linear),
                                    f"{prefix}.growth.r2_linear"))

        cfg = cls(**kwargs)
        cfg.validate(prefix)
        return cfg


@dataclass(frozen=True)
class SweepAxis:
    name: str
    values: tuple

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SweepConfig:
    base: ExperimentConfig
    axes: tuple[SweepAxis, ...]
    parallelism: int = 1
    closed_at_zero_alpha: bool = False
    output_root: str | None = None

    SWEEPABLE = ("n_sites", "g", "h", "alpha", "gamma", "jump_mode",
                 "seed_site", "seed_pauli", "max_steps", "regime")

    def points(self) -> list[tuple[dict, ExperimentConfig]]:
        """Expand the axes into (parameter mapping, concrete config) pairs.

        The virtual axis `regime` expands to the (g, h) pair. With
        closed_at_zero_alpha set, an alpha = 0 point runs with
        jump_mode = closed so sweeps carry their closed baseline.
        """
        import itertools

        combos = itertools.product(*[axis.values for axis in self.axes])
        out = []
        for combo in combos:
            params = {axis.name: value for axis, value in zip(self.axes, combo)}
            overrides: dict = {}
            for name, value in params.items():
                if name == "regime":
                    overrides["g"], overrides["h"] = REGIMES[value]
                elif name == "jump_mode":
                    overrides["jump_mode"] = JumpMode.parse(value)
                else:
                    overrides[name] = value
            if self.closed_at_zero_alpha and params.get("alpha") == 0:
                overrides["jump_mode"] = JumpMode.CLOSED
            cfg = replace(self.base, **overrides)
            cfg.validate(prefix="sweep.point")
            out.append((params, cfg))
        return out


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return value


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(path, f"expected a boolean, got {value!r}")
    return value


def _read_toml(path) -> dict:
    with open(path, "rb") as handle:
        try:
            return tomllib.load(handle)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(str(path), f"invalid TOML: {exc}") from None


def load_experiment_config(path) -> ExperimentConfig:
    doc = _read_toml(path)
    if "experiment" not in doc:
        raise ConfigError("experiment", f"missing [experiment] table in {path}")
    return ExperimentConfig.from_mapping(doc["experiment"])


def load_sweep_config(path) -> SweepConfig:
    doc = _read_toml(path)
    if "experiment" not in doc:
        raise ConfigError("experiment", f"missing [experiment] table in {path}")
    if "sweep" not in doc:
        raise ConfigError("sweep", f"missing [sweep] table in {path}")
    base = ExperimentConfig.from_mapping(doc["experiment"])
    table = dict(doc["sweep"])
    raw_axes = table.pop("axis", None)
    if not raw_axes:
        raise ConfigError("sweep.axis", "a sweep needs at least one [[sweep.axis]]")
    axes = []
    for i, axis in enumerate(raw_axes):
        name = axis.get("name")
        values = axis.get("values")
        if name not in SweepConfig.SWEEPABLE:
            raise ConfigError(f"sweep.axis[{i}].name",
                              f"must be one of {SweepConfig.SWEEPABLE}, got {name!r}")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.axis[{i}].values", "expected a non-empty list")
        if name == "regime":
            for value in values:
                if value not in REGIMES:
                    raise ConfigError(f"sweep.axis[{i}].values",
                                      f"regime values must be in {sorted(REGIMES)}, "
                                      f"got {value!r}")
        axes.append(SweepAxis(str(name), tuple(values)))
    parallelism = _as_int(table.pop("parallelism", 1), "sweep.parallelism")
    if parallelism < 1:
        raise ConfigError("sweep.parallelism", f"must be >= 1, got {parallelism}")
    closed_flag = _as_bool(table.pop("closed_at_zero_alpha", False),
                           "sweep.closed_at_zero_alpha")
    output_root = table.pop("output_root", None)
    if output_root is not None:
        output_root = str(output_root)
    if table:
        raise ConfigError(f"sweep.{sorted(table)[0]}", "unknown key")
    sweep = SweepConfig(base=base, axes=tuple(axes), parallelism=parallelism,
                        closed_at_zero_alpha=closed_flag, output_root=output_root)
    # Fail fast on any invalid combination before the engine starts.
    sweep.points()
    return sweep
