"""Operator-growth analysis for dissipative quantum spin chains.

Builds vectorized Liouvillian/Lindbladian superoperators for an Ising chain
with boundary damping and bulk dephasing, runs Lanczos and Arnoldi iterations
on them under the infinite-temperature inner product, and post-processes the
coefficient data (growth classification, Ritz values, moment cross-checks,
Krylov wavefunctions).
"""

__version__ = "0.1.0"

from .analysis import (CoefficientSeries, GrowthFit, GrowthLabel,
                       GrowthThresholds, SeriesKind, WavefunctionSeries,
                       classify_growth, extract_series, fluctuation_average,
                       moments_bn, ritz_values, wavefunctions)
from .config import (ExperimentConfig, GrowthConfig, SmoothingConfig,
                     SweepAxis, SweepConfig, TimeGrid, load_experiment_config,
                     load_sweep_config)
from .exceptions import ConfigError, StateError
from .krylov import (ArnoldiRun, LanczosRun, arnoldi, check_recurrence_residual,
                     lanczos)
from .runner import (RunResult, build_generator, emit_outputs, run_experiment,
                     run_sweep, seed_vector)
from .spin_algebra import (PAULI, JumpMode, SpinOperator, build_jump_operators,
                           build_tfim, site_operator)
from .superop import (SuperOperator, SuperVector, build_lindbladian,
                      build_liouvillian, export_coordinates, hermitian_split,
                      hilbert_dim, normalized, unvectorize, vectorize_operator,
                      wightmann_inner, wightmann_norm)

__all__ = [
    "__version__",
    "ArnoldiRun", "CoefficientSeries", "ConfigError", "ExperimentConfig",
    "GrowthConfig", "GrowthFit", "GrowthLabel", "GrowthThresholds",
    "JumpMode", "LanczosRun", "PAULI", "RunResult", "SeriesKind",
    "SmoothingConfig", "SpinOperator", "StateError", "SuperOperator",
    "SuperVector", "SweepAxis", "SweepConfig", "TimeGrid",
    "WavefunctionSeries", "arnoldi", "build_generator", "build_jump_operators",
    "build_lindbladian", "build_liouvillian", "build_tfim",
    "check_recurrence_residual", "classify_growth", "emit_outputs",
    "export_coordinates", "extract_series", "fluctuation_average",
    "hermitian_split", "hilbert_dim", "lanczos", "load_experiment_config",
    "load_sweep_config", "moments_bn", "normalized", "ritz_values",
    "run_experiment", "run_sweep", "seed_vector", "site_operator",
    "unvectorize", "vectorize_operator", "wavefunctions", "wightmann_inner",
    "wightmann_norm",
]
