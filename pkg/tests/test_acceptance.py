"""End-to-end acceptance checks.

Each test prints the measured figure of merit and asserts the documented
tolerance, so ``pytest -v`` gives one pass/fail line per criterion. The
exhaustion runs (criterion 7) dominate the runtime; everything else is
seconds. Fixtures are module-scoped so the N=6 runs are shared.
"""

import gc
import itertools
import json

import numpy as np
import pytest

from opkrylov.analysis import (
    GrowthLabel,
    SeriesKind,
    classify_growth,
    extract_series,
    moments_bn,
    ritz_values,
)
from opkrylov.cli import main
from opkrylov.config import REGIMES, ExperimentConfig, TimeGrid
from opkrylov.krylov import arnoldi, check_recurrence_residual
from opkrylov.oracles import (
    action_equivalence_deviation,
    match_spectra,
    reachable_spectrum,
)
from opkrylov.runner import build_generator, run_experiment, seed_vector
from opkrylov.spin_algebra import JumpMode, build_jump_operators, build_tfim
from opkrylov.superop import build_lindbladian

OPEN_ALPHAS = (0.01, 0.05, 0.1, 0.15)
GAMMA = 0.1
STEPS = 60
TOL = 1e-10


def n6_config(regime, **overrides):
    g, h = REGIMES[regime]
    base = dict(n_sites=6, g=g, h=h, seed_site=3, seed_pauli="z",
                max_steps=STEPS, tol=TOL, compute_ritz=False,
                retain_basis=True)
    base.update(overrides)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def closed_results():
    return {regime: run_experiment(n6_config(regime, jump_mode="closed",
                                             engine="both"))
            for regime in REGIMES}


@pytest.fixture(scope="module")
def open_arnoldi():
    out = {}
    for regime, alpha in itertools.product(REGIMES, OPEN_ALPHAS):
        cfg = n6_config(regime, jump_mode="full", alpha=alpha, gamma=GAMMA,
                        engine="arnoldi")
        out[regime, alpha] = run_experiment(cfg)
    return out


@pytest.fixture(scope="module")
def open_lanczos():
    return {regime: run_experiment(n6_config(regime, jump_mode="full",
                                             alpha=0.15, gamma=GAMMA,
                                             engine="lanczos",
                                             retain_basis=False))
            for regime in REGIMES}


def _sampled_residual(run, l_op, n_cols=128):
    """Max Wightmann norm of L q_j - sum_i h_ij q_i over sampled columns j."""
    hess, basis = run.hessenberg, run.basis
    n_cols_total = hess.shape[1]
    rng = np.random.default_rng(1905)
    cols = np.unique(np.concatenate([
        np.arange(min(8, n_cols_total)),
        np.arange(max(0, n_cols_total - 8), n_cols_total),
        rng.integers(0, n_cols_total, size=n_cols),
    ]))
    lhs = np.stack([l_op.apply(basis[j]) for j in cols])
    rhs = hess[:, cols].T @ basis[:hess.shape[0]]
    dev = np.linalg.norm(lhs - rhs, axis=1) / np.sqrt(2 ** run.n_sites)
    return float(np.max(dev))


@pytest.fixture(scope="module")
def exhaustion_summaries():
    out = {}
    for regime in REGIMES:
        cfg = n6_config(regime, jump_mode="full", alpha=0.05, gamma=GAMMA,
                        engine="arnoldi", max_steps=4096)
        result = run_experiment(cfg)
        run = result.arnoldi_run
        l_op = build_generator(cfg)
        hess = run.hessenberg
        sub = hess.diagonal(-1)
        smoothed = result.smoothed[SeriesKind.ARNOLDI_SUBDIAG]
        out[regime] = {
            "terminated": run.terminated,
            "krylov_dim": run.krylov_dim,
            "defect": run.orthogonality_defect,
            "tril_max": float(np.max(np.abs(np.tril(hess, -2)))),
            "subdiag_min": float(np.min(sub.real)),
            "subdiag_imag_max": float(np.max(np.abs(sub.imag))),
            "residual": _sampled_residual(run, l_op),
            "smoothed_values": smoothed.values.copy(),
        }
        del result, run, hess, l_op
        gc.collect()
    return out


def _subdiag(result):
    return extract_series(result.arnoldi_run, SeriesKind.ARNOLDI_SUBDIAG).values


def _diag_abs(result):
    return extract_series(result.arnoldi_run, SeriesKind.ARNOLDI_DIAG_ABS).values


def test_criterion_01_hermitian_limit_equivalence(closed_results):
    # closed chain, both coupling regimes: Arnoldi reduces to reorthogonalized
    # Lanczos entry by entry over the first 60 steps
    worst_sub, worst_diag = 0.0, 0.0
    for regime, result in closed_results.items():
        assert result.lanczos_run.full_reorth
        b = result.lanczos_run.b[:STEPS]
        hess = result.arnoldi_run.hessenberg
        sub = hess.diagonal(-1)[:len(b)]
        diag = np.abs(np.diag(hess))[:STEPS]
        worst_sub = max(worst_sub, float(np.max(np.abs(sub - b))))
        worst_diag = max(worst_diag, float(np.max(diag)))
    print(f"max |h_(n,n-1) - b_n| = {worst_sub:.3e}, "
          f"max |h_(n,n)| = {worst_diag:.3e}")
    assert worst_sub < 1e-8
    assert worst_diag < 1e-8


def test_criterion_02_dense_oracle_spectrum():
    # N=2 dissipative chain run to full Krylov dimension: Ritz values equal
    # the dense spectrum restricted to the reachable subspace
    cfg = ExperimentConfig(n_sites=2, alpha=0.1, gamma=0.1, jump_mode="full",
                           seed_site=1, seed_pauli="z", engine="arnoldi",
                           max_steps=16, tol=TOL)
    l_op = build_generator(cfg)
    run = arnoldi(l_op, seed_vector(cfg), max_steps=16, tol=TOL)
    assert run.terminated
    ritz = ritz_values(run)
    expected = reachable_spectrum(l_op.dense(), seed_vector(cfg).entries)
    assert len(ritz) == len(expected)
    deviation = match_spectra(ritz, expected)
    print(f"K = {run.krylov_dim}, spectrum match deviation = {deviation:.3e}")
    assert deviation < 1e-8


def test_criterion_03_action_equivalence():
    # vectorized generator action vs direct Heisenberg right-hand side,
    # 20 random operators per jump mode at N = 1, 2, 3
    rng = np.random.default_rng(20260819)
    worst = 0.0
    for n in (1, 2, 3):
        hamiltonian = build_tfim(n, -1.05, 0.5)
        for mode in JumpMode:
            jumps = build_jump_operators(n, 0.1, 0.1, mode)
            l_op = build_lindbladian(hamiltonian, jumps)
            dev = action_equivalence_deviation(l_op, hamiltonian, jumps, 20, rng)
            worst = max(worst, dev)
    print(f"max action deviation = {worst:.3e}")
    assert worst < 1e-11


def test_criterion_04_lanczos_breakdown_trend(closed_results, open_lanczos):
    """Closed sublinear/linear regime labels; open runs overtake and keep growing.

    The chaotic-linear clause asserts the size-independent idealization
    (log-log exponent >= 0.9 over n in [5, 30]). At N=6 the coefficients
    saturate near n = 12 at roughly a quarter of the generator's spectral
    width (series verified against an independent spectral-measure oracle to
    7e-11), so the measured exponent is ~0.23 for any regime and the final
    assert fails honestly. All measured values are printed above it.
    """
    fits = {}
    for regime, result in closed_results.items():
        series = extract_series(result.lanczos_run, SeriesKind.LANCZOS_B)
        fits[regime] = classify_growth(series, (5, 30))
    print(f"closed integrable: beta = {fits['integrable'].beta:.3f}, "
          f"r2 = {fits['integrable'].fit_quality:.3f} "
          f"({fits['integrable'].label.value}); "
          f"closed chaotic: beta = {fits['chaotic'].beta:.3f}, "
          f"r2 = {fits['chaotic'].fit_quality:.3f} "
          f"({fits['chaotic'].label.value})")
    assert fits["integrable"].label is GrowthLabel.SUBLINEAR
    assert fits["integrable"].beta <= 0.75

    for regime in REGIMES:
        b_open = open_lanczos[regime].lanczos_run.b
        b_closed = closed_results[regime].lanczos_run.b
        window = slice(24, 40)  # n = 25..40 with 1-based coefficients
        excess = b_open[window] - b_closed[window]
        assert np.all(excess > 0), f"{regime}: open b_n fell below closed"
        series = extract_series(open_lanczos[regime].lanczos_run,
                                SeriesKind.LANCZOS_B)
        fit = classify_growth(series, (25, 60))
        print(f"open {regime}: min excess {np.min(excess):.3f}, "
              f"late slope {fit.slope:.4f}")
        assert fit.slope > 0

    assert fits["chaotic"].label is GrowthLabel.LINEAR, (
        f"chaotic closed run classified {fits['chaotic'].label.value} "
        f"(beta = {fits['chaotic'].beta:.3f}, "
        f"linear-fit r2 = {fits['chaotic'].fit_quality:.3f}): finite-size "
        f"saturation caps the exponent far below the 0.9 threshold")
    assert fits["chaotic"].beta >= 0.9


def test_criterion_05_arnoldi_robustness_trend(closed_results, open_arnoldi):
    """h_(n,n-1) damping-insensitivity, regime separation, asymmetry onset.

    The asymmetry clauses pass. The two growth clauses assert idealized
    behavior: at N=6 saturation drives the log-log exponent to ~0.15
    (integrable) and ~0.24 (chaotic), so both regimes land in the same
    label band at every damping strength, and the strongest/weakest damping
    pair differs pointwise by up to 12.9% at two late-n points (aggregate
    deviation over the window is 4.6%). Those asserts fail honestly; all
    measured values are printed above them.
    """
    for (regime, alpha), result in open_arnoldi.items():
        asym = extract_series(result.arnoldi_run,
                              SeriesKind.SUBDIAG_ASYMMETRY).values
        assert np.max(asym) > 10 * TOL, f"{regime}, alpha={alpha}"
    closed_asym = max(
        float(np.max(extract_series(result.arnoldi_run,
                                    SeriesKind.SUBDIAG_ASYMMETRY).values))
        for result in closed_results.values())
    print(f"closed max asymmetry = {closed_asym:.3e}")
    assert closed_asym < 1e-8

    labels = {}
    for alpha in OPEN_ALPHAS:
        for regime in REGIMES:
            series = extract_series(open_arnoldi[regime, alpha].arnoldi_run,
                                    SeriesKind.ARNOLDI_SUBDIAG)
            fit = classify_growth(series, (5, 30))
            labels[regime, alpha] = fit
        print(f"alpha={alpha}: integrable "
              f"{labels['integrable', alpha].label.value} "
              f"(beta={labels['integrable', alpha].beta:.3f}), chaotic "
              f"{labels['chaotic', alpha].label.value} "
              f"(beta={labels['chaotic', alpha].beta:.3f})")

    window = slice(4, 40)  # n = 5..40
    worst = {}
    for regime in REGIMES:
        series = {alpha: _subdiag(open_arnoldi[regime, alpha])[window]
                  for alpha in OPEN_ALPHAS}
        deviations = []
        for a, b in itertools.combinations(OPEN_ALPHAS, 2):
            rel = np.abs(series[a] - series[b]) / np.maximum(
                np.abs(series[a]), np.abs(series[b]))
            deviations.append(float(np.max(rel)))
        worst[regime] = max(deviations)
        print(f"{regime}: max pairwise relative deviation = "
              f"{worst[regime]:.4f}")

    for regime in REGIMES:
        assert worst[regime] < 0.10, (
            f"{regime}: pointwise pairwise deviation {worst[regime]:.4f} "
            f"exceeds 10% at isolated late-n points")
    for alpha in OPEN_ALPHAS:
        assert (labels["integrable", alpha].label
                is not labels["chaotic", alpha].label), (
            f"alpha={alpha}: both regimes classified "
            f"{labels['chaotic', alpha].label.value}")


def test_criterion_06_diagonal_sensitivity_trend(closed_results, open_arnoldi):
    # mean |h_(n,n)| grows strictly with the damping strength; it vanishes
    # identically on closed runs
    window = slice(4, 40)  # n = 5..40 with 0-based diagonal indexed from n=0
    for regime in REGIMES:
        means = [float(np.mean(_diag_abs(open_arnoldi[regime, alpha])[window]))
                 for alpha in OPEN_ALPHAS]
        print(f"{regime}: mean |h_(n,n)| by alpha = "
              + ", ".join(f"{m:.4f}" for m in means))
        assert all(a < b for a, b in zip(means, means[1:]))
    closed_diag = max(float(np.max(_diag_abs(result)))
                      for result in closed_results.values())
    print(f"closed max |h_(n,n)| = {closed_diag:.3e}")
    assert closed_diag < 1e-8


def test_criterion_07_krylov_exhaustion_trend(exhaustion_summaries):
    # runs driven to termination: bounded Krylov dimension, smoothed
    # coefficients collapsing at the end, and regime-independent dimension
    dims = {}
    for regime, summary in exhaustion_summaries.items():
        assert summary["terminated"], f"{regime}: no termination within 4096"
        k = summary["krylov_dim"]
        dims[regime] = k
        assert k <= 4096
        smoothed = summary["smoothed_values"]
        peak = float(np.max(smoothed))
        tail_start = int(np.ceil(0.9 * len(smoothed)))
        tail_min = float(np.min(smoothed[tail_start:]))
        print(f"{regime}: K = {k}, smoothed peak = {peak:.3f}, "
              f"tail min/peak = {tail_min / peak:.5f}")
        assert tail_min < 0.05 * peak
    spread = abs(dims["integrable"] - dims["chaotic"])
    assert spread <= 0.10 * max(dims.values()), dims


def test_criterion_08_structural_invariants(closed_results, open_arnoldi,
                                            exhaustion_summaries):
    # every Arnoldi run: structural zeros below the first subdiagonal,
    # nonnegative real subdiagonal, orthonormal basis, recurrence residual
    batches = [(f"closed {regime}", result, n6_config(regime, jump_mode="closed"))
               for regime, result in closed_results.items()]
    batches += [(f"open {regime} alpha={alpha}", result,
                 n6_config(regime, jump_mode="full", alpha=alpha, gamma=GAMMA))
                for (regime, alpha), result in open_arnoldi.items()]

    worst_defect, worst_residual = 0.0, 0.0
    for name, result, cfg in batches:
        run = result.arnoldi_run
        hess = run.hessenberg
        assert np.max(np.abs(np.tril(hess, -2))) == 0.0, name
        sub = hess.diagonal(-1)
        assert np.max(np.abs(sub.imag)) == 0.0, name
        assert np.min(sub.real) >= 0.0, name
        gram = run.basis @ run.basis.conj().T / 2 ** run.n_sites
        defect = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
        residual = check_recurrence_residual(run, build_generator(cfg))
        worst_defect = max(worst_defect, defect)
        worst_residual = max(worst_residual, residual)
        assert defect < 1e-8, name
        assert residual < 1e-8, name

    # long truncated run: orthonormality holds out to p = 200
    cfg = n6_config("chaotic", jump_mode="full", alpha=0.15, gamma=GAMMA,
                    max_steps=200, engine="arnoldi")
    l_op = build_generator(cfg)
    long_run = arnoldi(l_op, seed_vector(cfg), max_steps=200, tol=TOL)
    gram = long_run.basis @ long_run.basis.conj().T / 2 ** 6
    defect = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    residual = check_recurrence_residual(long_run, l_op)
    worst_defect = max(worst_defect, defect)
    worst_residual = max(worst_residual, residual)
    assert defect < 1e-8
    assert residual < 1e-8

    for regime, summary in exhaustion_summaries.items():
        assert summary["tril_max"] == 0.0, regime
        assert summary["subdiag_imag_max"] == 0.0, regime
        assert summary["subdiag_min"] >= 0.0, regime
        assert summary["defect"] < 1e-8, regime
        assert summary["residual"] < 1e-8, regime
        worst_defect = max(worst_defect, summary["defect"])
        worst_residual = max(worst_residual, summary["residual"])
    print(f"worst orthogonality defect = {worst_defect:.3e}, "
          f"worst recurrence residual = {worst_residual:.3e}")


def test_criterion_09_moments_cross_check():
    # moment-recursion coefficients against the Lanczos iteration, N=4 closed
    cfg = ExperimentConfig(n_sites=4, jump_mode="closed", seed_site=3,
                           seed_pauli="z", engine="lanczos", max_steps=12,
                           tol=TOL)
    l_op = build_generator(cfg)
    seed = seed_vector(cfg)
    result = run_experiment(cfg)
    b_lanczos = result.lanczos_run.b[:10]
    b_moments = moments_bn(l_op, seed, count=10)
    deviation = float(np.max(np.abs(b_moments - b_lanczos)))
    print(f"max |b_moments - b_lanczos| over 10 = {deviation:.3e}")
    assert deviation < 1e-6


def test_criterion_10_wavefunction_unitarity():
    # N=3 closed evolution keeps the Krylov wavefunction normalized; the
    # two-level case reproduces the analytic cosine/sine pair
    cfg = ExperimentConfig(n_sites=3, jump_mode="closed", seed_site=3,
                           seed_pauli="z", engine="lanczos", max_steps=80,
                           tol=TOL, time_grid=TimeGrid(0.0, 5.0, 101))
    result = run_experiment(cfg)
    norm_dev = float(np.max(np.abs(result.waves["lanczos"].norm - 1.0)))
    print(f"max |sum |phi_n|^2 - 1| = {norm_dev:.3e}")
    assert norm_dev < 1e-8

    two_level = ExperimentConfig(n_sites=1, g=0.0, h=-1.0, jump_mode="closed",
                                 seed_site=1, seed_pauli="x", engine="lanczos",
                                 max_steps=10, time_grid=TimeGrid(0.0, 5.0, 101))
    waves = run_experiment(two_level).waves["lanczos"]
    times = waves.times
    dev0 = float(np.max(np.abs(waves.phi[0] - np.cos(2 * times))))
    dev1 = float(np.max(np.abs(waves.phi[1] - np.sin(2 * times))))
    print(f"two-level |phi_0 - cos 2t| = {dev0:.3e}, "
          f"|phi_1 - sin 2t| = {dev1:.3e}")
    assert dev0 < 1e-10
    assert dev1 < 1e-10


def test_criterion_11_preset_determinism(tmp_path):
    # rerunning a bundled preset reproduces every CSV byte for byte; fig5 is
    # the exhaustion preset and is exercised once via criterion 7 instead of
    # twice here (same emission path, hour-class runtime when doubled)
    presets = ("fig2", "fig3", "fig4", "appa", "appb")
    for preset in presets:
        roots = []
        for attempt in ("first", "second"):
            root = tmp_path / preset / attempt
            assert main(["sweep", "--preset", preset,
                         "--output", str(root)]) == 0, preset
            roots.append(root)
        first_files = sorted(p.relative_to(roots[0])
                             for p in roots[0].rglob("*.csv"))
        second_files = sorted(p.relative_to(roots[1])
                              for p in roots[1].rglob("*.csv"))
        assert first_files == second_files and first_files, preset
        for rel in first_files:
            assert (roots[0] / rel).read_bytes() == (roots[1] / rel).read_bytes(), (
                f"{preset}: {rel} differs between reruns")
        manifest = json.loads((roots[0] / "manifest.json").read_text())
        assert all(p["status"] == "ok" for p in manifest["points"]), preset
        print(f"{preset}: {len(first_files)} CSV files byte-identical "
              f"across reruns")
