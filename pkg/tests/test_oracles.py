import numpy as np
import scipy.linalg

from opkrylov.oracles import (
    action_equivalence_deviation,
    bohr_frequencies,
    heisenberg_rhs,
    match_spectra,
    reachable_spectrum,
)
from opkrylov.spin_algebra import (
    PAULI,
    JumpMode,
    SpinOperator,
    build_jump_operators,
    build_tfim,
    site_operator,
)
from opkrylov.superop import build_lindbladian, build_liouvillian, normalized, vectorize_operator


def test_heisenberg_rhs_closed_is_commutator():
    rng = np.random.default_rng(51)
    h = build_tfim(2, -1.05, 0.5)
    x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    out = heisenberg_rhs(h, [], x)
    np.testing.assert_allclose(out, h.matrix @ x - x @ h.matrix, atol=1e-13)


def test_heisenberg_rhs_pure_dephasing_analytic():
    # single sigma^z channel: sigma^x picks up -2 gamma sigma^x under i L
    gamma = 0.4
    h = SpinOperator(1, np.zeros((2, 2), dtype=complex))
    jumps = build_jump_operators(1, 0.0, gamma, JumpMode.DEPHASING_ONLY)
    out = heisenberg_rhs(h, jumps, PAULI["x"].copy())
    np.testing.assert_allclose(out, 2j * gamma * PAULI["x"], atol=1e-13)


def test_bohr_frequencies_match_dense_spectrum():
    h = build_tfim(2, -1.05, 0.5)
    expected = bohr_frequencies(h)
    spectrum = np.sort(scipy.linalg.eigvals(build_liouvillian(h).dense()).real)
    np.testing.assert_allclose(spectrum, expected, atol=1e-10)


def test_action_equivalence_small():
    rng = np.random.default_rng(53)
    h = build_tfim(2, -1.05, 0.5)
    jumps = build_jump_operators(2, 0.1, 0.1, JumpMode.FULL)
    l_op = build_lindbladian(h, jumps)
    dev = action_equivalence_deviation(l_op, h, jumps, 10, rng)
    assert dev < 1e-12


def test_reachable_spectrum_excludes_unweighted_eigenvalues():
    # diagonal generator, seed orthogonal to the last eigenvector
    dense = np.diag([1.0, 2.0, 3.0]).astype(complex)
    seed = np.array([1.0, 1.0, 0.0], dtype=complex)
    spectrum = reachable_spectrum(dense, seed)
    np.testing.assert_allclose(np.sort(spectrum.real), [1.0, 2.0], atol=1e-12)


def test_reachable_spectrum_clusters_degenerate_eigenvalues():
    dense = np.diag([2.0, 2.0, 5.0]).astype(complex)
    seed = np.ones(3, dtype=complex)
    spectrum = reachable_spectrum(dense, seed)
    np.testing.assert_allclose(np.sort(spectrum.real), [2.0, 5.0], atol=1e-12)


def test_reachable_spectrum_full_space():
    h = build_tfim(2, -1.05, 0.5)
    jumps = build_jump_operators(2, 0.1, 0.1, JumpMode.FULL)
    l_op = build_lindbladian(h, jumps)
    seed = normalized(vectorize_operator(site_operator(2, 1, "z")))
    spectrum = reachable_spectrum(l_op.dense(), seed.entries)
    # every reachable value is an eigenvalue of the dense generator
    full = scipy.linalg.eigvals(l_op.dense())
    for value in spectrum:
        assert np.min(np.abs(full - value)) < 1e-7


def test_match_spectra():
    a = np.array([1.0 + 0j, 2.0 + 1j, -3.0 + 0j])
    shuffled = np.array([2.0 + 1j, -3.0 + 0j, 1.0 + 0j])
    assert match_spectra(a, shuffled) < 1e-15
    perturbed = shuffled + 1e-6
    assert 1e-7 < match_spectra(a, perturbed) < 1e-5
