"""Independent dense-matrix oracles.

Everything here evaluates physics the long way round (direct matrix products,
dense eigensolvers) so the vectorized superoperator route has something honest
to be checked against. Nothing in this module may call the Kronecker builders.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .spin_algebra import SpinOperator
from .superop import SuperOperator, SuperVector, unvectorize, vectorize_operator


def heisenberg_rhs(h: SpinOperator, jumps: list[SpinOperator],
                   x: np.ndarray) -> np.ndarray:
    """Adjoint-equation right-hand side by direct matrix products.

    Returns [H, X] - i * sum_k ( L_k^dag X L_k - (1/2){L_k^dag L_k, X} ),
    which equals L_o applied to vec(X), un-vectorized.
    """
    out = h.matrix @ x - x @ h.matrix
    for jump in jumps:
        lk = jump.matrix
        lk_dag = lk.conj().T
        ldl = lk_dag @ lk
        out = out - 1j * (lk_dag @ x @ lk - 0.5 * (ldl @ x + x @ ldl))
    return out


def bohr_frequencies(h: SpinOperator) -> np.ndarray:
    """All differences E_i - E_j of the Hamiltonian spectrum, sorted.

    This is the exact spectrum of the closed-system commutator generator.
    """
    energies = scipy.linalg.eigvalsh(h.matrix)
    diffs = (energies[:, None] - energies[None, :]).ravel()
    return np.sort(diffs)


def action_equivalence_deviation(l_op: SuperOperator, h: SpinOperator,
                                 jumps: list[SpinOperator], n_samples: int,
                                 rng: np.random.Generator) -> float:
    """Max elementwise deviation between the vectorized action and the direct
    Heisenberg right-hand side over random test operators."""
    d = h.dim
    worst = 0.0
    for _ in range(n_samples):
        x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        direct = heisenberg_rhs(h, jumps, x)
        vec = vectorize_operator(SpinOperator(h.n_sites, x))
        via_l = unvectorize(SuperVector(h.n_sites, np.asarray(l_op.apply(vec.entries))))
        worst = max(worst, float(np.max(np.abs(direct - via_l))))
    return worst


def reachable_spectrum(l_dense: np.ndarray, seed: np.ndarray,
                       cluster_tol: float = 1e-7,
                       weight_tol: float = 1e-10) -> np.ndarray:
    """Eigenvalues of L restricted to the subspace the seed can explore.

    Diagonalizes L densely, expands the seed in the right-eigenvector basis,
    clusters (near-)degenerate eigenvalues, and keeps one representative per
    cluster carrying a seed weight above weight_tol (relative to the total).
    A terminated Arnoldi run on the same seed must produce exactly these
    values, one Ritz value per reachable cluster.
    """
    vals, vecs = scipy.linalg.eig(l_dense)
    coeffs = scipy.linalg.solve(vecs, seed)
    order = np.lexsort((vals.imag, vals.real))
    vals, coeffs = vals[order], coeffs[order]
    total = float(np.linalg.norm(coeffs))
    if total == 0.0:
        return np.zeros(0, dtype=complex)

    reachable = []
    i = 0
    n = len(vals)
    while i < n:
        j = i + 1
        while j < n and abs(vals[j] - vals[j - 1]) <= cluster_tol:
            j += 1
        weight = float(np.linalg.norm(coeffs[i:j]))
        if weight > weight_tol * total:
            # Weight-averaged representative of the cluster.
            w_sq = np.abs(coeffs[i:j]) ** 2
            reachable.append(complex(np.sum(vals[i:j] * w_sq) / np.sum(w_sq)))
        i = j
    out = np.array(reachable, dtype=complex)
    order = np.lexsort((out.imag, out.real))
    return out[order]


def match_spectra(a: np.ndarray, b: np.ndarray) -> float:
    """Greedy nearest-pair matching distance between two complex multisets.

    Returns the largest matched distance; raises if the sizes differ.
    """
    if len(a) != len(b):
        raise ValueError(f"spectra sizes differ: {len(a)} vs {len(b)}")
    remaining = list(range(len(b)))
    worst = 0.0
    for va in a:
        dists = [abs(va - b[j]) for j in remaining]
        pick = int(np.argmin(dists))
        worst = max(worst, float(dists[pick]))
        remaining.pop(pick)
    return worst
