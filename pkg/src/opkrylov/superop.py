"""Vectorized operators and the Liouvillian/Lindbladian superoperators.

Column-stacking vectorization is used throughout: ``vec(X)[i + D*j] = X[i, j]``,
equivalently ``vec(X) = X.flatten(order="F")``, which gives the identity
vec(A X B) = (B^T kron A) vec(X). Under it the adjoint-equation generator acting
on vectorized operators is

    L_o = (I kron H - H^T kron I)
        + (i/2) sum_k [ I kron L_k^dag L_k + L_k^T L_k^* kron I
                        - 2 L_k^T kron L_k^dag ],

so that dO/dt = +i L_o vec(O) reproduces dO/dt = i[H, O] + sum_k (L_k^dag O L_k
- (1/2){L_k^dag L_k, O}).

The infinite-temperature inner product (A|B) = Tr(A^dag B)/D lives in the inner
product functions, never in the stored vectors: a vector of unit Wightmann norm
has Euclidean norm sqrt(D).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .spin_algebra import SpinOperator

# Superoperators act on dim = 4^N components; below this we keep them dense.
DENSE_CUTOFF = 256

_HERMITIAN_CHOICES = ("raise", "warn", "ignore")


@dataclass(frozen=True)
class SuperVector:
    """Vectorized operator: ``entries[i + D*j] = X[i, j]`` with D = 2^n_sites."""

    n_sites: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        dim = 4 ** self.n_sites
        if self.entries.shape != (dim,):
            raise ValueError(f"entries shape {self.entries.shape} does not match "
                             f"n_sites={self.n_sites} (expected ({dim},))")

    @property
    def dim(self) -> int:
        return 4 ** self.n_sites


@dataclass
class SuperOperator:
    """Superoperator on vectorized operators, dense or CSR sparse.

    ``hermitian_part`` / ``antihermitian_part`` cache the decomposition
    L = C + i D with C, D Hermitian, filled on first call to
    :func:`hermitian_split`.
    """

    n_sites: int
    matrix: np.ndarray | sp.spmatrix
    label: str = ""
    hermitian_part: np.ndarray | sp.spmatrix | None = field(default=None, repr=False)
    antihermitian_part: np.ndarray | sp.spmatrix | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        dim = 4 ** self.n_sites
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match "
                             f"n_sites={self.n_sites} (expected {(dim, dim)})")

    @property
    def dim(self) -> int:
        return 4 ** self.n_sites

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def apply(self, entries: np.ndarray) -> np.ndarray:
        """Matrix-vector (or matrix-matrix) product with raw entry arrays."""
        return self.matrix @ entries

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)


def hilbert_dim(n_sites: int) -> int:
    return 2 ** n_sites


def vectorize_operator(op: SpinOperator) -> SuperVector:
    """Column-stack a spin operator: vec(X)[i + D*j] = X[i, j]."""
    return SuperVector(op.n_sites, op.matrix.flatten(order="F"))


def unvectorize(vec: SuperVector) -> np.ndarray:
    """Inverse of :func:`vectorize_operator`; returns the D x D matrix."""
    d = hilbert_dim(vec.n_sites)
    return vec.entries.reshape((d, d), order="F").copy()


def wightmann_inner(a: SuperVector, b: SuperVector) -> complex:
    """Infinite-temperature inner product (A|B) = Tr(A^dag B) / D."""
    if a.n_sites != b.n_sites:
        raise ValueError(f"operand sizes differ: n_sites {a.n_sites} vs {b.n_sites}")
    return complex(np.vdot(a.entries, b.entries) / hilbert_dim(a.n_sites))


def wightmann_norm(vec: SuperVector) -> float:
    return float(np.linalg.norm(vec.entries) / np.sqrt(hilbert_dim(vec.n_sites)))


def normalized(vec: SuperVector) -> SuperVector:
    """Rescale to unit Wightmann norm; a zero vector is a domain error."""
    norm = wightmann_norm(vec)
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return SuperVector(vec.n_sites, vec.entries / norm)


def _check_hermitian(op: SpinOperator, on_fail: str) -> None:
    if on_fail not in _HERMITIAN_CHOICES:
        raise ValueError(f"hermitian_check must be one of {_HERMITIAN_CHOICES}, "
                         f"got {on_fail!r}")
    if on_fail == "ignore":
        return
    scale = max(1.0, float(np.max(np.abs(op.matrix))))
    dev = float(np.max(np.abs(op.matrix - op.matrix.conj().T)))
    if dev > 1e-10 * scale:
        msg = f"Hamiltonian is not Hermitian (max deviation {dev:.3e})"
        if on_fail == "raise":
            raise ValueError(msg)
        warnings.warn(msg, stacklevel=3)


def _kron(a: np.ndarray, b: np.ndarray, sparse: bool):
    if sparse:
        return sp.kron(sp.csr_matrix(a), sp.csr_matrix(b), format="csr")
    return np.kron(a, b)


def _identity(d: int, sparse: bool):
    return sp.identity(d, dtype=complex, format="csr") if sparse else np.eye(d, dtype=complex)


def build_liouvillian(h: SpinOperator, hermitian_check: str = "raise") -> SuperOperator:
    """Closed-system generator L_c = I kron H - H^T kron I (commutator action).

    Acting on vec(X) it returns vec([H, X]); for Hermitian H its spectrum is
    the set of Bohr frequencies {E_i - E_j}.
    """
    _check_hermitian(h, hermitian_check)
    d = h.dim
    sparse = d * d >= DENSE_CUTOFF
    eye = _identity(d, sparse)
    matrix = _kron(eye, h.matrix, sparse) - _kron(h.matrix.T, eye, sparse)
    return SuperOperator(h.n_sites, matrix, label=f"L_c[{h.label}]")


def build_lindbladian(h: SpinOperator, jumps: list[SpinOperator],
                      hermitian_check: str = "raise") -> SuperOperator:
    """Open-system generator in the adjoint (Heisenberg) convention.

    L_o = L_c + (i/2) sum_k [ I kron L_k^dag L_k + L_k^T L_k^* kron I
                              - 2 L_k^T kron L_k^dag ].

    With an empty jump list this reduces exactly to :func:`build_liouvillian`.
    """
    _check_hermitian(h, hermitian_check)
    for k, jump in enumerate(jumps):
        if jump.n_sites != h.n_sites:
            raise ValueError(f"jump operator {k} has n_sites={jump.n_sites}, "
                             f"Hamiltonian has n_sites={h.n_sites}")
    d = h.dim
    sparse = d * d >= DENSE_CUTOFF
    eye = _identity(d, sparse)
    matrix = _kron(eye, h.matrix, sparse) - _kron(h.matrix.T, eye, sparse)
    for jump in jumps:
        lk = jump.matrix
        lk_dag = lk.conj().T
        matrix = matrix + 0.5j * (_kron(eye, lk_dag @ lk, sparse)
                                  + _kron(lk.T @ lk.conj(), eye, sparse)
                                  - 2.0 * _kron(lk.T, lk_dag, sparse))
    label = f"L_o[{h.label}; {len(jumps)} jumps]"
    return SuperOperator(h.n_sites, matrix, label=label)


def hermitian_split(l_op: SuperOperator) -> tuple[SuperOperator, SuperOperator]:
    """Decompose L = C + i D with C = (L + L^dag)/2 and D = (L - L^dag)/(2i).

    Both parts are Hermitian whenever the jump set is closed under conjugation;
    the results are cached on ``l_op``.
    """
    if l_op.hermitian_part is None:
        m = l_op.matrix
        adj = m.conj().T if not sp.issparse(m) else m.conjugate().transpose().tocsr()
        l_op.hermitian_part = (m + adj) * 0.5
        l_op.antihermitian_part = (m - adj) * (-0.5j)
    herm = SuperOperator(l_op.n_sites, l_op.hermitian_part, label=l_op.label + " herm")
    anti = SuperOperator(l_op.n_sites, l_op.antihermitian_part, label=l_op.label + " antiherm")
    return herm, anti


def export_coordinates(l_op: SuperOperator, path) -> None:
    """Write nonzero entries as ``row,col,re,im`` lines in (row, col) order."""
    coo = sp.coo_matrix(l_op.matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("row,col,re,im\n")
        for idx in order:
            val = coo.data[idx]
            handle.write(f"{coo.row[idx]},{coo.col[idx]},{val.real:.17g},{val.imag:.17g}\n")
