"""Lanczos and Arnoldi iterations on superoperators under the Wightmann metric.

Both engines share conventions:

* the seed is normalized once at iteration start;
* the termination scale is ||L v_0||_W, fixed at the first step, and an
  iteration stops when the next coefficient is <= tol * scale (the tiny final
  coefficient is treated as zero and not recorded);
* stored basis vectors have unit Wightmann norm, i.e. Euclidean norm sqrt(D).

The Lanczos recurrence is the zero-diagonal three-term form
u_n = L O_{n-1} - b_{n-1} O_{n-2} with b_n = ||u_n||_W, applied verbatim even to
non-Hermitian generators (where it loses orthogonality; that loss is the
observable of interest). Arnoldi orthogonalizes against the whole basis and
records the projections in an upper-Hessenberg matrix; entries below the first
subdiagonal are structural zeros that are never computed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import StateError
from .superop import SuperOperator, SuperVector, hilbert_dim

# Projection sweeps per orthogonalization. One classical sweep drifts over
# thousands of steps (ghost directions eventually double back into the basis);
# a second unconditional sweep pins the defect at roundoff level.
_SWEEPS = 2

# Orthogonality diagnostics switch from the full Gram matrix to random sampling
# above this basis size (the full product is O(K^2 dim)).
_DEFECT_FULL_LIMIT = 1024
_DEFECT_SAMPLES = 512


@dataclass
class LanczosRun:
    """Result of a Lanczos iteration.

    ``b`` holds b_1..b_p (the below-threshold final coefficient is excluded).
    ``termination_index`` is the Krylov dimension when the recurrence closed,
    None when max_steps was exhausted. ``basis`` rows are the O_n (None when
    retention was off). ``orthogonality_defect`` is max |<O_i|O_j> - delta_ij|
    over the retained basis, sampled above ``_DEFECT_FULL_LIMIT`` vectors.
    """

    n_sites: int
    b: np.ndarray
    termination_index: int | None
    basis: np.ndarray | None
    scale: float
    tol: float
    full_reorth: bool
    orthogonality_defect: float | None = None

    @property
    def steps(self) -> int:
        return len(self.b)

    @property
    def terminated(self) -> bool:
        return self.termination_index is not None

    @property
    def krylov_dim(self) -> int | None:
        return self.termination_index

    @property
    def orthogonality_lost(self) -> bool | None:
        if self.orthogonality_defect is None:
            return None
        return self.orthogonality_defect > 1e-8


@dataclass
class ArnoldiRun:
    """Result of an Arnoldi iteration.

    ``hessenberg`` is K x K after termination (the vanished h_{K,K-1} row is
    dropped) and (p+1) x p after p unterminated steps. Subdiagonal entries are
    real and >= 0 by construction.
    """

    n_sites: int
    hessenberg: np.ndarray
    termination_index: int | None
    basis: np.ndarray | None
    scale: float
    tol: float
    orthogonality_defect: float | None = None

    @property
    def steps(self) -> int:
        return self.hessenberg.shape[1]

    @property
    def terminated(self) -> bool:
        return self.termination_index is not None

    @property
    def krylov_dim(self) -> int | None:
        return self.termination_index

    @property
    def orthogonality_lost(self) -> bool | None:
        if self.orthogonality_defect is None:
            return None
        return self.orthogonality_defect > 1e-8


def _as_entries(seed: SuperVector | np.ndarray, l_op: SuperOperator) -> np.ndarray:
    if isinstance(seed, SuperVector):
        if seed.n_sites != l_op.n_sites:
            raise ValueError(f"seed n_sites={seed.n_sites} does not match "
                             f"superoperator n_sites={l_op.n_sites}")
        entries = seed.entries
    else:
        entries = np.asarray(seed)
    if entries.shape != (l_op.dim,):
        raise ValueError(f"seed shape {entries.shape}, expected ({l_op.dim},)")
    return np.array(entries, dtype=complex)


def _project_out(q_rows: np.ndarray, u: np.ndarray, d: int) -> np.ndarray:
    """Subtract Wightmann projections of u onto the rows of q_rows, in place.

    Returns the coefficient vector c_j = <q_j|u>_W. Uses conj(Q @ conj(u))
    rather than Q.conj() @ u: the latter materializes a conjugated copy of the
    basis every sweep, which dominates the runtime at large dimension.
    """
    c = np.conj(q_rows @ np.conj(u))
    c /= d
    u -= c @ q_rows
    return c


def _orthogonality_defect(basis: np.ndarray, d: int, rng_seed: int = 1905) -> float:
    """Max deviation of <q_i|q_j>_W from delta_ij, full or pair-sampled."""
    k = basis.shape[0]
    if k <= _DEFECT_FULL_LIMIT:
        gram = np.conj(basis @ basis.conj().T) / d
        return float(np.max(np.abs(gram - np.eye(k))))
    rng = np.random.default_rng(rng_seed)
    defect = 0.0
    # Adjacent pairs catch local drift; random pairs catch global ghosts.
    pairs = [(i, i + 1) for i in range(k - 1)][:_DEFECT_SAMPLES]
    ii = rng.integers(0, k, size=_DEFECT_SAMPLES)
    jj = rng.integers(0, k, size=_DEFECT_SAMPLES)
    pairs += list(zip(ii.tolist(), jj.tolist()))
    for i, j in pairs:
        val = np.vdot(basis[i], basis[j]) / d
        defect = max(defect, abs(val - (1.0 if i == j else 0.0)))
    for i in (0, k // 2, k - 1):
        val = np.vdot(basis[i], basis[i]) / d
        defect = max(defect, abs(val - 1.0))
    return float(defect)


def lanczos(l_op: SuperOperator, seed: SuperVector | np.ndarray, max_steps: int,
            tol: float = 1e-10, full_reorth: bool = False,
            retain_basis: bool = True) -> LanczosRun:
    """Zero-diagonal Lanczos recurrence in the Wightmann metric.

    Args:
        l_op: superoperator to iterate.
        seed: starting operator vector; normalized internally, zero is an error.
        max_steps: maximum number of coefficients to attempt.
        tol: relative termination tolerance (> 0).
        full_reorth: if True, each candidate is re-projected against all
            previous basis vectors, twice. Forces basis retention.
        retain_basis: keep all basis vectors on the result (otherwise only the
            rolling pair needed by the recurrence is stored).

    Returns:
        LanczosRun with coefficients b_1..b_p.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    v = _as_entries(seed, l_op)
    d = hilbert_dim(l_op.n_sites)
    sqrt_d = np.sqrt(d)
    norm0 = np.linalg.norm(v) / sqrt_d
    if norm0 == 0.0:
        raise ValueError("seed vector is zero")
    v /= norm0

    keep_all = retain_basis or full_reorth
    if keep_all:
        basis = np.empty((max_steps + 1, l_op.dim), dtype=complex)
        basis[0] = v
    else:
        basis = None
    prev, prev2 = v, None

    b: list[float] = []
    scale = 0.0
    threshold = 0.0
    termination_index: int | None = None
    for n in range(1, max_steps + 1):
        u = l_op.apply(prev)
        if n == 1:
            scale = float(np.linalg.norm(u) / sqrt_d)
            threshold = tol * scale
        else:
            u -= b[-1] * prev2
        if full_reorth:
            rows = basis[:n]
            _project_out(rows, u, d)
            _project_out(rows, u, d)
        bn = float(np.linalg.norm(u) / sqrt_d)
        if bn <= threshold:
            termination_index = n
            break
        b.append(bn)
        u /= bn
        if keep_all:
            basis[n] = u
        prev2, prev = prev, u

    defect = None
    if keep_all:
        basis = basis[:len(b) + 1].copy()
        defect = _orthogonality_defect(basis, d)
    return LanczosRun(n_sites=l_op.n_sites, b=np.array(b, dtype=float),
                      termination_index=termination_index,
                      basis=basis if retain_basis else None,
                      scale=scale, tol=tol, full_reorth=full_reorth,
                      orthogonality_defect=defect)


def arnoldi(l_op: SuperOperator, seed: SuperVector | np.ndarray, max_steps: int,
            tol: float = 1e-10, retain_basis: bool = True) -> ArnoldiRun:
    """Arnoldi iteration in the Wightmann metric.

    Step k computes u_k = L v_{k-1}, subtracts the projections
    h_{j,k-1} = <v_j|u_k> for j = 0..k-1 (two sweeps; the second sweep's
    corrections accumulate into the same entries, so the recorded h is the
    total coefficient and the recurrence identity holds exactly), sets
    h_{k,k-1} = ||u_k||_W, and stops when that is <= tol * ||L v_0||_W.

    max_steps is clamped to dim(L): no more orthonormal vectors exist, so the
    Krylov dimension never exceeds 4^N.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    v = _as_entries(seed, l_op)
    d = hilbert_dim(l_op.n_sites)
    sqrt_d = np.sqrt(d)
    norm0 = np.linalg.norm(v) / sqrt_d
    if norm0 == 0.0:
        raise ValueError("seed vector is zero")
    v /= norm0

    max_steps = min(max_steps, l_op.dim)
    basis = np.empty((max_steps + 1, l_op.dim), dtype=complex)
    basis[0] = v
    hess = np.zeros((max_steps + 1, max_steps), dtype=complex)

    scale = 0.0
    threshold = 0.0
    termination_index: int | None = None
    steps = 0
    for k in range(1, max_steps + 1):
        u = l_op.apply(basis[k - 1])
        if k == 1:
            scale = float(np.linalg.norm(u) / sqrt_d)
            threshold = tol * scale
        rows = basis[:k]
        hess[:k, k - 1] = _project_out(rows, u, d)
        for _ in range(_SWEEPS - 1):
            hess[:k, k - 1] += _project_out(rows, u, d)
        hk = float(np.linalg.norm(u) / sqrt_d)
        hess[k, k - 1] = hk
        if hk <= threshold:
            termination_index = k
            break
        basis[k] = u / hk
        steps = k

    if termination_index is not None:
        kdim = termination_index
        hess_out = hess[:kdim, :kdim].copy()
        basis_out = basis[:kdim].copy()
    else:
        hess_out = hess[:steps + 1, :steps].copy()
        basis_out = basis[:steps + 1].copy()
    defect = _orthogonality_defect(basis_out, d)
    return ArnoldiRun(n_sites=l_op.n_sites, hessenberg=hess_out,
                      termination_index=termination_index,
                      basis=basis_out if retain_basis else None,
                      scale=scale, tol=tol, orthogonality_defect=defect)


def check_recurrence_residual(run: ArnoldiRun, l_op: SuperOperator) -> float:
    """Maximum column-wise Wightmann norm of L Q_p - Q_p H_p - h_{p,p-1} v_p e_p^T.

    For a terminated run the dropped h_{K,K-1} is treated as zero, so the
    residual reports how small it really was. Requires a retained basis.
    """
    if run.basis is None:
        raise StateError("recurrence residual requires a retained basis")
    if run.n_sites != l_op.n_sites:
        raise ValueError(f"run n_sites={run.n_sites} does not match "
                         f"superoperator n_sites={l_op.n_sites}")
    d = hilbert_dim(run.n_sites)
    hess = run.hessenberg
    p = hess.shape[1]
    if p == 0:
        return 0.0
    q_p = run.basis[:p].T
    resid = l_op.apply(q_p) - q_p @ hess[:p, :p]
    if not run.terminated:
        resid[:, p - 1] -= hess[p, p - 1] * run.basis[p]
    col_norms = np.linalg.norm(resid, axis=0) / np.sqrt(d)
    return float(np.max(col_norms))
