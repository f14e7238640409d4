"""Post-processing of Krylov runs: coefficient series, growth classification,
Ritz values, the moment-method cross-check, and Krylov-space wavefunctions."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import mpmath as mp
import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .exceptions import StateError
from .krylov import ArnoldiRun, LanczosRun
from .superop import SuperOperator, SuperVector, hilbert_dim


class SeriesKind(str, Enum):
    """Coefficient series that can be read off a run."""

    LANCZOS_B = "lanczos_b"
    ARNOLDI_SUBDIAG = "arnoldi_subdiag"
    ARNOLDI_SUPERDIAG = "arnoldi_superdiag"
    ARNOLDI_DIAG_ABS = "arnoldi_diag_abs"
    SUBDIAG_ASYMMETRY = "subdiag_asymmetry"

    @classmethod
    def parse(cls, text: str | SeriesKind) -> SeriesKind:
        if isinstance(text, SeriesKind):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ValueError(f"unknown series kind {text!r}; expected one of "
                             f"{[k.value for k in cls]}") from None


class GrowthLabel(str, Enum):
    LINEAR = "linear"
    SUBLINEAR = "sublinear"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class GrowthThresholds:
    """Classification cutoffs; kept as data so runs record what was used."""

    beta_linear: float = 0.9
    beta_sublinear: float = 0.75
    r2_linear: float = 0.98


@dataclass(frozen=True)
class GrowthFit:
    slope: float
    fit_quality: float
    label: GrowthLabel
    beta: float
    window: tuple[int, int]


@dataclass(frozen=True)
class CoefficientSeries:
    """Real coefficient sequence indexed n = n0, n0+1, ...

    ``smoothing`` records (s, n_start) when the series came out of
    :func:`fluctuation_average`, None for raw series.
    """

    kind: SeriesKind
    values: np.ndarray
    n0: int
    smoothing: tuple[int, int] | None = None

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_index(self) -> np.ndarray:
        return np.arange(self.n0, self.n0 + len(self.values))


def extract_series(run: LanczosRun | ArnoldiRun, kind: str | SeriesKind) -> CoefficientSeries:
    """Read one coefficient series off a finished run.

    Lanczos runs expose only lanczos_b (n from 1). Arnoldi runs expose the
    subdiagonal h_{n,n-1} (real by construction, n from 1), the superdiagonal
    modulus |h_{n-1,n}| (n from 1), the diagonal modulus |h_{n,n}| (n from 0),
    and the asymmetry |h_{n,n-1} - h_{n-1,n}| (n from 1). Requesting a kind
    the run does not carry is a state error.
    """
    kind = SeriesKind.parse(kind)
    if isinstance(run, LanczosRun):
        if kind is not SeriesKind.LANCZOS_B:
            raise StateError(f"series {kind.value} is not available on a Lanczos run")
        return CoefficientSeries(kind, run.b.astype(float, copy=True), n0=1)
    if not isinstance(run, ArnoldiRun):
        raise TypeError(f"expected LanczosRun or ArnoldiRun, got {type(run).__name__}")
    if kind is SeriesKind.LANCZOS_B:
        raise StateError("series lanczos_b is not available on an Arnoldi run")
    hess = run.hessenberg
    rows, cols = hess.shape
    if kind is SeriesKind.ARNOLDI_SUBDIAG:
        # h_{n,n-1} for n = 1..min(rows-1, cols); real >= 0 by construction.
        count = min(rows - 1, cols)
        values = np.array([hess[n, n - 1].real for n in range(1, count + 1)])
        return CoefficientSeries(kind, values, n0=1)
    if kind is SeriesKind.ARNOLDI_SUPERDIAG:
        values = np.array([abs(hess[n - 1, n]) for n in range(1, cols)])
        return CoefficientSeries(kind, values, n0=1)
    if kind is SeriesKind.ARNOLDI_DIAG_ABS:
        values = np.array([abs(hess[n, n]) for n in range(cols)])
        return CoefficientSeries(kind, values, n0=0)
    # Asymmetry |h_{n,n-1} - h_{n-1,n}| over indices where both exist.
    count = min(rows - 1, cols - 1)
    values = np.array([abs(hess[n, n - 1] - hess[n - 1, n]) for n in range(1, count + 1)])
    return CoefficientSeries(kind, values, n0=1)


def fluctuation_average(series: CoefficientSeries, s: int, n_start: int) -> CoefficientSeries:
    """Sliding-window mean over [n-s, n+s], applied only from n_start on.

    Indices below n_start are copied verbatim; the window clamps at both ends
    of the series. Used to average out the fluctuations that appear in the
    coefficient plots at large n.
    """
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    if n_start < 1:
        raise ValueError(f"n_start must be >= 1, got {n_start}")
    if len(series) == 0:
        raise ValueError("cannot smooth an empty series")
    values = series.values
    out = values.astype(float, copy=True)
    for i, n in enumerate(series.n_index):
        if n < n_start:
            continue
        lo = max(0, i - s)
        hi = min(len(values), i + s + 1)
        out[i] = float(np.mean(values[lo:hi]))
    return CoefficientSeries(series.kind, out, series.n0, smoothing=(s, n_start))


def classify_growth(series: CoefficientSeries, window: tuple[int, int],
                    thresholds: GrowthThresholds = GrowthThresholds()) -> GrowthFit:
    """Classify coefficient growth over an index window.

    Fits value = slope*n + c by least squares (slope and R^2 are reported) and
    value = c*n^beta on the log-log points; the label is linear when
    beta >= beta_linear and R^2 >= r2_linear, sublinear when
    beta <= beta_sublinear, indeterminate otherwise. The label and beta are
    invariant under positive rescaling of the series; the slope scales.
    """
    n_lo, n_hi = window
    if n_hi < n_lo:
        raise ValueError(f"window must satisfy n_lo <= n_hi, got {window}")
    mask = (series.n_index >= n_lo) & (series.n_index <= n_hi)
    n = series.n_index[mask].astype(float)
    v = series.values[mask].astype(float)
    if len(n) < 8:
        raise ValueError(f"window {window} selects {len(n)} points; need at least 8")
    slope, intercept = np.polyfit(n, v, 1)
    fitted = slope * n + intercept
    ss_res = float(np.sum((v - fitted) ** 2))
    ss_tot = float(np.sum((v - np.mean(v)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    positive = (v > 0) & (n > 0)
    if np.count_nonzero(positive) >= 2:
        beta = float(np.polyfit(np.log(n[positive]), np.log(v[positive]), 1)[0])
    else:
        beta = float("nan")
    if np.isnan(beta):
        label = GrowthLabel.INDETERMINATE
    elif beta >= thresholds.beta_linear and r2 >= thresholds.r2_linear:
        label = GrowthLabel.LINEAR
    elif beta <= thresholds.beta_sublinear:
        label = GrowthLabel.SUBLINEAR
    else:
        label = GrowthLabel.INDETERMINATE
    return GrowthFit(slope=float(slope), fit_quality=float(r2), label=label,
                     beta=beta, window=(int(n_lo), int(n_hi)))


def ritz_values(run: ArnoldiRun) -> np.ndarray:
    """Eigenvalues of the (square part of the) stored Hessenberg matrix.

    Sorted lexicographically by (real, imag) so output order is deterministic.
    """
    hess = run.hessenberg
    rows, cols = hess.shape
    if cols == 0:
        return np.zeros(0, dtype=complex)
    square = hess if rows == cols else hess[:cols, :cols]
    vals = scipy.linalg.eigvals(square)
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def _require_hermitian(l_op: SuperOperator) -> None:
    m = l_op.matrix
    if sp.issparse(m):
        dev_m = abs(m - m.conjugate().transpose())
        dev = float(dev_m.max()) if dev_m.nnz else 0.0
        scale = float(abs(m).max()) if m.nnz else 0.0
    else:
        dev = float(np.max(np.abs(m - m.conj().T)))
        scale = float(np.max(np.abs(m)))
    if dev > 1e-10 * max(1.0, scale):
        raise ValueError(f"moment method requires a Hermitian superoperator "
                         f"(max deviation {dev:.3e})")


def moments_bn(l_op: SuperOperator, seed: SuperVector | np.ndarray, count: int,
               rel_cutoff: float = 1e-10) -> np.ndarray:
    """Lanczos coefficients b_1..b_count from power moments, independently of
    the three-term recurrence.

    Computes mu_2k = (seed|L^2k|seed) via the Hermitian split
    mu_2k = <w_k|w_k> with w_k = L^k seed, then runs the moment recursion

        M^(j)_2k = M^(j-1)_2k / b_{j-1}^2 - M^(j-2)_2k-2 / b_{j-2}^2,
        b_j = sqrt(M^(j)_2j),   b_0 = b_{-1} = 1,  M^(-1) = 0,  M^(0)_2k = mu_2k.

    Everything runs in arbitrary precision (mpmath) over the exact float64
    matrix entries: the recursion's cancellation would otherwise swamp the
    comparison against the recurrence route. Only valid for Hermitian L
    (odd moments vanish); non-Hermitian input is a domain error. The output
    is truncated where b_j^2 falls below (rel_cutoff * b_1)^2, which is where
    the Lanczos iteration itself would terminate.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    _require_hermitian(l_op)
    entries = seed.entries if isinstance(seed, SuperVector) else np.asarray(seed)
    if entries.shape != (l_op.dim,):
        raise ValueError(f"seed shape {entries.shape}, expected ({l_op.dim},)")
    d = hilbert_dim(l_op.n_sites)
    coo = sp.coo_matrix(l_op.matrix)
    rows, cols, data = coo.row, coo.col, coo.data

    row_idx = [int(r) for r in rows]
    col_idx = [int(c) for c in cols]
    vals = [complex(v) for v in data]

    with mp.workdps(60 + 8 * count):
        vec = [mp.mpc(complex(z)) for z in entries]
        norm2 = mp.fsum(abs(z) ** 2 for z in vec) / d
        if norm2 == 0:
            raise ValueError("seed vector is zero")
        inv_norm = 1 / mp.sqrt(norm2)
        vec = [z * inv_norm for z in vec]

        def matvec(x):
            y = [mp.mpc(0)] * len(x)
            for r, c, v in zip(row_idx, col_idx, vals):
                y[r] += v * x[c]
            return y

        # mu_{2k} = <w_k|w_k>_W, valid because L is Hermitian.
        mu = []
        w = vec
        for _ in range(count + 1):
            mu.append(mp.fsum((mp.conj(z) * z).real for z in w) / d)
            w = matvec(w)

        # M^(j)_{2k} = M^(j-1)_{2k} / b_{j-1}^2 - M^(j-2)_{2k-2} / b_{j-2}^2,
        # then b_j^2 = M^(j)_{2j}; lists are indexed by k with entries k < j unused.
        m_prev2 = [mp.mpf(0)] * (count + 1)  # M^(-1)
        m_prev = list(mu)                    # M^(0)
        bsq_jm1 = mp.mpf(1)                  # b_{j-1}^2, starts at b_0^2 = 1
        bsq_jm2 = mp.mpf(1)                  # b_{j-2}^2, starts at b_{-1}^2 = 1
        b_out: list[float] = []
        cutoff_sq = None
        for j in range(1, count + 1):
            m_cur = [mp.mpf(0)] * (count + 1)
            for k in range(j, count + 1):
                m_cur[k] = m_prev[k] / bsq_jm1 - m_prev2[k - 1] / bsq_jm2
            bj_sq = m_cur[j]
            if cutoff_sq is None:
                cutoff_sq = (mp.mpf(rel_cutoff) ** 2) * (bj_sq if bj_sq > 0 else mp.mpf(1))
            if bj_sq <= cutoff_sq:
                break
            b_out.append(float(mp.sqrt(bj_sq)))
            bsq_jm2, bsq_jm1 = bsq_jm1, bj_sq
            m_prev2, m_prev = m_prev, m_cur
    return np.array(b_out, dtype=float)


@dataclass(frozen=True)
class WavefunctionSeries:
    """Projections phi_n(t) of the exactly evolved seed onto the Krylov basis.

    ``phi`` has shape (K, T). ``complexity`` is K(t) = sum_n n |phi_n|^2 and
    ``norm`` is sum_n |phi_n|^2 (1 while the basis spans the evolution).
    ``phase_convention`` is "i_power" when the i^{-n} phases of the Lanczos
    convention were applied, "raw" for plain Arnoldi projections.
    """

    times: np.ndarray
    phi: np.ndarray
    complexity: np.ndarray
    norm: np.ndarray
    phase_convention: str


def wavefunctions(l_op: SuperOperator, run: LanczosRun | ArnoldiRun,
                  times: np.ndarray) -> WavefunctionSeries:
    """Evolve the seed exactly with e^{+i L t} and project onto the run basis.

    The evolution uses scipy's expm_multiply on i*L (never the Krylov
    recurrence itself, so the projections genuinely test the basis). Lanczos
    projections carry the i^{-n} phase that makes phi_n real for closed
    dynamics; Arnoldi projections are reported raw.
    """
    if run.basis is None:
        raise StateError("wavefunctions require a retained basis")
    if run.n_sites != l_op.n_sites:
        raise ValueError(f"run n_sites={run.n_sites} does not match "
                         f"superoperator n_sites={l_op.n_sites}")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("times must be a non-empty 1-D array")
    if not np.all(np.isfinite(times)):
        raise ValueError("times must be finite")
    d = hilbert_dim(run.n_sites)
    basis = run.basis
    seed = basis[0]
    gen = 1j * (l_op.matrix.tocsc() if sp.issparse(l_op.matrix) else l_op.matrix)

    diffs = np.diff(times)
    uniform = len(times) > 2 and np.allclose(diffs, diffs[0], rtol=1e-12, atol=1e-15)
    if uniform:
        evolved = expm_multiply(gen, seed, start=times[0], stop=times[-1],
                                num=len(times), endpoint=True)
    else:
        evolved = np.empty((len(times), len(seed)), dtype=complex)
        for i, t in enumerate(times):
            if t == 0.0:
                evolved[i] = seed
            else:
                evolved[i] = expm_multiply(gen * t, seed)

    # phi[n, t] = phase_n * <v_n | O(t)>_W, computed without conjugating the basis.
    proj = np.conj(basis @ np.conj(evolved.T)) / d
    if isinstance(run, LanczosRun):
        phases = (-1j) ** np.arange(basis.shape[0])
        phi = phases[:, None] * proj
        convention = "i_power"
    else:
        phi = proj
        convention = "raw"
    weights = np.arange(basis.shape[0], dtype=float)
    abs_sq = np.abs(phi) ** 2
    complexity = weights @ abs_sq
    norm = np.sum(abs_sq, axis=0)
    return WavefunctionSeries(times=times, phi=phi, complexity=complexity,
                              norm=norm, phase_convention=convention)
