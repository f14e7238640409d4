"""Pauli-string operators on a spin-1/2 chain, the Ising Hamiltonian, and jump operators.

Conventions: sites are numbered 1..N with site 1 the leftmost Kronecker factor,
and sigma^+- = (sigma^x +- i sigma^y) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}
PAULI["+"] = (PAULI["x"] + 1.0j * PAULI["y"]) / 2.0
PAULI["-"] = (PAULI["x"] - 1.0j * PAULI["y"]) / 2.0

PAULI_LABELS = ("x", "y", "z", "+", "-")


class JumpMode(Enum):
    """Which dissipation channels a run switches on."""

    FULL = "full"
    BOUNDARY_ONLY = "boundary_only"
    DEPHASING_ONLY = "dephasing_only"
    CLOSED = "closed"

    @classmethod
    def parse(cls, text: str | JumpMode) -> JumpMode:
        if isinstance(text, JumpMode):
            return text
        key = str(text).strip().lower().replace("-", "_")
        aliases = {
            "full": cls.FULL,
            "boundary_only": cls.BOUNDARY_ONLY,
            "boundary": cls.BOUNDARY_ONLY,
            "dephasing_only": cls.DEPHASING_ONLY,
            "dephasing": cls.DEPHASING_ONLY,
            "closed": cls.CLOSED,
        }
        if key not in aliases:
            raise ValueError(f"unknown jump mode {text!r}; expected one of "
                             f"{sorted(set(a.value for a in aliases.values()))}")
        return aliases[key]


@dataclass(frozen=True)
class SpinOperator:
    """Operator on an ``n_sites`` chain stored as a dense 2^N x 2^N matrix."""

    n_sites: int
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        dim = 2 ** self.n_sites
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match "
                             f"n_sites={self.n_sites} (expected {(dim, dim)})")

    @property
    def dim(self) -> int:
        return 2 ** self.n_sites

    @property
    def dagger(self) -> SpinOperator:
        label = self.label + "^dag" if self.label else ""
        return SpinOperator(self.n_sites, self.matrix.conj().T.copy(), label)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)


def site_operator(n_sites: int, site: int, which: str) -> SpinOperator:
    """Single-site Pauli operator embedded in the full chain.

    Args:
        n_sites: chain length N >= 1.
        site: target site in 1..N (site 1 is the leftmost factor).
        which: one of "x", "y", "z", "+", "-".
    """
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    if not 1 <= site <= n_sites:
        raise ValueError(f"site must be in 1..{n_sites}, got {site}")
    if which not in PAULI_LABELS:
        raise ValueError(f"which must be one of {PAULI_LABELS}, got {which!r}")
    left = np.eye(2 ** (site - 1), dtype=complex)
    right = np.eye(2 ** (n_sites - site), dtype=complex)
    matrix = np.kron(np.kron(left, PAULI[which]), right)
    return SpinOperator(n_sites, matrix, f"s{site}{which}")


def build_tfim(n_sites: int, g: float, h: float) -> SpinOperator:
    """Ising chain H = -sum_j sz_j sz_{j+1} - g sum_j sx_j - h sum_j sz_j (open ends)."""
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    dim = 2 ** n_sites
    matrix = np.zeros((dim, dim), dtype=complex)
    for j in range(1, n_sites):
        matrix -= site_operator(n_sites, j, "z").matrix @ site_operator(n_sites, j + 1, "z").matrix
    for j in range(1, n_sites + 1):
        matrix -= g * site_operator(n_sites, j, "x").matrix
        matrix -= h * site_operator(n_sites, j, "z").matrix
    return SpinOperator(n_sites, matrix, f"H(N={n_sites},g={g:g},h={h:g})")


def build_jump_operators(n_sites: int, alpha: float, gamma: float,
                         mode: JumpMode) -> list[SpinOperator]:
    """Jump operators for boundary damping and bulk dephasing.

    Boundary damping contributes sqrt(alpha) s1^+-, sqrt(alpha) sN^+-; bulk
    dephasing contributes sqrt(gamma) sz_i for every site. The mode selects
    which families are present, and operators whose amplitude is zero are
    dropped, so Full with alpha = gamma = 0 yields an empty list.

    The returned order is deterministic: s1+, s1-, sN+, sN-, then sz_1..sz_N.
    """
    if alpha < 0 or gamma < 0:
        raise ValueError(f"amplitudes must be >= 0, got alpha={alpha}, gamma={gamma}")
    mode = JumpMode.parse(mode)
    jumps: list[SpinOperator] = []
    damping = mode in (JumpMode.FULL, JumpMode.BOUNDARY_ONLY)
    dephasing = mode in (JumpMode.FULL, JumpMode.DEPHASING_ONLY)
    if damping and alpha > 0:
        amp = math.sqrt(alpha)
        for site in (1, n_sites):
            for kind in ("+", "-"):
                op = site_operator(n_sites, site, kind)
                jumps.append(SpinOperator(n_sites, amp * op.matrix,
                                          f"sqrt(alpha) {op.label}"))
    if dephasing and gamma > 0:
        amp = math.sqrt(gamma)
        for site in range(1, n_sites + 1):
            op = site_operator(n_sites, site, "z")
            jumps.append(SpinOperator(n_sites, amp * op.matrix,
                                      f"sqrt(gamma) {op.label}"))
    return jumps
