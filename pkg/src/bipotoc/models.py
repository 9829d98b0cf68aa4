"""Spin-chain Hamiltonians and spectral bookkeeping.

Chains are spin-1/2 with open boundaries. Site 0 is the leftmost Kronecker
factor, so the cut ``d_a = 2**n_a`` puts the first ``n_a`` sites in A.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .linalg import PAULIS

__all__ = [
    "ModelKind",
    "HamiltonianSpec",
    "SpectralData",
    "NrcReport",
    "build_hamiltonian",
    "tfim",
    "xxz",
    "eigendecompose",
    "nrc_report",
    "cluster_sorted",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-9
HERMITIAN_TOL = 1e-10


class ModelKind(str, Enum):
    TFIM = "tfim"
    XXZ = "xxz"
    CUSTOM = "custom"


@dataclass(frozen=True)
class HamiltonianSpec:
    kind: ModelKind
    n_sites: int = 2
    params: dict = field(default_factory=dict)
    boundary: str = "open"
    custom_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.boundary != "open":
            raise ValueError("only open boundary conditions are supported")
        if self.kind is not ModelKind.CUSTOM and self.n_sites < 2:
            raise ValueError("chain models need n_sites >= 2")
        if self.kind is ModelKind.CUSTOM and not self.custom_path:
            raise ValueError("custom model needs custom_path")

    @property
    def dim(self) -> int | None:
        return None if self.kind is ModelKind.CUSTOM else 2**self.n_sites


def _site_op(op, site, n):
    return np.kron(np.kron(np.eye(2**site), op), np.eye(2 ** (n - site - 1)))


def _bond_op(op1, op2, site, n):
    return np.kron(np.kron(np.eye(2**site), np.kron(op1, op2)), np.eye(2 ** (n - site - 2)))


def tfim(n: int, g: float, h: float) -> np.ndarray:
    """H = -sum_i (Z_i Z_{i+1} + g X_i + h Z_i), open chain."""
    _, x, _, z = PAULIS
    dim = 2**n
    H = np.zeros((dim, dim), dtype=complex)
    for i in range(n - 1):
        H -= _bond_op(z, z, i, n)
    for i in range(n):
        H -= g * _site_op(x, i, n) + h * _site_op(z, i, n)
    return H


def xxz(n: int, J: float, delta: float) -> np.ndarray:
    """H = -J sum_i (X_i X_{i+1} + Y_i Y_{i+1} + delta Z_i Z_{i+1}), open chain."""
    _, x, y, z = PAULIS
    dim = 2**n
    H = np.zeros((dim, dim), dtype=complex)
    for i in range(n - 1):
        H -= J * (_bond_op(x, x, i, n) + _bond_op(y, y, i, n) + delta * _bond_op(z, z, i, n))
    return H


def build_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    p = spec.params
    if spec.kind is ModelKind.TFIM:
        return tfim(spec.n_sites, p.get("g", 0.0), p.get("h", 0.0))
    if spec.kind is ModelKind.XXZ:
        return xxz(spec.n_sites, p.get("J", 1.0), p.get("delta", p.get("Delta", 1.0)))

    from .io import load_matrix

    path = Path(spec.custom_path)
    if not path.exists():
        raise FileNotFoundError(f"custom Hamiltonian file not found: {path}")
    H = load_matrix(path)
    if H.shape[0] != H.shape[1]:
        raise ValueError(f"custom Hamiltonian must be square, got {H.shape}")
    _check_hermitian(H)
    return H


def _check_hermitian(h):
    dev = np.abs(h - h.conj().T).max() if h.size else 0.0
    if dev > HERMITIAN_TOL * max(1.0, np.abs(h).max()):
        raise ValueError(f"matrix is not Hermitian (max |H - H^dag| = {dev:.3e})")


def cluster_sorted(values, threshold):
    """Single-linkage clustering of 1-D ``values``.

    Returns ``(labels, order)`` where ``labels[i]`` is the cluster of
    ``values[i]``; clusters are numbered in increasing value and split
    wherever consecutive sorted values differ by more than ``threshold``.
    """
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    jumps = np.diff(values[order]) > threshold
    sorted_labels = np.concatenate([[0], np.cumsum(jumps)]) if values.size else np.zeros(0, int)
    labels = np.empty(values.size, dtype=np.int64)
    labels[order] = sorted_labels
    return labels, order


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigensystem of H with level and gap classes.

    ``gap_labels[k, m]`` is the class of ``E_k - E_m``; ``gap_values`` holds
    the mean gap of each class.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    level_labels: np.ndarray
    gap_labels: np.ndarray
    gap_values: np.ndarray
    tol_level: float
    tol_gap: float

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def spectral_range(self) -> float:
        return float(self.eigenvalues[-1] - self.eigenvalues[0]) if self.dim else 0.0

    @property
    def scale(self) -> float:
        r = self.spectral_range
        return r if r > 0 else max(1.0, float(np.abs(self.eigenvalues).max(initial=0.0)))

    @property
    def n_levels(self) -> int:
        return int(self.level_labels.max()) + 1 if self.dim else 0

    def level_classes(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.level_labels == c) for c in range(self.n_levels)]

    def level_energies(self) -> np.ndarray:
        return np.array([self.eigenvalues[c].mean() for c in self.level_classes()])

    def gap_classes(self) -> list[np.ndarray]:
        """Ordered pairs ``(k, m)`` of each gap class, as ``(size, 2)`` arrays."""
        flat = self.gap_labels.ravel()
        order = np.argsort(flat, kind="stable")
        bounds = np.flatnonzero(np.diff(flat[order])) + 1
        d = self.dim
        return [np.column_stack(np.divmod(chunk, d)) for chunk in np.split(order, bounds)]

    @property
    def zero_gap_label(self) -> int:
        return int(self.gap_labels[0, 0])

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eigendecompose(h, tol_level: float = DEFAULT_TOL, tol_gap: float = DEFAULT_TOL) -> SpectralData:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"Hamiltonian must be square, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ArithmeticError("Hamiltonian has non-finite entries")
    _check_hermitian(h)
    try:
        evals, evecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigensolver failed: {exc}") from exc
    if not (np.all(np.isfinite(evals)) and np.all(np.isfinite(evecs))):
        raise ArithmeticError("eigensolver returned non-finite values")

    spread = evals[-1] - evals[0] if evals.size else 0.0
    scale = spread if spread > 0 else max(1.0, float(np.abs(evals).max(initial=0.0)))

    level_labels, _ = cluster_sorted(evals, tol_level * scale)
    gaps = (evals[:, None] - evals[None, :]).ravel()
    gap_flat, _ = cluster_sorted(gaps, tol_gap * scale)
    n_gap = int(gap_flat.max()) + 1 if gap_flat.size else 0
    gap_values = np.bincount(gap_flat, weights=gaps, minlength=n_gap) / np.bincount(
        gap_flat, minlength=n_gap
    )
    d = evals.size
    return SpectralData(
        eigenvalues=evals,
        eigenvectors=evecs,
        level_labels=level_labels,
        gap_labels=gap_flat.reshape(d, d),
        gap_values=gap_values,
        tol_level=tol_level,
        tol_gap=tol_gap,
    )


@dataclass(frozen=True)
class NrcReport:
    nrc: bool
    nrc_plus: bool
    degenerate_levels: int
    degenerate_gaps: int
    degenerate_level_gaps: int

    @property
    def basis_dependent(self) -> bool:
        """True when the NRC estimate depends on the eigenbasis choice."""
        return self.degenerate_levels > 0

    def as_dict(self) -> dict:
        return {
            "nrc": self.nrc,
            "nrc_plus": self.nrc_plus,
            "degenerate_levels": self.degenerate_levels,
            "degenerate_gaps": self.degenerate_gaps,
            "degenerate_level_gaps": self.degenerate_level_gaps,
            "basis_dependent": self.basis_dependent,
        }


def nrc_report(spec: SpectralData) -> NrcReport:
    """Check the no-resonance condition and its relaxed (level-gap) form.

    NRC: every level is simple and every nonzero gap class holds one ordered
    pair. NRC+: gaps between distinct levels are pairwise distinct.
    """
    level_sizes = np.bincount(spec.level_labels)
    degenerate_levels = int((level_sizes > 1).sum())

    gap_sizes = np.bincount(spec.gap_labels.ravel())
    nonzero = np.ones(gap_sizes.size, bool)
    nonzero[spec.zero_gap_label] = False
    degenerate_gaps = int((gap_sizes[nonzero] > 1).sum())

    e = spec.level_energies()
    n = e.size
    k, m = np.nonzero(~np.eye(n, dtype=bool))
    level_gaps = e[k] - e[m]
    if level_gaps.size:
        labels, _ = cluster_sorted(level_gaps, spec.tol_gap * spec.scale)
        degenerate_level_gaps = int((np.bincount(labels) > 1).sum())
    else:
        degenerate_level_gaps = 0

    return NrcReport(
        nrc=degenerate_levels == 0 and degenerate_gaps == 0,
        nrc_plus=degenerate_level_gaps == 0,
        degenerate_levels=degenerate_levels,
        degenerate_gaps=degenerate_gaps,
        degenerate_level_gaps=degenerate_level_gaps,
    )
