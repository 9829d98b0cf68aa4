"""Dense linear algebra on a bipartite Hilbert space C^dA (x) C^dB.

Operators are plain ``numpy`` complex arrays. Index convention: a basis
vector of the composite space is |a>|b> with flat index ``a * dB + b``, so an
operator reshaped to ``(dA, dB, dA, dB)`` reads ``X[a, b, a', b']``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BipartiteDims",
    "RngStream",
    "as_generator",
    "kron",
    "partial_trace",
    "swap_replica",
    "permute_bipartite",
    "realign",
    "haar_unitary",
    "haar_state",
    "hs_inner",
    "linear_entropy",
    "is_unitary",
    "PAULIS",
]

ATOL = 1e-10

PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class BipartiteDims:
    """Dimensions of the cut H = H_A (x) H_B."""

    d_a: int
    d_b: int

    def __post_init__(self):
        for name in ("d_a", "d_b"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def d(self) -> int:
        return self.d_a * self.d_b

    @property
    def d_min(self) -> int:
        return min(self.d_a, self.d_b)

    @property
    def d_max(self) -> int:
        return max(self.d_a, self.d_b)

    @property
    def ratio(self) -> float:
        """d_max / d_min."""
        return self.d_max / self.d_min

    def factor(self, keep: str) -> int:
        return self.d_a if _label(keep) == "A" else self.d_b

    def complement(self, keep: str) -> int:
        return self.d_b if _label(keep) == "A" else self.d_a

    @property
    def smaller(self) -> str:
        return "A" if self.d_a <= self.d_b else "B"

    @classmethod
    def from_total(cls, d: int, d_a: int) -> "BipartiteDims":
        if d % d_a:
            raise ValueError(f"cut d_a={d_a} does not divide total dimension {d}")
        return cls(d_a, d // d_a)


def _label(keep: str) -> str:
    k = str(keep).upper()
    if k not in ("A", "B"):
        raise ValueError(f"factor label must be 'A' or 'B', got {keep!r}")
    return k


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by ``(seed, stream_id)``.

    Backed by the counter-based Philox bit generator; sub-streams are derived
    through ``SeedSequence`` spawn keys, so ``child(i)`` streams are
    independent of each other and of the order in which they are consumed.
    """

    seed: int
    stream_id: int = 0
    path: tuple = ()

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + (int(index),))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + self.path)
        return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return np.random.default_rng(rng)


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a), np.asarray(b))


def _check_square(x, d, what="operator"):
    x = np.asarray(x)
    if x.ndim != 2 or x.shape != (d, d):
        raise ValueError(f"{what} must have shape ({d}, {d}), got {x.shape}")
    return x


def partial_trace(x, dims: BipartiteDims, keep: str = "A") -> np.ndarray:
    """Trace out the complement of ``keep``."""
    x = _check_square(x, dims.d)
    t = x.reshape(dims.d_a, dims.d_b, dims.d_a, dims.d_b)
    if _label(keep) == "A":
        return np.einsum("abcb->ac", t)
    return np.einsum("abad->bd", t)


def swap_replica(d: int) -> np.ndarray:
    """Permutation S on C^d (x) C^d with S|i>|j> = |j>|i>."""
    if d < 1:
        raise ValueError("d must be positive")
    s = np.zeros((d * d, d * d), dtype=complex)
    i, j = np.divmod(np.arange(d * d), d)
    s[j * d + i, i * d + j] = 1.0
    return s


def permute_bipartite(u, dims: BipartiteDims, permutation, grouping=(2, 2)) -> np.ndarray:
    """Reshape ``u`` to the rank-4 tensor ``u[a, b, a', b']`` (indices 0..3 =
    row-A, row-B, col-A, col-B), transpose by ``permutation`` and regroup the
    result into a matrix whose row dimension is the product of the first
    ``grouping[0]`` permuted axes.
    """
    u = _check_square(u, dims.d)
    perm = tuple(int(p) for p in permutation)
    if sorted(perm) != [0, 1, 2, 3]:
        raise ValueError(f"not a permutation of four indices: {permutation!r}")
    if sum(grouping) != 4:
        raise ValueError("grouping must split four indices")
    shape = (dims.d_a, dims.d_b, dims.d_a, dims.d_b)
    t = u.reshape(shape).transpose(perm)
    rows = int(np.prod([shape[p] for p in perm[: grouping[0]]]))
    return t.reshape(rows, -1)


def realign(u, dims: BipartiteDims) -> np.ndarray:
    """Operator-Schmidt realignment across the AA'|BB' cut.

    Returns R with ``R[(a, a'), (b, b')] = u[(a, b), (a', b')]``; the singular
    values of R are the operator-Schmidt coefficients of ``u``.
    """
    return permute_bipartite(u, dims, (0, 2, 1, 3))


def haar_unitary(d: int, rng) -> np.ndarray:
    """Haar-random element of U(d) (Gaussian matrix, QR, phase fix)."""
    gen = as_generator(rng)
    z = (gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def haar_state(d: int, rng) -> np.ndarray:
    """Uniformly random unit vector in C^d, returned as a 1-D array."""
    gen = as_generator(rng)
    z = gen.standard_normal(d) + 1j * gen.standard_normal(d)
    return z / np.linalg.norm(z)


def hs_inner(x, y) -> complex:
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    return complex(np.vdot(x, y))


def linear_entropy(rho) -> float:
    """1 - Tr(rho^2) for a Hermitian ``rho``."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    # Tr(rho^2) = ||rho||_2^2 for Hermitian rho
    return float(1.0 - np.vdot(rho, rho).real)


def is_unitary(u, atol: float = ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() < atol)
