"""Exact bipartite OTOC and the quantities equal to it.

All routines work on d x d matrices; doubled-space (d^2 x d^2) operators are
never formed. The AA' replica trace becomes a contraction of the realigned
unitary R[(a, a'), (b, b')] = U[(a, b), (a', b')]:

    G(U) = 1 - ||R R^dag||_2^2 / d^2 = 1 - ||R^dag R||_2^2 / d^2

with the first form contracting over AA' and the second over BB'.
"""

from __future__ import annotations

import numpy as np

from .linalg import ATOL, BipartiteDims, is_unitary, kron, realign, swap_replica

__all__ = [
    "InvalidEvolution",
    "evolution",
    "g_exact",
    "g_reduced",
    "g_thermal",
    "g_swap",
    "commutator_otoc",
    "operator_entanglement",
    "entangling_power",
]


class InvalidEvolution(ValueError):
    """Raised when an evolution operator is not unitary."""


def _require_unitary(u, dims: BipartiteDims, atol=ATOL):
    u = np.asarray(u)
    if u.shape != (dims.d, dims.d):
        raise ValueError(f"unitary must be {dims.d} x {dims.d}, got {u.shape}")
    if not is_unitary(u, atol):
        raise InvalidEvolution("evolution operator is not unitary")
    return u


def evolution(spec, t: float) -> np.ndarray:
    """U_t = exp(-i H t) from a :class:`~bipotoc.models.SpectralData`."""
    v = spec.eigenvectors
    return (v * np.exp(-1j * spec.eigenvalues * t)) @ v.conj().T


def g_exact(u, dims: BipartiteDims, side: str | None = None, check: bool = True) -> float:
    """Bipartite OTOC of ``u`` at infinite temperature.

    ``side`` picks the replica pair that is contracted ("A" for AA', "B" for
    BB'); by default the smaller factor, which gives the cheaper Gram matrix.
    """
    if check:
        u = _require_unitary(u, dims)
    r = realign(u, dims)
    side = (side or dims.smaller).upper()
    if side == "A":
        gram = r @ r.conj().T
    elif side == "B":
        gram = r.conj().T @ r
    else:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    return float(1.0 - np.vdot(gram, gram).real / dims.d**2)


def reduced_action(u, dims: BipartiteDims, keep: str = "A") -> np.ndarray:
    """Matrix-unit action of the reduced dynamics on factor ``keep``.

    ``out[i, j]`` is the d_k x d_k matrix Tr_env[U (|i><j| (x) I/d_env) U^dag]
    (the environment is the other factor, initialised maximally mixed).
    """
    t = np.asarray(u).reshape(dims.d_a, dims.d_b, dims.d_a, dims.d_b)
    if keep.upper() == "A":
        out = np.einsum("abic,ebjc->ijae", t, t.conj(), optimize=True) / dims.d_b
    elif keep.upper() == "B":
        out = np.einsum("xbyi,xfyj->ijbf", t, t.conj(), optimize=True) / dims.d_a
    else:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    return out


def g_reduced(u, dims: BipartiteDims, keep: str | None = None, check: bool = True) -> float:
    """OTOC from the reduced channel: 1 - sum_ij ||L(|i><j|)||_2^2 / d_k^2."""
    if check:
        u = _require_unitary(u, dims)
    keep = keep or dims.smaller
    act = reduced_action(u, dims, keep)
    dk = dims.factor(keep)
    return float(1.0 - np.vdot(act, act).real / dk**2)


def thermal_state(hamiltonian, beta: float) -> np.ndarray:
    evals, evecs = np.linalg.eigh(hamiltonian)
    w = np.exp(-beta * (evals - evals.min()))
    w /= w.sum()
    return (evecs * w) @ evecs.conj().T


def g_thermal(u, dims: BipartiteDims, beta: float = 0.0, hamiltonian=None, check: bool = True) -> float:
    """Thermal bipartite OTOC

        G = 1 - Re Tr[(rho_beta (x) I) U^dag(x2) S_AA' U(x2) S_AA'] / d

    evaluated by contracting the replica index into a d x d operator K, so
    that G = 1 - Re Tr(rho_beta K) / d.
    """
    if check:
        u = _require_unitary(u, dims)
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if beta > 0:
        if hamiltonian is None:
            raise ValueError("a Hamiltonian is required for beta > 0")
        hamiltonian = np.asarray(hamiltonian)
        if np.abs(hamiltonian - hamiltonian.conj().T).max() > ATOL * max(1.0, np.abs(hamiltonian).max()):
            raise ValueError("Hamiltonian is not Hermitian")
        rho = thermal_state(hamiltonian, beta)
    else:
        rho = np.eye(dims.d) / dims.d

    da, db = dims.d_a, dims.d_b
    t = u.reshape(da, db, da, db)
    td = u.conj().T.reshape(da, db, da, db)
    # K[(p,q),(c,e)] = sum Ud[p,q,a,b] Ud[C,E,A,B] U[A,b,C,e] U[a,B,c,E]
    k = np.einsum("pqab,CEAB,AbCe,aBcE->pqce", td, td, t, t, optimize=True).reshape(dims.d, dims.d)
    return float(1.0 - np.vdot(rho.conj().T, k).real / dims.d)


def g_swap(dims: BipartiteDims) -> float:
    """Closed form G(S_AB) = 1 - 1/d (symmetric cut)."""
    return 1.0 - 1.0 / dims.d


def commutator_otoc(u, v_a, w_b, dims: BipartiteDims, check: bool = True) -> float:
    """C = 1 - Re Tr(V(t)^dag W^dag V(t) W) / d for local unitaries V on A, W on B."""
    v_a, w_b = np.asarray(v_a), np.asarray(w_b)
    if check:
        u = _require_unitary(u, dims)
        if v_a.shape != (dims.d_a, dims.d_a) or not is_unitary(v_a):
            raise InvalidEvolution("V must be a unitary on factor A")
        if w_b.shape != (dims.d_b, dims.d_b) or not is_unitary(w_b):
            raise InvalidEvolution("W must be a unitary on factor B")
    V = kron(v_a, np.eye(dims.d_b))
    W = kron(np.eye(dims.d_a), w_b)
    vt = u.conj().T @ V @ u
    f = np.vdot(W @ vt, vt @ W)  # Tr(V(t)^dag W^dag V(t) W)
    return float(1.0 - f.real / dims.d)


def operator_entanglement(u, dims: BipartiteDims, check: bool = True) -> float:
    """Linear entropy of Tr_BB' |U><U| with |U> = (U (x) I)|phi+>."""
    if check:
        u = _require_unitary(u, dims)
    da, db = dims.d_a, dims.d_b
    psi = (np.asarray(u) / np.sqrt(dims.d)).reshape(da, db, da, db)  # |U>[a b a' b']
    sigma = np.einsum("abcd,ebfd->acef", psi, psi.conj()).reshape(da * da, da * da)
    return float(1.0 - np.vdot(sigma, sigma).real)


def entangling_power(u, dims: BipartiteDims, check: bool = True) -> float:
    """e_P(U) = d/(sqrt(d)+1)^2 (G(U) + G(U S) - G(S)), symmetric cuts only."""
    if dims.d_a != dims.d_b:
        raise NotImplementedError("entangling power is only defined here for d_a == d_b")
    if check:
        u = _require_unitary(u, dims)
    s = swap_replica(dims.d_a)
    d = dims.d
    total = g_exact(u, dims, check=False) + g_exact(u @ s, dims, check=False) - g_exact(s, dims, check=False)
    return float(d / (np.sqrt(d) + 1.0) ** 2 * total)
