"""Shared fixtures and independent brute-force oracles.

The oracles here deliberately avoid the package's reshaping machinery:
they build the doubled-space swap operators as explicit permutation
matrices and evaluate traces on the full d^2 x d^2 space.
"""

import itertools

import numpy as np
import pytest
from scipy.linalg import expm

from bipotoc import BipartiteDims


def perm_operator(dims_list, perm):
    """Matrix permuting tensor factors: |i_0 ... i_k> -> |i_perm^-1 ...>.

    ``perm[k]`` is the output slot of input factor ``k``.
    """
    n = int(np.prod(dims_list))
    p = np.zeros((n, n))
    out_dims = [None] * len(dims_list)
    for k, slot in enumerate(perm):
        out_dims[slot] = dims_list[k]
    for idx in itertools.product(*[range(x) for x in dims_list]):
        out = [None] * len(idx)
        for k, slot in enumerate(perm):
            out[slot] = idx[k]
        p[np.ravel_multi_index(out, out_dims), np.ravel_multi_index(idx, dims_list)] = 1.0
    return p


def swap_aa(dims: BipartiteDims):
    """S_AA' on A (x) B (x) A' (x) B'."""
    da, db = dims.d_a, dims.d_b
    return perm_operator([da, db, da, db], [2, 1, 0, 3])


def g_doubled(u, dims: BipartiteDims, rho=None):
    """1 - Re Tr[(rho (x) I) U^dag(x2) S U(x2) S] / d with rho = I/d by default."""
    d = dims.d
    s = swap_aa(dims)
    uu = np.kron(u, u)
    if rho is None:
        rho = np.eye(d) / d
    r = np.kron(rho, np.eye(d))
    return 1.0 - np.trace(r @ uu.conj().T @ s @ uu @ s).real / d


def haar(d, rng):
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def swap_gate(d_a, d_b):
    """SWAP from A (x) B to B (x) A; a unitary on C^{d_a d_b} when d_a = d_b."""
    return perm_operator([d_a, d_b], [1, 0])


def propagator(h, t):
    return expm(-1j * t * np.asarray(h))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance summary ---------------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
