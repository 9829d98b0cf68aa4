import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bipotoc import (
    BipartiteDims,
    InvalidEvolution,
    commutator_otoc,
    eigendecompose,
    entangling_power,
    evolution,
    g_exact,
    g_reduced,
    g_swap,
    g_thermal,
    haar_state,
    linear_entropy,
    operator_entanglement,
    partial_trace,
    tfim,
)
from bipotoc.otoc import thermal_state
from conftest import g_doubled, haar, propagator, swap_gate

DIMS = [(2, 2), (2, 3), (3, 2), (2, 4), (3, 3)]


def product(rng, dims):
    return np.kron(haar(dims.d_a, rng), haar(dims.d_b, rng))


def test_identity_gives_zero():
    for da, db in DIMS:
        dims = BipartiteDims(da, db)
        assert abs(g_exact(np.eye(dims.d), dims)) < 1e-15
        assert abs(g_reduced(np.eye(dims.d), dims)) < 1e-15


def test_swap_closed_form():
    s = swap_gate(2, 2)
    dims = BipartiteDims(2, 2)
    assert g_exact(s, dims) == pytest.approx(0.75, abs=1e-15)
    assert g_reduced(s, dims) == pytest.approx(0.75, abs=1e-15)
    assert operator_entanglement(s, dims) == pytest.approx(0.75, abs=1e-15)
    for d in (3, 4):
        dd = BipartiteDims(d, d)
        assert abs(g_exact(swap_gate(d, d), dd) - (1 - 1 / d**2)) < 1e-14
        assert g_swap(dd) == 1 - 1 / dd.d


@pytest.mark.parametrize("da, db", DIMS)
def test_against_doubled_space_oracle(rng, da, db):
    dims = BipartiteDims(da, db)
    u = haar(dims.d, rng)
    ref = g_doubled(u, dims)
    assert abs(g_exact(u, dims, side="A") - ref) < 1e-12
    assert abs(g_exact(u, dims, side="B") - ref) < 1e-12


@pytest.mark.parametrize("da, db", DIMS)
def test_three_routes_agree(rng, da, db):
    dims = BipartiteDims(da, db)
    u = haar(dims.d, rng)
    g = g_exact(u, dims)
    assert abs(g_reduced(u, dims, "A") - g) < 1e-10
    assert abs(g_reduced(u, dims, "B") - g) < 1e-10
    assert abs(operator_entanglement(u, dims) - g) < 1e-10


def test_product_unitaries_give_zero(rng):
    for da, db in DIMS:
        dims = BipartiteDims(da, db)
        u = product(rng, dims)
        assert abs(g_exact(u, dims)) < 1e-12
        assert abs(g_reduced(u, dims)) < 1e-12


def test_local_invariance(rng):
    dims = BipartiteDims(2, 3)
    u = haar(6, rng)
    g = g_exact(u, dims)
    v = product(rng, dims) @ u @ product(rng, dims)
    assert abs(g_exact(v, dims) - g) < 1e-12


def test_non_unitary_rejected():
    dims = BipartiteDims(2, 2)
    with pytest.raises(InvalidEvolution):
        g_exact(2 * np.eye(4), dims)
    with pytest.raises(ValueError):
        g_exact(np.eye(5), dims)


def test_time_reversal_symmetry():
    sp = eigendecompose(tfim(4, -1.05, 0.5))
    dims = BipartiteDims(2, 8)
    for t in (0.3, 1.7, 5.0):
        assert abs(g_exact(evolution(sp, t), dims) - g_exact(evolution(sp, -t), dims)) < 1e-12


def test_evolution_matches_expm():
    h = tfim(3, -1.05, 0.5)
    np.testing.assert_allclose(evolution(eigendecompose(h), 0.8), propagator(h, 0.8), atol=1e-12)


# thermal


def test_thermal_infinite_temperature(rng):
    for da, db in DIMS:
        dims = BipartiteDims(da, db)
        u = haar(dims.d, rng)
        assert abs(g_thermal(u, dims, 0.0) - g_exact(u, dims)) < 1e-12


def test_thermal_identity_any_beta(rng):
    dims = BipartiteDims(2, 4)
    h = tfim(3, -1.05, 0.5)
    for beta in (0.0, 0.5, 3.0):
        assert abs(g_thermal(np.eye(8), dims, beta, h)) < 1e-13


def test_thermal_matches_doubled_space_oracle():
    h = tfim(3, -1.05, 0.5)
    dims = BipartiteDims(2, 4)
    u = propagator(h, 1.0)
    rho = propagator(h, -1j * 1.0)  # e^{-beta H}
    rho /= np.trace(rho)
    ref = g_doubled(u, dims, rho)
    got = g_thermal(u, dims, 1.0, h)
    assert abs(got - ref) < 1e-12
    # frozen from the oracle above
    assert got == pytest.approx(0.55027203281131, abs=1e-12)


def test_thermal_state_normalized():
    rho = thermal_state(tfim(3, 1.0, 0.2), 2.0)
    assert abs(np.trace(rho) - 1) < 1e-14
    assert np.linalg.eigvalsh(rho).min() > 0


def test_thermal_validation():
    dims = BipartiteDims(2, 2)
    with pytest.raises(ValueError):
        g_thermal(np.eye(4), dims, -1.0)
    with pytest.raises(ValueError):
        g_thermal(np.eye(4), dims, 1.0)


# commutator


def commutator_direct(u, v, w, dims):
    d = dims.d
    vt = u.conj().T @ np.kron(v, np.eye(dims.d_b)) @ u
    wb = np.kron(np.eye(dims.d_a), w)
    c = vt @ wb - wb @ vt
    return np.trace(c.conj().T @ c).real / (2 * d)


def test_commutator_identity_zero(rng):
    dims = BipartiteDims(2, 3)
    assert abs(commutator_otoc(np.eye(6), haar(2, rng), haar(3, rng), dims)) < 1e-14


def test_commutator_direct_oracle(rng):
    dims = BipartiteDims(2, 2)
    for _ in range(5):
        u, v, w = haar(4, rng), haar(2, rng), haar(2, rng)
        assert abs(commutator_otoc(u, v, w, dims) - commutator_direct(u, v, w, dims)) < 1e-12


def test_commutator_haar_average(rng):
    dims = BipartiteDims(2, 2)
    u = haar(4, rng)
    vals = np.array([commutator_otoc(u, haar(2, rng), haar(2, rng), dims, check=False) for _ in range(10_000)])
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - g_exact(u, dims)) <= 3 * se


# entangling power


def test_entangling_power_trivial_cases():
    dims = BipartiteDims(2, 2)
    assert abs(entangling_power(np.eye(4), dims)) < 1e-12
    assert abs(entangling_power(swap_gate(2, 2), dims)) < 1e-12
    with pytest.raises(NotImplementedError):
        entangling_power(np.eye(6), BipartiteDims(2, 3))


def test_entangling_power_product_state_oracle(rng):
    dims = BipartiteDims(2, 2)
    u = haar(4, rng)
    gen = np.random.default_rng(99)
    n = 100_000
    a = np.stack([haar_state(2, gen) for _ in range(n)])
    b = np.stack([haar_state(2, gen) for _ in range(n)])
    psi = np.einsum("ij,nj->ni", u, np.einsum("na,nb->nab", a, b).reshape(n, 4)).reshape(n, 2, 2)
    rho = np.einsum("nab,ncb->nac", psi, psi.conj())
    ent = 1 - np.einsum("nab,nab->n", rho, rho.conj()).real
    se = ent.std(ddof=1) / np.sqrt(n)
    assert abs(entangling_power(u, dims) - ent.mean()) <= 3 * se
    # spot check one sample against the library's linear entropy
    one = np.kron(a[0], b[0])
    out = u @ one
    assert abs(linear_entropy(partial_trace(np.outer(out, out.conj()), dims, "A")) - ent[0]) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(DIMS + [(1, 3), (4, 2)]), st.integers(0, 2**31 - 1))
def test_bounds_and_equalities(dims_tuple, seed):
    dims = BipartiteDims(*dims_tuple)
    u = haar(dims.d, np.random.default_rng(seed))
    g = g_exact(u, dims)
    gmax = 1 - 1 / dims.d_min**2
    assert -1e-12 <= g <= gmax + 1e-12
    assert abs(g_exact(u.conj().T, dims) - g) < 1e-10
    assert abs(g_reduced(u, dims) - g) < 1e-10
