"""Sampling experiments: ensemble-averaged OTOCs, 1-design oracles,
entropy production over random pure states and concentration checks.

Samples are drawn in fixed-size blocks; block ``b`` uses the sub-stream
``rng.child(b)``. Results therefore do not depend on how many threads
process the blocks.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channels import reduced_channel
from .estimates import haar_estimate
from .linalg import PAULIS, BipartiteDims, RngStream, haar_state, haar_unitary, swap_replica
from .otoc import _require_unitary, g_exact, reduced_action

__all__ = [
    "EnsembleKind",
    "EnsembleSpec",
    "SampleStats",
    "sample_otoc",
    "otoc_batch",
    "pauli_strings",
    "pauli_exhaustive_average",
    "entropy_production_estimate",
    "swap_protocol_sim",
    "ConcentrationRow",
    "concentration_experiment",
    "otoc_concentration_bound",
    "state_concentration_bound",
]

BLOCK = 1000
MAX_ENUMERATION = 10**6


class EnsembleKind(str, Enum):
    HAAR_LOCAL = "haar_local"
    PAULI = "pauli"
    HAAR_GLOBAL = "haar_global"


@dataclass(frozen=True)
class EnsembleSpec:
    """Averaging ensemble for the local operators V_A, W_B.

    ``HAAR_GLOBAL`` additionally replaces the evolution by a Haar-random
    U in U(d) for every sample, so its mean targets the Haar estimate.
    """

    kind: EnsembleKind
    dims: BipartiteDims
    n_sites_a: int | None = None
    n_sites_b: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EnsembleKind(self.kind))
        if self.kind is EnsembleKind.PAULI:
            na, nb = self.n_sites_a, self.n_sites_b
            if na is None:
                na = int(round(np.log2(self.dims.d_a)))
                object.__setattr__(self, "n_sites_a", na)
            if nb is None:
                nb = int(round(np.log2(self.dims.d_b)))
                object.__setattr__(self, "n_sites_b", nb)
            if 2**na != self.dims.d_a or 2**nb != self.dims.d_b:
                raise ValueError(
                    f"Pauli ensemble needs d_a = 2^n_a and d_b = 2^n_b; got dims "
                    f"({self.dims.d_a}, {self.dims.d_b}) with sites ({na}, {nb})"
                )


@dataclass(frozen=True, eq=False)
class SampleStats:
    samples: np.ndarray
    reference: float
    bin_edges: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 2.0, 65))

    @property
    def n_samples(self) -> int:
        return self.samples.size

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def variance(self) -> float:
        return float(np.var(self.samples, ddof=1)) if self.n_samples > 1 else 0.0

    @property
    def std_error(self) -> float:
        return float(np.sqrt(self.variance / self.n_samples))

    @property
    def deviations(self) -> np.ndarray:
        return np.abs(self.samples - self.reference)

    @property
    def histogram(self) -> np.ndarray:
        # the last bin is closed; deviations beyond the edges are clipped in
        dev = np.clip(self.deviations, self.bin_edges[0], self.bin_edges[-1])
        counts, _ = np.histogram(dev, bins=self.bin_edges)
        return counts

    def exceedance(self, epsilon: float) -> float:
        return float(np.mean(self.deviations >= epsilon))

    def as_dict(self, include_samples: bool = False) -> dict:
        out = {
            "n_samples": self.n_samples,
            "mean": self.mean,
            "variance": self.variance,
            "std_error": self.std_error,
            "reference": self.reference,
            "bin_edges": self.bin_edges.tolist(),
            "histogram": self.histogram.tolist(),
        }
        if include_samples:
            out["samples"] = self.samples.tolist()
        return out


def _run_blocks(fn, n: int, rng: RngStream, threads: int = 1, block: int = BLOCK) -> np.ndarray:
    """Evaluate ``fn(size, generator)`` on consecutive blocks and concatenate."""
    if n < 1:
        raise ValueError("number of samples must be positive")
    if not isinstance(rng, RngStream):
        raise TypeError("sampling needs an RngStream (seed, stream_id) for reproducible blocks")
    sizes = [min(block, n - s) for s in range(0, n, block)]
    jobs = [(size, rng.child(b)) for b, size in enumerate(sizes)]

    def run(job):
        size, stream = job
        return fn(size, stream.generator())

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    return np.concatenate(parts)


def otoc_batch(u, v_stack, w_stack, dims: BipartiteDims) -> np.ndarray:
    """C_{V_A, W_B} for stacks of local unitaries (first axis = sample).

    ``u`` may be a single evolution or a stack matching the samples.
    """
    da, db, d = dims.d_a, dims.d_b, dims.d
    u = np.asarray(u)
    m = v_stack.shape[0]
    if u.ndim == 2 and da * da <= d:
        # U^dag (V (x) I) U = sum_ab V_ab X_ab with X_ab = U_a^dag U_b (row blocks)
        blocks = u.reshape(da, db, d)
        x = np.einsum("aic,bie->abce", blocks.conj(), blocks)
        vt = np.tensordot(v_stack, x, axes=([1, 2], [0, 1]))
    else:
        ub = np.broadcast_to(u, (m, d, d)) if u.ndim == 2 else u
        vu = np.matmul(v_stack, ub.reshape(m, da, db * d)).reshape(m, d, d)
        vt = np.matmul(np.conj(np.swapaxes(ub, 1, 2)), vu)
    w = w_stack[:, None]
    # (I (x) W) V(t) and V(t) (I (x) W)
    wv = np.matmul(w, vt.reshape(m, da, db, d))
    vw = np.matmul(vt.reshape(m, d * da, db), w_stack).reshape(m, da, db, d)
    f = np.einsum("mi,mi->m", wv.reshape(m, -1).conj(), vw.reshape(m, -1))
    return 1.0 - f.real / d


def _haar_stack(d, size, gen):
    return np.stack([haar_unitary(d, gen) for _ in range(size)])


def _pauli_product(indices):
    out = np.ones((1, 1), dtype=complex)
    for k in indices:
        out = np.kron(out, PAULIS[k])
    return out


def pauli_strings(n_sites: int) -> np.ndarray:
    """All 4^n tensor products of {I, X, Y, Z}, stacked."""
    return np.stack([_pauli_product(ix) for ix in itertools.product(range(4), repeat=n_sites)])


def _random_paulis(n_sites, size, gen):
    idx = gen.integers(0, 4, size=(size, n_sites))
    return np.stack([_pauli_product(row) for row in idx])


def sample_otoc(u, ens: EnsembleSpec, n: int, rng: RngStream, threads: int = 1) -> SampleStats:
    """Draw ``n`` values of C_{V_A, W_B} with V, W from ``ens``.

    The reference is G(u) (or the Haar estimate for ``HAAR_GLOBAL``, where
    ``u`` is ignored and may be None).
    """
    dims = ens.dims
    if ens.kind is EnsembleKind.HAAR_GLOBAL:
        reference = haar_estimate(dims)
    else:
        u = _require_unitary(u, dims)
        reference = g_exact(u, dims, check=False)

    def draw(size, gen):
        if ens.kind is EnsembleKind.PAULI:
            v = _random_paulis(ens.n_sites_a, size, gen)
            w = _random_paulis(ens.n_sites_b, size, gen)
            return otoc_batch(u, v, w, dims)
        v = _haar_stack(dims.d_a, size, gen)
        w = _haar_stack(dims.d_b, size, gen)
        evo = _haar_stack(dims.d, size, gen) if ens.kind is EnsembleKind.HAAR_GLOBAL else u
        return otoc_batch(evo, v, w, dims)

    return SampleStats(_run_blocks(draw, n, rng, threads), reference)


def pauli_exhaustive_average(u, ens: EnsembleSpec) -> float:
    """Uniform average of C_{V_A, W_B} over every pair of Pauli strings."""
    if ens.kind is not EnsembleKind.PAULI:
        raise ValueError("exhaustive averaging needs a Pauli ensemble")
    dims = ens.dims
    u = _require_unitary(u, dims)
    n_pairs = 4 ** (ens.n_sites_a + ens.n_sites_b)
    if n_pairs > MAX_ENUMERATION:
        raise ValueError(f"{n_pairs} Pauli pairs exceed the enumeration limit {MAX_ENUMERATION}")
    vs = pauli_strings(ens.n_sites_a)
    ws = pauli_strings(ens.n_sites_b)
    total = 0.0
    for v in vs:
        vrep = np.broadcast_to(v, (len(ws),) + v.shape)
        total += float(np.sum(otoc_batch(u, vrep, ws, dims)))
    return total / n_pairs


def _normalized_purity(rho):
    # dividing by Tr(rho)^2 removes the rounding in |psi| = 1
    tr = np.einsum("maa->m", rho).real
    return np.einsum("mab,mab->m", rho, rho.conj()).real / tr**2


def _purity_batch(action, psis):
    return _normalized_purity(np.einsum("mi,mj,ijab->mab", psis, psis.conj(), action))


def _purity_batch_direct(u, dims: BipartiteDims, keep: str, psis):
    """Same as :func:`_purity_batch` but applies U to psi (x) e for every
    environment basis vector e; cheaper when the kept factor is large.
    The 1/d_env prefactor is dropped since the purity is trace-normalized."""
    da, db = dims.d_a, dims.d_b
    t = u.reshape(da, db, da, db)
    if keep == "A":
        out = np.einsum("abie,mi->mabe", t, psis)  # U (psi (x) |e>)
        rho = np.einsum("mabe,mcbe->mac", out, out.conj())
    else:
        out = np.einsum("abei,mi->mabe", t, psis)
        rho = np.einsum("mabe,mace->mbc", out, out.conj())
    return _normalized_purity(rho)


@dataclass(frozen=True, eq=False)
class EntropyStats(SampleStats):
    d_keep: int = 1

    @property
    def scaled_mean(self) -> float:
        """(d+1)/d times the mean entropy; estimates G."""
        return self.mean * (self.d_keep + 1) / self.d_keep

    @property
    def scaled_std_error(self) -> float:
        return self.std_error * (self.d_keep + 1) / self.d_keep

    def as_dict(self, include_samples: bool = False) -> dict:
        out = super().as_dict(include_samples)
        out["scaled_mean"] = self.scaled_mean
        out["scaled_std_error"] = self.scaled_std_error
        return out


def entropy_production_estimate(u, dims: BipartiteDims, keep: str, n: int, rng: RngStream,
                                threads: int = 1) -> EntropyStats:
    """Linear entropy of L(|psi><psi|) over Haar-random pure |psi> on ``keep``.

    The reference is d/(d+1) G(u), the expected value of the raw samples.
    """
    u = _require_unitary(u, dims)
    keep = keep.upper()
    dk = dims.factor(keep)
    # per-sample cost: dk^4 through the stored action, dk d (d + dk) directly
    if dk**4 <= dk * dims.d * (dims.d + dk):
        action = reduced_action(u, dims, keep)

        def purity(psis):
            return _purity_batch(action, psis)
    else:

        def purity(psis):
            return _purity_batch_direct(u, dims, keep, psis)

    def draw(size, gen):
        psis = np.stack([haar_state(dk, gen) for _ in range(size)])
        return 1.0 - purity(psis)

    samples = _run_blocks(draw, n, rng, threads)
    reference = dk / (dk + 1) * g_exact(u, dims, check=False)
    return EntropyStats(samples, reference, d_keep=dk)


def swap_protocol_sim(u, dims: BipartiteDims, keep: str, psi) -> float:
    """Two-copy purity measurement: <S> on L(|psi><psi|) (x) L(|psi><psi|)."""
    psi = np.asarray(psi, dtype=complex).ravel()
    dk = dims.factor(keep)
    if psi.size != dk:
        raise ValueError(f"state must have dimension {dk}, got {psi.size}")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("state is not normalized")
    ch = reduced_channel(u, dims, keep)
    rho = np.einsum("i,j,ijab->ab", psi, psi.conj(), ch.action)
    two_copy = np.kron(rho, rho)
    return float(np.trace(swap_replica(dk) @ two_copy).real)


def otoc_concentration_bound(epsilon: float, dims: BipartiteDims) -> float:
    return float(2.0 * np.exp(-(epsilon**2) * dims.d_max / 64.0))


def state_concentration_bound(epsilon: float, d_keep: int) -> float:
    return float(np.exp(-d_keep * epsilon**2 / 64.0))


@dataclass(frozen=True)
class ConcentrationRow:
    epsilon: float
    empirical_p: float
    bound: float
    n_samples: int

    @property
    def std_error(self) -> float:
        """Binomial standard error of the empirical exceedance at the bound."""
        p = min(self.bound, 1.0)
        return float(np.sqrt(p * (1 - p) / self.n_samples))

    @property
    def vacuous(self) -> bool:
        return self.bound >= 1.0

    @property
    def satisfied(self) -> bool:
        return self.empirical_p <= self.bound + 3 * self.std_error

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "empirical_p": self.empirical_p,
            "bound": self.bound,
            "vacuous": self.vacuous,
            "satisfied": self.satisfied,
        }


def concentration_experiment(u, ens: EnsembleSpec, n: int, eps_grid, rng: RngStream,
                             variant: str = "otoc", keep: str | None = None,
                             threads: int = 1) -> tuple[list[ConcentrationRow], SampleStats]:
    """Empirical exceedance P(|X - <X>| >= eps) against the analytic bound.

    ``variant="otoc"`` samples C_{V_A, W_B} over Haar-local V, W;
    ``variant="state"`` samples the entropy production on ``keep``
    (default: the smaller factor).
    """
    eps_grid = [float(e) for e in np.atleast_1d(eps_grid)]
    if not eps_grid:
        raise ValueError("epsilon grid is empty")
    dims = ens.dims
    if variant == "otoc":
        if ens.kind is not EnsembleKind.HAAR_LOCAL:
            raise ValueError("the OTOC concentration variant samples Haar-local operators")
        stats = sample_otoc(u, ens, n, rng, threads)
        bounds = [otoc_concentration_bound(e, dims) for e in eps_grid]
    elif variant == "state":
        keep = keep or dims.smaller
        stats = entropy_production_estimate(u, dims, keep, n, rng, threads)
        bounds = [state_concentration_bound(e, dims.factor(keep)) for e in eps_grid]
    else:
        raise ValueError(f"unknown variant {variant!r}")
    rows = [ConcentrationRow(e, stats.exceedance(e), b, stats.n_samples) for e, b in zip(eps_grid, bounds)]
    return rows, stats
