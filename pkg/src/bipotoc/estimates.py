"""Long-time averages of the bipartite OTOC and their estimates.

Everything here is expressed through the reduced cross-operators

    C_xy = Tr_env |phi_x><phi_y|      (d_s x d_s, s = smaller factor)

of the Hamiltonian eigenvectors. A quadruple (p, i, q, j) contributes
|Tr(C_pi C_qj)|^2 to <S_AA', P(S_AA')>, and each estimate differs only in
which quadruples it keeps:

* exact average: E_i - E_p = E_q - E_j (same gap class);
* NRC+ estimate: the three projector patterns on level classes;
* NRC estimate: the same patterns on single eigenvectors (Gram matrices).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import BipartiteDims
from .models import NrcReport, SpectralData, nrc_report
from .otoc import evolution, g_exact

__all__ = [
    "GramData",
    "EstimateReport",
    "Prop4Bound",
    "haar_estimate",
    "haar_asymptote",
    "me_nrc_value",
    "cross_operators",
    "gram_matrices",
    "nrc_estimate",
    "nrc_plus_estimate",
    "exact_time_average",
    "exact_time_average_bruteforce",
    "numerical_time_average",
    "hierarchy_report",
    "eigenstate_entanglement_profile",
    "prop4_bound",
]

ORDER_SLACK = 1e-8


def haar_estimate(dims: BipartiteDims) -> float:
    """(dA^2 - 1)(dB^2 - 1) / (d^2 - 1); zero for a trivial factor."""
    d = dims.d
    if d == 1:
        return 0.0
    return (dims.d_a**2 - 1) * (dims.d_b**2 - 1) / (d**2 - 1)


def haar_asymptote(d_a: int) -> float:
    """Limit of the Haar estimate for d_b -> infinity at fixed d_a."""
    return 1.0 - 1.0 / d_a**2


def me_nrc_value(dims: BipartiteDims) -> float:
    """NRC estimate when every eigenvector is maximally entangled: (1 - 1/d)^2."""
    return (1.0 - 1.0 / dims.d) ** 2


def _check_dims(spec: SpectralData, dims: BipartiteDims):
    if spec.dim != dims.d:
        raise ValueError(f"spectral data has dimension {spec.dim}, cut expects {dims.d}")


def cross_operators(vecs, dims: BipartiteDims, side: str | None = None) -> np.ndarray:
    """All reduced cross-operators ``C[x, y] = Tr_env |v_x><v_y|``.

    ``vecs`` holds the vectors as columns. Returns shape ``(n, n, s, s)`` with
    s the dimension of ``side`` (default: the smaller factor).
    """
    side = (side or dims.smaller).upper()
    vecs = np.asarray(vecs)
    n = vecs.shape[1]
    psi = vecs.T.reshape(n, dims.d_a, dims.d_b)
    if side == "B":
        psi = psi.transpose(0, 2, 1)
    s, o = psi.shape[1], psi.shape[2]
    flat = psi.reshape(n * s, o)
    c = (flat @ flat.conj().T).reshape(n, s, n, s)
    return c.transpose(0, 2, 1, 3)


@dataclass(frozen=True, eq=False)
class GramData:
    """Gram matrices R^(chi)_kl = <rho_k^(chi), rho_l^(chi)> of reduced eigenstates."""

    r_a: np.ndarray
    r_b: np.ndarray
    dims: BipartiteDims

    @property
    def diag(self) -> np.ndarray:
        return np.diagonal(self.r_a).copy()

    def rescaled(self, side: str) -> np.ndarray:
        """R^(chi) / d_env, doubly stochastic by completeness."""
        if side.upper() == "A":
            return self.r_a / self.dims.d_b
        return self.r_b / self.dims.d_a


def gram_matrices(spec: SpectralData, dims: BipartiteDims) -> GramData:
    _check_dims(spec, dims)
    s = dims.smaller
    c = cross_operators(spec.eigenvectors, dims, s)
    d = dims.d
    idx = np.arange(d)
    # rho_k on the small side is C_kk; Tr(rho_k rho_l) = <rho_k, rho_l>
    rho = c[idx, idx].reshape(d, -1)
    r_small = (rho @ rho.conj().T).real
    # Tr over the small side's partner: <rho_k^env, rho_l^env> = ||C_kl||_2^2
    r_large = np.einsum("klab,klab->kl", c, c.conj()).real
    r_a, r_b = (r_small, r_large) if s == "A" else (r_large, r_small)
    return GramData(r_a=r_a, r_b=r_b, dims=dims)


def nrc_estimate(spec: SpectralData, dims: BipartiteDims, gram: GramData | None = None) -> float:
    gram = gram or gram_matrices(spec, dims)
    diag2 = float(np.sum(gram.diag**2))
    total = np.sum(gram.r_a**2) + np.sum(gram.r_b**2) - diag2
    return float(1.0 - total / dims.d**2)


def _resonant_sum(c: np.ndarray, key_v: np.ndarray, key_w: np.ndarray) -> float:
    """Sum |Tr(C_pi C_qj)|^2 over pairs with key_v[p, i] == key_w[q, j] >= 0."""
    n, _, s, _ = c.shape
    v = c.reshape(n * n, s * s)
    # Tr(X Y) = vec(X) . vec(Y^T)
    w = c.transpose(0, 1, 3, 2).reshape(n * n, s * s)
    kv, kw = key_v.ravel(), key_w.ravel()

    iv = np.flatnonzero(kv >= 0)
    iw = np.flatnonzero(kw >= 0)
    iv = iv[np.argsort(kv[iv], kind="stable")]
    iw = iw[np.argsort(kw[iw], kind="stable")]
    uv, start_v, count_v = np.unique(kv[iv], return_index=True, return_counts=True)
    uw, start_w, count_w = np.unique(kw[iw], return_index=True, return_counts=True)
    common, pos_v, pos_w = np.intersect1d(uv, uw, assume_unique=True, return_indices=True)
    if common.size == 0:
        return 0.0

    sv, nv = start_v[pos_v], count_v[pos_v]
    sw, nw = start_w[pos_w], count_w[pos_w]
    single = (nv == 1) & (nw == 1)
    total = 0.0
    if single.any():
        a = v[iv[sv[single]]]
        b = w[iw[sw[single]]]
        total += float(np.sum(np.abs(np.einsum("ka,ka->k", a, b)) ** 2))
    s2 = s * s
    for k in np.flatnonzero(~single):
        a = v[iv[sv[k] : sv[k] + nv[k]]]
        b = w[iw[sw[k] : sw[k] + nw[k]]]
        if nv[k] * nw[k] <= (nv[k] + nw[k]) * s2:
            total += float(np.sum(np.abs(a @ b.T) ** 2))
        else:
            ga = a.T @ a.conj()
            gb = b.T @ b.conj()
            total += float(np.sum(ga * gb).real)
    return total


def nrc_plus_estimate(spec: SpectralData, dims: BipartiteDims, cross=None) -> float:
    """Estimate from the projectors onto the eigenspaces of H.

    Keeps the quadruples of the three projector patterns (k=m, l=n),
    (k=n, l=m) minus the doubly counted (k=l=m=n), on level classes.
    """
    _check_dims(spec, dims)
    c = cross_operators(spec.eigenvectors, dims) if cross is None else cross
    lab = spec.level_labels
    n_cls = spec.n_levels
    same = lab[:, None] == lab[None, :]

    key_same = np.where(same, 0, -1)
    direct = _resonant_sum(c, key_same, key_same)

    # (p in l, i in k) against (q in k, j in l): keys (class p, class i) and (class j, class q)
    key_v = lab[:, None] * n_cls + lab[None, :]
    key_w = lab[None, :] * n_cls + lab[:, None]
    exchange = _resonant_sum(c, key_v, key_w)

    key_diag = np.where(same, lab[:, None], -1)
    overlap = _resonant_sum(c, key_diag, key_diag)
    return float(1.0 - (direct + exchange - overlap) / dims.d**2)


def exact_time_average(spec: SpectralData, dims: BipartiteDims, cross=None) -> float:
    """Infinite-time average of G(t), summing over resonant quadruples.

    Pairs are grouped by gap class, so the cost is set by the number of
    ordered eigenvector pairs, not quadruples.
    """
    _check_dims(spec, dims)
    c = cross_operators(spec.eigenvectors, dims) if cross is None else cross
    gl = spec.gap_labels
    # pair (p, i) carries gap E_i - E_p; pair (q, j) carries E_q - E_j
    total = _resonant_sum(c, gl.T, gl)
    return float(1.0 - total / dims.d**2)


def exact_time_average_bruteforce(spec: SpectralData, dims: BipartiteDims) -> float:
    """O(d^4) reference: explicit loop over every resonant quadruple."""
    _check_dims(spec, dims)
    c = cross_operators(spec.eigenvectors, dims)
    e = spec.eigenvalues
    tol = spec.tol_gap * spec.scale
    d = dims.d
    total = 0.0
    for p in range(d):
        for i in range(d):
            gap = e[i] - e[p]
            for q in range(d):
                for j in range(d):
                    if abs(gap - (e[q] - e[j])) <= tol:
                        total += abs(np.trace(c[p, i] @ c[q, j])) ** 2
    return float(1.0 - total / d**2)


def numerical_time_average(spec: SpectralData, dims: BipartiteDims, t_max: float, n_points: int) -> float:
    """Mean of G(t) on a uniform midpoint grid over [0, t_max]."""
    times = (np.arange(n_points) + 0.5) * (t_max / n_points)
    return float(np.mean([g_exact(evolution(spec, t), dims, check=False) for t in times]))


@dataclass(frozen=True)
class EstimateReport:
    haar: float
    nrc: float
    nrc_plus: float
    exact: float
    dims: BipartiteDims
    nrc_flags: NrcReport
    model_tag: str = ""
    slack: float = ORDER_SLACK

    @property
    def ordering(self) -> dict:
        return {
            "haar>=nrc": self.haar >= self.nrc - self.slack,
            "nrc>=nrc_plus": self.nrc >= self.nrc_plus - self.slack,
            "nrc_plus>=exact": self.nrc_plus >= self.exact - self.slack,
        }

    @property
    def ordered(self) -> bool:
        return all(self.ordering.values())

    def as_dict(self) -> dict:
        return {
            "model": self.model_tag,
            "d_a": self.dims.d_a,
            "d_b": self.dims.d_b,
            "haar": self.haar,
            "nrc": self.nrc,
            "nrc_plus": self.nrc_plus,
            "exact": self.exact,
            "ordering": self.ordering,
            "ordered": self.ordered,
            "flags": self.nrc_flags.as_dict(),
        }


def hierarchy_report(spec: SpectralData, dims: BipartiteDims, model_tag: str = "") -> EstimateReport:
    _check_dims(spec, dims)
    c = cross_operators(spec.eigenvectors, dims)
    return EstimateReport(
        haar=haar_estimate(dims),
        nrc=nrc_estimate(spec, dims),
        nrc_plus=nrc_plus_estimate(spec, dims, cross=c),
        exact=exact_time_average(spec, dims, cross=c),
        dims=dims,
        nrc_flags=nrc_report(spec),
        model_tag=model_tag,
    )


def eigenstate_entanglement_profile(spec: SpectralData, dims: BipartiteDims) -> np.ndarray:
    """Linear entanglement entropy of every eigenvector across the cut."""
    _check_dims(spec, dims)
    c = cross_operators(spec.eigenvectors, dims)
    idx = np.arange(dims.d)
    rho = c[idx, idx]
    purity = np.einsum("kab,kab->k", rho, rho.conj()).real
    return 1.0 - purity


@dataclass(frozen=True)
class Prop4Bound:
    epsilon: float
    alpha: float
    J: float
    K: float
    bound: float
    deviation: float | None = None

    @property
    def holds(self) -> bool | None:
        return None if self.deviation is None else self.deviation <= self.bound

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("epsilon", "alpha", "J", "K", "bound", "deviation")}
        out["holds"] = self.holds
        return out


def prop4_bound(profile, dims: BipartiteDims, epsilon: float, nrc_value: float | None = None) -> Prop4Bound:
    """Entanglement bound on |G_ME^NRC - G^NRC|.

    ``alpha`` is the fraction of eigenstates within ``epsilon`` of the
    maximal entanglement 1 - 1/d_max. When ``nrc_value`` is given the actual
    deviation from (1 - 1/d)^2 is reported alongside the bound.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    profile = np.asarray(profile, dtype=float)
    e_max = 1.0 - 1.0 / dims.d_max
    alpha = float(np.mean(e_max - profile <= epsilon)) if profile.size else 1.0
    d_min, d_max, lam = dims.d_min, dims.d_max, dims.ratio
    J = 6 * epsilon / d_min + 2.5 * epsilon**2 + 2 * (lam**2 - 1) / d_max**2
    K = (1 + 2 / d_min) * (1 - alpha) + 2 / dims.d + 4 * (epsilon + np.sqrt(epsilon))
    bound = alpha * J + (1 - alpha) * K
    deviation = None if nrc_value is None else abs(me_nrc_value(dims) - nrc_value)
    return Prop4Bound(float(epsilon), alpha, float(J), float(K), float(bound), deviation)
