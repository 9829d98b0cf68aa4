"""Reduced dynamics as quantum channels and channel-level distances."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .linalg import ATOL, BipartiteDims
from .otoc import _require_unitary, evolution, g_exact, reduced_action

__all__ = [
    "ChannelRep",
    "reduced_channel",
    "identity_channel",
    "depolarizing_channel",
    "unitary_channel",
    "apply_channel",
    "choi_state",
    "ChoiCheck",
    "choi_distance_check",
    "diamond_bounds",
    "choi_trace_witness",
    "markov_fraction_bound",
    "markov_kappa",
    "markov_time_fraction",
]


@dataclass(frozen=True, eq=False)
class ChannelRep:
    """A map on d x d matrices stored by its action on matrix units.

    ``action[i, j]`` is the image of |i><j|.
    """

    action: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.action)
        if a.ndim != 4 or len(set(a.shape)) != 1:
            raise ValueError(f"action must have shape (d, d, d, d), got {a.shape}")

    @property
    def dim(self) -> int:
        return self.action.shape[0]

    @cached_property
    def choi(self) -> np.ndarray:
        d = self.dim
        # (1/d) sum_ij L(|i><j|) (x) |i><j|, output factor first
        return self.action.transpose(2, 0, 3, 1).reshape(d * d, d * d) / d

    def is_trace_preserving(self, atol=ATOL) -> bool:
        tr = np.einsum("ijaa->ij", self.action)
        return bool(np.abs(tr - np.eye(self.dim)).max() < atol)

    def is_unital(self, atol=ATOL) -> bool:
        out = np.einsum("iiab->ab", self.action)
        return bool(np.abs(out - np.eye(self.dim)).max() < atol)

    def is_completely_positive(self, atol=ATOL) -> bool:
        c = self.choi
        if np.abs(c - c.conj().T).max() > atol:
            return False
        return bool(np.linalg.eigvalsh(c).min() >= -atol)

    def is_cptp(self, atol=ATOL) -> bool:
        return self.is_trace_preserving(atol) and self.is_completely_positive(atol)


def reduced_channel(u, dims: BipartiteDims, keep: str = "A", check: bool = True) -> ChannelRep:
    """rho -> Tr_env[U (rho (x) I/d_env) U^dag] on factor ``keep``."""
    if check:
        u = _require_unitary(u, dims)
    return ChannelRep(reduced_action(u, dims, keep))


def identity_channel(d: int) -> ChannelRep:
    e = np.eye(d)
    return ChannelRep(np.einsum("ia,jb->ijab", e, e).astype(complex))


def depolarizing_channel(d: int) -> ChannelRep:
    """T(rho) = Tr(rho) I/d."""
    e = np.eye(d)
    return ChannelRep(np.einsum("ij,ab->ijab", e, e / d).astype(complex))


def unitary_channel(v) -> ChannelRep:
    v = np.asarray(v)
    return ChannelRep(np.einsum("ai,bj->ijab", v, v.conj()))


def apply_channel(ch: ChannelRep, rho) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (ch.dim, ch.dim):
        raise ValueError(f"input must be {ch.dim} x {ch.dim}, got {rho.shape}")
    return np.einsum("ij,ijab->ab", rho, ch.action)


def choi_state(ch: ChannelRep) -> np.ndarray:
    return ch.choi


@dataclass(frozen=True)
class ChoiCheck:
    g: float
    g_max: float
    distance_sq: float

    @property
    def residual(self) -> float:
        """g_max - distance_sq - g; zero up to rounding."""
        return self.g_max - self.distance_sq - self.g


def choi_distance_check(u, dims: BipartiteDims, keep: str = "A") -> ChoiCheck:
    """OTOC versus squared 2-norm distance of the Choi state from (I/d)^(x)2."""
    ch = reduced_channel(u, dims, keep)
    dk = ch.dim
    diff = ch.choi - np.eye(dk * dk) / dk**2
    return ChoiCheck(
        g=g_exact(u, dims, check=False),
        g_max=1.0 - 1.0 / dk**2,
        distance_sq=float(np.vdot(diff, diff).real),
    )


def diamond_bounds(u, dims: BipartiteDims, keep: str = "A") -> tuple[float, float]:
    """Lower and upper bounds on ||L - T||_diamond from the OTOC."""
    u = _require_unitary(u, dims)
    dk = dims.factor(keep)
    gap = (1.0 - 1.0 / dk**2) - g_exact(u, dims, check=False)
    lower = float(np.sqrt(max(gap, 0.0)))
    return lower, float(dk**1.5 * lower)


def choi_trace_witness(ch: ChannelRep) -> float:
    """||(L - T) (x) I (|phi+><phi+|)||_1, a lower bound on the diamond distance."""
    dk = ch.dim
    diff = ch.choi - np.eye(dk * dk) / dk**2
    return float(np.abs(np.linalg.eigvalsh(diff)).sum())


def markov_kappa(report, keep: str = "A") -> float:
    """sqrt(1 + d_env^2/2 (G_haar - G_exact)); equals 1 when the two agree."""
    denv = report.dims.complement(keep)
    return float(np.sqrt(1.0 + denv**2 / 2.0 * (report.haar - report.exact)))


def markov_fraction_bound(report, epsilon: float, keep: str = "A") -> float:
    """Upper bound on the fraction of time with ||L_t - T||_diamond >= epsilon.

    Uses ``report.haar``, ``report.exact`` and ``report.dims`` of an
    :class:`~bipotoc.estimates.EstimateReport`. Values above 1 are vacuous
    and returned unclamped.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    dims = report.dims
    dk, denv = dims.factor(keep), dims.complement(keep)
    return float(2.0 * dk**1.5 * markov_kappa(report, keep) / (epsilon * denv))


def markov_time_fraction(spec, dims: BipartiteDims, epsilon, t_max: float, n_points: int,
                         keep: str = "A") -> np.ndarray:
    """Fraction of a uniform grid on [0, t_max] where the Choi trace witness
    of L_t - T reaches each ``epsilon``.

    The witness never exceeds the diamond distance, so this is a lower
    estimate of the time fraction that the Markov bound controls.
    """
    eps = np.atleast_1d(np.asarray(epsilon, dtype=float))
    if np.any(eps <= 0):
        raise ValueError("epsilon must be positive")
    if n_points < 1 or t_max <= 0:
        raise ValueError("need n_points >= 1 and t_max > 0")
    times = (np.arange(n_points) + 0.5) * (t_max / n_points)
    w = np.array([choi_trace_witness(reduced_channel(evolution(spec, t), dims, keep, check=False)) for t in times])
    return (w[:, None] >= eps[None, :]).mean(axis=0)
