"""Markov chain model of the buffering/dropping scheduler.

States are the composite p = d + b (successive drops plus buffered
packets) for a single user; p = M = B + N is the termination state where
transmission is forced. Transition matrices carry a structural mask of
allowed transitions per scheme plus a per-entry kind tag. This module
also provides the bijection between scheduling-transition probabilities
and fading thresholds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import FadingModel
from .schemes import SchemeSpec, allowed_targets


class TransitionKind(enum.IntEnum):
    FORBIDDEN = 0
    SCHEDULE = 1
    BUFFER = 2
    DROP = 3


class InvalidMatrixError(ValueError):
    """Raised when a transition matrix violates its structural constraints."""


ROW_SUM_TOL = 1e-9


def build_mask(spec: SchemeSpec) -> tuple[np.ndarray, np.ndarray]:
    """Structural mask and kind tags for the given scheme shape.

    Returns (mask, kinds), both (M+1, M+1). Scheduling transitions go to
    the scheme's allowed targets; the forward transition p -> p+1 is a
    buffering move below state B and a drop from B onwards; the last row
    has no forward entry (forced transmission).
    """
    n = spec.n_states
    mask = np.zeros((n, n), dtype=bool)
    kinds = np.zeros((n, n), dtype=np.int8)
    for p in range(n):
        for q in allowed_targets(spec.scheme, p, spec.B):
            mask[p, q] = True
            kinds[p, q] = TransitionKind.SCHEDULE
        if p < spec.M:
            mask[p, p + 1] = True
            kinds[p, p + 1] = TransitionKind.BUFFER if p < spec.B else TransitionKind.DROP
    return mask, kinds


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic transition matrix with its structural mask."""

    spec: SchemeSpec
    entries: np.ndarray
    mask: np.ndarray
    kinds: np.ndarray

    @classmethod
    def from_entries(cls, spec: SchemeSpec, entries) -> "TransitionMatrix":
        mask, kinds = build_mask(spec)
        q = cls(spec=spec, entries=np.asarray(entries, dtype=float),
                mask=mask, kinds=kinds)
        validate_matrix(q.entries, mask)
        return q

    def __eq__(self, other):
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.entries, other.entries)


def validate_matrix(entries: np.ndarray, mask: np.ndarray) -> None:
    """Check entry bounds, row sums and structural zeros; raise on violation."""
    entries = np.asarray(entries)
    if entries.shape != mask.shape:
        raise InvalidMatrixError(f"shape {entries.shape} does not match mask {mask.shape}")
    if np.any(entries < 0) or np.any(entries > 1):
        raise InvalidMatrixError("entries must lie in [0, 1]")
    row_sums = entries.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOL):
        raise InvalidMatrixError(f"row sums deviate from 1: {row_sums}")
    if np.any(entries[~mask] != 0.0):
        raise InvalidMatrixError("positive mass on a structurally forbidden transition")


def packets_scheduled(p: int, q: int, B: int) -> int:
    """Number of packets sent on the scheduling transition p -> q."""
    mu = min(p, B)
    if q > mu:
        raise ValueError(f"q={q} exceeds min(p, B)={mu}; not a scheduling transition")
    return mu - q + 1


def reachable_states(entries: np.ndarray, start: int = 0) -> np.ndarray:
    """Boolean mask of states reachable from `start` along positive entries."""
    n = entries.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [start]
    seen[start] = True
    while stack:
        p = stack.pop()
        for q in np.nonzero(entries[p] > 0)[0]:
            if not seen[q]:
                seen[q] = True
                stack.append(int(q))
    return seen


def _solve_pi(matrix: np.ndarray) -> np.ndarray | None:
    """Solve pi Q = pi, sum(pi) = 1; None if singular or not stationary."""
    m = matrix.shape[0]
    a = matrix.T - np.eye(m)
    a[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return None
    if np.any(pi < -1e-9) or np.max(np.abs(pi @ matrix - pi)) > 1e-10:
        return None
    return pi


def stationary(entries: np.ndarray) -> np.ndarray:
    """Stationary distribution of the chain started in state 0.

    Solves pi Q = pi with the normalization sum(pi) = 1. An irreducible (or
    single-recurrent-class) chain solves directly; otherwise the system is
    restricted to the states reachable from 0, whose recurrent class is the
    one the process started in state 0 actually occupies. A Cesaro average
    of the lazy chain covers the remaining degenerate cases.
    """
    entries = np.asarray(entries, dtype=float)
    n = entries.shape[0]
    pi = _solve_pi(entries)
    if pi is not None:
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum()

    seen = reachable_states(entries)
    sub = entries[np.ix_(seen, seen)]
    pi_sub = _solve_pi(sub)
    if pi_sub is None:
        # Lazy chain shares the stationary distribution and is aperiodic;
        # repeated squaring gives the limit from state 0.
        power = 0.5 * (sub + np.eye(sub.shape[0]))
        for _ in range(60):
            power = power @ power
        pi_sub = power[0]
        if np.max(np.abs(pi_sub @ sub - pi_sub)) > 1e-8:
            raise InvalidMatrixError("no stationary distribution found within tolerance")
    pi_sub = np.clip(pi_sub, 0.0, None)
    pi_sub /= pi_sub.sum()
    pi = np.zeros(n)
    pi[seen] = pi_sub
    return pi


def drop_rate(entries: np.ndarray, pi: np.ndarray, B: int) -> float:
    """Long-run average packet-drop probability.

    Sums the forward-transition flow out of the dropping states B..M-1;
    with B = 0 every forward transition is a drop.
    """
    entries = np.asarray(entries)
    M = entries.shape[0] - 1
    total = 0.0
    for p in range(B, M):
        total += entries[p, p + 1] * pi[p]
    return float(total)


def buffer_feed_rate(entries: np.ndarray, pi: np.ndarray, B: int) -> float:
    """Stationary rate of unscheduled packets entering the first drop state."""
    if B < 1:
        raise ValueError("buffer feed rate requires B >= 1")
    return float(entries[B - 1, B] * pi[B - 1])


def buffer_feed_rate_mass_balance(entries: np.ndarray, pi: np.ndarray, B: int) -> float:
    """Alternative feed-rate expression, exposed as a diagnostic only.

    1 - sum_{p<B} sum_{q<=p} alpha_pq pi_p counts the probability of not
    scheduling from a pre-buffer state; it does not agree with the
    entering-flow definition in general, so callers should prefer
    buffer_feed_rate.
    """
    if B < 1:
        raise ValueError("buffer feed rate requires B >= 1")
    entries = np.asarray(entries)
    scheduled = sum(entries[p, q] * pi[p] for p in range(B) for q in range(p + 1))
    return float(1.0 - scheduled)


@dataclass(frozen=True)
class ThresholdSet:
    """Per-state fading thresholds recovered from a transition matrix.

    kappa has shape (M+1, B+1). Row p holds kappa_{p,0} >= ... >=
    kappa_{p,mu}; slots past mu(p) duplicate the lowest threshold so that
    interval lookup is uniform across states and schemes. A zero-mass
    scheduling transition shows up as a duplicated boundary (empty band).
    """

    spec: SchemeSpec
    kappa: np.ndarray

    def mu(self, p: int) -> int:
        return self.spec.mu(p)

    def state_thresholds(self, p: int) -> np.ndarray:
        """Thresholds kappa_{p,0..mu} actually defined for state p."""
        return self.kappa[p, : self.mu(p) + 1]


def thresholds_from_probs(entries: np.ndarray, spec: SchemeSpec,
                          fading: FadingModel) -> ThresholdSet:
    """Invert scheduling probabilities into fading thresholds.

    kappa_{p,q} = InvCdf(1 - sum_{m<=q} alpha_pm); forbidden targets have
    zero mass and therefore inherit the next-lower threshold. The
    termination row must place its whole mass on scheduling transitions,
    which pins kappa_{M,B} to zero.
    """
    entries = np.asarray(entries, dtype=float)
    M, B = spec.M, spec.B
    kappa = np.empty((M + 1, B + 1))
    for p in range(M + 1):
        mu = spec.mu(p)
        cum = np.cumsum(entries[p, : mu + 1])
        if cum[-1] > 1.0 + ROW_SUM_TOL:
            raise InvalidMatrixError(
                f"scheduling mass {cum[-1]} in state {p} exceeds 1")
        kappa[p, : mu + 1] = fading.inv_cdf(1.0 - np.minimum(cum, 1.0))
        kappa[p, mu + 1:] = kappa[p, mu]
    if abs(np.sum(entries[M, : B + 1]) - 1.0) > ROW_SUM_TOL:
        raise InvalidMatrixError("termination row must be all scheduling mass")
    kappa[M, spec.mu(M):] = 0.0
    return ThresholdSet(spec=spec, kappa=kappa)


def probs_from_thresholds(thresholds: ThresholdSet,
                          fading: FadingModel) -> np.ndarray:
    """Rebuild the transition matrix from thresholds (inverse mapping)."""
    spec = thresholds.spec
    n = spec.n_states
    entries = np.zeros((n, n))
    for p in range(n):
        mu = spec.mu(p)
        upper = np.concatenate(([np.inf], thresholds.kappa[p, :mu]))
        probs = fading.cdf(upper) - fading.cdf(thresholds.kappa[p, : mu + 1])
        entries[p, : mu + 1] = np.clip(probs, 0.0, 1.0)
        if p < spec.M:
            entries[p, p + 1] = max(0.0, 1.0 - entries[p, : mu + 1].sum())
    return entries


def simulate_chain(entries: np.ndarray, steps: int, rng: np.random.Generator,
                   n_chains: int = 1, start: int = 0) -> np.ndarray:
    """Sample state trajectories; returns an (n_chains, steps) int array."""
    entries = np.asarray(entries, dtype=float)
    n = entries.shape[0]
    cum = np.cumsum(entries, axis=1)
    states = np.full(n_chains, start, dtype=np.int64)
    out = np.empty((n_chains, steps), dtype=np.int64)
    for t in range(steps):
        out[:, t] = states
        u = rng.random(n_chains)
        states = (u[:, None] >= cum[states]).sum(axis=1)
        np.clip(states, 0, n - 1, out=states)
    return out
