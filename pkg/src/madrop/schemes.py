"""Scheduling scheme definitions and the scheme registry.

A scheme fixes, for every chain state, which scheduling targets (next
states) are reachable in a single slot. The full scheduler allows every
target up to the per-state packet budget; the two reduced-complexity
variants restrict the target set to cut the number of thresholds that
have to be optimized.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable


class SchemeKind(enum.Enum):
    BEST = "best"
    OOA = "ooa"
    SSE = "sse"


def parse_scheme(name: str | SchemeKind) -> SchemeKind:
    """Parse a scheme name (case-insensitive) into a SchemeKind."""
    if isinstance(name, SchemeKind):
        return name
    try:
        return SchemeKind(name.strip().lower())
    except ValueError:
        raise ValueError(f"unknown scheme {name!r}; expected one of "
                         f"{[k.value for k in SchemeKind]}") from None


@dataclass(frozen=True)
class SchemeSpec:
    """Shape of the scheduling MDP.

    B is the buffer size in slots, N the maximum number of packets that
    may be dropped back to back, theta_tar the target long-run average
    drop probability and C the system spectral efficiency in bits/s/Hz.
    States run 0..M with M = B + N; in state M transmission is forced.
    """

    scheme: SchemeKind
    B: int
    N: int
    theta_tar: float
    C: float = 0.5

    def __post_init__(self):
        if self.B < 0 or self.N < 0:
            raise ValueError("B and N must be nonnegative")
        if self.B + self.N < 1:
            raise ValueError("need B + N >= 1 so the chain has a forward transition")
        if not 0.0 <= self.theta_tar <= 1.0:
            raise ValueError("theta_tar must lie in [0, 1]")
        if self.C <= 0:
            raise ValueError("C must be positive")

    @property
    def M(self) -> int:
        """Index of the termination (forced-transmission) state."""
        return self.B + self.N

    @property
    def n_states(self) -> int:
        return self.M + 1

    def mu(self, p: int) -> int:
        """Largest scheduling target reachable from state p."""
        return min(p, self.B)


def sse_target_states(mu: int) -> list[int]:
    """Exponentially spaced target states 2^k - 1, with mu appended.

    The single-packet transition (target mu) is always kept so the chain
    can avoid the forced transmission in the termination state.
    """
    if mu == 0:
        return [0]
    targets = [2 ** k - 1 for k in range(int(math.log2(mu + 1)) + 1)]
    if targets[-1] != mu:
        targets.append(mu)
    return targets


def allowed_targets(kind: SchemeKind, p: int, B: int) -> list[int]:
    """Scheduling targets reachable from state p, ascending."""
    mu = min(p, B)
    if kind is SchemeKind.BEST:
        return list(range(mu + 1))
    if kind is SchemeKind.OOA:
        return [0] if mu == 0 else [0, mu]
    return sse_target_states(mu)


@dataclass(frozen=True)
class SchemeDescriptor:
    """Registry entry binding a scheme to its structural helpers."""

    kind: SchemeKind
    target_states: Callable[[int, int], list[int]]  # (p, B) -> targets
    threshold_count: Callable[[int, int], int]      # (p, B) -> count
    complexity_class: str


def _make_descriptor(kind: SchemeKind, complexity: str) -> SchemeDescriptor:
    return SchemeDescriptor(
        kind=kind,
        target_states=lambda p, B, _k=kind: allowed_targets(_k, p, B),
        threshold_count=lambda p, B, _k=kind: len(allowed_targets(_k, p, B)),
        complexity_class=complexity,
    )


_REGISTRY: dict[SchemeKind, SchemeDescriptor] = {
    SchemeKind.BEST: _make_descriptor(SchemeKind.BEST, "O(B^2)"),
    SchemeKind.OOA: _make_descriptor(SchemeKind.OOA, "O(B)"),
    SchemeKind.SSE: _make_descriptor(SchemeKind.SSE, "O(B log B)"),
}


def describe(kind: str | SchemeKind) -> SchemeDescriptor:
    """Look up the descriptor for a scheme kind."""
    return _REGISTRY[parse_scheme(kind)]
