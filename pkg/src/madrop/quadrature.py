"""Vectorized adaptive Gauss-Kronrod quadrature.

The integrand must accept numpy arrays; every refinement round evaluates
all pending panels in a single call, which keeps the Python overhead per
integral small even at tight tolerances.
"""

from __future__ import annotations

import numpy as np

__all__ = ["QuadratureError", "adaptive_quad", "gauss_legendre_panels"]


class QuadratureError(RuntimeError):
    """Raised when adaptive refinement fails to reach the tolerance."""


# 15-point Kronrod nodes with the paired 7-point Gauss weights (zeros for
# Kronrod-only nodes).
_GK_NODES = np.array([
    -0.9914553711208126, -0.9491079123427585, -0.8648644233597691,
    -0.7415311855993945, -0.5860872354676911, -0.4058451513773972,
    -0.2077849550078985, 0.0, 0.2077849550078985, 0.4058451513773972,
    0.5860872354676911, 0.7415311855993945, 0.8648644233597691,
    0.9491079123427585, 0.9914553711208126,
])
_GK_WK = np.array([
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278, 0.2044329400752989,
    0.1903505780647854, 0.1690047266392679, 0.1406532597155259,
    0.1047900103222502, 0.0630920926299786, 0.0229353220105292,
])
_GK_WG = np.array([
    0.0, 0.1294849661688697, 0.0, 0.2797053914892767, 0.0,
    0.3818300505051189, 0.0, 0.4179591836734694, 0.0, 0.3818300505051189,
    0.0, 0.2797053914892767, 0.0, 0.1294849661688697, 0.0,
])


def _gk_panels(f, lo: np.ndarray, hi: np.ndarray):
    """G7/K15 estimates for a batch of panels; returns (k15, |k15-g7|)."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _GK_NODES[None, :]
    fx = f(x.ravel()).reshape(x.shape)
    k15 = (fx * _GK_WK).sum(axis=1) * half
    g7 = (fx * _GK_WG).sum(axis=1) * half
    return k15, np.abs(k15 - g7)


def adaptive_quad(f, edges, rel_tol: float = 1e-8, abs_tol: float = 0.0,
                  max_panels: int = 8192, max_rounds: int = 48) -> tuple[float, float]:
    """Integrate a vectorized integrand over [edges[0], edges[-1]].

    Interior edges seed the initial panels (pass known kinks here).
    Returns (value, error_estimate); raises QuadratureError if the target
    tolerance is unreachable within the panel budget.
    """
    edges = np.unique(np.asarray(edges, dtype=float))
    if edges.size < 2:
        return 0.0, 0.0
    lo, hi = edges[:-1], edges[1:]
    vals, errs = _gk_panels(f, lo, hi)
    for _ in range(max_rounds):
        total = vals.sum()
        err = errs.sum()
        if err <= max(rel_tol * abs(total), abs_tol):
            return float(total), float(err)
        if lo.size >= max_panels:
            break
        # Split every panel responsible for more than its share of the
        # budget; keeps the number of refinement rounds low.
        threshold = max(rel_tol * abs(total), abs_tol) / max(lo.size, 1)
        split = errs > threshold
        if not split.any():
            split = errs == errs.max()
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_vals, new_errs = _gk_panels(f, new_lo, new_hi)
        lo = np.concatenate([lo[~split], new_lo])
        hi = np.concatenate([hi[~split], new_hi])
        vals = np.concatenate([vals[~split], new_vals])
        errs = np.concatenate([errs[~split], new_errs])
    raise QuadratureError(
        f"quadrature did not converge: error {errs.sum():.3e} on {lo.size} panels")


def gauss_legendre_panels(order: int = 16):
    """Cached Gauss-Legendre nodes/weights on [-1, 1]."""
    key = int(order)
    if key not in _GL_CACHE:
        _GL_CACHE[key] = np.polynomial.legendre.leggauss(key)
    return _GL_CACHE[key]


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}
