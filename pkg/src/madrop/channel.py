"""Primitive channel probability models.

The per-slot channel gain of a user is the product of a static path-loss
factor and unit-mean Rayleigh small-scale fading (block fading, i.i.d.
across users and slots). Path loss is normalized to one at the cell
border; users are placed uniformly outside a forbidden disc of radius
delta around the receiver, which bounds the gain by delta^-alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FadingModel:
    """Unit-mean Rayleigh block fading: P(f <= y) = 1 - exp(-y)."""

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y > 0, -np.expm1(-np.maximum(y, 0.0)), 0.0)

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y >= 0, np.exp(-np.maximum(y, 0.0)), 0.0)

    def inv_cdf(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0) or np.any(u > 1):
            raise ValueError("u must lie in [0, 1]")
        with np.errstate(divide="ignore"):
            return -np.log1p(-u)

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-transform sampling from the fading cdf."""
        return self.inv_cdf(rng.random(size))


@dataclass(frozen=True)
class PathLossModel:
    """Distance-driven path loss for uniform placement with a forbidden disc.

    delta is the forbidden-region radius (cell border normalized to 1) and
    alpha the path-loss exponent; the loss factor s then has support
    [1, delta^-alpha] with cdf 1 - (x^(-2/alpha) - delta^2) / (1 - delta^2).
    """

    delta: float = 0.01
    alpha: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def s_max(self) -> float:
        return self.delta ** -self.alpha

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.delta == 1.0:
            return np.where(x >= 1.0, 1.0, 0.0)
        d2 = self.delta ** 2
        body = 1.0 - (x ** (-2.0 / self.alpha) - d2) / (1.0 - d2)
        return np.select([x < 1.0, x >= self.s_max], [0.0, 1.0], default=body)

    def inv_cdf(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0) or np.any(u > 1):
            raise ValueError("u must lie in [0, 1]")
        if self.delta == 1.0:
            return np.ones_like(u)
        d2 = self.delta ** 2
        return ((1.0 - u) * (1.0 - d2) + d2) ** (-self.alpha / 2.0)

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-transform sampling of the path-loss factor."""
        return self.inv_cdf(rng.random(size))


def sample_user_gain(rng: np.random.Generator, fading: FadingModel,
                     pathloss: PathLossModel, size=None):
    """Draw independent (s, f) and return (s, f, h = s * f)."""
    s = pathloss.sample(rng, size)
    f = fading.sample(rng, size)
    return s, f, s * f
