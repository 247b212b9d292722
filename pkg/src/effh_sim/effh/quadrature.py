"""Quadrature rules over the Gaussian momentum measure."""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.special import roots_hermite, roots_laguerre


@dataclass(frozen=True)
class QuadratureConfig:
    """Node counts for the momentum integrals.

    ``gh_order`` is a floor: integrals whose integrand oscillates faster
    raise the per-axis Gauss-Hermite order automatically.
    """

    gh_order: int = 40
    theta_points: int = 256
    radial_order: int = 160

    def __post_init__(self):
        for name in ("gh_order", "theta_points", "radial_order"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be at least 2")

    def doubled(self):
        return QuadratureConfig(2 * self.gh_order, 2 * self.theta_points, 2 * self.radial_order)


DEFAULT_QUADRATURE = QuadratureConfig()


@lru_cache(maxsize=64)
def _hermite(n):
    x, w = roots_hermite(n)
    return x, w / math.sqrt(math.pi)


def gauss_hermite(n):
    """Nodes and weights for int f(p) exp(-p^2)/sqrt(pi) dp (weights sum to 1)."""
    x, w = _hermite(int(n))
    return x.copy(), w.copy()


@lru_cache(maxsize=16)
def _laguerre(n):
    return roots_laguerre(n)


def gauss_laguerre(n):
    """Nodes and weights for int_0^inf f(u) exp(-u) du."""
    x, w = _laguerre(int(n))
    return x.copy(), w.copy()


def midpoint_angles(n):
    """n equispaced angles offset by half a step; weights 2*pi/n each."""
    return (np.arange(n) + 0.5) * (2 * np.pi / n)


def hermite_order_for(frequency, floor):
    """Per-axis Gauss-Hermite order that resolves exp(i*frequency*p)."""
    return max(int(floor), int(math.ceil(0.7 * frequency**2)) + 30)
