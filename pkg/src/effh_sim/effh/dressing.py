"""Scalar dressing functions produced by the non-factorized polaron.

All functions take the ratios eps = lambda / Omega of the baths involved.
"""
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .quadrature import (
    DEFAULT_QUADRATURE,
    gauss_hermite,
    gauss_laguerre,
    hermite_order_for,
    midpoint_angles,
)
from .special import dawson, dawson_over_x

SQRT2 = math.sqrt(2.0)


def kappa_equal(epsilon):
    """Dressing of sigma^z and sigma^x when both baths share eps."""
    y = SQRT2 * np.asarray(epsilon, dtype=float)
    out = 1.0 - y * dawson(y)
    return float(out) if np.ndim(out) == 0 else out


def kappa_minimum(bracket=(0.2, 3.0)):
    """(minimum value, location) of kappa_equal on ``bracket``."""
    res = minimize_scalar(kappa_equal, bounds=bracket, method="bounded",
                          options={"xatol": 1e-10})
    return float(res.fun), float(res.x)


def _theta_integrals(eps_z, eps_x, n_theta):
    # the radial integral is done in closed form:
    # int_0^inf r e^{-r^2} (1 - cos(2 sqrt(2q) r)) dr / q = 2 F(y)/y, y = sqrt(2q)
    th = midpoint_angles(n_theta)
    c2 = np.cos(th) ** 2
    s2 = np.sin(th) ** 2
    y = np.sqrt(2.0 * (eps_z**2 * c2 + eps_x**2 * s2))
    g = dawson_over_x(y)
    kz = 1.0 - 4.0 * eps_x**2 * np.mean(s2 * g)
    kx = 1.0 - 4.0 * eps_z**2 * np.mean(c2 * g)
    return float(kz), float(kx)


def _polar_laguerre(eps_z, eps_x, n_theta, n_radial):
    # u = r^2 turns e^{-r^2} r dr into e^{-u} du / 2
    u, w = gauss_laguerre(n_radial)
    th = midpoint_angles(n_theta)
    c2 = np.cos(th)[None, :] ** 2
    s2 = np.sin(th)[None, :] ** 2
    q = eps_z**2 * c2 + eps_x**2 * s2
    r = np.sqrt(u)[:, None]
    # (1 - cos(2 sqrt(2) r sqrt(q))) / q = 4 r^2 sinc^2(sqrt(2) r sqrt(q))
    arg = SQRT2 * r * np.sqrt(q) / np.pi
    damp = 4.0 * r**2 * np.sinc(arg) ** 2
    fz = 1.0 - eps_x**2 * s2 * damp
    fx = 1.0 - eps_z**2 * c2 * damp
    kz = np.sum(w[:, None] * fz) / n_theta
    kx = np.sum(w[:, None] * fx) / n_theta
    return float(kz), float(kx)


def kappa_pair(eps_z, eps_x, quad=DEFAULT_QUADRATURE, method="dawson"):
    """Dressing factors (kappa_z, kappa_x) for sigma^z / sigma^x couplings.

    Each factor is integrated from its own integrand over the polar momentum
    plane. ``method="dawson"`` reduces the radial integral analytically and
    leaves a smooth periodic angle integral; ``method="laguerre"`` does the
    full 2-D quadrature with Gauss-Laguerre in r^2.
    """
    if eps_z < 0 or eps_x < 0:
        raise ValueError("coupling ratios must be nonnegative")
    if eps_z == 0 and eps_x == 0:
        return 1.0, 1.0
    if method == "dawson":
        return _theta_integrals(eps_z, eps_x, quad.theta_points)
    if method == "laguerre":
        return _polar_laguerre(eps_z, eps_x, quad.theta_points, quad.radial_order)
    raise ValueError(f"unknown method {method!r}")


def _xi_inner(p2, k, n):
    # h(p2) = int dp1 w(p1) [1 - p1^2 (1 - cos(k rho)) / rho^2], rho^2 = p1^2 + p2^2
    p1, w1 = gauss_hermite(n)
    rho = np.sqrt(p1[None, :] ** 2 + p2[:, None] ** 2)
    # (1 - cos(k rho)) / rho^2 = (k^2 / 2) sinc^2(k rho / 2)
    damp = 0.5 * k**2 * np.sinc(k * rho / (2 * np.pi)) ** 2
    return (1.0 - p1[None, :] ** 2 * damp) @ w1


def xi(epsilon, quad=DEFAULT_QUADRATURE):
    """Strength of the bath-generated bond interaction on the XY chain.

    The three-momentum Gaussian integrand factorizes into two identical
    one-dimensional integrals sharing the middle momentum, which are done
    by tensor Gauss-Hermite quadrature.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    k = 2 * SQRT2 * epsilon
    n = hermite_order_for(k, quad.gh_order)
    p2, w2 = gauss_hermite(n)
    h = _xi_inner(p2, k, n)
    return float(2.0 * np.sum(w2 * h * h))


def xi_bruteforce(epsilon, n):
    """Direct n^3 tensor quadrature of the xi integrand (slow, for checks)."""
    p, w = gauss_hermite(n)
    k = 2 * SQRT2 * epsilon
    p1, p2, p3 = np.meshgrid(p, p, p, indexing="ij")
    r12 = p1**2 + p2**2
    r23 = p2**2 + p3**2
    a = (p1**2 * np.cos(k * np.sqrt(r12)) + p2**2) / np.where(r12 == 0, 1, r12)
    b = (p3**2 * np.cos(k * np.sqrt(r23)) + p2**2) / np.where(r23 == 0, 1, r23)
    a = np.where(r12 == 0, 1.0, a)
    b = np.where(r23 == 0, 1.0, b)
    ww = w[:, None, None] * w[None, :, None] * w[None, None, :]
    return float(np.sum(ww * 2 * a * b))


def chain_dressing_n2(epsilon):
    """Closed-form (kappa1, kappa2, kappa3) for the two-spin ring."""
    e = float(epsilon)
    f1 = dawson(SQRT2 * e)
    f2 = dawson(2 * SQRT2 * e)
    k1 = 2.0 - (e / SQRT2) * (2 * f1 + 3 * f2)
    k2 = (e / SQRT2) * (2 * f1 - f2)
    k3 = 2 * SQRT2 * e * f2
    return k1, k2, k3
