"""Spectral densities, Bose-Einstein occupation and bath correlators.

Energies are measured in units of the bare spin splitting (Delta = 1).
"""
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np


class SpectralStage(Enum):
    ORIGINAL = "original"
    RC = "rc"
    EFFECTIVE = "effective"


@dataclass(frozen=True)
class BathSpec:
    """Parameters of one harmonic bath.

    ``lam`` and ``omega_rc`` are the reaction-coordinate coupling and
    frequency, ``gamma`` the dimensionless width, ``cutoff`` the ohmic
    high-frequency cutoff of the residual bath.
    """

    lam: float
    omega_rc: float
    gamma: float
    cutoff: float
    temperature: float
    coupling_label: str = ""

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        for name in ("omega_rc", "gamma", "cutoff", "temperature"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and positive, got {value}")

    @property
    def epsilon(self):
        return self.lam / self.omega_rc

    def with_lambda(self, lam):
        return replace(self, lam=lam)


def brownian_spectral(omega, spec):
    omega = np.asarray(omega, dtype=float)
    g, big_omega, lam = spec.gamma, spec.omega_rc, spec.lam
    num = 4 * g * big_omega**2 * lam**2 * omega
    den = (omega**2 - big_omega**2) ** 2 + (2 * np.pi * g * big_omega * omega) ** 2
    return num / den


def rc_spectral(omega, spec):
    omega = np.asarray(omega, dtype=float)
    return spec.gamma * omega * np.exp(-np.abs(omega) / spec.cutoff)


def eff_spectral(omega, spec):
    return 4 * spec.epsilon**2 * rc_spectral(omega, spec)


class SpectralDensity:
    """Callable J(omega) for one bath at one mapping stage.

    ``slope0`` is dJ/domega at zero frequency, used for the zero-frequency
    correlator limit.
    """

    _funcs = {
        SpectralStage.ORIGINAL: brownian_spectral,
        SpectralStage.RC: rc_spectral,
        SpectralStage.EFFECTIVE: eff_spectral,
    }

    def __init__(self, spec, stage):
        self.spec = spec
        self.stage = SpectralStage(stage)

    def __call__(self, omega):
        return self._funcs[self.stage](omega, self.spec)

    @property
    def slope0(self):
        s = self.spec
        if self.stage is SpectralStage.ORIGINAL:
            return 4 * s.gamma * s.lam**2 / s.omega_rc**2
        if self.stage is SpectralStage.RC:
            return s.gamma
        return 4 * s.epsilon**2 * s.gamma

    def __repr__(self):
        return f"SpectralDensity({self.spec!r}, {self.stage.value!r})"


def bose_einstein(omega, temperature):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("Bose-Einstein occupation needs omega > 0")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(omega / temperature)


def halffourier_real(spectral, omega, temperature, zero_tol=1e-12):
    """Real part of the half-sided Fourier transform of the bath correlator.

    pi J(w)(n(w)+1) for w > 0, pi J(|w|) n(|w|) for w < 0 and the analytic
    limit pi T J'(0) at w = 0. ``spectral`` must be odd in omega; when it
    carries a ``slope0`` attribute that value is used for the limit.
    """
    w = np.asarray(omega, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    out = np.zeros_like(w)
    pos = w > zero_tol
    neg = w < -zero_tol
    zero = ~(pos | neg)
    if temperature <= 0:
        out[pos] = np.pi * spectral(w[pos])
    else:
        if pos.any():
            out[pos] = np.pi * spectral(w[pos]) * (bose_einstein(w[pos], temperature) + 1)
        if neg.any():
            out[neg] = np.pi * spectral(-w[neg]) * bose_einstein(-w[neg], temperature)
        if zero.any():
            slope = getattr(spectral, "slope0", None)
            if slope is None:
                h = 1e-6
                slope = float((spectral(np.array([h])) - spectral(np.array([-h])))[0] / (2 * h))
            out[zero] = np.pi * temperature * slope
    return float(out[0]) if scalar else out
