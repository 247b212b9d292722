"""Redfield master equation: generator, propagation, steady state and rates.

Density matrices are vectorized row-major, so vec(A rho B) = kron(A, B.T) vec(rho).
The generator is the full non-secular Redfield tensor built in the
eigenbasis of the Hamiltonian; the Lamb shift is neglected.
"""
from dataclasses import dataclass, field
from enum import Enum
import logging
import math
import warnings

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from .baths import SpectralDensity, SpectralStage, bose_einstein, halffourier_real
from .effh.effective import build_impurity_effective
from .effh.quadrature import DEFAULT_QUADRATURE
from .exceptions import ConvergenceError, DimensionError, NumericError
from .operators import (
    as_operator,
    check_hermitian,
    expect,
    gibbs_state,
    hermitian_eig,
    partial_trace,
    pauli,
)
from .rc import build_rc_system, impurity_model, rc_equilibrium

log = logging.getLogger(__name__)

POSITIVITY_WARN = -1e-8
POSITIVITY_FAIL = -1e-6


class PositivityWarning(UserWarning):
    """A propagated Redfield state has a small negative eigenvalue."""


@dataclass(frozen=True)
class RedfieldGenerator:
    eigvals: np.ndarray
    eigvecs: np.ndarray
    superoperator: np.ndarray = field(repr=False)
    hamiltonian_part: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.eigvals.shape[0]

    @property
    def dissipator(self):
        return self.superoperator - self.hamiltonian_part

    def apply(self, rho):
        d = self.dim
        return (self.superoperator @ np.asarray(rho, dtype=complex).ravel()).reshape(d, d)


def _coherent_part(h):
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def build_redfield(h, couplings):
    """Redfield generator for ``h`` and baths given as (operator, J, T) triples.

    Each bath contributes -[S, X rho] + [S, rho X^dagger] with
    X_cd = S_cd Re C(E_d - E_c) in the eigenbasis of ``h``.
    """
    h = as_operator(h)
    check_hermitian(h, "Hamiltonian")
    h = 0.5 * (h + h.conj().T)
    e, v = hermitian_eig(h)
    d = h.shape[0]
    eye = np.eye(d)
    bohr = e[None, :] - e[:, None]
    coherent = _coherent_part(h)
    total = coherent.copy()
    for s, spectral, temperature in couplings:
        s = as_operator(s)
        if s.shape != h.shape:
            raise DimensionError(f"coupling shape {s.shape} != Hamiltonian shape {h.shape}")
        check_hermitian(s, "coupling operator")
        rate = halffourier_real(spectral, bohr.ravel(), temperature).reshape(d, d)
        x = v @ ((v.conj().T @ s @ v) * rate) @ v.conj().T
        xd = x.conj().T
        total -= (np.kron(s @ x, eye) - np.kron(x, s.T)
                  - np.kron(s, xd.T) + np.kron(eye, (xd @ s).T))
    return RedfieldGenerator(e, v, total, coherent)


@dataclass
class Trajectory:
    """Propagated states on a time grid, plus named system observables."""

    times: np.ndarray
    states: np.ndarray = field(repr=False)
    observables: dict = field(default_factory=dict, repr=False)
    min_eigenvalue: float = 0.0
    positivity_flag: bool = False

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def _propagate_expm(l, v0, times):
    out = np.empty((len(times), v0.size), dtype=complex)
    out[0] = v0
    cache = {}
    vec = v0
    for i in range(1, len(times)):
        dt = times[i] - times[i - 1]
        key = round(dt, 12)
        prop = cache.get(key)
        if prop is None:
            prop = sla.expm(l * dt)
            cache[key] = prop
        vec = prop @ vec
        out[i] = vec
    return out


def _propagate_rk45(l, v0, times, rtol):
    def rhs(_t, y):
        return l @ y

    sol = solve_ivp(rhs, (times[0], times[-1]), v0.astype(complex), method="RK45",
                    t_eval=times, rtol=rtol, atol=rtol * 1e-3)
    if not sol.success:
        raise NumericError(f"integration failed near t={sol.t[-1]:.6g}: {sol.message}")
    return sol.y.T


def propagate(gen, rho0, times, observables=None, factor_dims=None, method="expm",
              rtol=1e-9, strict_positivity=False):
    """Integrate d rho/dt = L rho on ``times``.

    ``method="expm"`` steps with the exact propagator exp(L dt) (cached per
    distinct step); ``method="rk45"`` uses adaptive Runge-Kutta 4(5).
    When ``factor_dims`` is given, stored states are reduced to the first
    tensor factor, and ``observables`` (name -> operator) act on that factor.
    Redfield dynamics is not guaranteed to be completely positive: a
    negative eigenvalue below -1e-8 warns and sets ``positivity_flag``;
    with ``strict_positivity`` one below -1e-6 raises instead.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a strictly increasing grid of at least two points")
    rho0 = as_operator(rho0)
    d = gen.dim
    if rho0.shape != (d, d):
        raise DimensionError(f"initial state shape {rho0.shape} != generator dim {d}")
    if method == "expm":
        vecs = _propagate_expm(gen.superoperator, rho0.ravel(), times)
    elif method == "rk45":
        vecs = _propagate_rk45(gen.superoperator, rho0.ravel(), times, rtol)
    else:
        raise ValueError(f"unknown propagation method {method!r}")
    states = vecs.reshape(len(times), d, d)
    drift = np.max(np.abs(np.trace(states, axis1=1, axis2=2) - np.trace(rho0)))
    if drift > 1e-8:
        raise NumericError(f"trace drifted by {drift:.3e} during propagation")
    if factor_dims is not None:
        states = np.array([partial_trace(s, factor_dims, [0]) for s in states])
    states = 0.5 * (states + np.swapaxes(states, 1, 2).conj())
    lowest = np.linalg.eigvalsh(states)[:, 0]
    worst = int(np.argmin(lowest))
    min_eig = float(lowest[worst])
    flag = False
    if min_eig < POSITIVITY_FAIL and strict_positivity:
        raise NumericError(
            f"state lost positivity at t={times[worst]:.6g} (eigenvalue {min_eig:.3e})"
        )
    if min_eig < POSITIVITY_WARN:
        flag = True
        warnings.warn(f"negative eigenvalue {min_eig:.3e} at t={times[worst]:.6g}",
                      PositivityWarning, stacklevel=2)
    obs = {}
    for name, op in (observables or {}).items():
        op = as_operator(op)
        obs[name] = np.real(np.einsum("tij,ji->t", states, op))
    return Trajectory(times, states, obs, min_eig, flag)


def steady_state(gen, zero_tol=1e-8):
    """Trace-one null vector of the generator; the zero mode must be unique."""
    l = gen.superoperator
    w = np.linalg.eigvals(l)
    order = np.argsort(np.abs(w))
    scale = max(1.0, float(np.max(np.abs(gen.dissipator))))
    if abs(w[order[0]]) > zero_tol * scale:
        raise ConvergenceError(f"generator has no zero mode (smallest |eigenvalue| {abs(w[order[0]]):.3e})")
    if len(w) > 1 and abs(w[order[1]]) <= zero_tol * scale:
        raise ConvergenceError("generator has a degenerate zero mode")
    d = gen.dim
    # replace the (redundant) trace-preservation row structure with tr(rho) = 1
    a = np.vstack([l, np.eye(d).ravel()[None, :]])
    b = np.zeros(d * d + 1, dtype=complex)
    b[-1] = 1.0
    vec, *_ = np.linalg.lstsq(a, b, rcond=None)
    rho = vec.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def slowest_rate(gen, exclude_tol=1e-10):
    """Smallest nonzero decay rate -Re(lambda) among purely relaxing modes."""
    w = np.linalg.eigvals(gen.superoperator)
    w = w[np.abs(w) > exclude_tol]
    real_modes = w[np.abs(w.imag) < 1e-9]
    pool = real_modes if real_modes.size else w
    return float(np.min(-pool.real))


def analytic_rates(kappa_z, kappa_x, delta, bath_x):
    """Relaxation rates (gamma_eff, gamma_uw) of the impurity model.

    Both use the actual level gap of the Hamiltonian: 2 kappa_z Delta for
    the effective model, 2 Delta for the ultraweak one.
    """
    temperature = bath_x.temperature
    w_eff = 2 * kappa_z * delta
    w_uw = 2 * delta
    j_eff = SpectralDensity(bath_x, SpectralStage.EFFECTIVE)(w_eff)
    j_uw = SpectralDensity(bath_x, SpectralStage.ORIGINAL)(w_uw)
    g_eff = 2 * math.pi * kappa_x**2 * j_eff * (2 * bose_einstein(w_eff, temperature) + 1)
    g_uw = 2 * math.pi * j_uw * (2 * bose_einstein(w_uw, temperature) + 1)
    return float(g_eff), float(g_uw)


def fit_decay_rate(traj, eq_value, observable="sz", window=(1e-3, 0.5), min_decay=0.05):
    """Exponential rate of |<O>(t) - eq| from a log-linear least-squares fit.

    The fit covers the stretch from the first time the shifted amplitude
    falls to ``window[1]`` of its initial value until it first drops below
    ``window[0]`` of it. Returns (rate, R^2).
    """
    y = np.abs(np.asarray(traj.observables[observable]) - eq_value)
    t = np.asarray(traj.times)
    a0 = y[0]
    if a0 == 0:
        raise ConvergenceError("trajectory starts at equilibrium; nothing to fit")
    if y[-1] >= min_decay * a0:
        raise ConvergenceError(
            f"trajectory has not decayed enough (final/initial amplitude {y[-1] / a0:.3g})"
        )
    lo, hi = window[0] * a0, window[1] * a0
    start = int(np.argmax(y <= hi))
    below = np.nonzero(y[start:] < lo)[0]
    stop = start + (int(below[0]) if below.size else len(y) - start)
    sel = slice(start, stop)
    tt, yy = t[sel], y[sel]
    keep = yy > 0
    tt, yy = tt[keep], np.log(yy[keep])
    if tt.size < 3:
        raise ConvergenceError("fit window holds fewer than three points")
    slope, intercept = np.polyfit(tt, yy, 1)
    resid = yy - (slope * tt + intercept)
    ss_tot = np.sum((yy - yy.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), float(r2)


class Method(Enum):
    UW = "uw"
    RC = "rc"
    EFFH = "effh"


@dataclass
class ImpuritySetup:
    """Everything needed to run one engine on the impurity model."""

    method: Method
    generator: RedfieldGenerator
    factor_dims: tuple
    initial_env: np.ndarray = field(repr=False)  # environment factor of rho(0)
    equilibrium: np.ndarray = field(repr=False)  # engine's reduced equilibrium state
    info: dict = field(default_factory=dict)

    def initial_state(self, rho_s):
        return np.kron(as_operator(rho_s), self.initial_env)

    def run(self, rho_s, times, method="expm", **kwargs):
        obs = {"sz": pauli("z"), "sx": pauli("x")}
        dims = self.factor_dims if len(self.factor_dims) > 1 else None
        return propagate(self.generator, self.initial_state(rho_s), times, obs, dims,
                         method=method, **kwargs)


def plus_state():
    psi = np.array([1.0, 1.0]) / math.sqrt(2.0)
    return np.outer(psi, psi).astype(complex)


def impurity_setup(method, delta, bath_z, bath_x, m_levels=4, quad=DEFAULT_QUADRATURE):
    """Build the Redfield engine of one method for the two-bath impurity."""
    method = Method(method)
    temperature = bath_x.temperature
    if bath_z.temperature != temperature:
        raise ValueError("both baths must share one temperature")
    beta = 1.0 / temperature
    if method is Method.UW:
        h = delta * pauli("z")
        cpl = [(pauli("z"), SpectralDensity(bath_z, SpectralStage.ORIGINAL), temperature),
               (pauli("x"), SpectralDensity(bath_x, SpectralStage.ORIGINAL), temperature)]
        gen = build_redfield(h, cpl)
        return ImpuritySetup(method, gen, (2,), np.ones((1, 1)), gibbs_state(h, beta))
    if method is Method.EFFH:
        model = build_impurity_effective(delta, bath_z, bath_x, quad)
        cpl = [(op, SpectralDensity(b, SpectralStage.EFFECTIVE), temperature)
               for op, b in model.couplings_eff]
        gen = build_redfield(model.h_s_eff, cpl)
        return ImpuritySetup(method, gen, (2,), np.ones((1, 1)),
                             gibbs_state(model.h_s_eff, beta), dict(model.info))
    rc_sys = build_rc_system(impurity_model(delta, bath_z, bath_x), m_levels)
    cpl = [(op, SpectralDensity(b, SpectralStage.RC), temperature)
           for op, b in rc_sys.dense_couplings()]
    gen = build_redfield(rc_sys.dense(), cpl)
    # each reaction coordinate starts in its own thermal state
    env = np.ones((1, 1))
    for b in (bath_z, bath_x):
        env = np.kron(env, gibbs_state(np.diag(b.omega_rc * np.arange(m_levels)), beta))
    return ImpuritySetup(method, gen, rc_sys.factor_dims, env, rc_equilibrium(rc_sys, beta),
                         {"truncation_m": m_levels})
