"""Reaction-coordinate extended systems and their equilibrium states.

Each bath contributes one truncated harmonic mode (M levels) to the
extended system; the residual baths couple to the mode positions a + a^dagger
with the ohmic spectral density.
"""
from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .baths import BathSpec
from .exceptions import ConvergenceError, DimensionError
from .operators import (
    as_operator,
    check_hermitian,
    embed_site,
    expect,
    gibbs_state,
    partial_trace,
    pauli,
    unitary_exp,
)

log = logging.getLogger(__name__)

MAX_DIM = 10_000
DENSE_LIMIT = 2_000


@dataclass(frozen=True)
class ModelSpec:
    """A system Hamiltonian and its list of (coupling operator, bath) pairs."""

    h_s: np.ndarray = field(repr=False)
    couplings: tuple
    name: str = ""

    def __post_init__(self):
        h = as_operator(self.h_s)
        check_hermitian(h, "system Hamiltonian")
        object.__setattr__(self, "h_s", h)
        pairs = []
        for op, bath in self.couplings:
            op = as_operator(op)
            if op.shape != h.shape:
                raise DimensionError(f"coupling shape {op.shape} != system shape {h.shape}")
            check_hermitian(op, "coupling operator")
            if not isinstance(bath, BathSpec):
                raise TypeError("couplings must pair an operator with a BathSpec")
            pairs.append((op, bath))
        object.__setattr__(self, "couplings", tuple(pairs))

    @property
    def dim(self):
        return self.h_s.shape[0]


def impurity_model(delta, bath_z, bath_x):
    """Spin Delta sigma^z coupled to a sigma^z bath and a sigma^x bath."""
    return ModelSpec(delta * pauli("z"), ((pauli("z"), bath_z), (pauli("x"), bath_x)), "impurity")


def chain_model(n_spins, deltas, bath):
    """Periodic ring with bond baths coupling via sigma^x (even i) / sigma^y (odd i)."""
    from .effh.effective import chain_coupling_operators

    if n_spins < 2 or n_spins % 2:
        raise ValueError(f"the ring needs an even number of spins, got {n_spins}")
    deltas = np.full(n_spins, float(deltas)) if np.ndim(deltas) == 0 else np.asarray(deltas, float)
    if deltas.shape != (n_spins,):
        raise ValueError(f"expected {n_spins} splittings, got {deltas.size}")
    h = sum(d * embed_site(pauli("z"), i, n_spins) for i, d in enumerate(deltas))
    ops = chain_coupling_operators(n_spins)
    return ModelSpec(h, tuple((s, bath) for s in ops), "chain")


def ladder(m):
    """Truncated annihilation operator: the M x M block of the infinite matrix."""
    return np.diag(np.sqrt(np.arange(1, m, dtype=float)), 1).astype(complex)


@dataclass(frozen=True)
class RCExtendedSystem:
    """System plus one M-level mode per bath.

    ``h_rc`` is kept sparse so that large truncations stay cheap; use
    ``dense()`` for the Redfield engine. Factor order is [system, RC_1, ...].
    """

    h_rc: sp.csr_matrix = field(repr=False)
    residual_couplings: tuple = field(repr=False)
    factor_dims: tuple
    truncation_m: int
    system_dim: int

    @property
    def dim(self):
        return self.h_rc.shape[0]

    def dense(self):
        return self.h_rc.toarray()

    def dense_couplings(self):
        return [(op.toarray(), bath) for op, bath in self.residual_couplings]

    def system_operator(self, op):
        """Embed a system operator into the extended space (dense)."""
        rest = self.dim // self.system_dim
        return np.kron(as_operator(op), np.eye(rest))


def _kron_all(ops):
    out = ops[0]
    for o in ops[1:]:
        out = sp.kron(out, o, format="csr")
    return sp.csr_matrix(out)


def build_rc_system(model, m_levels):
    """Extended Hamiltonian H_S + sum_n [lam_n S_n (a_n + a_n^dag) + Omega_n a_n^dag a_n]."""
    m = int(m_levels)
    if m < 2:
        raise ValueError(f"need at least 2 RC levels, got {m_levels}")
    n_baths = len(model.couplings)
    dims = (model.dim,) + (m,) * n_baths
    total = int(np.prod(dims, dtype=np.int64))
    if total > MAX_DIM:
        raise DimensionError(f"extended dimension {total} exceeds the {MAX_DIM} guard")
    a = sp.csr_matrix(ladder(m))
    pos = a + a.conj().T
    num = sp.diags(np.arange(m, dtype=complex))
    eye_s = sp.identity(model.dim, dtype=complex, format="csr")
    eye_m = sp.identity(m, dtype=complex, format="csr")

    def on_mode(k, op, sys_op=eye_s):
        factors = [sys_op] + [eye_m] * n_baths
        factors[k + 1] = op
        return _kron_all(factors)

    h = _kron_all([sp.csr_matrix(model.h_s)] + [eye_m] * n_baths)
    residual = []
    for k, (s_op, bath) in enumerate(model.couplings):
        h = h + bath.lam * on_mode(k, pos, sp.csr_matrix(s_op)) + bath.omega_rc * on_mode(k, num)
        residual.append((on_mode(k, pos), bath))
    h = sp.csr_matrix(0.5 * (h + h.conj().T))
    return RCExtendedSystem(h, tuple(residual), dims, m, model.dim)


def _real_if_possible(h):
    if sp.issparse(h):
        return h.real if h.imag.count_nonzero() == 0 else h
    return h.real if not np.any(h.imag) else h


def _lowest_states(h, beta, weight_tol=1e-12, k0=80):
    """Enough low-lying eigenpairs of sparse ``h`` to carry the Gibbs weight."""
    n = h.shape[0]
    hc = sp.csc_matrix(_real_if_possible(h))
    # shift below the spectrum: Gershgorin bound on the lowest eigenvalue
    diag = hc.diagonal().real
    radius = np.asarray(abs(hc).sum(axis=1)).ravel() - np.abs(diag)
    sigma = float(np.min(diag - radius)) - 1.0
    k = min(k0, n - 2)
    while True:
        w, v = spla.eigsh(hc, k=k, sigma=sigma, which="LM")
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        p = np.exp(-beta * (w - w[0]))
        if p[-1] / p.sum() < weight_tol or k >= n - 2:
            return w, v
        if k >= 2000:
            raise ConvergenceError("thermal weight not captured by 2000 eigenstates")
        k = min(2 * k, n - 2)


def _thermal_eigs(rc_sys, beta):
    if rc_sys.dim <= DENSE_LIMIT:
        w, v = np.linalg.eigh(_real_if_possible(rc_sys.dense()))
    else:
        w, v = _lowest_states(rc_sys.h_rc, beta)
    p = np.exp(-beta * (w - w[0]))
    return p / p.sum(), v


def rc_equilibrium(rc_sys, beta, return_extended=False):
    """Reduced system state Tr_RC exp(-beta H_RC)/Z.

    With ``return_extended`` also returns the populations of the top Fock
    level of each mode, which measure truncation leakage.
    """
    if not (np.isfinite(beta) and beta > 0):
        raise ValueError(f"beta must be finite and positive, got {beta}")
    p, v = _thermal_eigs(rc_sys, beta)
    d = rc_sys.system_dim
    psi = v.reshape(d, -1, v.shape[1])  # (system, rest, state)
    rho_s = np.einsum("k,irk,jrk->ij", p, psi, psi.conj())
    rho_s = 0.5 * (rho_s + rho_s.conj().T)
    rho_s /= np.trace(rho_s).real
    if not return_extended:
        return rho_s
    m = rc_sys.truncation_m
    n_modes = len(rc_sys.factor_dims) - 1
    amps = np.abs(v.reshape((d,) + (m,) * n_modes + (v.shape[1],))) ** 2
    tops = []
    for k in range(n_modes):
        idx = [slice(None)] * amps.ndim
        idx[k + 1] = m - 1
        tops.append(float(np.sum(amps[tuple(idx)] @ p)))
    return rho_s, tops


@dataclass
class ConvergedEquilibrium:
    rho: np.ndarray
    truncation_m: int
    history: list  # (M, <sigma_z>, top-level population)


def converged_rc_equilibrium(model, beta, observable=None, m_start=4, step=2,
                             tol=1e-3, leakage_tol=1e-6, growth=1.25, max_dim=MAX_DIM):
    """Raise M until the observable moves by < ``tol`` over M -> M + step
    while the top Fock level carries < ``leakage_tol`` of the thermal weight.

    The leakage condition guards against plateaus where a too-small
    truncation looks stable but is still cut off by the ladder top. While
    leakage is large, M grows geometrically (factor ``growth``).
    """
    obs = pauli("z") if observable is None else as_operator(observable)
    n_baths = len(model.couplings)
    m_max = int((max_dim / model.dim) ** (1.0 / n_baths) + 1e-9)
    history = []
    prev = None
    m = m_start
    while m <= m_max:
        rho, tops = rc_equilibrium(build_rc_system(model, m), beta, return_extended=True)
        value = expect(rho, obs)
        leak = max(tops)
        history.append((m, value, leak))
        log.info("RC equilibrium M=%d <O>=%.8f top-level population=%.2e", m, value, leak)
        if (prev is not None and prev[0] == m - step and prev[2] < leakage_tol
                and abs(value - prev[1]) < tol):
            return ConvergedEquilibrium(rho, m, history)
        prev = (m, value, leak)
        if leak < leakage_tol:
            m += step
        else:
            jump = int(np.ceil(m * growth))
            jump += jump % 2 != m % 2
            m = max(m + step, min(jump, m_max - step))
    raise ConvergenceError(
        f"RC equilibrium not converged before the dimension guard; history={history}"
    )


def check_polaron_ladder_identity(eps, s_op, m_levels, dps=None):
    """Residual of U a U^dagger = a - eps U S U^dagger on the truncated mode.

    U = exp[eps (a^dagger - a) (x) S]; the comparison is restricted to the
    lowest floor(M/2) Fock levels because truncation corrupts the ladder top.
    In double precision the residual bottoms out near 1e-15; pass ``dps``
    (decimal digits) to evaluate in mpmath arbitrary precision instead.
    """
    m = int(m_levels)
    if m < 4:
        raise ValueError("need at least 4 levels")
    s_op = as_operator(s_op)
    check_hermitian(s_op, "coupling operator")
    d = s_op.shape[0]
    keep = (m // 2) * d
    if dps is not None:
        return _ladder_residual_mp(eps, s_op, m, keep, dps)
    a = np.kron(ladder(m), np.eye(d))
    s_full = np.kron(np.eye(m), s_op)
    gen = np.kron(ladder(m).conj().T - ladder(m), s_op)  # anti-Hermitian
    u = unitary_exp(1j * gen, eps)  # exp(-i eps (i G)) = exp(eps G)
    lhs = u @ a @ u.conj().T
    rhs = a - eps * (u @ s_full @ u.conj().T)
    return float(np.max(np.abs((lhs - rhs)[:keep, :keep]), initial=0.0))


def _ladder_residual_mp(eps, s_op, m, keep, dps):
    import mpmath

    with mpmath.workdps(dps):
        lad = mpmath.zeros(m, m)
        for n in range(1, m):
            lad[n - 1, n] = mpmath.sqrt(n)
        s = mpmath.matrix(s_op.tolist())
        d = s.rows

        def kron(x, y):
            out = mpmath.zeros(x.rows * y.rows, x.cols * y.cols)
            for i in range(x.rows):
                for j in range(x.cols):
                    if x[i, j] != 0:
                        for k in range(y.rows):
                            for l in range(y.cols):
                                out[i * y.rows + k, j * y.cols + l] = x[i, j] * y[k, l]
            return out

        a = kron(lad, mpmath.eye(d))
        s_full = kron(mpmath.eye(m), s)
        u = mpmath.expm(mpmath.mpf(eps) * kron(lad.T - lad, s))
        ud = u.H
        diff = u * a * ud - (a - mpmath.mpf(eps) * (u * s_full * ud))
        return float(max(abs(diff[i, j]) for i in range(keep) for j in range(keep)))


def bare_equilibrium(model, beta):
    """Gibbs state of the bare system Hamiltonian."""
    return gibbs_state(model.h_s, beta)


def reduce_to_system(rho_ext, rc_sys):
    return partial_trace(rho_ext, rc_sys.factor_dims, [0])
