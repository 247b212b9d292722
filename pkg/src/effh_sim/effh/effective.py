"""Effective system operators from the non-factorized polaron transform.

The generic route evaluates <0| U_P O U_P^dagger |0> in the RC momentum
representation, where U_P(p) = exp(-i sqrt(2) sum_n p_n eps_n S_n) and the
RC ground state contributes the Gaussian weight prod_n exp(-p_n^2)/sqrt(pi).
"""
from dataclasses import dataclass, field
from enum import Enum
import itertools
import math

import numpy as np

from ..baths import BathSpec, SpectralStage
from ..exceptions import ConvergenceError, DimensionError
from ..operators import as_operator, check_hermitian, embed_site, pauli
from .dressing import chain_dressing_n2, kappa_equal, kappa_pair, xi
from .quadrature import DEFAULT_QUADRATURE, gauss_hermite, hermite_order_for

SQRT2 = math.sqrt(2.0)
_CHUNK = 4096


@dataclass(frozen=True)
class CouplingTerm:
    epsilon: float
    s_op: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        object.__setattr__(self, "s_op", as_operator(self.s_op))
        check_hermitian(self.s_op, "coupling operator")


@dataclass
class EffectiveModel:
    """Dressed system Hamiltonian plus dressed couplings to residual baths."""

    h_s_eff: np.ndarray
    couplings_eff: list
    stage: SpectralStage = SpectralStage.EFFECTIVE
    info: dict = field(default_factory=dict)


def _node_frequency(couplings):
    # fastest phase in U O U^dagger along one momentum axis
    top = 0.0
    for c in couplings:
        w = np.linalg.eigvalsh(c.s_op)
        top = max(top, SQRT2 * c.epsilon * (w[-1] - w[0]))
    return top


def polaron_unitaries(couplings, momenta):
    """Stack of U_P(p) for momentum vectors ``momenta`` of shape (m, n_baths)."""
    gens = np.einsum("mk,kij->mij", momenta * [c.epsilon for c in couplings],
                     np.array([c.s_op for c in couplings]))
    w, v = np.linalg.eigh(gens)
    phase = np.exp(-1j * SQRT2 * w)
    return (v * phase[:, None, :]) @ np.swapaxes(v, -1, -2).conj()


def effective_operator(o_s, couplings, quad=DEFAULT_QUADRATURE, order=None):
    """Tensor Gauss-Hermite evaluation of the effective operator of ``o_s``.

    ``order`` overrides the per-axis node count; otherwise it is
    ``quad.gh_order`` raised as needed for strongly oscillating integrands.
    """
    o_s = as_operator(o_s)
    couplings = list(couplings)
    if not couplings:
        raise ValueError("at least one coupling term is required")
    for c in couplings:
        if c.s_op.shape != o_s.shape:
            raise DimensionError(
                f"coupling operator shape {c.s_op.shape} != operator shape {o_s.shape}"
            )
    n = order or hermite_order_for(_node_frequency(couplings), quad.gh_order)
    x, w = gauss_hermite(n)
    k = len(couplings)
    out = np.zeros_like(o_s)
    grid = itertools.product(range(n), repeat=k)
    while True:
        idx = np.array(list(itertools.islice(grid, _CHUNK)))
        if idx.size == 0:
            break
        mom = x[idx]
        weight = np.prod(w[idx], axis=1)
        u = polaron_unitaries(couplings, mom)
        dressed = u @ o_s @ np.swapaxes(u, -1, -2).conj()
        out += np.einsum("m,mij->ij", weight, dressed)
    return out


def pauli_coefficient(op, labels):
    """Coefficient of the Pauli string ``labels`` (e.g. "xx0z") in ``op``."""
    p = pauli(labels[0])
    for lab in labels[1:]:
        p = np.kron(p, pauli(lab))
    return complex(np.trace(p @ op) / p.shape[0])


def build_impurity_effective(delta, bath_z, bath_x, quad=DEFAULT_QUADRATURE):
    """Effective model of a spin Delta sigma^z coupled via sigma^z and sigma^x."""
    kz, kx = kappa_pair(bath_z.epsilon, bath_x.epsilon, quad)
    sz, sx = pauli("z"), pauli("x")
    return EffectiveModel(
        h_s_eff=kz * delta * sz,
        couplings_eff=[(kz * sz, bath_z), (kx * sx, bath_x)],
        info={"kappa_z": kz, "kappa_x": kx, "delta": delta},
    )


def chain_coupling_operators(n_spins):
    """Bare couplings of the ring: bath i touches spins i and i+1 (mod N),
    through sigma^x for even i and sigma^y for odd i (zero-based)."""
    ops = []
    for i in range(n_spins):
        axis = "x" if i % 2 == 0 else "y"
        j = (i + 1) % n_spins
        ops.append(embed_site(pauli(axis), i, n_spins) + embed_site(pauli(axis), j, n_spins))
    return ops


def bond_operator(i, n_spins):
    axis = "x" if i % 2 == 0 else "y"
    j = (i + 1) % n_spins
    return embed_site(pauli(axis), i, n_spins) @ embed_site(pauli(axis), j, n_spins)


def build_chain_effective(n_spins, deltas, lam, omega, quad=DEFAULT_QUADRATURE,
                          gamma=0.05 / math.pi, cutoff=1000.0, temperature=1.0):
    """Effective Hamiltonian of the bath-engineered Kitaev-XY ring."""
    if n_spins < 2 or n_spins % 2:
        raise ValueError(f"the ring needs an even number of spins, got {n_spins}")
    deltas = np.broadcast_to(np.asarray(deltas, dtype=float), (n_spins,)) \
        if np.ndim(deltas) == 0 else np.asarray(deltas, dtype=float)
    if deltas.shape != (n_spins,):
        raise ValueError(f"expected {n_spins} splittings, got {deltas.shape[0]}")
    eps = lam / omega
    kap = kappa_equal(eps)
    dim = 2**n_spins
    h = np.zeros((dim, dim), dtype=complex)
    for i, d in enumerate(deltas):
        h += (2 * kap - 1) * d * embed_site(pauli("z"), i, n_spins)
    if n_spins == 2:
        k1, k2, k3 = chain_dressing_n2(eps)
        zz = embed_site(pauli("z"), 0, 2) @ embed_site(pauli("z"), 1, 2)
        s2_eff = (k1 + k2) * (bond_operator(0, 2) + bond_operator(1, 2)) + 2 * k3 * zz
        bond = k1 + k2
    else:
        bond = xi(eps, quad)
        s2_eff = sum(bond * bond_operator(i, n_spins) for i in range(n_spins))
    h -= 4 * lam**2 / omega * s2_eff
    couplings = []
    for i, s in enumerate(chain_coupling_operators(n_spins)):
        spec = BathSpec(lam, omega, gamma, cutoff, temperature, coupling_label=str(i))
        couplings.append((kap * s, spec))
    return EffectiveModel(
        h_s_eff=0.5 * (h + h.conj().T),
        couplings_eff=couplings,
        info={"kappa": kap, "splitting_factor": 2 * kap - 1, "xi": bond, "epsilon": eps},
    )


class PolaronOrder(Enum):
    ONE_THEN_TWO = "one_then_two"
    TWO_THEN_ONE = "two_then_one"


def single_polaron(op, s, eps, max_order=400, tol=1e-14):
    """<0| exp[eps (a^+ - a) S] O exp[-eps (a^+ - a) S] |0> via its power series.

    Sums e^{-eps^2 S^2/2} (sum_n eps^(2n)/n! S^n O S^n) e^{-eps^2 S^2/2}.
    """
    op = as_operator(op)
    s = as_operator(s)
    w, v = np.linalg.eigh(s)
    damp = (v * np.exp(-0.5 * eps**2 * w**2)) @ v.conj().T
    total = op.copy()
    term = op.copy()
    scale = max(np.abs(op).max(), 1e-300)
    for n in range(1, max_order + 1):
        term = (eps**2 / n) * (s @ term @ s)
        total += term
        if np.abs(term).max() < tol * scale and n > eps**2 * np.abs(w).max() ** 2:
            return damp @ total @ damp
    raise ConvergenceError(f"polaron series did not converge within {max_order} terms")


def factorized_polaron_demo(order, s1, s2, eps1, eps2, h_s):
    """Effective Hamiltonian from two sequential single-bath polarons.

    ``ONE_THEN_TWO`` applies the bath-1 shift innermost, then bath 2.
    """
    order = PolaronOrder(order)
    if order is PolaronOrder.ONE_THEN_TWO:
        inner, outer = (s1, eps1), (s2, eps2)
    else:
        inner, outer = (s2, eps2), (s1, eps1)
    first = single_polaron(h_s, *inner)
    return single_polaron(first, *outer)
