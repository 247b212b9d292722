"""Self-check suite behind ``effh-sim validate``."""
from dataclasses import dataclass
import math
import sys

import numpy as np
from scipy.integrate import quad as adaptive_quad

from .baths import BathSpec
from .dynamics import impurity_setup, steady_state
from .effh.dressing import chain_dressing_n2, kappa_equal, kappa_minimum, kappa_pair, xi
from .effh.effective import (
    CouplingTerm,
    chain_coupling_operators,
    effective_operator,
    pauli_coefficient,
)
from .effh.quadrature import DEFAULT_QUADRATURE
from .effh.special import dawson
from .operators import (
    binomial_commutator_expansion,
    gibbs_state,
    nested_commutator,
    partial_trace,
    pauli,
    unitary_exp,
)
from .rc import check_polaron_ladder_identity


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<52s} residual={self.residual:.3e}  tol={self.tolerance:.1e}"


def _dawson_oracle(x):
    val, _ = adaptive_quad(lambda t: math.exp(t * t - x * x), 0.0, x, epsabs=1e-16, epsrel=1e-13,
                           limit=200)
    return val


def _commutator_checks(rng):
    worst_fwd = worst_rev = 0.0
    for _ in range(20):
        d = int(rng.integers(2, 5))
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        n = int(rng.integers(1, 6))
        lhs = a @ np.linalg.matrix_power(b, n)
        scale = max(np.abs(lhs).max(), 1.0)
        worst_fwd = max(worst_fwd, np.abs(lhs - binomial_commutator_expansion(a, b, n)).max() / scale)
        rev = sum((-1) ** j * math.comb(n, j) * nested_commutator(a, b, j)
                  @ np.linalg.matrix_power(b, n - j) for j in range(n + 1))
        lhs2 = np.linalg.matrix_power(b, n) @ a
        worst_rev = max(worst_rev, np.abs(lhs2 - rev).max() / max(np.abs(lhs2).max(), 1.0))
    return worst_fwd, worst_rev


def run_checks(quad=DEFAULT_QUADRATURE):
    """Evaluate every invariant; returns a list of Check records."""
    rng = np.random.default_rng(20240601)
    checks = []
    add = checks.append

    fwd, rev = _commutator_checks(rng)
    add(Check("nested commutator: A B^n expansion", fwd, 1e-9))
    add(Check("nested commutator: B^n A expansion", rev, 1e-9))

    h = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    h = h + h.conj().T
    u = unitary_exp(h, 0.7)
    add(Check("unitary_exp unitarity (dim 16)", np.abs(u @ u.conj().T - np.eye(16)).max(), 1e-10))

    xs = [0.3, 1.0, 3.0, 5.0, 7.0, 9.0]
    add(Check("dawson vs adaptive quadrature",
              max(abs(dawson(x) - _dawson_oracle(x)) for x in xs), 1e-12))

    add(Check("kappa(0) = 1", abs(kappa_equal(0.0) - 1.0), 0.0))
    add(Check("kappa(10) near 1/2", abs(kappa_equal(10.0) - 0.5), 0.01))
    k_min, e_min = kappa_minimum()
    add(Check("kappa minimum value near 0.36", abs(k_min - 0.36), 0.02))
    add(Check("kappa minimum location near 1.06", abs(e_min - 1.06), 0.05))
    add(Check("kappa_z(0, e) = exp(-2 e^2)",
              max(abs(kappa_pair(0.0, e, quad)[0] - math.exp(-2 * e * e))
                  for e in (0.25, 0.5, 1.0, 2.0)), 1e-6))
    pts = np.linspace(0, 3, 7)
    swap = max(abs(kappa_pair(r, s, quad)[0] - kappa_pair(s, r, quad)[1])
               for r in pts for s in pts)
    add(Check("kappa swap symmetry", swap, 1e-8))
    diag = max(abs(kappa_pair(e, e, quad)[0] - kappa_equal(e)) for e in (0.1, 0.5, 1.0, 3.0))
    add(Check("kappa_pair diagonal = kappa_equal", diag, 1e-8))
    table = [((0.8, 0.8), (0.9803, 0.9803)), ((4.0, 0.8), (0.9817, 0.6079)),
             ((8.0, 0.8), (0.9849, 0.1386))]
    dev = max(max(abs(round(k, 4) - ref) for k, ref in zip(kappa_pair(lz / 8, lx / 8, quad), refs))
              for (lz, lx), refs in table)
    add(Check("tabulated kappa_z / kappa_x (4 decimals)", dev, 1e-12))
    delta_k = max(max(abs(a - b) for a, b in zip(kappa_pair(r, s, quad), kappa_pair(r, s, quad.doubled())))
                  for r, s in ((0.5, 1.0), (3.0, 0.2), (2.0, 2.5)))
    add(Check("kappa quadrature delta under doubling", delta_k, 1e-8))
    lag = max(max(abs(a - b) for a, b in zip(kappa_pair(r, s, quad),
                                            kappa_pair(r, s, quad, method="laguerre")))
              for r, s in ((0.5, 1.0), (1.5, 0.2)))
    add(Check("kappa: Dawson route vs 2-D Laguerre route", lag, 1e-8))

    add(Check("xi(0) = 2", abs(xi(0.0, quad) - 2.0), 1e-6))
    add(Check("xi(10) near 0.62", abs(xi(10.0, quad) - 0.62), 0.02))
    add(Check("xi quadrature delta under doubling",
              max(abs(xi(e, quad) - xi(e, quad.doubled())) for e in (0.5, 1.5, 3.0)), 1e-8))

    ops = chain_coupling_operators(2)
    worst = 0.0
    for e in (0.3, 1.0):
        cpl = [CouplingTerm(e, s) for s in ops]
        s2 = sum(effective_operator(s @ s, cpl, quad) for s in ops)
        k1, k2, k3 = chain_dressing_n2(e)
        worst = max(worst, abs(pauli_coefficient(s2, "xx").real - (k1 + k2)),
                    abs(pauli_coefficient(s2, "zz").real - 2 * k3))
    add(Check("two-spin closed forms vs generic quadrature", worst, 1e-8))

    sz, sx = pauli("z"), pauli("x")
    add(Check("effective sigma^z under a sigma^x bath",
              np.abs(effective_operator(sz, [CouplingTerm(0.7, sx)], quad)
                     - math.exp(-2 * 0.49) * sz).max(), 1e-10))

    add(Check("polaron ladder identity (M=24, eps=0.3)",
              check_polaron_ladder_identity(0.3, sx, 24), 1e-6))

    bath = BathSpec(0.8, 8.0, 0.05 / math.pi, 1000.0, 1.0)
    eff = impurity_setup("effh", 1.0, bath, bath, quad=quad)
    ss = steady_state(eff.generator)
    h_eff = eff.info["kappa_z"] * sz
    add(Check("effective steady state = Gibbs state",
              np.abs(ss - gibbs_state(h_eff, 1.0)).max(), 1e-4))
    rc = impurity_setup("rc", 1.0, bath, bath, m_levels=4)
    ss_rc = partial_trace(steady_state(rc.generator), rc.factor_dims, [0])
    add(Check("RC steady state = reduced extended Gibbs state",
              np.abs(ss_rc - rc.equilibrium).max(), 1e-3))
    return checks


def report_validation(stream=None, quad=DEFAULT_QUADRATURE):
    """Print one line per check; returns True when everything passes."""
    out = stream or sys.stdout
    checks = run_checks(quad)
    for c in checks:
        print(c.line(), file=out)
    n_fail = sum(not c.passed for c in checks)
    print(f"{len(checks) - n_fail}/{len(checks)} checks passed", file=out)
    return n_fail == 0
