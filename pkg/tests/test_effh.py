import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import dawsn

from effh_sim.effh import special
from effh_sim.effh.dressing import (
    chain_dressing_n2,
    kappa_equal,
    kappa_minimum,
    kappa_pair,
    xi,
    xi_bruteforce,
)
from effh_sim.effh.effective import (
    CouplingTerm,
    PolaronOrder,
    bond_operator,
    build_chain_effective,
    build_impurity_effective,
    chain_coupling_operators,
    effective_operator,
    factorized_polaron_demo,
    pauli_coefficient,
    polaron_unitaries,
    single_polaron,
)
from effh_sim.effh.quadrature import QuadratureConfig, gauss_hermite, hermite_order_for
from effh_sim.effh.special import dawson, dawson_over_x
from effh_sim.exceptions import ConvergenceError, DimensionError, HermiticityError
from effh_sim.operators import embed_site, is_hermitian, pauli

from conftest import make_bath

SX, SY, SZ = pauli("x"), pauli("y"), pauli("z")
S_TILT = (SZ + SX) / math.sqrt(2.0)


def dawson_oracle(x):
    val, _ = quad(lambda t: math.exp(t * t - x * x), 0.0, x, epsabs=1e-16, epsrel=1e-13, limit=200)
    return val


class TestDawson:
    def test_zero(self):
        assert dawson(0.0) == 0.0

    def test_one(self):
        assert abs(dawson(1.0) - dawson_oracle(1.0)) < 1e-13
        assert math.isclose(dawson(1.0), 0.538079506, abs_tol=1e-9)

    @pytest.mark.parametrize("x", [0.01, 0.5, 2.0, 3.9, 4.1, 6.4, 6.6, 9.0, 15.0])
    def test_against_quadrature(self, x):
        assert abs(dawson(x) - dawson_oracle(x)) <= 1e-12

    def test_against_reference_implementation(self):
        x = np.concatenate([np.linspace(-30, 30, 6001), [1e-8, 1e3, 1e6]])
        assert np.max(np.abs(dawson(x) - dawsn(x))) <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-50, 50, allow_nan=False))
    def test_odd(self, x):
        assert dawson(-x) == -dawson(x)

    def test_branch_continuity(self):
        lim = special.SERIES_LIMIT
        lo = special._dawson_series(lim)
        hi = special._dawson_asymptotic(lim)
        assert abs(lo - hi) < 1e-14

    def test_dawson_over_x(self):
        assert dawson_over_x(0.0) == 1.0
        assert math.isclose(dawson_over_x(2.0), dawson(2.0) / 2.0, rel_tol=1e-15)


class TestQuadrature:
    def test_weights_normalized(self):
        x, w = gauss_hermite(40)
        assert math.isclose(w.sum(), 1.0, rel_tol=1e-13)
        assert math.isclose(w @ x**2, 0.5, rel_tol=1e-12)

    def test_order_escalates(self):
        assert hermite_order_for(0.5, 40) == 40
        assert hermite_order_for(20.0, 40) > 40

    def test_config_validation(self):
        with pytest.raises(ValueError, match="gh_order"):
            QuadratureConfig(gh_order=1)
        assert QuadratureConfig().doubled().theta_points == 512


class TestKappa:
    def test_zero(self):
        assert kappa_equal(0.0) == 1.0

    def test_large_approaches_half_from_below(self):
        for eps in (10.0, 30.0, 100.0):
            k = kappa_equal(eps)
            assert k < 0.5 and 0.5 - k < 0.01

    def test_minimum(self):
        value, where = kappa_minimum()
        assert abs(value - 0.36) <= 0.02
        assert abs(where - 1.06) <= 0.05

    @pytest.mark.parametrize("eps", [0.25, 0.5, 1.0, 2.0])
    def test_single_bath_limit(self, eps):
        kz, kx = kappa_pair(0.0, eps)
        assert abs(kz - math.exp(-2 * eps * eps)) <= 1e-12
        assert kx == pytest.approx(1.0, abs=1e-15)

    def test_both_zero(self):
        assert kappa_pair(0.0, 0.0) == (1.0, 1.0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            kappa_pair(-0.1, 0.2)

    @pytest.mark.parametrize("eps", [0.05, 0.3, 1.0, 2.5, 6.0])
    def test_diagonal_matches_closed_form(self, eps):
        kz, kx = kappa_pair(eps, eps)
        assert abs(kz - kappa_equal(eps)) <= 1e-8
        assert abs(kx - kappa_equal(eps)) <= 1e-8

    @pytest.mark.parametrize("lz,lx,expected", [
        (0.8, 0.8, (0.9803, 0.9803)),
        (4.0, 0.8, (0.9817, 0.6079)),
        (8.0, 0.8, (0.9849, 0.1386)),
    ])
    def test_tabulated_values(self, lz, lx, expected):
        kz, kx = kappa_pair(lz / 8.0, lx / 8.0)
        assert (round(kz, 4), round(kx, 4)) == expected

    def test_swap_symmetry_and_bound(self):
        grid = np.arange(0, 3.01, 0.25)
        for r in grid:
            for s in grid:
                kz, _ = kappa_pair(r, s)
                _, kx_swapped = kappa_pair(s, r)
                assert abs(kz - kx_swapped) <= 1e-12
                assert kz <= 1 + 1e-9

    @pytest.mark.parametrize("r,s", [(0.5, 1.0), (3.0, 0.2), (2.0, 2.5), (0.0, 3.0)])
    def test_converged_under_doubling(self, r, s):
        q = QuadratureConfig()
        a = kappa_pair(r, s, q)
        b = kappa_pair(r, s, q.doubled())
        assert max(abs(a[0] - b[0]), abs(a[1] - b[1])) < 1e-8

    @pytest.mark.parametrize("r,s", [(0.5, 1.0), (1.5, 0.2), (2.0, 2.0)])
    def test_laguerre_route_agrees(self, r, s):
        a = kappa_pair(r, s)
        b = kappa_pair(r, s, method="laguerre")
        assert np.allclose(a, b, atol=1e-9, rtol=0)

    @pytest.mark.parametrize("r,s", [(0.4, 0.9), (1.2, 0.3)])
    def test_generic_quadrature_oracle(self, r, s):
        cpl = [CouplingTerm(r, SZ), CouplingTerm(s, SX)]
        kz, kx = kappa_pair(r, s)
        assert abs(pauli_coefficient(effective_operator(SZ, cpl), "z").real - kz) < 1e-10
        assert abs(pauli_coefficient(effective_operator(SX, cpl), "x").real - kx) < 1e-10


class TestEffectiveOperator:
    def test_commuting_case_unchanged(self):
        out = effective_operator(SZ, [CouplingTerm(1.3, SZ)])
        assert np.abs(out - SZ).max() < 1e-13

    @pytest.mark.parametrize("eps", [0.2, 0.8, 2.0, 3.0])
    def test_single_transverse_bath(self, eps):
        out = effective_operator(SZ, [CouplingTerm(eps, SX)])
        assert np.abs(out - math.exp(-2 * eps**2) * SZ).max() < 1e-12

    @pytest.mark.parametrize("eps", [0.3, 1.0, 2.0])
    def test_two_baths_equal_strength(self, eps):
        out = effective_operator(SZ, [CouplingTerm(eps, SZ), CouplingTerm(eps, SX)])
        assert np.abs(out - kappa_equal(eps) * SZ).max() < 1e-10

    def test_linearity(self, rng):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        cpl = [CouplingTerm(0.7, SZ), CouplingTerm(0.4, SX)]
        lhs = effective_operator(2.0 * a - 0.5j * b, cpl)
        rhs = 2.0 * effective_operator(a, cpl) - 0.5j * effective_operator(b, cpl)
        assert np.abs(lhs - rhs).max() < 1e-12

    def test_hermitian_in_hermitian_out(self):
        h = 0.3 * SX + 0.8 * SY - 0.2 * SZ
        out = effective_operator(h, [CouplingTerm(0.9, S_TILT), CouplingTerm(1.4, SY)])
        assert is_hermitian(out)

    def test_node_unitaries(self):
        cpl = [CouplingTerm(0.9, S_TILT), CouplingTerm(1.4, SY)]
        x, _ = gauss_hermite(40)
        mom = np.stack(np.meshgrid(x, x, indexing="ij"), -1).reshape(-1, 2)
        u = polaron_unitaries(cpl, mom)
        dev = np.abs(u @ np.swapaxes(u, -1, -2).conj() - np.eye(2)).max()
        assert dev <= 1e-10

    def test_permutation_invariance(self):
        a = [CouplingTerm(0.5, S_TILT), CouplingTerm(0.5, SX)]
        fwd = effective_operator(SZ, a)
        rev = effective_operator(SZ, a[::-1])
        assert np.abs(fwd - rev).max() <= 1e-12

    def test_converged_under_doubling(self):
        cpl = [CouplingTerm(3.0, SZ), CouplingTerm(2.0, SX)]
        n = hermite_order_for(math.sqrt(2) * 3.0 * 2, 40)
        a = effective_operator(SZ, cpl, order=n)
        b = effective_operator(SZ, cpl, order=2 * n)
        assert np.abs(a - b).max() < 1e-8

    def test_errors(self):
        with pytest.raises(ValueError):
            effective_operator(SZ, [])
        with pytest.raises(DimensionError):
            effective_operator(np.eye(3), [CouplingTerm(0.5, SX)])
        with pytest.raises(HermiticityError):
            CouplingTerm(0.5, np.array([[0, 1], [0, 0]]))
        with pytest.raises(ValueError):
            CouplingTerm(-0.5, SX)


class TestImpurityBuilder:
    def test_bare_limit(self):
        m = build_impurity_effective(1.0, make_bath(0.0), make_bath(0.0))
        assert np.allclose(m.h_s_eff, SZ)
        assert np.allclose(m.couplings_eff[0][0], SZ)
        assert np.allclose(m.couplings_eff[1][0], SX)

    @pytest.mark.parametrize("lz,kz,kx", [(4.0, 0.9817, 0.6079), (8.0, 0.9849, 0.1386)])
    def test_tabulated(self, lz, kz, kx):
        m = build_impurity_effective(1.0, make_bath(lz), make_bath(0.8))
        assert round(m.info["kappa_z"], 4) == kz
        assert round(m.info["kappa_x"], 4) == kx
        assert np.allclose(m.h_s_eff, m.info["kappa_z"] * SZ)
        assert np.allclose(m.couplings_eff[1][0], m.info["kappa_x"] * SX)
        assert all(is_hermitian(op) for op, _ in m.couplings_eff)


class TestXi:
    def test_zero(self):
        assert abs(xi(0.0) - 2.0) < 1e-12

    def test_large(self):
        assert abs(xi(10.0) - 0.62) <= 0.02
        assert abs(xi(20.0) - xi(10.0)) < 1e-3

    @pytest.mark.parametrize("eps", [0.3, 0.8, 1.7])
    def test_factorized_matches_bruteforce(self, eps):
        n = hermite_order_for(2 * math.sqrt(2) * eps, 40)
        assert abs(xi(eps) - xi_bruteforce(eps, n)) < 1e-10

    @pytest.mark.parametrize("eps", [0.5, 1.5, 3.0])
    def test_converged_under_doubling(self, eps):
        q = QuadratureConfig()
        assert abs(xi(eps, q) - xi(eps, q.doubled())) < 1e-8

    def test_generic_operator_oracle(self):
        # bond (0, 1) is touched by the baths on bonds (3, 0), (0, 1) and (1, 2);
        # embedding the three of them on a four-spin ring is exact
        ops = chain_coupling_operators(4)
        eps = 0.5
        cpl = [CouplingTerm(eps, ops[3]), CouplingTerm(eps, ops[0]), CouplingTerm(eps, ops[1])]
        s2 = effective_operator(ops[0] @ ops[0], cpl)
        assert abs(pauli_coefficient(s2, "xx00").real - xi(eps)) < 1e-4
        assert abs(pauli_coefficient(s2, "0000").real - 2.0) < 1e-10
        for other in ("yy00", "zz00", "x00x", "0xx0"):
            assert abs(pauli_coefficient(s2, other)) < 1e-10


class TestTwoSpinRing:
    def test_zero(self):
        assert chain_dressing_n2(0.0) == (2.0, 0.0, 0.0)

    @pytest.mark.parametrize("eps", [0.1, 0.4, 0.9, 1.5, 2.2])
    def test_closed_forms_vs_quadrature(self, eps):
        s1, s2 = chain_coupling_operators(2)
        cpl = [CouplingTerm(eps, s1), CouplingTerm(eps, s2)]
        k1, k2, k3 = chain_dressing_n2(eps)
        sq1 = effective_operator(s1 @ s1, cpl)
        sq2 = effective_operator(s2 @ s2, cpl)
        assert abs(pauli_coefficient(sq1, "xx").real - k1) < 1e-8
        assert abs(pauli_coefficient(sq1, "yy").real - k2) < 1e-8
        assert abs(pauli_coefficient(sq1, "zz").real - k3) < 1e-8
        assert abs(pauli_coefficient(sq2, "xx").real - k2) < 1e-8
        assert abs(pauli_coefficient(sq2, "yy").real - k1) < 1e-8
        assert abs(pauli_coefficient(sq1 + sq2, "xx").real - (k1 + k2)) < 1e-8


class TestChainBuilder:
    def test_bare_limit(self):
        m = build_chain_effective(4, [1.0, 0.7, 1.2, 0.9], 0.0, 8.0)
        bare = sum(d * embed_site(SZ, i, 4) for i, d in enumerate([1.0, 0.7, 1.2, 0.9]))
        assert np.abs(m.h_s_eff - bare).max() < 1e-12

    def test_small_lambda(self):
        m = build_chain_effective(4, 1.0, 1e-7, 8.0)
        bare = sum(embed_site(SZ, i, 4) for i in range(4))
        assert np.abs(m.h_s_eff - bare).max() < 1e-10

    def test_structure(self):
        lam, omega = 6.0, 8.0
        m = build_chain_effective(4, 1.0, lam, omega)
        h = m.h_s_eff
        assert h.shape == (16, 16) and is_hermitian(h)
        parity = embed_site(SZ, 0, 4) @ embed_site(SZ, 1, 4) @ embed_site(SZ, 2, 4) @ embed_site(SZ, 3, 4)
        assert np.abs(h @ parity - parity @ h).max() < 1e-12
        kap = kappa_equal(lam / omega)
        assert abs(pauli_coefficient(h, "z000").real - (2 * kap - 1)) < 1e-12
        bond = -4 * lam**2 / omega * xi(lam / omega)
        assert abs(pauli_coefficient(h, "xx00").real - bond) < 1e-10
        assert abs(pauli_coefficient(h, "0yy0").real - bond) < 1e-10
        assert abs(pauli_coefficient(h, "00xx").real - bond) < 1e-10
        assert abs(pauli_coefficient(h, "y00y").real - bond) < 1e-10
        for op, bath in m.couplings_eff:
            assert is_hermitian(op) and bath.lam == lam
        assert np.allclose(m.couplings_eff[1][0], kap * (embed_site(SY, 1, 4) + embed_site(SY, 2, 4)))

    def test_strong_coupling_regime(self):
        m = build_chain_effective(4, 1.0, 80.0, 8.0)
        assert abs(m.info["splitting_factor"]) < 0.01
        assert abs(m.info["xi"] - 0.62) < 0.02

    def test_two_spin_ring(self):
        eps = 0.7
        m = build_chain_effective(2, 1.0, 8.0 * eps, 8.0)
        k1, k2, k3 = chain_dressing_n2(eps)
        pref = -4 * (8.0 * eps) ** 2 / 8.0
        assert abs(pauli_coefficient(m.h_s_eff, "xx").real - pref * (k1 + k2)) < 1e-10
        assert abs(pauli_coefficient(m.h_s_eff, "zz").real - pref * 2 * k3) < 1e-10

    def test_bond_operators(self):
        assert np.allclose(bond_operator(1, 4), embed_site(SY, 1, 4) @ embed_site(SY, 2, 4))
        assert np.allclose(bond_operator(2, 4), embed_site(SX, 2, 4) @ embed_site(SX, 3, 4))

    def test_errors(self):
        with pytest.raises(ValueError, match="even"):
            build_chain_effective(3, 1.0, 1.0, 8.0)
        with pytest.raises(ValueError, match="splittings"):
            build_chain_effective(4, [1.0, 1.0], 1.0, 8.0)


def closed_form_one_then_two(e1, e2):
    a, b = math.exp(-2 * e1**2), math.exp(-2 * e2**2)
    return 0.5 * (1 + a) * b * SZ + 0.5 * (1 - a) * SX


def closed_form_two_then_one(e1, e2):
    a, b = math.exp(-2 * e1**2), math.exp(-2 * e2**2)
    return 0.5 * (1 + b) * a * SZ + 0.5 * (1 - b) * a * SX


class TestFactorizedDemo:
    @pytest.mark.parametrize("e1,e2", [(0.5, 0.5), (0.7, 0.4), (1.2, 0.3)])
    def test_one_then_two(self, e1, e2):
        out = factorized_polaron_demo(PolaronOrder.ONE_THEN_TWO, S_TILT, SX, e1, e2, SZ)
        assert np.abs(out - closed_form_one_then_two(e1, e2)).max() < 1e-12

    def test_two_then_one_equal_strengths(self):
        out = factorized_polaron_demo("two_then_one", S_TILT, SX, 0.5, 0.5, SZ)
        assert np.abs(out - closed_form_two_then_one(0.5, 0.5)).max() < 1e-12

    @pytest.mark.parametrize("e1,e2", [(0.7, 0.4), (1.2, 0.3)])
    def test_two_then_one_general(self, e1, e2):
        # bath 2 (sigma^x) acts first, bath 1 (tilted) second
        out = factorized_polaron_demo("two_then_one", S_TILT, SX, e1, e2, SZ)
        b = math.exp(-2 * e2**2)
        inner = b * SZ
        a = math.exp(-2 * e1**2)
        along = (np.trace(inner @ S_TILT) / 2) * S_TILT
        expected = along + a * (inner - along)
        assert np.abs(out - expected).max() < 1e-12

    def test_orders_differ(self):
        a = factorized_polaron_demo("one_then_two", S_TILT, SX, 0.5, 0.5, SZ)
        b = factorized_polaron_demo("two_then_one", S_TILT, SX, 0.5, 0.5, SZ)
        assert np.linalg.norm(a - b) > 1e-3

    def test_commuting_orders_agree(self):
        a = factorized_polaron_demo("one_then_two", SX, SX, 0.6, 0.9, SZ)
        b = factorized_polaron_demo("two_then_one", SX, SX, 0.6, 0.9, SZ)
        assert np.abs(a - b).max() < 1e-12

    def test_matches_single_bath_quadrature(self):
        out = single_polaron(SZ, S_TILT, 0.9)
        ref = effective_operator(SZ, [CouplingTerm(0.9, S_TILT)])
        assert np.abs(out - ref).max() < 1e-12

    def test_nonconvergence_flag(self):
        with pytest.raises(ConvergenceError):
            single_polaron(SZ, SX, 5.0, max_order=5)
