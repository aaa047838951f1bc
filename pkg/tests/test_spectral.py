import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from crnrd.equilibria import certify_equilibrium, reference_equilibrium
from crnrd.errors import DegenerateKernel, NotAnEquilibrium, UnsupportedDomain
from crnrd.fixtures import balanced_rates, load_fixture, random_weakly_reversible
from crnrd.network import rhs_jacobian
from crnrd.parser import parse_network
from crnrd.spectral import (
    Domain,
    gap_certificate,
    identity_residual_stats,
    kernel_basis,
    linearize,
    moment_balance_residuals,
    poincare_constant,
    quadratic_identity_residual,
    reaction_dissipation,
    reaction_gap_beta,
)
from crnrd.stoich import analyze_stoichiometry

from . import oracles
from .conftest import BALANCED


def equilibrium(name):
    net = load_fixture(name)
    s = analyze_stoichiometry(net)
    return net, s, certify_equilibrium(net, s).u_inf


class TestLinearize:
    def test_ab(self):
        op = linearize(load_fixture("NET_AB"), [0.5, 0.5], [1, 1])
        np.testing.assert_allclose(op.L, [[-1, 1], [1, -1]], atol=1e-15)

    def test_tri(self):
        op = linearize(load_fixture("NET_TRI"), [1, 1, 1], [1, 1, 1])
        np.testing.assert_allclose(op.L, [[-1, 0, 1], [1, -1, 0], [0, 1, -1]], atol=1e-15)

    @pytest.mark.parametrize("name", BALANCED)
    def test_invariants(self, name):
        net, s, u = equilibrium(name)
        op = linearize(net, u, np.ones(net.n_species))
        np.testing.assert_allclose(op.L, rhs_jacobian(net, u), atol=1e-12)
        assert np.max(np.abs(s.Q @ op.L)) <= 1e-12
        assert op.tangent_residual(s.Q) <= 1e-10

    def test_rejects_non_equilibrium(self):
        with pytest.raises(NotAnEquilibrium):
            linearize(load_fixture("NET_AB"), [1, 2], [1, 1])


class TestIdentity:
    def test_tri_hand_value(self):
        net = load_fixture("NET_TRI")
        u = np.ones(3)
        v = np.array([1.0, 0, 0])
        # LHS = v . Lv / u = -1 ; dissipation = 1/2 (1 + 0 + 1) = 1
        assert (rhs_jacobian(net, u) @ v) @ v == -1
        assert reaction_dissipation(net, u, v) == 1
        assert quadratic_identity_residual(net, u, v) == 0

    def test_zero_vector(self):
        assert quadratic_identity_residual(load_fixture("NET_TRI"), [1, 1, 1], [0, 0, 0]) == 0

    @pytest.mark.parametrize("name", BALANCED)
    def test_dissipation_matches_loop(self, name):
        net, _, u = equilibrium(name)
        v = np.random.default_rng(1).standard_normal(net.n_species)
        assert reaction_dissipation(net, u, v) == pytest.approx(oracles.dissipation_loop(net, u, v), rel=1e-12)

    @given(st.integers(0, 2**32 - 1))
    def test_random_networks(self, seed):
        rng = np.random.default_rng(seed)
        net = random_weakly_reversible(rng, n_species=3, n_complexes=int(rng.integers(2, 5)))
        net = net.with_rates(balanced_rates(net, rng.uniform(0.5, 2, net.n_species), rng))
        u = reference_equilibrium(net)
        stats = identity_residual_stats(net, u, n=20, seed=seed)
        assert stats["max"] <= 1e-10

    def test_fails_off_equilibrium(self):
        with pytest.raises(NotAnEquilibrium):
            quadratic_identity_residual(load_fixture("NET_TRI"), [1, 2, 3], [1, 0, 0])


class TestMoments:
    def test_tri(self):
        net = load_fixture("NET_TRI")
        lhs, rhs = oracles.moment_sums(net, np.ones(3))
        assert lhs[0, 0] == rhs[0, 0] == 1
        assert np.max(moment_balance_residuals(net, np.ones(3))) == 0

    def test_ab(self):
        lhs, rhs = oracles.moment_sums(load_fixture("NET_AB"), np.array([0.5, 0.5]))
        assert lhs[0, 0] == rhs[0, 0] == 0.5

    @pytest.mark.parametrize("name", BALANCED)
    def test_balanced(self, name):
        net, _, u = equilibrium(name)
        res = moment_balance_residuals(net, u)
        assert res.max() <= 1e-10
        lhs, rhs = oracles.moment_sums(net, u)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)

    def test_negative_control(self):
        net, _, u = equilibrium("NET_TRI")
        bad = net.with_rates(net.rates * [1.01, 1, 1])
        assert moment_balance_residuals(bad, u, require_balance=False).max() >= 1e-4
        with pytest.raises(NotAnEquilibrium):
            moment_balance_residuals(bad, u)


class TestBeta:
    @pytest.mark.parametrize("name,u", [("NET_AB", [0.5, 0.5]), ("NET_QUINTIC", [1, 1])])
    def test_two_by_two(self, name, u):
        net = load_fixture(name)
        s = analyze_stoichiometry(net)
        assert reaction_gap_beta(net, u, s.Q) == pytest.approx(2, abs=1e-9)

    def test_tri_against_spectrum(self):
        net, s, u = equilibrium("NET_TRI")
        beta = reaction_gap_beta(net, u, s.Q)
        assert beta == pytest.approx(1.5, abs=1e-9)
        ev = np.linalg.eigvals(rhs_jacobian(net, u))
        nonzero = ev[np.abs(ev) > 1e-9]
        assert beta == pytest.approx(-np.max(nonzero.real), abs=1e-9)

    @pytest.mark.parametrize("name", BALANCED)
    def test_brute_force(self, name):
        net, s, u = equilibrium(name)
        assert reaction_gap_beta(net, u, s.Q) == pytest.approx(oracles.beta_brute_force(net, u, s.Q), abs=1e-6)

    @pytest.mark.parametrize("seed", range(4))
    def test_brute_force_random(self, seed):
        rng = np.random.default_rng(100 + seed)
        net = random_weakly_reversible(rng, n_species=3, n_complexes=4)
        net = net.with_rates(balanced_rates(net, rng.uniform(0.5, 2, net.n_species), rng))
        s = analyze_stoichiometry(net)
        u = reference_equilibrium(net, s)
        oracle = oracles.beta_brute_force(net, u, s.Q, samples=2000)
        assert reaction_gap_beta(net, u, s.Q) == pytest.approx(oracle, abs=1e-6)

    def test_degenerate_kernel(self):
        # two independent laws on two species: ker Q = {0}
        net = parse_network("species: A, B\nA <-> A + B ; k=1, kr=1")
        u = np.array([1.0, 1.0])
        with pytest.raises(DegenerateKernel):
            reaction_gap_beta(net, u, np.eye(2))

    def test_no_conservation_laws(self):
        net = parse_network("A <-> 0 ; k=1, kr=1")
        # dissipation = 1/2 (1 + 1) v^2 / u^2 at u = 1, weight v^2
        assert reaction_gap_beta(net, [1.0], np.zeros((0, 1))) == pytest.approx(1.0)

    def test_kernel_basis_orthonormal(self):
        Z = kernel_basis(analyze_stoichiometry(load_fixture("NET_4SP")).Q)
        assert Z.shape == (4, 1)
        np.testing.assert_allclose(Z.T @ Z, [[1]])


class TestLinearDecay:
    @pytest.mark.parametrize("name", BALANCED)
    def test_ode(self, name):
        net, s, u = equilibrium(name)
        L = rhs_jacobian(net, u)
        beta = reaction_gap_beta(net, u, s.Q)
        Z = kernel_basis(s.Q)
        rng = np.random.default_rng(7)
        ts = np.linspace(0, 5, 101)
        # w = exp(beta t) v keeps the comparison away from underflow:
        # |v(t)|^2 <= exp(-2 beta t) |v(0)|^2  <=>  |w(t)|^2 <= |w(0)|^2
        # L maps into range W = ker Q, so v = Z c with c' = Z^T (L + beta) Z c exactly
        A = Z.T @ (L + beta * np.eye(net.n_species)) @ Z
        for _ in range(5):
            c0 = rng.standard_normal(Z.shape[1])
            sol = solve_ivp(lambda t, c: A @ c, (0, 5), c0, t_eval=ts, rtol=1e-11, atol=1e-14, method="DOP853")
            norms = np.sum((Z @ sol.y) ** 2 / u[:, None], axis=0)
            assert np.all(norms <= norms[0] * (1 + 1e-6))


class TestPoincare:
    @pytest.mark.parametrize(
        "shape,value", [("1", math.pi**2), ("2", math.pi**2 / 4), ("1x2", math.pi**2 / 4), ("2x1", math.pi**2 / 4)]
    )
    def test_values(self, shape, value):
        assert poincare_constant(Domain.parse(shape)) == pytest.approx(value, rel=1e-15)

    def test_3d_unsupported(self):
        with pytest.raises(UnsupportedDomain):
            poincare_constant(Domain.parse("1x1x1"))

    def test_bad_domain_string(self):
        with pytest.raises(UnsupportedDomain):
            Domain.parse("1xq")


class TestCertificate:
    def test_ab_unit_diffusion(self):
        net, s, u = equilibrium("NET_AB")
        cert = gap_certificate(net, u, [1, 1], s.Q, Domain((1.0,)))
        assert cert.lam == pytest.approx(2)
        assert cert.decay_rate == pytest.approx(4)

    def test_ab_slow_diffusion(self):
        net, s, u = equilibrium("NET_AB")
        cert = gap_certificate(net, u, [0.1, 0.1], s.Q, Domain((1.0,)))
        assert cert.lam == pytest.approx(0.1 * math.pi**2, rel=1e-12)
        assert round(cert.lam, 5) == 0.98696

    def test_tri(self):
        net, s, u = equilibrium("NET_TRI")
        assert gap_certificate(net, u, [1, 1, 1], s.Q, Domain((1.0,))).lam == pytest.approx(1.5)

    def test_as_written_form_reported(self):
        net, s, u = equilibrium("NET_AB")
        cert = gap_certificate(net, u, [1, 1], s.Q, Domain((2.0,)))
        assert cert.report()["beta_with_volume_prefactor"] == pytest.approx(cert.beta / 2)

    @given(st.lists(st.floats(0.01, 5), min_size=3, max_size=3), st.integers(0, 2), st.floats(1.0, 4.0))
    def test_monotone_in_diffusion(self, d, i, factor):
        net, s, u = equilibrium("NET_TRI")
        dom = Domain((1.0,))
        d2 = list(d)
        d2[i] *= factor
        a = gap_certificate(net, u, d, s.Q, dom)
        b = gap_certificate(net, u, d2, s.Q, dom)
        assert b.lam >= a.lam
        assert a.lam <= a.beta and a.lam <= a.poincare * min(d) * (1 + 1e-15)

    @given(st.randoms())
    def test_reordering_invariant(self, rnd):
        net, s, u = equilibrium("NET_4SP")
        order = [0, 1]
        rnd.shuffle(order)
        other = net.permuted(order)
        dom = Domain((1.0,))
        a = gap_certificate(net, u, [1, 1, 1, 1], s.Q, dom).lam
        b = gap_certificate(other, u, [1, 1, 1, 1], analyze_stoichiometry(other).Q, dom).lam
        assert a == pytest.approx(b, rel=1e-12)
