import numpy as np
import pytest
from hypothesis import given, strategies as st

from crnrd.equilibria import (
    COMPLEX_ONLY,
    DETAILED,
    NOT_CB,
    birch_project,
    certify_equilibrium,
    check_complex_balance,
    check_detailed_balance,
    is_equilibrium,
    laplacian_kernel,
    reference_equilibrium,
)
from crnrd.errors import NonpositiveConcentration, NonpositiveMass, NotComplexBalanced
from crnrd.fixtures import balanced_rates, load_fixture, random_weakly_reversible
from crnrd.parser import parse_network
from crnrd.stoich import analyze_stoichiometry

from .conftest import BALANCED


def random_balanced(seed, reversible_only=False):
    rng = np.random.default_rng(seed)
    net = random_weakly_reversible(
        rng, n_species=int(rng.integers(2, 4)), n_complexes=int(rng.integers(2, 5)), reversible_only=reversible_only
    )
    u_star = rng.uniform(0.5, 2.0, net.n_species)
    return net.with_rates(balanced_rates(net, u_star, rng)), u_star


class TestComplexBalance:
    def test_tri_balanced(self):
        np.testing.assert_array_equal(check_complex_balance(load_fixture("NET_TRI"), [1, 1, 1]), 0)

    def test_tri_imbalance_at_a(self):
        # complex A: out 2, in u_C = 1 -> |2 - 1| / (1 + 3)
        res = check_complex_balance(load_fixture("NET_TRI"), [2, 1, 1])
        assert res[0] == pytest.approx(1 / 4)

    def test_requires_positive(self):
        with pytest.raises(NonpositiveConcentration):
            check_complex_balance(load_fixture("NET_TRI"), [0, 1, 1])


class TestDetailedBalance:
    @pytest.mark.parametrize("c", [0.1, 1.0, 7.5])
    def test_ab(self, c):
        rep = check_detailed_balance(load_fixture("NET_AB"), [c, c])
        assert rep.paired and rep.max_residual == 0.0

    def test_tri_unpaired(self):
        rep = check_detailed_balance(load_fixture("NET_TRI"), [1, 2, 3])
        assert not rep.paired and rep.unpaired == [0, 1, 2]

    def test_4sp_hand_value(self):
        # 2 * 1 * 1 == 1 * 2 * 1
        rep = check_detailed_balance(load_fixture("NET_4SP"), [1, 2, 1, 1])
        assert rep.paired and rep.max_residual == 0.0


class TestReference:
    def test_tri(self):
        np.testing.assert_allclose(reference_equilibrium(load_fixture("NET_TRI")), [1, 1, 1], rtol=1e-12)

    def test_ab_ratio(self):
        u = reference_equilibrium(parse_network("A <-> B ; k=1, kr=2"))
        np.testing.assert_allclose(u, [1, 0.5], rtol=1e-12)

    def test_irreversible(self):
        with pytest.raises(NotComplexBalanced):
            reference_equilibrium(load_fixture("NET_AB_IRREV"))

    def test_unbalanced_rates_rejected(self):
        # weakly reversible, deficiency one, generic rates break complex balance
        net = parse_network("A <-> 2 A ; k=1, kr=1\nA + B <-> 2 B ; k=1, kr=3\nB <-> 0 ; k=1, kr=5")
        with pytest.raises(NotComplexBalanced) as exc:
            reference_equilibrium(net)
        assert exc.value.residual > 1e-8

    def test_laplacian_kernel_tri(self):
        net = parse_network("A -> B ; k=1\nB -> C ; k=2\nC -> A ; k=4")
        rho = laplacian_kernel(net, [0, 1, 2])
        # flux balance on a cycle: k_i rho_i equal for all i
        k_rho = np.array([1, 2, 4]) * rho
        np.testing.assert_allclose(k_rho, k_rho[0], rtol=1e-12)

    @pytest.mark.parametrize("name", BALANCED)
    def test_fixtures_balanced(self, name):
        net = load_fixture(name)
        u = reference_equilibrium(net)
        assert np.all(u > 0)
        assert check_complex_balance(net, u).max() <= 1e-10

    @given(st.integers(0, 2**32 - 1))
    def test_random_balanced(self, seed):
        net, _ = random_balanced(seed)
        u = reference_equilibrium(net)
        assert check_complex_balance(net, u).max() <= 1e-10

    @given(st.integers(0, 2**32 - 1), st.randoms())
    def test_reaction_order_independent(self, seed, rnd):
        net, _ = random_balanced(seed)
        order = list(range(net.n_reactions))
        rnd.shuffle(order)
        np.testing.assert_allclose(
            reference_equilibrium(net.permuted(order)), reference_equilibrium(net), rtol=1e-10, atol=1e-10
        )


class TestBirch:
    def test_ab(self):
        net = load_fixture("NET_AB")
        u = birch_project(net, analyze_stoichiometry(net), [0.5, 0.5], [2.0])
        np.testing.assert_allclose(u, [1, 1], atol=1e-10)

    def test_tri(self):
        net = load_fixture("NET_TRI")
        u = birch_project(net, analyze_stoichiometry(net), [1, 1, 1], [6.0])
        np.testing.assert_allclose(u, [2, 2, 2], atol=1e-10)

    def test_fixed_point(self):
        net = load_fixture("NET_4SP")
        s = analyze_stoichiometry(net)
        u_ref = reference_equilibrium(net, s)
        np.testing.assert_allclose(birch_project(net, s, u_ref, s.Q @ u_ref), u_ref, rtol=1e-13)

    def test_no_conservation_laws(self):
        net = parse_network("A <-> 0 ; k=1, kr=2")
        s = analyze_stoichiometry(net)
        assert s.m == 0
        np.testing.assert_array_equal(birch_project(net, s, [2.0], []), [2.0])

    @pytest.mark.parametrize("M", [[0.0], [-1.0]])
    def test_nonpositive_mass(self, M):
        net = load_fixture("NET_AB")
        with pytest.raises(NonpositiveMass):
            birch_project(net, analyze_stoichiometry(net), [1, 1], M)

    @given(st.floats(0.01, 100))
    def test_scaling_covariance(self, M):
        net = load_fixture("NET_TRI")
        s = analyze_stoichiometry(net)
        u1 = birch_project(net, s, [1, 1, 1], [M])
        u2 = birch_project(net, s, [1, 1, 1], [2 * M])
        np.testing.assert_allclose(u2, 2 * u1, rtol=1e-10)

    @pytest.mark.parametrize("name", BALANCED)
    @pytest.mark.parametrize("seed", range(5))
    def test_uniqueness(self, name, seed):
        rng = np.random.default_rng(seed)
        net = load_fixture(name)
        s = analyze_stoichiometry(net)
        u_ref = reference_equilibrium(net, s)
        M = s.Q @ rng.uniform(0.2, 3.0, net.n_species)
        other = u_ref * np.exp(s.Q.T @ rng.normal(size=s.m))
        a = birch_project(net, s, u_ref, M)
        b = birch_project(net, s, other, M)
        np.testing.assert_allclose(a, b, rtol=1e-8)
        assert np.max(np.abs(s.Q @ a - M)) <= 1e-10 * (1 + np.max(np.abs(M)))
        assert check_complex_balance(net, a).max() <= 1e-10

    def test_quintic_extreme_mass(self):
        net = load_fixture("NET_QUINTIC")
        s = analyze_stoichiometry(net)
        for M in (1e-4, 1e4):
            u = birch_project(net, s, [1, 1], [M])
            assert abs(u.sum() - M) <= 1e-10 * (1 + M)


class TestIsEquilibrium:
    def test_boundary(self):
        ok, res = is_equilibrium(load_fixture("NET_AB_IRREV"), [0, 1])
        assert ok and res == 0.0

    def test_not_equilibrium(self):
        ok, res = is_equilibrium(load_fixture("NET_AB"), [1, 2])
        assert not ok and res == 1.0

    @pytest.mark.parametrize("name", BALANCED)
    def test_projected(self, name):
        net = load_fixture(name)
        cert = certify_equilibrium(net, mass=None)
        assert is_equilibrium(net, cert.u_inf)[0]


class TestCertificate:
    def test_irrev(self):
        cert = certify_equilibrium(load_fixture("NET_AB_IRREV"))
        assert cert.classification == NOT_CB and cert.u_inf is None

    def test_tri(self):
        assert certify_equilibrium(load_fixture("NET_TRI")).classification == COMPLEX_ONLY

    def test_4sp_equal_rates(self):
        net = load_fixture("NET_4SP").with_rates([1.5, 1.5])
        assert certify_equilibrium(net).classification == DETAILED

    def test_4sp_reference_and_mass(self):
        cert = certify_equilibrium(load_fixture("NET_4SP"), u0_mean=[1, 2, 3, 4])
        assert cert.classification == DETAILED
        s = analyze_stoichiometry(load_fixture("NET_4SP"))
        np.testing.assert_allclose(s.Q @ cert.u_inf, s.Q @ np.array([1, 2, 3, 4.0]), rtol=1e-12)
        assert cert.cb_residual <= 1e-10 and cert.mass_residual <= 1e-10 * (1 + np.max(cert.mass))

    def test_report_round_numbers(self):
        rep = certify_equilibrium(load_fixture("NET_AB"), mass=[2.0]).report()
        np.testing.assert_allclose(rep["u_inf"], [1, 1], atol=1e-12)
        assert rep["classification"] == DETAILED

    @given(st.integers(0, 2**32 - 1), st.booleans())
    def test_detailed_implies_complex(self, seed, rev):
        net, u_star = random_balanced(seed, reversible_only=rev)
        cert = certify_equilibrium(net)
        assert cert.complex_balanced
        if cert.classification == DETAILED:
            assert cert.cb_residual <= 1e-10
        # the balancing point lies on the equilibrium manifold
        assert check_complex_balance(net, u_star).max() <= 1e-10
