import numpy as np
import pytest

from nsfk import dissipativity as dis
from nsfk import symbols as sym
from nsfk.thermo import State, ideal_gas_eos


class TestSymmetrizer:
    def test_identity_at_origin(self, ref_coeffs):
        assert np.allclose(dis.symbol_symmetrizer(ref_coeffs, 0.0), np.eye(3),
                           atol=1e-15)

    def test_reference_value(self, ref_coeffs):
        s = dis.symbol_symmetrizer(ref_coeffs, 1.0)
        assert np.allclose(np.diag(s), [3.0, 1.0, 1.0], atol=1e-14)

    def test_symmetrizes_symbols(self, ref_coeffs):
        xi = np.linspace(-40, 40, 101)
        s = dis.symbol_symmetrizer(ref_coeffs, xi)
        trip = sym.symbol_triplet(ref_coeffs)
        sa = s @ trip.a(xi)
        sb = s @ trip.b(xi)
        sa0 = s @ ref_coeffs.A0
        for m in (sa, sb, sa0):
            assert np.abs(m - np.swapaxes(m, -1, -2)).max() <= 1e-14 * max(
                1.0, np.abs(m).max())
        assert np.linalg.eigvalsh(sa0).min() > 0


class TestTransformedTriplet:
    def test_closed_form_at_origin(self, ref_coeffs):
        tt = dis.transformed_triplet(ref_coeffs)
        c = np.sqrt(2.0 / 3.0)
        assert np.allclose(tt.atilde(0.0),
                           [[0, 1, 0], [1, 0, c], [0, c, 0]], atol=1e-12)

    def test_btilde(self, ref_coeffs):
        tt = dis.transformed_triplet(ref_coeffs)
        assert np.allclose(tt.Btilde, np.diag([0.0, 1.0, 2.0 / 3.0]), atol=1e-14)

    def test_congruence_agreement(self, ref_coeffs):
        tt = dis.transformed_triplet(ref_coeffs)
        xi = np.concatenate([np.linspace(-90, 90, 181), [1e-4, 1e3]])
        assert np.abs(tt.atilde(xi) - tt.atilde_congruence(xi)).max() <= 1e-12 * max(
            1.0, np.abs(tt.atilde(xi)).max())


class TestEigenvalues:
    def test_extreme_pair_at_origin(self, ref_coeffs):
        lam = dis.atilde_eigenvalues(ref_coeffs, 0.0)
        root = np.sqrt(5.0 / 3.0)
        assert np.allclose(lam, [-root, 0.0, root], atol=1e-13)

    def test_match_numeric_solver(self, ref_coeffs):
        xi = np.linspace(-100, 100, 2001)
        closed = dis.atilde_eigenvalues(ref_coeffs, xi)
        numeric = np.sort(np.linalg.eigvalsh(
            dis.transformed_triplet(ref_coeffs).atilde(xi)), axis=-1)
        assert np.abs(closed - numeric).max() <= 1e-12

    def test_simple_and_middle_is_velocity(self):
        eos = ideal_gas_eos(1.0, 5.0 / 3.0, 1.0, 1.0, 1.0)
        coeffs = sym.equilibrium_coefficients(eos, State(1.3, 0.7, 0.9))
        xi = np.linspace(-30, 30, 301)
        lam = dis.atilde_eigenvalues(coeffs, xi)
        assert np.all(np.diff(lam, axis=-1) > 0)
        assert np.allclose(lam[:, 1], 0.7, atol=1e-14)


class TestGenuineCoupling:
    def test_reference_passes(self, ref_coeffs):
        grid = dis.default_xi_grid(n_per_decade=301)
        rep = dis.check_genuine_coupling(sym.symbol_triplet(ref_coeffs), grid)
        assert rep.passed
        assert rep.min_margin > 0.1

    def test_transformed_triplet_passes(self, ref_coeffs):
        grid = dis.default_xi_grid(n_per_decade=101)
        rep = dis.check_genuine_coupling(dis.transformed_triplet(ref_coeffs), grid)
        assert rep.passed

    def test_nsf_subcase_passes(self, nsf_coeffs):
        grid = dis.default_xi_grid(n_per_decade=301)
        rep = dis.check_genuine_coupling(sym.symbol_triplet(nsf_coeffs), grid)
        assert rep.passed

    def test_decoupled_control_fails(self, ref_coeffs):
        # B = 0 makes every vector a kernel vector; A = A0 pairs each with
        # itself, so rho = -1 kills the pencil
        a0 = ref_coeffs.A0
        rep = dis.genuine_coupling_scan(
            lambda xi: a0, lambda xi: a0, lambda xi: np.zeros((3, 3)),
            np.linspace(-5, 5, 21))
        assert not rep.passed
        assert rep.failures


class TestFriedrichs:
    def test_capillary_system_infeasible(self, ref_coeffs):
        rep = dis.check_friedrichs(ref_coeffs)
        assert not rep.feasible
        assert rep.nullspace_dim == 0

    def test_nsf_feasible(self, nsf_coeffs):
        rep = dis.check_friedrichs(nsf_coeffs)
        assert rep.feasible
        s = rep.symmetrizer
        assert np.linalg.eigvalsh(s).min() > 0
        sa0 = s @ nsf_coeffs.A0
        assert np.abs(sa0 - sa0.T).max() <= 1e-10
        assert np.linalg.eigvalsh(0.5 * (sa0 + sa0.T)).min() > 0

    def test_symmetric_first_order_feasible(self):
        # D2 = D3 = 0 and symmetric D1: the identity symmetrizes everything
        a0 = np.diag([2.0, 1.0, 0.5])
        d1 = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 2.0], [0.0, 2.0, 0.0]])
        # a0 here is diagonal with distinct entries, so S must be diagonal;
        # identity remains admissible
        rep = dis.friedrichs_search(np.eye(3), [d1, np.zeros((3, 3)),
                                                np.zeros((3, 3))])
        assert rep.feasible

    def test_forced_zero_diagonal_certificate(self):
        # only the capillarity-type constraint: S D3 symmetric with
        # D3 = e_2 e_1^T forces S[1,1] = 0
        d3 = np.zeros((3, 3))
        d3[1, 0] = -1.0
        rep = dis.friedrichs_search(np.eye(3), [np.zeros((3, 3)),
                                                np.zeros((3, 3)), d3])
        assert not rep.feasible
        assert "S[1,1] = 0" in rep.certificate


class TestCompensatingMatrix:
    def test_window_values(self, ref_coeffs):
        gamma_bar, lo, hi = dis.compensating_window(ref_coeffs)
        assert gamma_bar == pytest.approx(1.0 / 6.0, abs=1e-13)
        assert lo == pytest.approx(1.0 / 6.0, abs=1e-13)
        assert hi == pytest.approx(0.5, abs=1e-13)
        k = dis.compensating_matrix(ref_coeffs)
        assert k.eps == pytest.approx(1.0 / 3.0, abs=1e-13)

    def test_skew_symmetry(self, ref_coeffs):
        k = dis.compensating_matrix(ref_coeffs, 1.0 / 3.0)
        xi = np.linspace(-80, 80, 161)
        K = k(xi)
        assert np.abs(K + np.swapaxes(K, -1, -2)).max() == 0.0

    def test_rejects_out_of_window(self, ref_coeffs):
        for eps in (0.0, 1.0 / 6.0, 0.5, 0.9, -0.1):
            with pytest.raises(ValueError):
                dis.compensating_matrix(ref_coeffs, eps)

    def test_decay_at_large_frequency(self, ref_coeffs):
        k = dis.compensating_matrix(ref_coeffs, 1.0 / 3.0)
        xi = np.array([10.0, 100.0, 1000.0])
        norms = np.linalg.norm(k(xi), ord=2, axis=(-2, -1))
        # |K| ~ 1/xi: multiplying xi by 10 divides the norm by ~10
        assert norms[1] == pytest.approx(norms[0] / 10.0, rel=0.05)
        assert np.all(np.abs(xi * norms) <= 0.24)

    def test_no_window_without_dissipation(self):
        eos = ideal_gas_eos(1.0, 5.0 / 3.0, 1.0, 0.0, 0.0)
        coeffs = sym.equilibrium_coefficients(eos, State(1.0, 0.0, 1.0))
        with pytest.raises(ValueError):
            dis.compensating_matrix(coeffs)


class TestCertificate:
    def test_reference_certificate(self, ref_coeffs):
        cert = dis.verify_certificate(ref_coeffs, eps=1.0 / 3.0,
                                      xi_grid=np.linspace(-100, 100, 8001))
        assert cert.passed
        assert cert.min_eig >= 1.0 / 6.0 - 1e-10
        assert cert.off_diagonal_residual <= 1e-14
        assert np.isfinite(cert.sup_K) and np.isfinite(cert.sup_xiK)

    def test_vanishing_eps_fails_bound(self, ref_coeffs):
        # negative control: with eps -> 0 the (1,1) entry of [K A]^s + B
        # degenerates to 0 < gamma_bar; the product bound must fail
        tt = dis.transformed_triplet(ref_coeffs)
        xi = np.linspace(-10, 10, 101)
        xi = xi[xi != 0]
        a = tt.atilde(xi)
        gamma_bar, _, _ = dis.compensating_window(ref_coeffs)
        for eps in (0.0, 1e-6):
            rb = np.sqrt(ref_coeffs.beta(xi))
            K = np.zeros(xi.shape + (3, 3))
            K[..., 0, 1] = 1.0
            K[..., 1, 0] = -1.0
            K[..., 1, 2] = ref_coeffs.cbar / rb
            K[..., 2, 1] = -ref_coeffs.cbar / rb
            K = (eps / rb)[..., None, None] * K
            ka = K @ a
            total = 0.5 * (ka + np.swapaxes(ka, -1, -2)) + tt.Btilde
            assert np.linalg.eigvalsh(total).min() < gamma_bar


class TestSpectralBound:
    def test_reference_classification(self, ref_coeffs):
        rep = dis.spectral_bound(ref_coeffs, dis.default_xi_grid(n_per_decade=2001))
        assert rep.strictly_dissipative
        assert rep.p == pytest.approx(1.0, abs=0.05)
        assert rep.q == pytest.approx(0.0, abs=0.05)
        assert rep.classification == "regularity-gain"
        assert rep.c0 > 0 and rep.c0_uniform > 0

    def test_sigma_even(self, ref_coeffs):
        xi = np.linspace(-30, 30, 121)
        xi = xi[xi != 0]
        rep = dis.spectral_bound(ref_coeffs, xi,
                                 small_window=(0.1, 1.0), large_window=(5.0, 30.0))
        sigma = rep.sigma
        assert np.abs(sigma - sigma[::-1]).max() <= 1e-12

    def test_nsf_subcase_records_standard_type(self, nsf_coeffs):
        rep = dis.spectral_bound(nsf_coeffs, dis.default_xi_grid(n_per_decade=1001))
        # recorded, not asserted against any stated value: the run must be
        # strictly dissipative with a (1, 1)-type large-frequency saturation
        assert rep.strictly_dissipative
        assert rep.p == pytest.approx(1.0, abs=0.05)
        assert rep.q == pytest.approx(1.0, abs=0.05)

    def test_no_dissipation_fails(self):
        eos = ideal_gas_eos(1.0, 5.0 / 3.0, 1.0, 0.0, 0.0)
        coeffs = sym.equilibrium_coefficients(eos, State(1.0, 0.0, 1.0))
        rep = dis.spectral_bound(coeffs, dis.default_xi_grid(n_per_decade=301))
        assert not rep.strictly_dissipative
        assert rep.classification == "not strictly dissipative"


class TestLyapunov:
    def test_reference_passes(self, ref_coeffs):
        rep = dis.lyapunov_check(ref_coeffs, eps=1.0 / 3.0, delta=0.05,
                                 n_modes=50, seed=7)
        assert rep.passed
        assert rep.worst_slack <= 1e-10
        assert rep.max_imag <= 1e-14
        assert rep.equivalence_ok

    def test_zero_delta_inconclusive(self, ref_coeffs):
        rep = dis.lyapunov_check(ref_coeffs, eps=1.0 / 3.0, delta=0.0)
        assert rep.inconclusive
        assert not rep.passed
