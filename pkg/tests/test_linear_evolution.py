import numpy as np
import pytest

from nsfk import dissipativity as dis
from nsfk import linear_evolution as lin
from nsfk import symbols as sym
from nsfk.thermo import State, ideal_gas_eos


@pytest.fixture(scope="module")
def small_nodes():
    return lin.geometric_nodes(n_nodes=1024, xi_max=200.0, h0=1e-4)


class TestQuadrature:
    def test_node_layout(self, small_nodes):
        nodes, weights = small_nodes
        assert nodes.size == 2 * (1024 // 2) + 1
        assert np.all(np.diff(nodes) > 0)
        assert np.allclose(nodes, -nodes[::-1], atol=0.0)
        assert np.diff(nodes).min() == pytest.approx(1e-4, rel=1e-10)
        assert nodes[-1] == pytest.approx(200.0, rel=1e-9)
        assert np.all(weights > 0)

    def test_gaussian_moments_oracle(self, small_nodes):
        # independent oracle: int exp(-2 xi^2) = sqrt(pi/2),
        # int xi^2 exp(-2 xi^2) = sqrt(pi/2)/4, evaluated in closed form
        nodes, weights = small_nodes
        prof = lin.gaussian_profile(nodes, weights)
        exact_sq = (3.0 + 0.25) * np.sqrt(np.pi / 2.0)
        got = lin.weighted_norm(prof, ell=0)
        assert abs(got - np.sqrt(exact_sq)) <= 1e-6 * np.sqrt(exact_sq)

    def test_invalid_requests(self):
        with pytest.raises(ValueError):
            lin.geometric_nodes(n_nodes=2)
        with pytest.raises(ValueError):
            lin.geometric_nodes(n_nodes=64, xi_max=1e-4, h0=1e-4)


class TestProfiles:
    def test_gaussian_hermitian(self, small_nodes):
        prof = lin.gaussian_profile(*small_nodes)
        assert prof.hermitian_defect() == 0.0

    def test_zero_mass_hermitian_and_vanishing_mean(self, small_nodes):
        prof = lin.zero_mass_gaussian_profile(*small_nodes)
        assert prof.hermitian_defect() <= 1e-16
        mid = prof.xi_nodes.size // 2
        assert prof.xi_nodes[mid] == 0.0
        assert np.abs(prof.modes[mid]).max() == 0.0

    def test_validation(self, small_nodes):
        nodes, weights = small_nodes
        with pytest.raises(ValueError):
            lin.SpectralProfile(nodes[::-1], weights, np.zeros((nodes.size, 3)))
        with pytest.raises(ValueError):
            lin.SpectralProfile(nodes, weights, np.zeros((4, 3)))


class TestPropagation:
    def test_time_zero_identity(self, ref_coeffs):
        mode = np.array([1.0 + 2.0j, -0.5j, 0.25])
        out = lin.propagate_mode(ref_coeffs, mode, 3.0, 0.0)
        assert np.all(out == mode)

    def test_zero_frequency_frozen(self, ref_coeffs):
        mode = np.array([0.3, 1.0 - 1.0j, -2.0])
        out = lin.propagate_mode(ref_coeffs, mode, 0.0, 17.0)
        assert np.abs(out - mode).max() <= 1e-14

    def test_negative_time_rejected(self, ref_coeffs):
        prop = lin.ModePropagator(ref_coeffs, np.array([1.0]))
        with pytest.raises(ValueError):
            prop.propagate(np.zeros((1, 3), dtype=complex), -1.0)

    def test_semigroup_property(self, ref_coeffs, small_nodes):
        nodes, weights = small_nodes
        prof = lin.gaussian_profile(nodes, weights)
        prop = lin.ModePropagator(ref_coeffs, nodes)
        one = prop.propagate(prof.modes, 2.5)
        two = prop.propagate(prop.propagate(prof.modes, 1.0), 1.5)
        assert np.abs(one - two).max() <= 1e-10

    def test_hermitian_symmetry_preserved(self, ref_coeffs, small_nodes):
        nodes, weights = small_nodes
        prof = lin.gaussian_profile(nodes, weights)
        prop = lin.ModePropagator(ref_coeffs, nodes)
        evolved = prof.with_modes(prop.propagate(prof.modes, 4.0))
        assert evolved.hermitian_defect() <= 1e-12

    def test_modal_bound(self, ref_coeffs, rng):
        # |exp(-t M) v| <= C exp(-c0 xi^2 t)|v| with the certified uniform c0;
        # compared in log space so the exponential factor cannot underflow
        spect = dis.spectral_bound(ref_coeffs, dis.default_xi_grid(n_per_decade=501))
        c0 = 0.95 * spect.c0_uniform
        xi = np.array([0.05, 0.4, 1.3, 6.0, 40.0])
        prop = lin.ModePropagator(ref_coeffs, xi)
        for _ in range(5):
            v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            v /= np.linalg.norm(v)
            for t in (0.1, 1.0, 10.0):
                out = prop.propagate(np.broadcast_to(v, (xi.size, 3)).copy(), t)
                norms = np.linalg.norm(out, axis=1)
                mask = norms > 0
                log_ratio = np.log(norms[mask]) + c0 * xi[mask] ** 2 * t
                assert np.all(log_ratio <= np.log(10.0))

    def test_matrix_exponentials_against_scipy(self, ref_coeffs):
        from scipy.linalg import expm
        gen = sym.evolution_symbol(ref_coeffs, np.array([0.7, 3.0]))
        ours = lin.matrix_exponentials(gen, 0.9)
        for k in range(2):
            assert np.abs(ours[k] - expm(-0.9 * gen[k])).max() <= 1e-12


class TestWeightedNorm:
    def test_zero_profile(self, small_nodes):
        nodes, weights = small_nodes
        prof = lin.SpectralProfile(nodes, weights,
                                   np.zeros((nodes.size, 3), dtype=complex))
        assert lin.weighted_norm(prof, 0) == 0.0

    def test_density_weight_exceeds_plain_l2(self, small_nodes):
        nodes, weights = small_nodes
        prof = lin.gaussian_profile(nodes, weights, amplitudes=(1.0, 0.0, 0.0))
        weighted = lin.weighted_norm(prof, 0) ** 2
        plain = float(np.sum(weights * np.abs(prof.modes[:, 0]) ** 2))
        assert weighted / plain > 1.0


class TestDecayFits:
    def test_generic_data_rates(self, ref_coeffs, small_nodes):
        nodes, weights = small_nodes
        prof = lin.gaussian_profile(nodes, weights)
        times = np.logspace(-1, 4, 31)
        fit0 = lin.evolve_and_fit(ref_coeffs, prof, times, 0, (1e2, 1e4))
        fit1 = lin.evolve_and_fit(ref_coeffs, prof, times, 1, (1e2, 1e4))
        assert fit0.exponent == pytest.approx(-0.25, abs=0.05)
        assert fit1.exponent == pytest.approx(-0.75, abs=0.05)
        assert not fit0.flagged and not fit1.flagged

    def test_zero_mass_data_decays_faster(self, ref_coeffs, small_nodes):
        nodes, weights = small_nodes
        prof = lin.zero_mass_gaussian_profile(nodes, weights)
        times = np.logspace(-1, 4, 31)
        fit = lin.evolve_and_fit(ref_coeffs, prof, times, 0, (1e2, 1e4))
        assert fit.exponent <= -0.7

    def test_times_must_increase(self, ref_coeffs, small_nodes):
        prof = lin.gaussian_profile(*small_nodes)
        with pytest.raises(ValueError):
            lin.evolve_and_fit(ref_coeffs, prof, [1.0, 1.0, 2.0])

    def test_upsilon_monotone_per_mode(self, ref_coeffs, rng):
        # cross-check with the Lyapunov certificate: Y(t) decreases along
        # the exact transformed flow for every sampled mode
        k_fn = dis.compensating_matrix(ref_coeffs, 1.0 / 3.0)
        tt = dis.transformed_triplet(ref_coeffs)
        delta = 0.05
        for xi in (0.3, 1.0, 5.0):
            gen = 1j * xi * tt.atilde(xi) + xi ** 2 * tt.Btilde
            lam, V = np.linalg.eig(gen)
            Vinv = np.linalg.inv(V)
            K = k_fn(xi)
            v0 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            times = np.linspace(0.0, 5.0, 41)
            values = []
            for t in times:
                v = V @ (np.exp(-lam * t) * (Vinv @ v0))
                y = np.vdot(v, v).real - delta * xi * np.vdot(v, 1j * K @ v).real
                values.append(y)
            diffs = np.diff(values)
            assert np.all(diffs <= 1e-12)


class TestPointwise:
    def test_reference_bound(self, ref_coeffs):
        spect = dis.spectral_bound(ref_coeffs, dis.default_xi_grid(n_per_decade=501))
        rep = lin.verify_pointwise(ref_coeffs,
                                   np.linspace(-60, 60, 121),
                                   np.array([0.0, 0.5, 2.0, 10.0, 50.0]),
                                   c0=0.9 * spect.c0_uniform, seed=5)
        assert rep.passed
        assert rep.observed_constant >= 1.0  # t = 0 ratio is exactly 1

    def test_stronger_dissipation_larger_rate(self, ref_coeffs):
        # scaling mu, alpha by 10 speeds up every long-wave mode by ~10 and
        # raises the fitted c0; the uniform min over all xi instead moves to
        # the overdamped large-xi branch (~ beta/mu), so it is not compared
        eos10 = ideal_gas_eos(1.0, 5.0 / 3.0, 1.0, 10.0, 10.0)
        coeffs10 = sym.equilibrium_coefficients(eos10, State(1.0, 0.0, 1.0))
        grid = dis.default_xi_grid(n_per_decade=501)
        base = dis.spectral_bound(ref_coeffs, grid)
        strong = dis.spectral_bound(coeffs10, grid)
        assert strong.c0 > base.c0
        small = np.argmin(np.abs(np.abs(base.xi) - 0.01))
        assert strong.sigma[small] < base.sigma[small] < 0
        rep = lin.verify_pointwise(coeffs10, np.linspace(-30, 30, 61),
                                   np.array([0.0, 1.0, 5.0]),
                                   c0=0.9 * strong.c0_uniform, seed=5)
        assert rep.passed
