import numpy as np
import pytest

from nsfk import convex_extension as cx
from nsfk.thermo import State


def fd_jacobian(fn, state, h=1e-6):
    base = np.array([state.rho, state.u, state.theta], dtype=float)
    cols = []
    for j in range(3):
        hi, lo = base.copy(), base.copy()
        hi[j] += h
        lo[j] -= h
        cols.append((fn(State(*hi)) - fn(State(*lo))) / (2 * h))
    return np.stack(cols, axis=-1)


class TestMapsAndJacobians:
    def test_jacobians_match_finite_differences(self, ref_eos, domain, rng):
        states = domain.sample_states(30, rng)
        for i in range(30):
            s = State(float(np.asarray(states.rho)[i]),
                      float(np.asarray(states.u)[i]),
                      float(np.asarray(states.theta)[i]))
            for analytic, mapped in ((cx.jac_f0, cx.f0), (cx.jac_f1, cx.f1),
                                     (cx.jac_z, cx.z_map)):
                J = analytic(ref_eos, s)
                J_fd = fd_jacobian(lambda st: mapped(ref_eos, st), s)
                scale = max(1.0, np.abs(J_fd).max())
                assert np.abs(J - J_fd).max() <= 1e-6 * scale

    def test_jacobian_inverse(self, ref_eos, domain, rng):
        states = domain.sample_states(50, rng)
        for i in range(50):
            s = State(float(np.asarray(states.rho)[i]),
                      float(np.asarray(states.u)[i]),
                      float(np.asarray(states.theta)[i]))
            prod = cx.jac_f0(ref_eos, s) @ cx.jac_f0_inv(ref_eos, s)
            assert np.abs(prod - np.eye(3)).max() <= 1e-12

    def test_jacobian_determinant(self, ref_eos, domain, rng):
        # det D_U f0 = rho^2 e_theta, closed form
        states = domain.sample_states(50, rng)
        for i in range(50):
            rho = float(np.asarray(states.rho)[i])
            theta = float(np.asarray(states.theta)[i])
            s = State(rho, float(np.asarray(states.u)[i]), theta)
            det = np.linalg.det(cx.jac_f0(ref_eos, s))
            expected = rho ** 2 * float(np.asarray(ref_eos.e_theta(rho, theta)))
            assert det == pytest.approx(expected, rel=1e-12)
            assert det > 0


class TestZMap:
    def test_reference_value(self, ref_eos, ref_equilibrium):
        # eta(1,1) = 1.5 and (e + p/rho)/theta = 2.5, so Z = (1, 0, -1) by hand
        z = cx.z_map(ref_eos, ref_equilibrium)
        assert np.allclose(z, [1.0, 0.0, -1.0], atol=1e-14)

    def test_second_component_vanishes_at_rest(self, ref_eos):
        z = cx.z_map(ref_eos, State(1.7, 0.0, 0.6))
        assert z[1] == 0.0

    def test_third_component(self, ref_eos, domain, rng):
        states = domain.sample_states(20, rng)
        z = cx.z_map(ref_eos, State(states.rho, states.u, states.theta))
        assert np.allclose(z[..., 2], -1.0 / np.asarray(states.theta), atol=1e-14)


class TestHessian:
    def test_symmetry_and_positivity(self, ref_eos, domain, rng):
        states = domain.sample_states(100, rng)
        for i in range(100):
            s = State(float(np.asarray(states.rho)[i]),
                      float(np.asarray(states.u)[i]),
                      float(np.asarray(states.theta)[i]))
            H = cx.hessian_entropy(ref_eos, s)
            assert np.abs(H - H.T).max() <= 1e-12 * max(1.0, np.abs(H).max())
            assert np.linalg.eigvalsh(0.5 * (H + H.T)).min() > 0

    def test_congruence_with_a0(self, ref_eos, ref_equilibrium, domain, rng):
        # (D_U f0)^T H (D_U f0) = A0; at the reference state A0 = diag(1,1,1.5)
        H = cx.hessian_entropy(ref_eos, ref_equilibrium)
        J = cx.jac_f0(ref_eos, ref_equilibrium)
        assert np.abs(J.T @ H @ J - np.diag([1.0, 1.0, 1.5])).max() <= 1e-12
        states = domain.sample_states(30, rng)
        for i in range(30):
            s = State(float(np.asarray(states.rho)[i]),
                      float(np.asarray(states.u)[i]),
                      float(np.asarray(states.theta)[i]))
            H = cx.hessian_entropy(ref_eos, s)
            J = cx.jac_f0(ref_eos, s)
            a0, _, _ = cx.coefficient_matrices(ref_eos, s)
            assert np.abs(J.T @ H @ J - a0).max() <= 1e-12 * max(1.0, np.abs(a0).max())


class TestCoefficientMatrices:
    def test_reference_values(self, ref_eos, ref_equilibrium):
        a0, a1, b = cx.coefficient_matrices(ref_eos, ref_equilibrium)
        assert np.allclose(a0, np.diag([1.0, 1.0, 1.5]), atol=1e-14)
        assert np.allclose(a1, [[0, 1, 0], [1, 0, 1], [0, 1, 0]], atol=1e-14)
        assert np.allclose(b, np.diag([0.0, 1.0, 1.0]), atol=1e-14)

    def test_transport_entries_scale_with_velocity(self, ref_eos):
        # diagonal entries of A1 are the only ones that pick up ubar
        _, a1_rest, _ = cx.coefficient_matrices(ref_eos, State(1.0, 0.0, 1.0))
        _, a1_mov, _ = cx.coefficient_matrices(ref_eos, State(1.0, 0.7, 1.0))
        diff = a1_mov - a1_rest
        off_diag = diff - np.diag(np.diag(diff))
        assert np.abs(off_diag).max() <= 1e-14
        assert np.all(np.diag(diff) != 0)
        _, a1_double, _ = cx.coefficient_matrices(ref_eos, State(1.0, 1.4, 1.0))
        assert np.allclose(np.diag(a1_double - a1_rest), 2 * np.diag(diff), atol=1e-13)

    def test_b_first_row_zero(self, ref_eos, domain, rng):
        states = domain.sample_states(20, rng)
        _, _, b = cx.coefficient_matrices(
            ref_eos, State(states.rho, states.u, states.theta))
        assert np.abs(b[..., 0, :]).max() == 0.0
        assert np.abs(b[..., :, 0]).max() == 0.0


class TestVerifyEntropyPair:
    def test_ideal_gas_passes(self, ref_eos, domain):
        report = cx.verify_entropy_pair(ref_eos, domain, n_samples=100, seed=3)
        assert report.passed, report.to_text()
        by_name = {c.name: c for c in report.checks}
        assert by_name["flux compatibility D_U Theta = Z^T D_U f1"].observed <= 1e-6
        assert by_name["Hessian/A0/A1 symmetry residual"].observed <= 1e-12

    def test_corrupted_flux_fails(self, ref_eos, domain):
        # drop the pressure from the momentum flux: compatibility must break
        def bad_flux(s):
            rho, u, theta = np.asarray(s.rho), np.asarray(s.u), s.theta
            e = ref_eos.e(rho, theta)
            p = ref_eos.p(rho, theta)
            return cx.vec3([rho * u, rho * u ** 2,
                            rho * u * (e + 0.5 * u ** 2) + p * u])

        report = cx.verify_entropy_pair(ref_eos, domain, n_samples=20, seed=3,
                                        flux_fn=bad_flux)
        bad = {c.name: c for c in report.checks}[
            "flux compatibility D_U Theta = Z^T D_U f1"]
        assert not bad.passed

    def test_rejects_bad_step(self, ref_eos, domain):
        with pytest.raises(ValueError):
            cx.verify_entropy_pair(ref_eos, domain, fd_step=0.0)


class TestEntropyPairObject:
    def test_values(self, ref_eos):
        pair = cx.entropy_pair(ref_eos)
        s = State(1.0, 2.0, 1.0)
        # E = -rho eta = -1.5, Theta = u E at (1, 2, 1)
        assert pair.E(s) == pytest.approx(-1.5, abs=1e-14)
        assert pair.Theta(s) == pytest.approx(-3.0, abs=1e-14)


class TestNsfMapsFacade:
    def test_matches_module_functions(self, ref_eos):
        maps = cx.NsfMaps(ref_eos)
        s = State(1.2, 0.4, 0.9)
        assert np.allclose(maps.f0(s), cx.f0(ref_eos, s))
        assert np.allclose(maps.f1(s), cx.f1(ref_eos, s))
        assert np.allclose(maps.Z(s), cx.z_map(ref_eos, s))
        assert np.allclose(maps.jac_Z(s), cx.jac_z(ref_eos, s))
        prod = maps.jac_f0(s) @ maps.jac_f0_inv(s)
        assert np.abs(prod - np.eye(3)).max() <= 1e-12
        assert np.linalg.det(maps.jac_f0(s)) > 0
        assert np.allclose(maps.Gvisc(s), cx.visc_matrix(ref_eos, s))
        assert np.allclose(maps.jac_f1(s), cx.jac_f1(ref_eos, s))
