"""Convex entropy extension of the 1-D Navier-Stokes-Fourier system.

The compressible heat-conducting system in conservation form,

    f0(U)_t + f1(U)_x = (G(U) U_x)_x,        U = (rho, u, theta),

admits the strictly convex entropy E = -rho eta with flux Theta = -rho u eta.
Regarded as a function of the conserved variables V = f0(U), the Hessian of E
symmetrizes the system: the congruences

    A0 = (D_U f0)^T D_V^2 E (D_U f0),   A1 = (D_U f0)^T D_V^2 E (D_U f1),
    B  = (D_U f0)^T D_V^2 E G,

are symmetric with A0 > 0 and B >= 0.  This module evaluates all the maps
involved (fluxes, Jacobians, the gradient map Z = (D_V E)^T, the entropy
Hessian) in closed form, plus a randomized verification of the defining
properties of the entropy pair.

All functions broadcast over array-valued states; matrices are returned with
trailing shape (..., 3, 3).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .reports import Check, CheckReport
from .thermo import Domain, EquationOfState, State

__all__ = [
    "EntropyPair",
    "NsfMaps",
    "entropy_pair",
    "f0",
    "f1",
    "visc_matrix",
    "jac_f0",
    "jac_f0_inv",
    "jac_f1",
    "z_map",
    "jac_z",
    "hessian_entropy",
    "coefficient_matrices",
    "verify_entropy_pair",
    "mat3",
]


def mat3(entries, extra_shape=()) -> np.ndarray:
    """Assemble a (..., 3, 3) array from a nested list of broadcastable entries."""
    shapes = [np.asarray(e).shape for row in entries for e in row]
    shape = np.broadcast_shapes(*shapes, extra_shape)
    out = np.zeros(shape + (3, 3))
    for i in range(3):
        for j in range(3):
            out[..., i, j] = entries[i][j]
    return out


def vec3(entries, extra_shape=()) -> np.ndarray:
    """Assemble a (..., 3) array from three broadcastable entries."""
    shape = np.broadcast_shapes(*[np.asarray(e).shape for e in entries], extra_shape)
    out = np.zeros(shape + (3,))
    for i in range(3):
        out[..., i] = entries[i]
    return out


def mv(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """Batched matrix-vector product on trailing dimensions."""
    return np.einsum("...ij,...j->...i", matrix, vector)


def f0(eos: EquationOfState, state: State) -> np.ndarray:
    """Conserved quantities (rho, rho u, rho(e + u^2/2)) of the standard system."""
    rho, u, theta = state.rho, state.u, state.theta
    e = eos.e(rho, theta)
    return vec3([rho, rho * np.asarray(u), rho * (e + 0.5 * np.asarray(u) ** 2)])


def f1(eos: EquationOfState, state: State) -> np.ndarray:
    """Convective flux (rho u, rho u^2 + p, rho u(e + u^2/2) + p u)."""
    rho, u, theta = np.asarray(state.rho), np.asarray(state.u), state.theta
    e = eos.e(rho, theta)
    p = eos.p(rho, theta)
    return vec3([rho * u, rho * u ** 2 + p, rho * u * (e + 0.5 * u ** 2) + p * u])


def visc_matrix(eos: EquationOfState, state: State) -> np.ndarray:
    """Viscosity/heat-conduction tensor G(U) of the second-order terms."""
    rho, u, theta = state.rho, np.asarray(state.u), state.theta
    mu = eos.mu(rho, theta)
    al = eos.alpha(rho, theta)
    z = np.zeros_like(np.asarray(mu, dtype=float))
    return mat3([[z, z, z], [z, mu, z], [z, mu * u, al]])


def jac_f0(eos: EquationOfState, state: State) -> np.ndarray:
    """Jacobian of f0 with respect to the primitive state (rho, u, theta)."""
    rho, u, theta = np.asarray(state.rho), np.asarray(state.u), state.theta
    e = eos.e(rho, theta)
    e_r = eos.e_rho(rho, theta)
    e_t = eos.e_theta(rho, theta)
    z = np.zeros_like(rho * 1.0)
    one = np.ones_like(rho * 1.0)
    return mat3([
        [one, z, z],
        [u, rho, z],
        [e + 0.5 * u ** 2 + rho * e_r, rho * u, rho * e_t],
    ])


def jac_f0_inv(eos: EquationOfState, state: State) -> np.ndarray:
    """Closed-form inverse of jac_f0 (lower triangular, det = rho^2 e_theta > 0)."""
    rho, u, theta = np.asarray(state.rho), np.asarray(state.u), state.theta
    e = eos.e(rho, theta)
    e_r = eos.e_rho(rho, theta)
    e_t = eos.e_theta(rho, theta)
    z = np.zeros_like(rho * 1.0)
    one = np.ones_like(rho * 1.0)
    det3 = rho * e_t
    return mat3([
        [one, z, z],
        [-u / rho, 1.0 / rho, z],
        [(0.5 * u ** 2 - e - rho * e_r) / det3, -u / det3, 1.0 / det3],
    ])


def jac_f1(eos: EquationOfState, state: State) -> np.ndarray:
    """Jacobian of the convective flux f1 with respect to (rho, u, theta)."""
    rho, u, theta = np.asarray(state.rho), np.asarray(state.u), state.theta
    e = eos.e(rho, theta)
    e_r = eos.e_rho(rho, theta)
    e_t = eos.e_theta(rho, theta)
    p = eos.p(rho, theta)
    p_r = eos.p_rho(rho, theta)
    p_t = eos.p_theta(rho, theta)
    z = np.zeros_like(rho * 1.0)
    return mat3([
        [u, rho, z],
        [u ** 2 + p_r, 2.0 * rho * u, p_t],
        [u * (e + 0.5 * u ** 2) + rho * u * e_r + u * p_r,
         rho * (e + 0.5 * u ** 2) + rho * u ** 2 + p,
         rho * u * e_t + u * p_t],
    ])


def entropy_density(eos: EquationOfState, state: State) -> np.ndarray:
    """Mathematical entropy E = -rho eta (strictly convex in conserved variables)."""
    return -np.asarray(state.rho) * np.asarray(eos.eta(state.rho, state.theta))


def entropy_flux(eos: EquationOfState, state: State) -> np.ndarray:
    """Entropy flux Theta = -rho u eta."""
    return (-np.asarray(state.rho) * np.asarray(state.u)
            * np.asarray(eos.eta(state.rho, state.theta)))


@dataclass(frozen=True)
class EntropyPair:
    """Entropy / entropy-flux pair bound to a closure."""

    eos: EquationOfState

    def E(self, state: State) -> np.ndarray:
        return entropy_density(self.eos, state)

    def Theta(self, state: State) -> np.ndarray:
        return entropy_flux(self.eos, state)


def entropy_pair(eos: EquationOfState) -> EntropyPair:
    return EntropyPair(eos)


@dataclass(frozen=True)
class NsfMaps:
    """All maps of the standard system bound to one closure.

    Convenience facade over the module functions; useful when the same
    closure is threaded through many evaluations.
    """

    eos: EquationOfState

    def f0(self, state: State) -> np.ndarray:
        return f0(self.eos, state)

    def f1(self, state: State) -> np.ndarray:
        return f1(self.eos, state)

    def Gvisc(self, state: State) -> np.ndarray:
        return visc_matrix(self.eos, state)

    def jac_f0(self, state: State) -> np.ndarray:
        return jac_f0(self.eos, state)

    def jac_f0_inv(self, state: State) -> np.ndarray:
        return jac_f0_inv(self.eos, state)

    def jac_f1(self, state: State) -> np.ndarray:
        return jac_f1(self.eos, state)

    def Z(self, state: State) -> np.ndarray:
        return z_map(self.eos, state)

    def jac_Z(self, state: State) -> np.ndarray:
        return jac_z(self.eos, state)


def z_map(eos: EquationOfState, state: State) -> np.ndarray:
    """Gradient of the entropy in conserved variables, Z = (D_V E)^T.

    Z(U) = (-eta + (e - u^2/2 + p/rho)/theta,  u/theta,  -1/theta).
    """
    rho, u, theta = np.asarray(state.rho), np.asarray(state.u), np.asarray(state.theta)
    e = eos.e(rho, theta)
    p = eos.p(rho, theta)
    eta = eos.eta(rho, theta)
    return vec3([
        -eta + (e - 0.5 * u ** 2 + p / rho) / theta,
        u / theta,
        -1.0 / theta,
    ])


def jac_z(eos: EquationOfState, state: State) -> np.ndarray:
    """Jacobian of the Z map with respect to (rho, u, theta); upper triangular."""
    rho, u, theta = np.asarray(state.rho), np.asarray(state.u), np.asarray(state.theta)
    e = eos.e(rho, theta)
    e_r = eos.e_rho(rho, theta)
    p_r = eos.p_rho(rho, theta)
    z = np.zeros_like(rho * 1.0)
    one = np.ones_like(rho * 1.0)
    m = mat3([
        [p_r / rho, -u, -(e - 0.5 * u ** 2 + rho * e_r) / theta],
        [z, one, -u / theta],
        [z, z, one / theta],
    ])
    return m / theta[..., None, None]


def hessian_entropy(eos: EquationOfState, state: State) -> np.ndarray:
    """Hessian of the entropy in conserved variables, D_V^2 E = (D_U Z)(D_U f0)^{-1}.

    Symmetric positive definite at every admissible state.
    """
    return jac_z(eos, state) @ jac_f0_inv(eos, state)


def coefficient_matrices(eos: EquationOfState, state: State):
    """Closed-form symmetric coefficient triplet (A0, A1, B) at a state.

    A0 = diag(p_rho/rho, rho, rho e_theta/theta)/theta is positive definite,
    A1 is symmetric, B = diag(0, mu, alpha/theta)/theta is positive
    semi-definite.
    """
    rho, u, theta = np.asarray(state.rho), np.asarray(state.u), np.asarray(state.theta)
    p_r = eos.p_rho(rho, theta)
    p_t = eos.p_theta(rho, theta)
    e_t = eos.e_theta(rho, theta)
    mu = eos.mu(rho, theta)
    al = eos.alpha(rho, theta)
    z = np.zeros_like(rho * 1.0)
    a0 = mat3([
        [p_r / rho, z, z],
        [z, rho, z],
        [z, z, rho * e_t / theta],
    ])
    a1 = mat3([
        [u * p_r / rho, p_r, z],
        [p_r, rho * u, p_t],
        [z, p_t, rho * u * e_t / theta],
    ])
    b = mat3([
        [z, z, z],
        [z, mu, z],
        [z, z, al / theta],
    ])
    th = theta[..., None, None]
    return a0 / th, a1 / th, b / th


def _fd_jacobian(fn: Callable[[State], np.ndarray], state: State,
                 step: float) -> np.ndarray:
    """Central-difference Jacobian of a 3-vector map in (rho, u, theta)."""
    base = [float(state.rho), float(state.u), float(state.theta)]
    cols = []
    for j in range(3):
        hi = list(base)
        lo = list(base)
        hi[j] += step
        lo[j] -= step
        cols.append((fn(State(hi[0], hi[1], hi[2]))
                     - fn(State(lo[0], lo[1], lo[2]))) / (2.0 * step))
    return np.stack(cols, axis=-1)


def _fd_grad_scalar(fn: Callable[[State], float], state: State,
                    step: float) -> np.ndarray:
    base = [float(state.rho), float(state.u), float(state.theta)]
    grad = np.zeros(3)
    for j in range(3):
        hi = list(base)
        lo = list(base)
        hi[j] += step
        lo[j] -= step
        grad[j] = (fn(State(hi[0], hi[1], hi[2]))
                   - fn(State(lo[0], lo[1], lo[2]))) / (2.0 * step)
    return grad


def verify_entropy_pair(eos: EquationOfState, domain: Domain,
                        n_samples: int = 100, fd_step: float = 1e-5,
                        seed: int = 0,
                        sym_tol: float = 1e-12,
                        flux_tol: float = 1e-6,
                        flux_fn: Callable[[State], np.ndarray] | None = None) -> CheckReport:
    """Randomized verification of the entropy-pair properties.

    At ``n_samples`` reproducibly sampled interior states, checks that
    (a) the entropy Hessian is positive definite, (b) A0 and A1 are symmetric,
    (c) B is positive semi-definite, and (d) the flux compatibility
    D_U Theta = Z^T D_U f1 holds, verified against central differences of
    Theta.  ``flux_fn`` overrides the convective flux used in (d) (negative
    controls); everything else is analytic.
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    rng = np.random.default_rng(seed)
    states = domain.sample_states(n_samples, rng)
    flux = flux_fn if flux_fn is not None else (lambda s: f1(eos, s))

    hess_min_eig = np.inf
    sym_res = 0.0
    b_min_eig = np.inf
    flux_res = 0.0
    for i in range(n_samples):
        s = State(float(np.asarray(states.rho)[i]), float(np.asarray(states.u)[i]),
                  float(np.asarray(states.theta)[i]))
        H = hessian_entropy(eos, s)
        hess_min_eig = min(hess_min_eig, float(np.linalg.eigvalsh(0.5 * (H + H.T)).min()))
        sym_res = max(sym_res, float(np.abs(H - H.T).max()))
        a0, a1, b = coefficient_matrices(eos, s)
        sym_res = max(sym_res, float(np.abs(a0 - a0.T).max()),
                      float(np.abs(a1 - a1.T).max()))
        b_min_eig = min(b_min_eig, float(np.linalg.eigvalsh(0.5 * (b + b.T)).min()))

        # flux condition: D_U Theta (finite differences) vs Z^T D_U f1
        lhs = _fd_grad_scalar(lambda st: float(entropy_flux(eos, st)), s, fd_step)
        jac = _fd_jacobian(flux, s, fd_step) if flux_fn is not None else jac_f1(eos, s)
        rhs = z_map(eos, s) @ jac
        flux_res = max(flux_res, float(np.abs(lhs - rhs).max()))

    checks = [
        Check(name="entropy Hessian positive definite", passed=hess_min_eig > 0,
              observed=hess_min_eig, tolerance=0.0),
        Check(name="Hessian/A0/A1 symmetry residual", passed=sym_res <= sym_tol,
              observed=sym_res, tolerance=sym_tol),
        Check(name="B positive semi-definite", passed=b_min_eig >= -sym_tol,
              observed=b_min_eig, tolerance=sym_tol),
        Check(name="flux compatibility D_U Theta = Z^T D_U f1",
              passed=flux_res <= flux_tol, observed=flux_res, tolerance=flux_tol),
    ]
    return CheckReport(title="entropy-pair certificate", checks=checks)
