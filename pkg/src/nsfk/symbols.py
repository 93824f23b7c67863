"""Conservation form and Fourier symbols of the capillary fluid system.

The full system in conservation form reads

    F0(U, U_x)_t + F1(U, U_x)_x = (G(U) U_x)_x + (H(U) U_xx)_x + g(U, U_x)_x,

where the conserved quantities F0 = (rho, rho u, rho(epsilon + u^2/2)) carry
the density gradient through the non-standard internal energy.  Around a
constant equilibrium Ubar the perturbation variables

    W = (D_U f0(Ubar))^{-1} (F0(U, U_x) - F0(Ubar, 0))

satisfy a partially symmetric system

    A0 W_t + A1 W_x - B W_xx - C W_xxx = dx[ N~ ],     N~ quadratic,

with constant matrices A0, A1, B symmetric (A0 > 0, B >= 0) and a
non-symmetric capillarity matrix C with single entry C[1,0] = k rho / theta.
Splitting the constant-coefficient symbol into odd and even parts yields

    A(xi) = D1 - xi^2 D3 = A1 + xi^2 C,    B(xi) = -xi^2 D2 = xi^2 B,

with D1 = A1, D2 = -B, D3 = -C, and the per-mode evolution
What_t + M(i xi) What = 0 with M(i xi) = A0^{-1} (i xi A(xi) + xi^2 B).

All operations broadcast over array-valued extended states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from . import convex_extension as cx
from .convex_extension import mat3, mv, vec3
from .thermo import EquationOfState, State

ArrayLike = Union[float, np.ndarray]

__all__ = [
    "ExtendedState",
    "EquilibriumCoefficients",
    "SymbolTriplet",
    "FluxTensors",
    "conserved_quantities",
    "gamma0",
    "gamma1",
    "flux_and_tensors",
    "korteweg_stress",
    "d_u_F0",
    "d_u_F0_inv",
    "d_ux_F0",
    "w_variables",
    "nonlinear_terms",
    "annihilated_dispersion_term",
    "equilibrium_coefficients",
    "symbol_triplet",
    "evolution_symbol",
]


@dataclass(frozen=True)
class ExtendedState:
    """State plus the spatial gradients entering the conservation form.

    Only the third density gradient is ever needed (the matching bracket in
    the nonlinear terms is annihilated before u_xxx or theta_xxx could
    appear).  Fields may be scalars or broadcast-compatible arrays.
    """

    rho: ArrayLike
    u: ArrayLike
    theta: ArrayLike
    rho_x: ArrayLike = 0.0
    u_x: ArrayLike = 0.0
    theta_x: ArrayLike = 0.0
    rho_xx: ArrayLike = 0.0
    u_xx: ArrayLike = 0.0
    theta_xx: ArrayLike = 0.0
    rho_xxx: ArrayLike = 0.0

    @property
    def state(self) -> State:
        return State(rho=self.rho, u=self.u, theta=self.theta, rho_x=self.rho_x)

    @property
    def grad(self) -> np.ndarray:
        """U_x = (rho_x, u_x, theta_x) with trailing component axis."""
        return vec3([self.rho_x, self.u_x, self.theta_x])

    @property
    def grad2(self) -> np.ndarray:
        """U_xx = (rho_xx, u_xx, theta_xx)."""
        return vec3([self.rho_xx, self.u_xx, self.theta_xx])


def conserved_quantities(eos: EquationOfState, ext: ExtendedState) -> np.ndarray:
    """F0(U, U_x) = (rho, rho u, rho(epsilon + u^2/2)); equals f0(U) + Gamma0."""
    rho, u = np.asarray(ext.rho, dtype=float), np.asarray(ext.u, dtype=float)
    eps = eos.epsilon(ext.rho, ext.theta, ext.rho_x)
    return vec3([rho, rho * u, rho * (eps + 0.5 * u ** 2)])


def gamma0(eos: EquationOfState, ext: ExtendedState) -> np.ndarray:
    """Gradient part of the conserved quantities: (0, 0, rho m rho_x^2)."""
    rho = np.asarray(ext.rho, dtype=float)
    rx = np.asarray(ext.rho_x, dtype=float)
    m = eos.grad_energy(ext.rho, ext.theta)
    z = np.zeros_like(rho * rx)
    return vec3([z, z, rho * m * rx ** 2])


def gamma1(eos: EquationOfState, ext: ExtendedState) -> np.ndarray:
    """Gradient part of the convective flux: (0, 0, rho u m rho_x^2)."""
    g = gamma0(eos, ext).copy()
    g[..., 2] = g[..., 2] * np.asarray(ext.u, dtype=float)
    return g


class FluxTensors(NamedTuple):
    F1: np.ndarray
    G: np.ndarray
    H: np.ndarray
    gtilde: np.ndarray


def flux_and_tensors(eos: EquationOfState, ext: ExtendedState) -> FluxTensors:
    """Convective flux F1, dissipation tensors G, H, and the quadratic flux g.

    H(U) has nonzero entries only at (2,1) = k rho and (3,1) = k rho u; the
    first component of g is identically zero and g = O(|U_x|^2).
    """
    rho = np.asarray(ext.rho, dtype=float)
    u = np.asarray(ext.u, dtype=float)
    rx = np.asarray(ext.rho_x, dtype=float)
    tx = np.asarray(ext.theta_x, dtype=float)
    ux = np.asarray(ext.u_x, dtype=float)

    F1c = cx.f1(eos, ext.state) + gamma1(eos, ext)
    G = cx.visc_matrix(eos, ext.state)

    k = eos.k(ext.rho, ext.theta)
    k_r = eos.k_rho(ext.rho, ext.theta)
    k_t = eos.k_theta(ext.rho, ext.theta)
    z = np.zeros_like(rho * 1.0)
    H = mat3([[z, z, z], [k * rho, z, z], [k * rho * u, z, z]])

    g2 = 0.5 * rho * rx ** 2 * k_r + rho * rx * tx * k_t - 0.5 * k * rx ** 2
    g3 = u * g2 - rho * rx * ux * k
    gt = vec3([np.zeros_like(g2), g2, g3])
    return FluxTensors(F1=F1c, G=G, H=H, gtilde=gt)


def korteweg_stress(eos: EquationOfState, ext: ExtendedState) -> tuple:
    """Capillary stress K and interstitial work flux w.

    K = k rho rho_xx + rho k_x rho_x - (1/2) k_rho rho rho_x^2 - (1/2) k rho_x^2,
    with k_x = k_rho rho_x + k_theta theta_x, and w = -k rho rho_x u_x.
    """
    rho = np.asarray(ext.rho, dtype=float)
    rx = np.asarray(ext.rho_x, dtype=float)
    k = eos.k(ext.rho, ext.theta)
    k_r = eos.k_rho(ext.rho, ext.theta)
    k_t = eos.k_theta(ext.rho, ext.theta)
    k_x = k_r * rx + k_t * np.asarray(ext.theta_x, dtype=float)
    K = (k * rho * np.asarray(ext.rho_xx, dtype=float) + rho * k_x * rx
         - 0.5 * k_r * rho * rx ** 2 - 0.5 * k * rx ** 2)
    w = -k * rho * rx * np.asarray(ext.u_x, dtype=float)
    return K, w


def d_u_F0(eos: EquationOfState, ext: ExtendedState) -> np.ndarray:
    """Jacobian of F0(U, U_x) in the state variables U only.

    Lower triangular with determinant rho^2 epsilon_theta > 0 (the thermal
    stability hypothesis kappa_thth <= 0 keeps epsilon_theta positive for
    every density gradient).
    """
    rho = np.asarray(ext.rho, dtype=float)
    u = np.asarray(ext.u, dtype=float)
    eps = eos.epsilon(ext.rho, ext.theta, ext.rho_x)
    eps_r = eos.epsilon_rho(ext.rho, ext.theta, ext.rho_x)
    eps_t = eos.epsilon_theta(ext.rho, ext.theta, ext.rho_x)
    z = np.zeros_like(rho * 1.0)
    one = np.ones_like(rho * 1.0)
    return mat3([
        [one, z, z],
        [u, rho, z],
        [eps + 0.5 * u ** 2 + rho * eps_r, rho * u, rho * eps_t],
    ])


def d_u_F0_inv(eos: EquationOfState, ext: ExtendedState) -> np.ndarray:
    """Closed-form inverse of d_u_F0 (lower triangular)."""
    rho = np.asarray(ext.rho, dtype=float)
    u = np.asarray(ext.u, dtype=float)
    eps = eos.epsilon(ext.rho, ext.theta, ext.rho_x)
    eps_r = eos.epsilon_rho(ext.rho, ext.theta, ext.rho_x)
    eps_t = eos.epsilon_theta(ext.rho, ext.theta, ext.rho_x)
    z = np.zeros_like(rho * 1.0)
    one = np.ones_like(rho * 1.0)
    det3 = rho * eps_t
    return mat3([
        [one, z, z],
        [-u / rho, 1.0 / rho, z],
        [(0.5 * u ** 2 - eps - rho * eps_r) / det3, -u / det3, 1.0 / det3],
    ])


def d_ux_F0(eos: EquationOfState, ext: ExtendedState) -> np.ndarray:
    """Jacobian of F0 in the gradient variables; single entry (3,1) = 2 rho m rho_x."""
    rho = np.asarray(ext.rho, dtype=float)
    rx = np.asarray(ext.rho_x, dtype=float)
    m = eos.grad_energy(ext.rho, ext.theta)
    z = np.zeros_like(rho * rx)
    return mat3([[z, z, z], [z, z, z], [2.0 * rho * m * rx, z, z]])


def _ubar_ext(ubar: State) -> ExtendedState:
    return ExtendedState(rho=ubar.rho, u=ubar.u, theta=ubar.theta)


def w_variables(eos: EquationOfState, ubar: State, ext: ExtendedState) -> np.ndarray:
    """Perturbation variables W = (D_U f0(Ubar))^{-1} (F0(U,U_x) - F0(Ubar,0)).

    The first component is exactly rho - rhobar and the second is
    rho (u - ubar) / rhobar; all higher corrections sit in the third slot.
    """
    ubar0 = State(ubar.rho, ubar.u, ubar.theta)
    jinv = cx.jac_f0_inv(eos, ubar0)
    delta = conserved_quantities(eos, ext) - cx.f0(eos, ubar0)
    return mv(jinv, delta)


def annihilated_dispersion_term(eos: EquationOfState, ubar: State,
                                ext: ExtendedState) -> np.ndarray:
    """Bracket term -Hbar (D_U f0(Ubar))^{-1} [dx(D_U F0) U_x + D_Ux F0 U_xxx + dx(D_Ux F0) U_xx].

    The prefactor Hbar (D_U f0)^{-1} has its only nonzero column first, so
    the product depends on the bracket's first component alone.  The first
    row of D_U F0 is the constant (1, 0, 0) and the first row of D_Ux F0
    vanishes, hence that component is identically zero and so is the whole
    term.  It is evaluated from those row formulas (not assumed) so callers
    can assert the cancellation.
    """
    rho = np.asarray(ext.rho, dtype=float)
    shape = np.broadcast_shapes(rho.shape, np.asarray(ext.rho_x).shape,
                                np.asarray(ext.rho_xxx).shape)
    # first row of dx(D_U F0) is d/dx (1, 0, 0) = 0; first rows of D_Ux F0
    # and dx(D_Ux F0) are zero, so the bracket's first component is exactly
    bracket1 = np.zeros(shape)

    kbar = float(np.asarray(eos.k(ubar.rho, ubar.theta)))
    rhob, ub = float(np.asarray(ubar.rho)), float(np.asarray(ubar.u))
    # Hbar (D_U f0(Ubar))^{-1} = [[0,0,0],[k rho,0,0],[k rho u,0,0]]
    out = np.zeros(shape + (3,))
    out[..., 1] = -kbar * rhob * bracket1
    out[..., 2] = -kbar * rhob * ub * bracket1
    return out


def nonlinear_terms(eos: EquationOfState, ubar: State,
                    ext: ExtendedState) -> np.ndarray:
    """Quadratic right-hand side N of the perturbation system W_t = A W + dx N.

    Assembles the flux remainder, the viscosity remainder, the capillarity
    remainder (including the annihilated third-gradient bracket) and the
    quadratic flux g, symmetrized by L = (D_U f0)^T D_V^2 E (D_U f0)^{-1} at
    the equilibrium and premultiplied by A0^{-1}.  The first component
    vanishes identically (continuity has no nonlinear remainder in these
    variables) and the whole term is O(|U - Ubar|^2 + |U_x|^2 + ...).
    """
    ubar0 = State(ubar.rho, ubar.u, ubar.theta)
    jac0_bar = cx.jac_f0(eos, ubar0)
    jac0_bar_inv = cx.jac_f0_inv(eos, ubar0)
    jac1_bar = cx.jac_f1(eos, ubar0)
    g_bar = cx.visc_matrix(eos, ubar0)
    h_bar = flux_and_tensors(eos, _ubar_ext(ubar0)).H
    f0_bar = cx.f0(eos, ubar0)
    f1_bar = cx.f1(eos, ubar0)

    # symmetrizing factor L = (D_U f0)^T (D_U Z) (D_U f0)^{-1}, a constant matrix
    L = jac0_bar.T @ cx.jac_z(eos, ubar0) @ jac0_bar_inv
    a0_bar, _, _ = cx.coefficient_matrices(eos, ubar0)

    F0c = conserved_quantities(eos, ext)
    tensors = flux_and_tensors(eos, ext)
    dF0 = d_u_F0(eos, ext)
    dF0_inv = d_u_F0_inv(eos, ext)

    # flux remainder r = -(F1 - F1bar) + Jf1bar Jf0bar^{-1} (F0 - F0bar)
    r = -(tensors.F1 - f1_bar) + mv(jac1_bar @ jac0_bar_inv, F0c - f0_bar)

    # viscosity remainder R U_x = [G(U) DF0^{-1} - Gbar Jf0bar^{-1}] DF0 U_x
    Rmat = (tensors.G @ dF0_inv - g_bar @ jac0_bar_inv) @ dF0
    r_visc = mv(Rmat, ext.grad)

    # capillarity remainder
    dux = mv(d_ux_F0(eos, ext), ext.grad2)
    i1 = -mv(g_bar @ jac0_bar_inv, dux)
    i2 = mv((tensors.H @ dF0_inv - h_bar @ jac0_bar_inv) @ dF0, ext.grad2)
    i3 = annihilated_dispersion_term(eos, ubar, ext)

    n_tilde = mv(L, r + r_visc + i1 + i2 + i3 + tensors.gtilde)
    # A0 is diagonal: divide componentwise
    diag = np.stack([a0_bar[0, 0], a0_bar[1, 1], a0_bar[2, 2]])
    return n_tilde / diag


@dataclass(frozen=True)
class EquilibriumCoefficients:
    """Constant coefficient matrices and derived scalars at an equilibrium state.

    beta(xi) = p_rho + xi^2 k rho > 0 collects the dispersive stiffening of
    the pressure; cbar = p_theta sqrt(theta) / (sqrt(e_theta) rho) is the
    thermal coupling speed.
    """

    rho: float
    u: float
    theta: float
    p_rho: float
    p_theta: float
    e_theta: float
    mu: float
    alpha: float
    k: float
    A0: np.ndarray
    A1: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @property
    def cbar(self) -> float:
        return self.p_theta * np.sqrt(self.theta) / (np.sqrt(self.e_theta) * self.rho)

    def beta(self, xi: ArrayLike) -> ArrayLike:
        return self.p_rho + np.asarray(xi, dtype=float) ** 2 * self.k * self.rho

    def sound_speed(self) -> float:
        """Long-wave characteristic speed sqrt(cbar^2 + p_rho) of the symbol."""
        return float(np.sqrt(self.cbar ** 2 + self.p_rho))


def equilibrium_coefficients(eos: EquationOfState, ubar: State) -> EquilibriumCoefficients:
    """Evaluate A0, A1, B, C and the scalar data at a constant state."""
    s = State(ubar.rho, ubar.u, ubar.theta)
    a0, a1, b = cx.coefficient_matrices(eos, s)
    rho = float(np.asarray(ubar.rho))
    u = float(np.asarray(ubar.u))
    theta = float(np.asarray(ubar.theta))
    k = float(np.asarray(eos.k(rho, theta)))
    c = np.zeros((3, 3))
    c[1, 0] = k * rho / theta
    return EquilibriumCoefficients(
        rho=rho, u=u, theta=theta,
        p_rho=float(np.asarray(eos.p_rho(rho, theta))),
        p_theta=float(np.asarray(eos.p_theta(rho, theta))),
        e_theta=float(np.asarray(eos.e_theta(rho, theta))),
        mu=float(np.asarray(eos.mu(rho, theta))),
        alpha=float(np.asarray(eos.alpha(rho, theta))),
        k=k, A0=np.asarray(a0), A1=np.asarray(a1), B=np.asarray(b), C=c,
    )


@dataclass(frozen=True)
class SymbolTriplet:
    """Odd/even split of the third-order constant-coefficient symbol.

    D1 = A1, D2 = -B, D3 = -C are the coefficients of the first, second and
    third derivative.  A(xi) = D1 - xi^2 D3 collects the odd (hyperbolic and
    dispersive) part, B(xi) = -xi^2 D2 >= 0 the even (dissipative) part.
    """

    A0: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    D3: np.ndarray

    def a0(self, xi: ArrayLike = 0.0) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return np.broadcast_to(self.A0, xi.shape + (3, 3))

    def a(self, xi: ArrayLike) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return (self.D1 - xi[..., None, None] ** 2 * self.D3)

    def b(self, xi: ArrayLike) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return -xi[..., None, None] ** 2 * self.D2


def symbol_triplet(coeffs: EquilibriumCoefficients) -> SymbolTriplet:
    return SymbolTriplet(A0=coeffs.A0, D1=coeffs.A1, D2=-coeffs.B, D3=-coeffs.C)


def evolution_symbol(coeffs: EquilibriumCoefficients, xi: ArrayLike) -> np.ndarray:
    """Per-mode generator M(i xi) = A0^{-1} (i xi A(xi) + xi^2 B).

    The Fourier transform of the linear system is What_t + M(i xi) What = 0;
    M(0) = 0 and M(-xi) = conj(M(xi)).
    """
    xi = np.asarray(xi, dtype=float)
    trip = symbol_triplet(coeffs)
    a = trip.a(xi)
    b = trip.b(xi)
    a0_inv = np.linalg.inv(coeffs.A0)
    return a0_inv @ (1j * xi[..., None, None] * a + b)
