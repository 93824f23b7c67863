"""Symbol-level dissipativity analysis of the linearized capillary fluid system.

The constant-coefficient perturbation system

    A0 W_t + A1 W_x - B W_xx - C W_xxx = 0

is not symmetrizable in the Friedrichs sense (simultaneous symmetry of the
derivative coefficients forces a vanishing diagonal entry), but it is symbol
symmetrizable: S(xi) = diag(beta(xi)/p_rho, 1, 1) makes S A(xi) and S B(xi)
symmetric with S A0 > 0.  After the change of variables
Vhat = S^{1/2} A0^{1/2} What the triplet becomes (I, Atilde(xi), Btilde) with

    Atilde(xi) = [[u, sqrt(beta), 0], [sqrt(beta), u, c], [0, c, u]],
    Btilde     = diag(0, mu/rho, alpha/(e_theta rho)),

whose eigenvalues u, u +/- sqrt(c^2 + beta(xi)) are real and simple for all
xi.  Genuine coupling (no kernel vector of the dissipative symbol is an
eigenvector of the odd-order pencil) then guarantees strict dissipativity,
certified constructively by the skew-symmetric compensating symbol

    K(xi) = (eps/sqrt(beta)) [[0, 1, 0], [-1, 0, c/sqrt(beta)],
                              [0, -c/sqrt(beta), 0]],

whose symmetrized product with Atilde is diagonal: [K A]^s + Btilde >= gamma I
uniformly in xi whenever eps lies in an explicit window.  The resulting modal
bound Re lambda <= -c0 xi^2 classifies the system as strictly dissipative of
regularity-gain type (p, q) = (1, 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .fitting import fit_power_law
from .symbols import EquilibriumCoefficients, evolution_symbol, symbol_triplet

__all__ = [
    "TransformedTriplet",
    "CompensatingCertificate",
    "DissipativityType",
    "GenuineCouplingReport",
    "FriedrichsReport",
    "LyapunovReport",
    "symbol_symmetrizer",
    "transformed_triplet",
    "atilde_eigenvalues",
    "check_genuine_coupling",
    "genuine_coupling_scan",
    "check_friedrichs",
    "friedrichs_search",
    "compensating_window",
    "compensating_matrix",
    "verify_certificate",
    "spectral_bound",
    "lyapunov_check",
    "default_xi_grid",
]


def default_xi_grid(xi_min: float = 1e-3, xi_max: float = 1e3,
                    n_per_decade: int = 2001, mirrored: bool = True) -> np.ndarray:
    """Logarithmically spaced |xi| grid, optionally mirrored in sign.

    ``n_per_decade`` is the total point count spread uniformly in log10 over
    the range (the historical name reflects the per-decade density of the
    default: roughly 2001 points over six decades).
    """
    pos = np.logspace(np.log10(xi_min), np.log10(xi_max), n_per_decade)
    if not mirrored:
        return pos
    return np.concatenate([-pos[::-1], pos])


def symbol_symmetrizer(coeffs: EquilibriumCoefficients, xi) -> np.ndarray:
    """Diagonal symbol symmetrizer S(xi) = diag(beta(xi)/p_rho, 1, 1) > 0."""
    xi = np.asarray(xi, dtype=float)
    s = np.zeros(xi.shape + (3, 3))
    s[..., 0, 0] = coeffs.beta(xi) / coeffs.p_rho
    s[..., 1, 1] = 1.0
    s[..., 2, 2] = 1.0
    return s


@dataclass(frozen=True)
class TransformedTriplet:
    """Symmetric triplet (I, Atilde(xi), Btilde) after the S^{1/2} A0^{1/2} change."""

    coeffs: EquilibriumCoefficients
    Btilde: np.ndarray

    def a0(self, xi=0.0) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return np.broadcast_to(np.eye(3), xi.shape + (3, 3))

    def atilde(self, xi) -> np.ndarray:
        """Closed form [[u, sqrt(beta), 0], [sqrt(beta), u, c], [0, c, u]]."""
        xi = np.asarray(xi, dtype=float)
        c = self.coeffs
        rb = np.sqrt(c.beta(xi))
        a = np.zeros(xi.shape + (3, 3))
        a[..., 0, 0] = c.u
        a[..., 1, 1] = c.u
        a[..., 2, 2] = c.u
        a[..., 0, 1] = rb
        a[..., 1, 0] = rb
        a[..., 1, 2] = c.cbar
        a[..., 2, 1] = c.cbar
        return a

    def atilde_congruence(self, xi) -> np.ndarray:
        """Same object via S^{1/2} A0^{-1/2} A(xi) A0^{-1/2} S^{-1/2} (cross-check)."""
        xi = np.asarray(xi, dtype=float)
        trip = symbol_triplet(self.coeffs)
        a = trip.a(xi)
        s = symbol_symmetrizer(self.coeffs, xi)
        a0 = self.coeffs.A0
        a0_isqrt = np.diag(1.0 / np.sqrt(np.diag(a0)))
        s_sqrt = np.sqrt(s)
        s_isqrt = np.zeros_like(s)
        for i in range(3):
            s_isqrt[..., i, i] = 1.0 / s_sqrt[..., i, i]
        return s_sqrt @ (a0_isqrt @ a @ a0_isqrt) @ s_isqrt

    # in the transformed frame the dissipative symbol is xi^2 Btilde
    def a(self, xi) -> np.ndarray:
        return self.atilde(xi)

    def b(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return xi[..., None, None] ** 2 * self.Btilde


def transformed_triplet(coeffs: EquilibriumCoefficients) -> TransformedTriplet:
    bt = np.diag([0.0, coeffs.mu / coeffs.rho,
                  coeffs.alpha / (coeffs.e_theta * coeffs.rho)])
    return TransformedTriplet(coeffs=coeffs, Btilde=bt)


def atilde_eigenvalues(coeffs: EquilibriumCoefficients, xi) -> np.ndarray:
    """Closed-form eigenvalues (u - r, u, u + r) with r = sqrt(c^2 + beta(xi)).

    Real and simple for every xi (constant multiplicity), since
    c^2 + beta > 0.
    """
    xi = np.asarray(xi, dtype=float)
    r = np.sqrt(coeffs.cbar ** 2 + coeffs.beta(xi))
    return np.stack([coeffs.u - r, coeffs.u + 0.0 * r, coeffs.u + r], axis=-1)


# ---------------------------------------------------------------------------
# genuine coupling
# ---------------------------------------------------------------------------


@dataclass
class GenuineCouplingReport:
    passed: bool
    min_margin: float
    worst_xi: float
    failures: list = field(default_factory=list)  # (xi, kernel vector) pairs
    n_xi: int = 0

    def to_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        txt = (f"== genuine coupling ==\n  [{status}] min margin "
               f"{self.min_margin:.6e} at xi = {self.worst_xi:.6g} "
               f"({self.n_xi} grid points)")
        for xi, vec in self.failures[:5]:
            txt += f"\n  offending xi = {xi:.6g}, kernel vector {np.array2string(vec, precision=4)}"
        return txt


def genuine_coupling_scan(a0_of_xi: Callable, a_of_xi: Callable, b_of_xi: Callable,
                          xi_grid: Sequence[float],
                          rank_rtol: float = 1e-10,
                          margin_tol: float = 1e-10) -> GenuineCouplingReport:
    """Check that no kernel vector of B(xi) solves (rho A0 + A(xi)) V = 0.

    For each grid xi != 0 an orthonormal kernel basis of the symmetric
    positive semi-definite B(xi) is extracted by an eigendecomposition with
    relative threshold ``rank_rtol``; for each kernel vector V the pair
    {A0 V, A(xi) V} must have rank two.  The margin is the second singular
    value of the column-normalized pair [A0 V/|A0 V|, A(xi) V/|A(xi) V|]
    (1 for orthogonal directions, 0 for a rank drop), which keeps the
    measure scale-invariant under the xi^2 growth of A(xi).
    """
    min_margin = np.inf
    worst_xi = np.nan
    failures = []
    n = 0
    for xi in np.asarray(xi_grid, dtype=float):
        if xi == 0.0:
            continue
        n += 1
        b = np.asarray(b_of_xi(xi), dtype=float)
        evals, evecs = np.linalg.eigh(0.5 * (b + b.T))
        lam_max = float(np.abs(evals).max())
        if lam_max == 0.0:
            kernel = np.eye(3)
        else:
            kernel = evecs[:, np.abs(evals) <= rank_rtol * lam_max]
        a0 = np.asarray(a0_of_xi(xi), dtype=float)
        a = np.asarray(a_of_xi(xi), dtype=float)
        for idx in range(kernel.shape[1]):
            v = kernel[:, idx]
            a0v, av = a0 @ v, a @ v
            n0, na = np.linalg.norm(a0v), np.linalg.norm(av)
            if na == 0.0:
                margin = 0.0          # rho = 0 solves (rho A0 + A) V = 0
            elif n0 == 0.0:
                margin = 1.0          # no rho can cancel a nonzero A V
            else:
                pair = np.stack([a0v / n0, av / na], axis=1)
                margin = float(np.linalg.svd(pair, compute_uv=False)[1])
            if margin < min_margin:
                min_margin, worst_xi = margin, float(xi)
            if margin <= margin_tol:
                failures.append((float(xi), v.copy()))
    passed = not failures and np.isfinite(min_margin)
    return GenuineCouplingReport(passed=passed, min_margin=min_margin,
                                 worst_xi=worst_xi, failures=failures, n_xi=n)


def check_genuine_coupling(triplet, xi_grid) -> GenuineCouplingReport:
    """Genuine-coupling scan for a SymbolTriplet or TransformedTriplet."""
    return genuine_coupling_scan(triplet.a0, triplet.a, triplet.b, xi_grid)


# ---------------------------------------------------------------------------
# Friedrichs symmetrizability
# ---------------------------------------------------------------------------

_SYM_INDEX = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]


def _sym_from_vector(s: np.ndarray) -> np.ndarray:
    m = np.zeros((3, 3))
    for val, (i, j) in zip(s, _SYM_INDEX):
        m[i, j] = val
        m[j, i] = val
    return m


def _symmetry_constraint_rows(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Linear constraints on vec(S) making every S @ M symmetric.

    S is parameterized by its six independent entries; each matrix M
    contributes three rows, one per off-diagonal pair of S @ M.
    """
    rows = []
    for m in matrices:
        for (i, j) in [(0, 1), (0, 2), (1, 2)]:
            row = np.zeros(6)
            for col, (a, b) in enumerate(_SYM_INDEX):
                basis = np.zeros((3, 3))
                basis[a, b] = 1.0
                basis[b, a] = 1.0
                sm = basis @ m
                row[col] = sm[i, j] - sm[j, i]
            rows.append(row)
    return np.array(rows)


@dataclass
class FriedrichsReport:
    feasible: bool
    nullspace_dim: int
    symmetrizer: Optional[np.ndarray]
    min_eig: float
    certificate: str

    def to_text(self) -> str:
        head = "feasible" if self.feasible else "infeasible"
        txt = (f"== Friedrichs symmetrizer search ==\n  result: {head} "
               f"(constraint nullspace dimension {self.nullspace_dim})\n"
               f"  {self.certificate}")
        if self.symmetrizer is not None:
            txt += f"\n  S = {np.array2string(self.symmetrizer, precision=6)}"
        return txt


def friedrichs_search(a0: np.ndarray, d_matrices: Sequence[np.ndarray],
                      rank_rtol: float = 1e-10,
                      pd_tol: float = 1e-10,
                      seed: int = 0) -> FriedrichsReport:
    """Search for a constant symmetric positive-definite S with S A0 and every
    S D_k symmetric; certify infeasibility otherwise.

    The simultaneous-symmetry conditions are homogeneous linear constraints
    on the six entries of S.  The search computes the constraint nullspace
    (SVD with relative threshold) and then either (a) reports trivial
    infeasibility when the nullspace is zero, (b) reports a forced zero
    diagonal entry, which rules out positive definiteness through the
    corresponding leading principal minor, or (c) looks for a positive
    definite element (projection of the identity onto the nullspace, then a
    randomized sweep).  S > 0 already implies S A0 > 0 because S A0 is
    similar to S^{1/2} A0 S^{1/2}.
    """
    constraints = _symmetry_constraint_rows([np.asarray(a0)] +
                                            [np.asarray(d) for d in d_matrices])
    _, sv, vt = np.linalg.svd(constraints)
    top = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > rank_rtol * max(top, 1.0)))
    basis = vt[rank:]
    dim = basis.shape[0]

    if dim == 0:
        return FriedrichsReport(
            feasible=False, nullspace_dim=0, symmetrizer=None, min_eig=0.0,
            certificate=("only S = 0 satisfies the simultaneous symmetry "
                         "constraints; no positive-definite symmetrizer exists"))

    mats = [_sym_from_vector(b) for b in basis]

    # forced zero diagonal entry across the whole nullspace => never PD
    scale = max(float(np.abs(basis).max()), 1.0)
    for d in range(3):
        if all(abs(m[d, d]) <= rank_rtol * scale for m in mats):
            return FriedrichsReport(
                feasible=False, nullspace_dim=dim, symmetrizer=None, min_eig=0.0,
                certificate=(f"symmetry constraints force S[{d},{d}] = 0 for "
                             "every admissible S; the leading principal minor "
                             "vanishes, so S cannot be positive definite"))

    def min_eig_of(coeffi):
        s = sum(c * m for c, m in zip(coeffi, mats))
        nrm = np.linalg.norm(s)
        if nrm == 0:
            return -np.inf, s
        s = s / nrm
        return float(np.linalg.eigvalsh(s).min()), s

    # candidate 1: least-squares projection of the identity onto the nullspace
    target = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 1.0])
    coeff0 = basis @ target
    candidates = [coeff0, -coeff0]
    rng = np.random.default_rng(seed)
    candidates += list(rng.standard_normal((64, dim)))
    best_eig, best_s = -np.inf, None
    for c in candidates:
        if np.linalg.norm(c) == 0:
            continue
        ev, s = min_eig_of(c)
        if ev > best_eig:
            best_eig, best_s = ev, s

    if best_eig > pd_tol:
        s = best_s / best_s[0, 0] if best_s[0, 0] > 0 else best_s
        return FriedrichsReport(
            feasible=True, nullspace_dim=dim, symmetrizer=s,
            min_eig=float(np.linalg.eigvalsh(s).min()),
            certificate="positive-definite symmetrizer found in the constraint nullspace")
    return FriedrichsReport(
        feasible=False, nullspace_dim=dim, symmetrizer=None, min_eig=best_eig,
        certificate=("no positive-definite element found in the constraint "
                     f"nullspace (best normalized minimum eigenvalue {best_eig:.3e})"))


def check_friedrichs(coeffs: EquilibriumCoefficients, seed: int = 0) -> FriedrichsReport:
    """Friedrichs symmetrizability of the triplet at an equilibrium state."""
    trip = symbol_triplet(coeffs)
    return friedrichs_search(trip.A0, [trip.D1, trip.D2, trip.D3], seed=seed)


# ---------------------------------------------------------------------------
# compensating matrix symbol
# ---------------------------------------------------------------------------


def compensating_window(coeffs: EquilibriumCoefficients) -> tuple[float, float, float]:
    """(gamma_bar, eps_lo, eps_hi): the admissible open window for eps.

    gamma_bar = (1/4) min{alpha/(e_theta rho), mu/rho, alpha p_rho/(e_theta rho c^2)}
    and the window is (gamma_bar, (1/2) min{mu/rho, alpha p_rho/(e_theta rho c^2)}).
    """
    c2 = coeffs.cbar ** 2
    visc = coeffs.mu / coeffs.rho
    therm = coeffs.alpha / (coeffs.e_theta * coeffs.rho)
    if c2 > 0:
        therm_scaled = therm * coeffs.p_rho / c2
    else:
        therm_scaled = np.inf
    gamma_bar = 0.25 * min(therm, visc, therm_scaled)
    hi = 0.5 * min(visc, therm_scaled)
    return gamma_bar, gamma_bar, hi


def compensating_matrix(coeffs: EquilibriumCoefficients,
                        eps: Optional[float] = None) -> Callable[[np.ndarray], np.ndarray]:
    """Skew-symmetric compensating symbol K(xi) for the transformed triplet.

    K(xi) = (eps/sqrt(beta)) [[0, 1, 0], [-1, 0, c/sqrt(beta)],
                              [0, -c/sqrt(beta), 0]].

    ``eps`` must lie strictly inside the admissible window; the default is
    its midpoint.  Returns a callable mapping (arrays of) xi to (..., 3, 3).
    """
    gamma_bar, lo, hi = compensating_window(coeffs)
    if not (hi > lo):
        raise ValueError(
            f"empty compensating window (gamma_bar={gamma_bar:.6g}, hi={hi:.6g}); "
            "the coefficients admit no uniform certificate (vanishing dissipation?)")
    if eps is None:
        eps = 0.5 * (lo + hi)
    if not (lo < eps < hi):
        raise ValueError(f"eps={eps} outside the admissible window ({lo:.6g}, {hi:.6g})")
    c = coeffs.cbar

    def k_of_xi(xi):
        xi = np.asarray(xi, dtype=float)
        rb = np.sqrt(coeffs.beta(xi))
        k = np.zeros(xi.shape + (3, 3))
        k[..., 0, 1] = 1.0
        k[..., 1, 0] = -1.0
        k[..., 1, 2] = c / rb
        k[..., 2, 1] = -c / rb
        return (eps / rb)[..., None, None] * k

    k_of_xi.eps = float(eps)
    k_of_xi.gamma_bar = float(gamma_bar)
    k_of_xi.window = (float(lo), float(hi))
    return k_of_xi


@dataclass
class CompensatingCertificate:
    """Grid-verified bounds for the compensating symbol."""

    eps: float
    gamma_bar: float
    sup_K: float
    sup_xiK: float
    min_eig: float  # min over grid of lambda_min([K A]^s + Btilde)
    off_diagonal_residual: float
    passed: bool
    n_xi: int

    def to_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return ("== compensating certificate ==\n"
                f"  [{status}] eps = {self.eps:.12g}, gamma_bar = {self.gamma_bar:.12g}\n"
                f"  min lambda_min([K A]^s + B) = {self.min_eig:.12g} over {self.n_xi} xi\n"
                f"  sup|K| = {self.sup_K:.12g}, sup|xi K| = {self.sup_xiK:.12g}\n"
                f"  [K A]^s off-diagonal residual = {self.off_diagonal_residual:.3e}")


def verify_certificate(coeffs: EquilibriumCoefficients,
                       eps: Optional[float] = None,
                       xi_grid: Optional[np.ndarray] = None,
                       tol: float = 1e-10) -> CompensatingCertificate:
    """Verify skew-symmetry and the uniform lower bound of the compensating symbol.

    Over the grid, computes lambda_min([K(xi) Atilde(xi)]^s + Btilde), the
    suprema of the spectral norms |K| and |xi K|, and the off-diagonal
    residual of [K A]^s (the construction makes it exactly diagonal).  The
    certificate passes iff the minimum eigenvalue stays >= gamma_bar - tol.
    """
    if xi_grid is None:
        xi_grid = np.linspace(-100.0, 100.0, 4001)
    xi = np.asarray(xi_grid, dtype=float)
    k_fn = compensating_matrix(coeffs, eps)
    trip = transformed_triplet(coeffs)
    K = k_fn(xi)
    A = trip.atilde(xi)
    KA = K @ A
    sym = 0.5 * (KA + np.swapaxes(KA, -1, -2))
    total = sym + trip.Btilde
    eigs = np.linalg.eigvalsh(total)
    min_eig = float(eigs.min())

    off = sym.copy()
    for i in range(3):
        off[..., i, i] = 0.0
    off_res = float(np.abs(off).max())

    norms_K = np.linalg.norm(K, ord=2, axis=(-2, -1))
    norms_xiK = np.abs(xi) * norms_K
    passed = min_eig >= k_fn.gamma_bar - tol
    return CompensatingCertificate(
        eps=k_fn.eps, gamma_bar=k_fn.gamma_bar,
        sup_K=float(norms_K.max()), sup_xiK=float(norms_xiK.max()),
        min_eig=min_eig, off_diagonal_residual=off_res,
        passed=bool(passed), n_xi=xi.size)


# ---------------------------------------------------------------------------
# spectral bound and dissipativity type
# ---------------------------------------------------------------------------


@dataclass
class DissipativityType:
    """Fit of max Re lambda(-M(i xi)) against -c0 xi^{2p} / (1 + xi^2)^q."""

    p: float
    q: float
    c0: float
    residual: float
    strictly_dissipative: bool
    c0_uniform: float  # certified min over the grid of -sigma/xi^2
    classification: str
    xi: np.ndarray = field(repr=False, default=None)
    sigma: np.ndarray = field(repr=False, default=None)
    violations: list = field(default_factory=list)

    def to_text(self) -> str:
        status = "PASS" if self.strictly_dissipative else "FAIL"
        return ("== spectral bound ==\n"
                f"  [{status}] strict dissipativity on {self.xi.size} modes\n"
                f"  type fit (p, q) = ({self.p:.4f}, {self.q:.4f}), c0 = {self.c0:.6g}, "
                f"log-residual {self.residual:.3e}\n"
                f"  classification: {self.classification}\n"
                f"  uniform modal bound: Re lambda <= -{self.c0_uniform:.6g} xi^2")


def _classify(p: float, q: float, tol: float = 0.05) -> str:
    if abs(p - q) <= tol:
        return "standard"
    return "regularity-gain" if p > q else "regularity-loss"


def spectral_bound(coeffs: EquilibriumCoefficients,
                   xi_grid: Optional[np.ndarray] = None,
                   small_window: tuple[float, float] = (1e-3, 1e-1),
                   large_window: tuple[float, float] = (1e1, 1e3)) -> DissipativityType:
    """Max real part of the eigenvalues of -M(i xi) and the (p, q) type fit.

    sigma(xi) < 0 for xi != 0 is strict dissipativity.  The exponents are
    obtained from two log-log asymptote fits: near xi = 0 the model gives
    slope 2p, for large xi slope 2(p - q).  The amplitude c0 is fitted over
    both windows and c0_uniform = min(-sigma/xi^2) certifies a uniform
    heat-kernel-type bound on the grid.
    """
    if xi_grid is None:
        xi_grid = default_xi_grid()
    xi = np.asarray(xi_grid, dtype=float)
    xi_nz = xi[xi != 0.0]
    M = evolution_symbol(coeffs, xi_nz)
    eigs = np.linalg.eigvals(-M)
    sigma = eigs.real.max(axis=-1)

    violations = [(float(x), float(s)) for x, s in zip(xi_nz, sigma) if s >= 0.0]
    strict = not violations

    if strict:
        ax = np.abs(xi_nz)
        fit_small = fit_power_law(ax, -sigma, small_window)
        fit_large = fit_power_law(ax, -sigma, large_window)
        p = fit_small.exponent / 2.0
        q = p - fit_large.exponent / 2.0
        both = (ax >= small_window[0]) & (ax <= small_window[1])
        both |= (ax >= large_window[0]) & (ax <= large_window[1])
        model_log = 2.0 * p * np.log(ax[both]) - q * np.log1p(ax[both] ** 2)
        data_log = np.log(-sigma[both])
        c0 = float(np.exp(np.mean(data_log - model_log)))
        residual = float(np.sqrt(np.mean((data_log - model_log - np.log(c0)) ** 2)))
        c0_uniform = float((-sigma / xi_nz ** 2).min())
        classification = _classify(p, q)
    else:
        p = q = c0 = residual = float("nan")
        c0_uniform = 0.0
        classification = "not strictly dissipative"

    return DissipativityType(p=p, q=q, c0=c0, residual=residual,
                             strictly_dissipative=strict,
                             c0_uniform=c0_uniform, classification=classification,
                             xi=xi_nz, sigma=sigma, violations=violations)


# ---------------------------------------------------------------------------
# Lyapunov functional
# ---------------------------------------------------------------------------


@dataclass
class LyapunovReport:
    passed: bool
    c0: float
    delta: float
    worst_slack: float   # max of dUpsilon/dt + c0 xi^2 Upsilon (must be <= tol)
    max_imag: float      # |Im Upsilon| over all samples
    equivalence_ok: bool  # |delta xi K| <= 1/2 on the grid
    inconclusive: bool = False
    reason: str = ""
    violations: list = field(default_factory=list)

    def to_text(self) -> str:
        if self.inconclusive:
            return f"== Lyapunov functional ==\n  [INCONCLUSIVE] {self.reason}"
        status = "PASS" if self.passed else "FAIL"
        return ("== Lyapunov functional ==\n"
                f"  [{status}] dY/dt + c0 xi^2 Y <= 0 with c0 = {self.c0:.6g}, "
                f"delta = {self.delta}\n"
                f"  worst slack = {self.worst_slack:.3e}, max |Im Y| = {self.max_imag:.3e}")


def lyapunov_check(coeffs: EquilibriumCoefficients,
                   eps: Optional[float] = None,
                   delta: float = 0.05,
                   xi_grid: Optional[np.ndarray] = None,
                   n_modes: int = 100,
                   seed: int = 0,
                   tol: float = 1e-10) -> LyapunovReport:
    """Verify modal decay of Y = |V|^2 - delta xi <V, i K V> along the flow.

    Along V_t = -(i xi Atilde + xi^2 Btilde) V the derivative of Y satisfies
    dY/dt + c0 xi^2 Y <= 0 with the explicit constant
    c0 = delta gamma_bar / (1 + delta sup|xi K|), provided delta is small
    enough for Y to be equivalent to |V|^2 (checked: |delta xi K| <= 1/2 on
    the grid) and the symmetrized-product bound holds.  The derivative is
    evaluated exactly from the generator at ``n_modes`` random unit modes per
    grid point.
    """
    if xi_grid is None:
        xi_grid = np.linspace(-50.0, 50.0, 201)
    xi = np.asarray(xi_grid, dtype=float)
    xi = xi[xi != 0.0]
    if delta == 0.0:
        return LyapunovReport(
            passed=False, c0=0.0, delta=0.0, worst_slack=0.0, max_imag=0.0,
            equivalence_ok=True, inconclusive=True,
            reason="delta = 0 degenerates the functional to |V|^2; no damping certified")

    k_fn = compensating_matrix(coeffs, eps)
    trip = transformed_triplet(coeffs)
    K = k_fn(xi)                      # (n, 3, 3)
    A = trip.atilde(xi)
    B = trip.Btilde
    gen = 1j * xi[..., None, None] * A + xi[..., None, None] ** 2 * B

    sup_xiK = float((np.abs(xi) * np.linalg.norm(K, ord=2, axis=(-2, -1))).max())
    equivalence_ok = delta * sup_xiK <= 0.5
    if not equivalence_ok:
        # without a uniform bound on |xi K| (e.g. no capillarity) the
        # functional is not equivalent to |V|^2 on this grid at this delta
        return LyapunovReport(
            passed=False, c0=0.0, delta=delta, worst_slack=np.nan, max_imag=np.nan,
            equivalence_ok=False, inconclusive=True,
            reason=(f"sup |delta xi K| = {delta * sup_xiK:.3g} > 1/2: the "
                    "functional is not equivalent to |V|^2 on this grid"))
    c1 = 1.0 + delta * sup_xiK
    c0 = delta * k_fn.gamma_bar / c1

    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n_modes, 3)) + 1j * rng.standard_normal((n_modes, 3))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)

    # batched over (n_xi, n_modes): V' = -gen V, Y and dY/dt exact from the generator
    vdot = -np.einsum("xij,mj->xmi", gen, v)
    iK = 1j * K
    iKv = np.einsum("xij,mj->xmi", iK, v)
    iKvdot = np.einsum("xij,xmj->xmi", iK, vdot)

    norm2 = np.einsum("mi,mi->m", np.conj(v), v).real[None, :]
    cross = np.einsum("mi,xmi->xm", np.conj(v), iKv)
    upsilon = norm2 - delta * xi[:, None] * cross
    max_imag = float(np.abs(upsilon.imag).max())
    upsilon = upsilon.real

    d_norm2 = 2.0 * np.einsum("mi,xmi->xm", np.conj(v), vdot).real
    d_cross = 2.0 * np.einsum("mi,xmi->xm", np.conj(v), iKvdot).real
    d_upsilon = d_norm2 - delta * xi[:, None] * d_cross

    slack = d_upsilon + c0 * xi[:, None] ** 2 * upsilon
    worst = float(slack.max())
    viol_idx = np.argwhere(slack > tol)
    violations = [(float(xi[i]), int(m)) for i, m in viol_idx[:10]]
    passed = equivalence_ok and worst <= tol and max_imag <= 1e-12
    return LyapunovReport(passed=bool(passed), c0=c0, delta=delta,
                          worst_slack=worst, max_imag=max_imag,
                          equivalence_ok=bool(equivalence_ok),
                          violations=violations)
