"""Exact per-mode evolution of the linearized system and decay-rate fitting.

Each Fourier mode of the linear perturbation system evolves as
What(xi, t) = exp(-t M(i xi)) What(xi, 0).  Whole-line evolution is realized
as quadrature over a continuous xi grid graded toward the origin (where the
algebraic decay rate is decided) rather than as a periodic FFT, whose
spectral gap would destroy the t^{-1/4} tail.  The weighted modal energy

    ||W||_ell^2 = int xi^{2 ell} [ (1 + xi^2) |What_1|^2 + |What_2|^2
                                   + |What_3|^2 ] dxi

is the Fourier-side realization of the anisotropic norm that gives the
density one extra derivative.  For integrable initial data with
What(0) != 0 the norm decays like (1 + t)^{-(ell/2 + 1/4)}.

Matrix exponentials use a per-node eigendecomposition with a
scaling-and-squaring fallback (scipy.linalg.expm) wherever the eigenvector
matrix is ill-conditioned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from .fitting import fit_power_law
from .symbols import EquilibriumCoefficients, evolution_symbol

__all__ = [
    "SpectralProfile",
    "DecayFit",
    "PointwiseReport",
    "ModePropagator",
    "geometric_nodes",
    "gaussian_profile",
    "zero_mass_gaussian_profile",
    "propagate_mode",
    "weighted_norm",
    "evolve_and_fit",
    "verify_pointwise",
]


def geometric_nodes(n_nodes: int = 4096, xi_max: float = 200.0,
                    h0: float = 1e-4) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric quadrature nodes graded geometrically toward xi = 0.

    Half the budget is spent on each sign; spacings grow geometrically from
    ``h0`` at the origin out to ``xi_max``.  Weights come from Simpson's rule
    applied in the (uniform) node index with the analytic Jacobian of the
    grading map, which keeps the quadrature fourth-order accurate on the
    graded grid.  Returns (nodes, weights) with 2*(n_nodes//2) + 1 entries.
    """
    n_half = n_nodes // 2
    if n_half < 2:
        raise ValueError("need at least 4 nodes")
    if h0 * n_half >= xi_max:
        raise ValueError("h0 too large for the requested range")

    def reach(log_r):
        # solved in log space; clip to dodge overflow far from the root
        if n_half * log_r > 600.0:
            return 1e300
        r = np.exp(log_r)
        return h0 * np.expm1(n_half * log_r) / (r - 1.0) - xi_max

    ratio = float(np.exp(brentq(reach, 1e-15, 0.7, xtol=1e-16, rtol=8.9e-16)))

    j = np.arange(0, n_half + 1, dtype=float)
    pos = h0 * (ratio ** j - 1.0) / (ratio - 1.0)
    nodes = np.concatenate([-pos[:0:-1], pos])
    s = np.arange(-n_half, n_half + 1, dtype=float)
    jac = h0 * ratio ** np.abs(s) * np.log(ratio) / (ratio - 1.0)

    n_int = nodes.size - 1  # even by construction
    simpson = np.ones(nodes.size)
    simpson[1:-1:2] = 4.0
    simpson[2:-1:2] = 2.0
    simpson /= 3.0
    weights = simpson * jac
    return nodes, weights


@dataclass
class SpectralProfile:
    """Quadrature nodes, weights, and per-node complex 3-vectors What(xi).

    A real-valued physical field corresponds to Hermitian symmetry
    What(-xi) = conj(What(xi)).
    """

    xi_nodes: np.ndarray
    weights: np.ndarray
    modes: np.ndarray  # (n_nodes, 3) complex

    def __post_init__(self):
        self.xi_nodes = np.asarray(self.xi_nodes, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        self.modes = np.asarray(self.modes, dtype=complex)
        if np.any(np.diff(self.xi_nodes) <= 0):
            raise ValueError("xi_nodes must be strictly increasing")
        if self.modes.shape != (self.xi_nodes.size, 3):
            raise ValueError("modes must have shape (n_nodes, 3)")

    def hermitian_defect(self) -> float:
        """Max |What(-xi) - conj(What(xi))| over nodes (0 for a real field).

        Requires a sign-symmetric node set; returns nan otherwise.
        """
        if not np.allclose(self.xi_nodes, -self.xi_nodes[::-1]):
            return float("nan")
        return float(np.abs(self.modes[::-1] - np.conj(self.modes)).max())

    def with_modes(self, modes: np.ndarray) -> "SpectralProfile":
        return SpectralProfile(self.xi_nodes, self.weights, modes)


def gaussian_profile(nodes: Optional[np.ndarray] = None,
                     weights: Optional[np.ndarray] = None,
                     width: float = 1.0,
                     amplitudes=(1.0, 1.0, 1.0)) -> SpectralProfile:
    """Profile What(xi) = amplitudes * exp(-(width xi)^2); nonzero at xi = 0."""
    if nodes is None or weights is None:
        nodes, weights = geometric_nodes()
    shape = np.exp(-(width * nodes) ** 2)
    modes = shape[:, None] * np.asarray(amplitudes, dtype=complex)[None, :]
    return SpectralProfile(nodes, weights, modes)


def zero_mass_gaussian_profile(nodes: Optional[np.ndarray] = None,
                               weights: Optional[np.ndarray] = None,
                               width: float = 1.0,
                               amplitudes=(1.0, 1.0, 1.0)) -> SpectralProfile:
    """Hermitian profile i xi exp(-(width xi)^2): vanishing mean (What(0) = 0)."""
    if nodes is None or weights is None:
        nodes, weights = geometric_nodes()
    shape = 1j * nodes * np.exp(-(width * nodes) ** 2)
    modes = shape[:, None] * np.asarray(amplitudes, dtype=complex)[None, :]
    return SpectralProfile(nodes, weights, modes)


class ModePropagator:
    """Precomputed eigendecompositions of M(i xi) over a node set.

    Modes evolve as V exp(-lambda t) V^{-1} What(0); nodes whose eigenvector
    matrix is ill-conditioned fall back to scaling-and-squaring per time.
    The eigendecomposition path satisfies the semigroup property to roundoff.
    """

    def __init__(self, coeffs: EquilibriumCoefficients, xi_nodes: np.ndarray,
                 cond_threshold: float = 1e4):
        self.xi_nodes = np.asarray(xi_nodes, dtype=float)
        self.generators = evolution_symbol(coeffs, self.xi_nodes)
        lam, vecs = np.linalg.eig(self.generators)
        cond = (np.linalg.norm(vecs, axis=(-2, -1))
                * np.linalg.norm(np.linalg.pinv(vecs), axis=(-2, -1)))
        self.bad = cond > cond_threshold
        self.lam = lam
        self.vecs = vecs
        self.vecs_inv = np.linalg.inv(np.where(self.bad[:, None, None], np.eye(3), vecs))

    def propagate(self, modes: np.ndarray, t: float) -> np.ndarray:
        """Evolve all modes to time t (t >= 0)."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        if t == 0.0:
            return modes.copy()
        coeff = np.einsum("kij,kj->ki", self.vecs_inv, modes)
        out = np.einsum("kij,kj->ki", self.vecs, np.exp(-self.lam * t) * coeff)
        if np.any(self.bad):
            for k in np.flatnonzero(self.bad):
                out[k] = expm(-t * self.generators[k]) @ modes[k]
        return out


def propagate_mode(coeffs: EquilibriumCoefficients, mode, xi: float,
                   t: float) -> np.ndarray:
    """exp(-t M(i xi)) applied to a single complex 3-vector."""
    prop = ModePropagator(coeffs, np.atleast_1d(float(xi)))
    return prop.propagate(np.asarray(mode, dtype=complex)[None, :], float(t))[0]


def matrix_exponentials(generators: np.ndarray, t: float,
                        cond_threshold: float = 1e4) -> np.ndarray:
    """exp(-t G_k) for a stack (..., 3, 3) of generators.

    Eigendecomposition per matrix, with scaling-and-squaring for entries whose
    eigenvector matrix is ill-conditioned.
    """
    gen = np.asarray(generators)
    lam, vecs = np.linalg.eig(gen)
    cond = (np.linalg.norm(vecs, axis=(-2, -1))
            * np.linalg.norm(np.linalg.pinv(vecs), axis=(-2, -1)))
    bad = cond > cond_threshold
    vecs_safe = np.where(bad[..., None, None], np.eye(3), vecs)
    out = np.einsum("...ij,...j,...jk->...ik", vecs_safe,
                    np.exp(-lam * t), np.linalg.inv(vecs_safe))
    if np.any(bad):
        flat_out = out.reshape(-1, 3, 3)
        flat_gen = gen.reshape(-1, 3, 3)
        for idx in np.flatnonzero(bad.ravel()):
            flat_out[idx] = expm(-t * flat_gen[idx])
        out = flat_out.reshape(out.shape)
    return out


def modal_energy(profile: SpectralProfile, ell: float = 0.0) -> np.ndarray:
    """Pointwise weighted energy xi^{2 ell} [(1+xi^2)|W1|^2 + |W2|^2 + |W3|^2]."""
    xi = profile.xi_nodes
    w = np.abs(profile.modes) ** 2
    base = (1.0 + xi ** 2) * w[:, 0] + w[:, 1] + w[:, 2]
    if ell != 0.0:
        base = xi ** (2.0 * ell) * base
    return base


def weighted_norm(profile: SpectralProfile, ell: float = 0.0) -> float:
    """Quadrature of the weighted modal energy, square-rooted."""
    return float(np.sqrt(np.sum(profile.weights * modal_energy(profile, ell))))


@dataclass
class DecayFit:
    """log ||.|| vs log(1+t) slope over a late-time window."""

    exponent: float
    amplitude: float
    residual: float
    t_window: tuple[float, float]
    flagged: bool = False  # residual above threshold: fit unreliable
    times: np.ndarray = field(repr=False, default=None)
    norms: np.ndarray = field(repr=False, default=None)


def evolve_and_fit(coeffs: EquilibriumCoefficients, initial: SpectralProfile,
                   times: Sequence[float], ell: float = 0.0,
                   fit_window: Optional[tuple[float, float]] = None,
                   residual_tol: float = 0.1) -> DecayFit:
    """Propagate every mode to each time, measure the order-ell norm, fit decay.

    ``times`` must be increasing; the default fit window [t_max/100, t_max]
    discards the transient where constants dominate.  The fitted exponent of
    log-norm against log(1 + t) approaches -(ell/2 + 1/4) for integrable data
    with nonvanishing mean mode.
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    prop = ModePropagator(coeffs, initial.xi_nodes)
    norms = np.array([
        weighted_norm(initial.with_modes(prop.propagate(initial.modes, t)), ell)
        for t in times
    ])
    if fit_window is None:
        fit_window = (times[-1] / 100.0, times[-1])
    fit = fit_power_law(1.0 + times, norms,
                        (1.0 + fit_window[0], 1.0 + fit_window[1]))
    return DecayFit(exponent=fit.exponent, amplitude=fit.amplitude,
                    residual=fit.residual, t_window=fit_window,
                    flagged=fit.residual > residual_tol,
                    times=times, norms=norms)


@dataclass
class PointwiseReport:
    """Observed constant in the per-mode bound E(t) <= C exp(-2 c0 xi^2 t) E(0)."""

    c0: float
    observed_constant: float
    worst_xi: float
    worst_t: float
    passed: bool
    n_samples: int

    def to_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return ("== pointwise modal decay ==\n"
                f"  [{status}] E(t) <= C exp(-2 c0 xi^2 t) E(0) with c0 = {self.c0:.6g}\n"
                f"  observed C = {self.observed_constant:.6g} "
                f"(worst at xi = {self.worst_xi:.4g}, t = {self.worst_t:.4g}; "
                f"{self.n_samples} samples)")


def verify_pointwise(coeffs: EquilibriumCoefficients, xi_grid, t_grid,
                     c0: float, n_modes: int = 8, seed: int = 0,
                     constant_cap: float = 1e3) -> PointwiseReport:
    """Check the exponential modal bound for random initial modes.

    For each grid xi and random unit mode, the weighted modal energy at every
    time of ``t_grid`` is compared against exp(-2 c0 xi^2 t) times its initial
    value; the worst ratio is the observed constant C.  ``c0`` should be a
    certified uniform modal rate (e.g. slightly below min(-sigma/xi^2) from
    the spectral bound).
    """
    xi = np.asarray(xi_grid, dtype=float)
    xi = xi[xi != 0.0]
    t_grid = np.asarray(t_grid, dtype=float)
    rng = np.random.default_rng(seed)
    modes0 = rng.standard_normal((n_modes, 3)) + 1j * rng.standard_normal((n_modes, 3))
    modes0 /= np.linalg.norm(modes0, axis=-1, keepdims=True)

    prop = ModePropagator(coeffs, xi)
    weight = 1.0 + xi ** 2
    log_worst = -np.inf
    worst_xi = worst_t = 0.0
    count = 0
    for m in modes0:
        stacked = np.broadcast_to(m, (xi.size, 3))
        e0 = weight * np.abs(stacked[:, 0]) ** 2 + np.abs(stacked[:, 1]) ** 2 \
            + np.abs(stacked[:, 2]) ** 2
        for t in t_grid:
            mt = prop.propagate(np.array(stacked), float(t))
            et = weight * np.abs(mt[:, 0]) ** 2 + np.abs(mt[:, 1]) ** 2 \
                + np.abs(mt[:, 2]) ** 2
            # log-space ratio: the exponential factor underflows long before
            # the modal energy does, and a fully decayed mode passes trivially
            with np.errstate(divide="ignore"):
                log_ratio = np.where(
                    et > 0.0,
                    np.log(np.maximum(et, 1e-300)) - np.log(e0)
                    + 2.0 * c0 * xi ** 2 * t,
                    -np.inf)
            count += log_ratio.size
            k = int(np.argmax(log_ratio))
            if log_ratio[k] > log_worst:
                log_worst = float(log_ratio[k])
                worst_xi, worst_t = float(xi[k]), float(t)
    worst = float(np.exp(log_worst))
    passed = np.isfinite(worst) and worst < constant_cap
    return PointwiseReport(c0=c0, observed_constant=worst, worst_xi=worst_xi,
                           worst_t=worst_t, passed=bool(passed), n_samples=count)
