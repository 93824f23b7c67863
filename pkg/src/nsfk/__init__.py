"""Numerical toolkit for the dissipative structure of 1-D heat-conducting
capillary (Korteweg-type) compressible fluids.

Subpackages cover the thermodynamic closure (:mod:`nsfk.thermo`), the convex
entropy extension (:mod:`nsfk.convex_extension`), the conservation-form and
Fourier-symbol machinery (:mod:`nsfk.symbols`), the symbol-level dissipativity
analysis (:mod:`nsfk.dissipativity`), exact per-mode linear evolution
(:mod:`nsfk.linear_evolution`), a pseudo-spectral nonlinear integrator
(:mod:`nsfk.nonlinear_solver`) and the command-line driver (:mod:`nsfk.cli`).
"""

__version__ = "0.1.0"
