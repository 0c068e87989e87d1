"""Numerical laboratory for sharp functional inequalities and their stability.

Modules:

- :mod:`ineqlab.radial` — graded radial grids, quadrature with analytic
  power-law tail corrections, differentiation, weighted norms;
- :mod:`ineqlab.profiles` — extremal and stationary reference families and
  the projection onto them;
- :mod:`ineqlab.functionals` — deficits (Sobolev, weak-norm dual,
  interpolation, log-Sobolev), entropy/production pairs, the duality-gap
  frame;
- :mod:`ineqlab.flows` — finite-volume fast-diffusion flows (self-similar
  and conformal-exponent), decay-rate fits, backward quotient bounds;
- :mod:`ineqlab.spectrum` — weighted spectral gaps of the linearized forms;
- :mod:`ineqlab.sphere` — zonal functionals, subcritical interpolation
  deficits and the nonlinear flow on the sphere;
- :mod:`ineqlab.gaussian` — Gaussian-measure log-Sobolev deficits and the
  compact-support improved constants;
- :mod:`ineqlab.cli` — config-driven experiment runner.
"""

from .flows import (FlowConfig, FlowTrace, PositivityError, backward_quotient_check,
                    eep_stability_check, extinction_profile_check,
                    fit_decay_rate, rate_constants, run_rfd, run_yamabe)
from .functionals import (DualityFrame, EntropyPair, InequalityReport,
                          MassMismatchError, duality_gap_report, entropy_pair,
                          euclidean_lsi_deficit, gns_deficit, hls_deficit,
                          sharp_constants, sobolev_constant_exact,
                          sobolev_deficit, euler_lagrange_distance)
from .gaussian import (GaussianProfile, bridge_to_standard,
                       gaussian_lsi_deficit, logsob_distance,
                       make_gaussian_grid, compact_lsi_constants, compact_lsi_check)
from .profiles import (AubinTalentiParams, BarenblattParams, aubin_talenti,
                       barenblatt, default_grid, g_star, gns_optimizer,
                       project_to_aubin_talenti, yamabe_separable)
from .radial import (RadialGrid, RadialProfile, TailDivergenceError,
                     dirichlet_energy, lp_norm, make_grid, mass,
                     profile_from_csv, radial_integral)
from .spectrum import hardy_poincare_gap, spectral_gap_report
from .sphere import (ZonalProfile, large_d_limit_check, m_exponents,
                     make_zonal_grid, sphere_deficit, sphere_flow)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
