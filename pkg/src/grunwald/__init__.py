"""Grunwald-type approximations of one-sided Levy generators on [-1, 1].

Submodules:
  symbol     Laplace exponents psi (stable, tempered, truncated, custom)
  coeffs     Grunwald coefficients and their convolution identities
  grid       uniform grid, fibers and projections
  generator  boundary-modified rate matrices for the six wall cases
  operators  continuous nonlocal operators, scale functions, resolvents
  semigroup  uniformized matrix exponentials and discrete resolvents
  simulate   Monte Carlo for the killed / reflected / time-changed chain
  harness    f_h constructions and convergence studies
  cli        command-line entry point
"""

__version__ = "0.1.0"

from .symbol import (  # noqa: E402
    Custom,
    LevySymbol,
    Stable,
    SymbolDomainError,
    TemperedStable,
    TruncatedStable,
    symbol_from_config,
)
from .coeffs import CoefficientTable, IdentityReport, IdentityViolation, build_table, verify_identities  # noqa: E402
from .grid import Grid, GridDomainError, project  # noqa: E402
from .generator import BoundaryCase, CASES, RateMatrixViolation, interpolation_matrix  # noqa: E402
from .operators import ScaleFunction, post_widder_k, resolvent_reference  # noqa: E402
from .semigroup import EvolutionRequest, GridFunction, evolve, expm_uniformized, resolvent_solve  # noqa: E402
from .simulate import chain_spec, mc_expectation, modify_path, simulate_free  # noqa: E402
from .harness import ConvergenceStudy, bump_g, build_fh, convergence_study, vartheta  # noqa: E402

__all__ = [
    "__version__",
    "LevySymbol", "Stable", "TemperedStable", "TruncatedStable", "Custom", "SymbolDomainError",
    "symbol_from_config",
    "CoefficientTable", "IdentityReport", "IdentityViolation", "build_table", "verify_identities",
    "Grid", "GridDomainError", "project",
    "BoundaryCase", "CASES", "RateMatrixViolation", "interpolation_matrix",
    "ScaleFunction", "post_widder_k", "resolvent_reference",
    "EvolutionRequest", "GridFunction", "evolve", "expm_uniformized", "resolvent_solve",
    "chain_spec", "mc_expectation", "modify_path", "simulate_free",
    "ConvergenceStudy", "bump_g", "build_fh", "convergence_study", "vartheta",
]
