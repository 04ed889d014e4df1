"""Numerical homogenization of ``u - c(x/eps) I[u] - g(x/eps) = 0`` in one dimension.

``I`` is the symmetric alpha-stable Levy operator. The pipeline: parse the
periodic coefficients, discretize ``I`` with a monotone quadrature, solve the
cell problem for the ergodic constant ``d``, assemble the affine effective
operator and compare oscillatory and homogenized Dirichlet solves.
"""

from .cell import (
    CellSolution, CoefficientSet, DiscountSchedule, estimate_d, solve_cell_direct, solve_discounted,
    solve_discounted_eikonal,
)
from .config import Config, load_config, parse_config
from .effective import (
    EffectiveOperator, ThetaCertificate, build_effective, check_subellipticity, eval_effective, harmonic_mean_oracle,
)
from .errors import (
    CertificateFailed, ComputationError, ConfigError, DomainError, HaloTooShort, InputError, InvalidParameter,
    LevyHomogError, NotAffine, NotConverged, OrderingViolated, SingularSystem,
)
from .exprs import ParseError, ParseErrorKind, evaluate, evaluate_array, parse, to_source, validate_periodic
from .harness import ConvergenceTable, CorrectorReport, SweepConfig, corrector_diagnostic, emit, render, run_sweep
from .pide import ProblemInstance, SolveReport, comparison_trial, make_problem, solve, solve_effective, solve_eps_problem
from .quadrature import (
    Domain, GridFunction, LevyQuadrature, SplitParams, SplitValues, Torus, apply_levy, build_quadrature, eval_split,
    near_moment, tail_mass,
)

__version__ = "0.1.0"
