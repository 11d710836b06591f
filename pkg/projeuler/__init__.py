"""
.. include:: ../README.md
"""
from .core.errors import (
    AdmissibilityError,
    BlowUpError,
    ConfigError,
    PathBudgetError,
    ProjEulerError,
)
from .core.harness import (
    ConvergenceReport,
    MomentTrace,
    fit_rate,
    moment_monitor,
    mse_convergence,
)
from .core.model import SdeModel, SchemeConstants, admissible_step_bound, scheme_constants
from .core.parallel import Parallel
from .core.pullback import (
    GapSeries,
    PullbackResult,
    contraction_gap,
    periodicity_check,
    pullback_solve,
)
from .core.scheme import (
    Admissibility,
    SchemeConfig,
    SchemeKind,
    Trajectory,
    em_step,
    integrate,
    pe_step,
    project,
)
from .core.wiener import BrownianPath, GridSpec, coarsen, generate, increment_at, shift
from .models import PRESETS, get_preset

__version__ = "0.0.0"  # Replaced by poetry-dynamic-versioning when deploying

__all__ = [
    "core",
    "models",
    "utils",
    "AdmissibilityError",
    "BlowUpError",
    "ConfigError",
    "PathBudgetError",
    "ProjEulerError",
    "ConvergenceReport",
    "MomentTrace",
    "fit_rate",
    "moment_monitor",
    "mse_convergence",
    "SdeModel",
    "SchemeConstants",
    "admissible_step_bound",
    "scheme_constants",
    "Parallel",
    "GapSeries",
    "PullbackResult",
    "contraction_gap",
    "periodicity_check",
    "pullback_solve",
    "Admissibility",
    "SchemeConfig",
    "SchemeKind",
    "Trajectory",
    "em_step",
    "integrate",
    "pe_step",
    "project",
    "BrownianPath",
    "GridSpec",
    "coarsen",
    "generate",
    "increment_at",
    "shift",
    "PRESETS",
    "get_preset",
]
