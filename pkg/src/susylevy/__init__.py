"""Complex Lyapunov exponent and density of states for supersymmetric
Schrodinger operators whose superpotential is a Levy noise."""

__version__ = "0.1.0"

from .errors import (BranchCutError, ConvergenceError, DomainError, InfiniteMeanError,
                     SusyLevyError, UnsupportedError)
from .levy_core import Family, LevyProcessSpec, coefficients, levy_exponent
from .cfrac import OmegaValue, dos_continued, dos_real_axis, evaluate_K, omega_cf
from .solvable import ClosedFormModel, dos_closed, invariant_density, omega_closed
from .riccati_mc import MCEstimate, PathConfig, estimate
from .semiclassical import AsymptoticForm, asymptotic_catalog, wkb_log_dos
from .tables import DosTable

__all__ = [
    "__version__",
    "BranchCutError", "ConvergenceError", "DomainError", "InfiniteMeanError", "SusyLevyError",
    "UnsupportedError", "Family", "LevyProcessSpec", "coefficients", "levy_exponent",
    "OmegaValue", "dos_continued", "dos_real_axis", "evaluate_K", "omega_cf",
    "ClosedFormModel", "dos_closed", "invariant_density", "omega_closed",
    "MCEstimate", "PathConfig", "estimate", "AsymptoticForm", "asymptotic_catalog",
    "wkb_log_dos", "DosTable",
]
