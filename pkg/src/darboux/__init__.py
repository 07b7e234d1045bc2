"""Complex energy shifts of 1D Schrodinger potentials by one- and two-step Darboux transformations.

Construct with :mod:`darboux.engine`, verify with :mod:`darboux.solver` and
:mod:`darboux.scattering`.
"""

from .engine import (
    FactorizationSeed,
    OneStepResult,
    ShiftRequest,
    TwoStepResult,
    aux_level_shift,
    check_nonsingular,
    map_solution_one_step,
    map_solution_two_step,
    one_step,
    shift_level,
    two_step,
    two_step_shift,
)
from .exceptions import (
    ConvergenceError,
    DarbouxError,
    DuplicateEigenvalueError,
    GridMismatchError,
    IntegrationOverflowError,
    NodeError,
    PreconditionError,
    SingularThetaError,
)
from .field import ComplexField, GridSpec
from .solver import BoundarySpec, ShootingConfig, find_eigenvalue, scan_spectrum
from .systems import FreeLine, FreeSuperposition, HarmonicOscillator, InfiniteWell, SolitonWell

__version__ = "0.1.0"

__all__ = [
    "BoundarySpec",
    "ComplexField",
    "ConvergenceError",
    "DarbouxError",
    "DuplicateEigenvalueError",
    "FactorizationSeed",
    "FreeLine",
    "FreeSuperposition",
    "GridMismatchError",
    "GridSpec",
    "HarmonicOscillator",
    "InfiniteWell",
    "IntegrationOverflowError",
    "NodeError",
    "OneStepResult",
    "PreconditionError",
    "ShiftRequest",
    "ShootingConfig",
    "SingularThetaError",
    "SolitonWell",
    "TwoStepResult",
    "aux_level_shift",
    "check_nonsingular",
    "find_eigenvalue",
    "map_solution_one_step",
    "map_solution_two_step",
    "one_step",
    "scan_spectrum",
    "shift_level",
    "two_step",
    "two_step_shift",
]
