"""Cut-cell fictitious-domain Stokes solver with interface multipliers."""

from .assembly import (SaddleSystem, StokesCoefficients, StokesPrimitives,
                       apply_compact_form, assemble, assemble_aux_matrices,
                       assemble_primitives)
from .discretization import Discretization
from .elements import TRIPLET_NAMES, make_triplet
from .geometry import (BackgroundMesh, CircleLevelSet, CellKind, ElementTag,
                       build_mesh, classify_elements)
from .harness import (CaseConfig, ErrorReport, assumption_scan,
                      convergence_study, gamma_sweep, geometry_sweep,
                      run_case)
from .manufactured import ManufacturedSolution
from .solver import SolveReport, condition_estimate, generalized_eigmax, solve

__all__ = [
    "BackgroundMesh", "CircleLevelSet", "CellKind", "CaseConfig",
    "Discretization", "ElementTag", "ErrorReport", "ManufacturedSolution",
    "SaddleSystem", "SolveReport", "StokesCoefficients", "StokesPrimitives",
    "TRIPLET_NAMES", "apply_compact_form", "assemble",
    "assemble_aux_matrices", "assemble_primitives", "assumption_scan",
    "build_mesh", "classify_elements", "condition_estimate",
    "convergence_study", "gamma_sweep", "generalized_eigmax",
    "geometry_sweep", "make_triplet", "run_case", "solve",
]

__version__ = "0.1.0"
