"""Contour-integral eigensolver for sparse non-Hermitian pencils.

Finds all generalized eigenvalues of A x = lambda B x inside a region of
the complex plane by recursive spectral-projection tests, with shifted
Krylov bases reused across quadrature nodes and regions.
"""

from .errors import (CacheEmpty, ConfigError, DimensionError, EigensieveError,
                     InputError, InternalError, OnContour, ParseError,
                     ReducedSingular, ShiftBudgetExceeded,
                     ShiftConstructionFailed, ShiftIsEigenvalue, SolverError,
                     UnsupportedFormat)
from .factorization import (ShiftedFactorization, apply_resolvent,
                            factorize_shift, solve_node_direct)
from .krylov import (KrylovBasis, ShiftedSolve, accumulate_reduced,
                     build_basis, reconstruct, solve_shifted)
from .pencil import (Pencil, ProbeVector, SparseMatrix, make_pencil,
                     random_probe, read_matrix_market)
from .projector import (Contour, Indicator, ProjectionResult, indicator,
                        legacy_indicator, make_contour, project)
from .search import (Config, EigenvalueEstimate, Region, RunCounters,
                     ShiftCache, dedup, find_eigenvalues, subdivide)
from .synthetic import (GivensSimilarity, SyntheticSpec, brute_projection,
                        exact_projection, similarity_matrix, synth_pencil)

__version__ = "0.1.0"

__all__ = [
    "EigensieveError", "InputError", "ParseError", "UnsupportedFormat",
    "DimensionError", "ConfigError", "SolverError", "ShiftIsEigenvalue",
    "ReducedSingular", "CacheEmpty", "ShiftBudgetExceeded",
    "ShiftConstructionFailed", "OnContour", "InternalError",
    "SparseMatrix", "Pencil", "ProbeVector", "read_matrix_market",
    "make_pencil", "random_probe",
    "ShiftedFactorization", "factorize_shift", "apply_resolvent",
    "solve_node_direct",
    "KrylovBasis", "ShiftedSolve", "build_basis", "solve_shifted",
    "reconstruct", "accumulate_reduced",
    "Contour", "ProjectionResult", "Indicator", "make_contour", "project",
    "indicator", "legacy_indicator",
    "Region", "Config", "ShiftCache", "EigenvalueEstimate", "RunCounters",
    "subdivide", "dedup", "find_eigenvalues",
    "GivensSimilarity", "SyntheticSpec", "synth_pencil", "similarity_matrix",
    "exact_projection", "brute_projection",
    "__version__",
]
