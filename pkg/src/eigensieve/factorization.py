"""Direct sparse factorization of A - sigma*B and resolvent application.

One LU factorization per shift is the backbone of the solver: it is reused
for every Krylov step and, through the reduced systems, for every quadrature
node served by that shift. Singularity is reported via
:class:`~eigensieve.errors.ShiftIsEigenvalue` and never repaired here; shift
perturbation policy belongs to the caller so it stays testable in isolation.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse.linalg as spla

from .errors import DimensionError, ShiftIsEigenvalue
from .pencil import Pencil

__all__ = ["ShiftedFactorization", "factorize_shift", "apply_resolvent", "solve_node_direct"]

# A factorization counts as singular when its smallest pivot falls below
# this fraction of the largest pivot magnitude.
PIVOT_RTOL = 1e-14


class ShiftedFactorization:
    """Reusable LU factors of A - sigma*B.

    Immutable after construction; concurrent solves against one instance
    are safe (each solve works on its own right-hand side).
    """

    def __init__(self, sigma, lu, n):
        self.sigma = complex(sigma)
        self.n = int(n)
        self._lu = lu

    def __repr__(self):
        return f"ShiftedFactorization(sigma={self.sigma}, n={self.n})"


def factorize_shift(pencil: Pencil, sigma: complex) -> ShiftedFactorization:
    """Factorize A - sigma*B with partial pivoting and a deterministic ordering.

    Raises :class:`ShiftIsEigenvalue` when the shifted matrix is structurally
    singular or any pivot magnitude falls below ``PIVOT_RTOL`` times the
    largest pivot, which signals that sigma is (numerically) a generalized
    eigenvalue of the pencil.
    """
    sigma = complex(sigma)
    shifted = (pencil.a.csr - sigma * pencil.b.csr).tocsc()
    try:
        lu = spla.splu(shifted)
    except RuntimeError as exc:
        # SuperLU reports exact singularity (structural or numerical) this way.
        raise ShiftIsEigenvalue(sigma) from exc
    pivots = np.abs(lu.U.diagonal())
    if pivots.size and pivots.min() < PIVOT_RTOL * pivots.max():
        raise ShiftIsEigenvalue(sigma)
    return ShiftedFactorization(sigma, lu, pencil.n)


def apply_resolvent(fact: ShiftedFactorization, v: np.ndarray) -> np.ndarray:
    """Solve (A - sigma*B) x = v using the stored factors."""
    v = np.asarray(v)
    if v.shape != (fact.n,):
        raise DimensionError(f"expected a vector of length {fact.n}, got shape {v.shape}")
    return fact._lu.solve(v.astype(np.complex128, copy=False))


def solve_node_direct(pencil: Pencil, z: complex, f: np.ndarray) -> np.ndarray:
    """Solve (A - z*B) x = f with a fresh factorization at z.

    Exact per-node solve; used as a fallback and as test ground truth.
    Propagates :class:`ShiftIsEigenvalue` when z lies on (or numerically
    near) the spectrum; the caller decides how to perturb the node.
    """
    return apply_resolvent(factorize_shift(pencil, z), f)
