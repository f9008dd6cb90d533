"""Arnoldi factorization of the shift-and-invert operator and reduced solves.

Multiplying (A - z*B) x = f on the left by the inverse of A - sigma*B turns
the node solve into (I + (sigma - z)*M) x = b with M = (A - sigma*B)^{-1} B
and b = (A - sigma*B)^{-1} f. Krylov subspaces are invariant under this
affine shift of M, so one Arnoldi factorization built at sigma answers the
reduced m-by-m system for every nearby node z. The leftover Arnoldi term
gives the residual of each reduced solve in closed form, so accuracy can be
monitored without touching the full-size operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, ReducedSingular
from .factorization import apply_resolvent, factorize_shift
from .pencil import Pencil, ProbeVector

__all__ = ["KrylovBasis", "ShiftedSolve", "build_basis", "solve_shifted",
           "reconstruct", "accumulate_reduced"]

# Relative thresholds: basis growth stops when the new direction is this
# small compared to ||M v_j|| (numerically invariant subspace), and a
# reduced solve is singular when its smallest pivot is this small compared
# to the largest one.
BREAKDOWN_RTOL = 1e-14
REDUCED_PIVOT_RTOL = 1e-14


def _hessenberg_solve_many_py(H, beta, coeffs):
    """Row-elimination solve of (I + c*H) y = beta*e1 for each c in coeffs.

    Pure-numpy fallback for the jit-compiled kernel below; identical
    algorithm (partial pivoting between the two candidate rows of each
    column, O(m^2) per system).
    """
    m = H.shape[0]
    nz = coeffs.shape[0]
    Y = np.zeros((nz, m), dtype=np.complex128)
    ok = np.ones(nz, dtype=np.bool_)
    for q in range(nz):
        T = np.eye(m, dtype=np.complex128) + coeffs[q] * H
        rhs = np.zeros(m, dtype=np.complex128)
        rhs[0] = beta
        pmin, pmax = np.inf, 0.0
        singular = False
        for k in range(m - 1):
            if abs(T[k + 1, k]) > abs(T[k, k]):
                tmp = T[k, k:].copy()
                T[k, k:] = T[k + 1, k:]
                T[k + 1, k:] = tmp
                rhs[k], rhs[k + 1] = rhs[k + 1], rhs[k]
            piv = abs(T[k, k])
            pmin, pmax = min(pmin, piv), max(pmax, piv)
            if piv == 0.0:
                singular = True
                break
            mult = T[k + 1, k] / T[k, k]
            T[k + 1, k + 1:] -= mult * T[k, k + 1:]
            rhs[k + 1] -= mult * rhs[k]
        if not singular:
            piv = abs(T[m - 1, m - 1])
            pmin, pmax = min(pmin, piv), max(pmax, piv)
            singular = piv == 0.0 or pmin < REDUCED_PIVOT_RTOL * pmax
        if singular:
            ok[q] = False
            continue
        y = Y[q]
        for i in range(m - 1, -1, -1):
            y[i] = (rhs[i] - np.dot(T[i, i + 1:], y[i + 1:])) / T[i, i]
    return Y, ok


def _hessenberg_solve_many_loops(H, beta, coeffs):
    # Same algorithm as the numpy fallback, written with explicit loops so
    # numba can compile it; this kernel dominates the solver's inner loop.
    m = H.shape[0]
    nz = coeffs.shape[0]
    Y = np.zeros((nz, m), dtype=np.complex128)
    ok = np.ones(nz, dtype=np.bool_)
    T = np.empty((m, m), dtype=np.complex128)
    rhs = np.empty(m, dtype=np.complex128)
    for q in range(nz):
        c = coeffs[q]
        for i in range(m):
            for j in range(m):
                T[i, j] = c * H[i, j]
            T[i, i] += 1.0
            rhs[i] = 0.0
        rhs[0] = beta
        pmin = np.inf
        pmax = 0.0
        singular = False
        for k in range(m - 1):
            if abs(T[k + 1, k]) > abs(T[k, k]):
                for j in range(k, m):
                    T[k, j], T[k + 1, j] = T[k + 1, j], T[k, j]
                rhs[k], rhs[k + 1] = rhs[k + 1], rhs[k]
            piv = abs(T[k, k])
            if piv < pmin:
                pmin = piv
            if piv > pmax:
                pmax = piv
            if piv == 0.0:
                singular = True
                break
            mult = T[k + 1, k] / T[k, k]
            for j in range(k + 1, m):
                T[k + 1, j] -= mult * T[k, j]
            rhs[k + 1] -= mult * rhs[k]
        if not singular:
            piv = abs(T[m - 1, m - 1])
            if piv < pmin:
                pmin = piv
            if piv > pmax:
                pmax = piv
            singular = piv == 0.0 or pmin < REDUCED_PIVOT_RTOL * pmax
        if singular:
            ok[q] = False
            continue
        for i in range(m - 1, -1, -1):
            acc = rhs[i]
            for j in range(i + 1, m):
                acc -= T[i, j] * Y[q, j]
            Y[q, i] = acc / T[i, i]
    return Y, ok


try:
    from numba import njit

    _hessenberg_solve_many = njit(cache=True, nogil=True)(_hessenberg_solve_many_loops)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _hessenberg_solve_many = _hessenberg_solve_many_py


@dataclass(eq=False)
class KrylovBasis:
    """Arnoldi factorization of M = (A - sigma*B)^{-1} B at shift sigma.

    Satisfies M V = V H + v_next * h_next * e_m^T with orthonormal columns
    V, upper Hessenberg H, and v1 = b / beta. ``h_next`` is zero exactly
    when the basis was truncated by a lucky breakdown (``v_next`` is then
    absent). Immutable after construction; reduced solves against a shared
    basis are safe from multiple threads.
    """

    sigma: complex
    m: int
    V: np.ndarray
    H: np.ndarray
    h_next: float
    v_next: np.ndarray | None
    beta: float
    b: np.ndarray

    @property
    def n(self):
        return self.V.shape[0]


@dataclass(frozen=True)
class ShiftedSolve:
    """Reduced solution for one quadrature node with its analytic residual."""

    z: complex
    y: np.ndarray
    residual: float


def build_basis(pencil: Pencil, sigma: complex, f: ProbeVector, m: int) -> KrylovBasis:
    """Run m steps of Arnoldi on M = (A - sigma*B)^{-1} B from b = (A - sigma*B)^{-1} f.

    M is applied only through the factorization (never formed). Modified
    Gram-Schmidt with one full reorthogonalization pass per step keeps the
    basis orthonormal to ~1e-14. A new direction smaller than
    ``BREAKDOWN_RTOL * ||M v_j||`` truncates the basis (lucky breakdown:
    the Krylov space is numerically invariant and reduced solves in it are
    exact).

    Propagates :class:`ShiftIsEigenvalue` from the factorization.
    """
    if m < 1:
        raise ConfigError(f"Krylov dimension must be at least 1, got {m}")
    fact = factorize_shift(pencil, sigma)
    sigma = complex(sigma)
    n = pencil.n
    m = min(m, n)
    b_csr = pencil.b.csr

    b = apply_resolvent(fact, f.values)
    beta = float(np.linalg.norm(b))
    V = np.zeros((n, m), dtype=np.complex128)
    H = np.zeros((m, m), dtype=np.complex128)
    V[:, 0] = b / beta

    size = m
    h_next = 0.0
    v_next = None
    for j in range(m):
        w = apply_resolvent(fact, b_csr @ V[:, j])
        mv_norm = np.linalg.norm(w)
        for i in range(j + 1):
            hij = np.vdot(V[:, i], w)
            w -= hij * V[:, i]
            H[i, j] += hij
        # one full reorthogonalization pass
        for i in range(j + 1):
            corr = np.vdot(V[:, i], w)
            w -= corr * V[:, i]
            H[i, j] += corr
        h_new = float(np.linalg.norm(w))
        if mv_norm == 0.0 or h_new < BREAKDOWN_RTOL * mv_norm:
            size = j + 1
            h_next = 0.0
            v_next = None
            break
        if j + 1 < m:
            V[:, j + 1] = w / h_new
            H[j + 1, j] = h_new
        else:
            h_next = h_new
            v_next = w / h_new

    return KrylovBasis(
        sigma=sigma,
        m=size,
        V=np.ascontiguousarray(V[:, :size]),
        H=np.ascontiguousarray(H[:size, :size]),
        h_next=h_next,
        v_next=v_next,
        beta=beta,
        b=b,
    )


def _solve_many(basis: KrylovBasis, zs: np.ndarray):
    """Reduced solves for several nodes at once against one basis.

    Returns (Y, residuals, ok): row q of Y solves
    (I + (sigma - z_q) H) y = beta*e1 by Hessenberg-aware elimination
    (O(m^2) per node), residuals hold |sigma - z|*h_next*|e_m^T y|, and
    ``ok`` flags rows whose reduced system was nonsingular.
    """
    coeffs = basis.sigma - np.asarray(zs, dtype=np.complex128)
    Y, ok = _hessenberg_solve_many(basis.H, basis.beta, coeffs)
    residuals = np.abs(coeffs) * basis.h_next * np.abs(Y[:, -1])
    return Y, residuals, ok


def solve_shifted(basis: KrylovBasis, z: complex) -> ShiftedSolve:
    """Solve the reduced system for node z and report its analytic residual.

    Raises :class:`ReducedSingular` when I + (sigma - z) H is singular to
    working precision, i.e. -1/(sigma - z) is an eigenvalue of H; the caller
    falls back to a basis at a new shift.
    """
    z = complex(z)
    Y, residuals, ok = _solve_many(basis, np.array([z], dtype=np.complex128))
    if not ok[0]:
        raise ReducedSingular(z)
    return ShiftedSolve(z=z, y=Y[0], residual=float(residuals[0]))


def reconstruct(basis: KrylovBasis, y: np.ndarray) -> np.ndarray:
    """Lift a reduced solution back to full size: returns V @ y."""
    y = np.asarray(y)
    if y.shape != (basis.m,):
        raise DimensionError(f"expected a reduced vector of length {basis.m}, got {y.shape}")
    return basis.V @ y.astype(np.complex128, copy=False)


def accumulate_reduced(basis: KrylovBasis, weighted_ys) -> np.ndarray:
    """Return V @ sum(w_j * y_j) using a single full-size product.

    Equal (to rounding) to summing ``w_j * reconstruct(y_j)`` but the
    n-by-m multiplication happens once, which is what makes quadrature
    sums over many nodes cheap.
    """
    acc = np.zeros(basis.m, dtype=np.complex128)
    for w, y in weighted_ys:
        y = np.asarray(y)
        if y.shape != (basis.m,):
            raise DimensionError(
                f"expected reduced vectors of length {basis.m}, got {y.shape}"
            )
        acc += w * y
    return basis.V @ acc
