"""Pencils with exactly known spectra and independent reference projections.

Ground truth for tests comes from construction rather than from a dense
eigensolver: a diagonal pencil carries its spectrum on its diagonal, unitary
similarity rotations scramble the sparsity while preserving the spectrum
exactly (and the conditioning, so tight test tolerances indicate solver bugs
rather than test ill-conditioning), and residue calculus gives the exact
projection in the diagonal frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, OnContour, ShiftIsEigenvalue
from .factorization import solve_node_direct
from .pencil import Pencil, ProbeVector, SparseMatrix, make_pencil
from .projector import TWO_PI_I, Contour, _circle_rule

__all__ = ["GivensSimilarity", "SyntheticSpec", "synth_pencil", "similarity_matrix",
           "exact_projection", "brute_projection"]


@dataclass(frozen=True)
class GivensSimilarity:
    """Deterministic sequence of random complex Givens rotations."""

    seed: int
    rotations: int


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a pencil with a fully known generalized spectrum.

    ``eigenvalues`` lists the finite spectrum; ``infinite_count`` adds rows
    where B is singular (eigenvalues at infinity). With a transform the
    diagonal pencil is conjugated by a unitary matrix, which leaves the
    spectrum unchanged.
    """

    eigenvalues: tuple
    infinite_count: int = 0
    transform: GivensSimilarity | None = None

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", tuple(complex(e) for e in self.eigenvalues))
        if self.infinite_count < 0:
            raise ConfigError(f"infinite_count must be non-negative, got {self.infinite_count}")
        if self.n < 1:
            raise ConfigError("spectrum must have at least one entry")

    @property
    def n(self):
        return len(self.eigenvalues) + self.infinite_count


def similarity_matrix(spec: SyntheticSpec) -> np.ndarray | None:
    """Accumulated unitary transform of the spec, or None without one."""
    if spec.transform is None:
        return None
    n = spec.n
    rng = np.random.default_rng(spec.transform.seed)
    q = np.eye(n, dtype=np.complex128)
    for _ in range(spec.transform.rotations):
        i, j = rng.choice(n, size=2, replace=False)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        phase = np.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
        c = math.cos(theta)
        s = math.sin(theta) * phase
        row_i = q[i].copy()
        row_j = q[j].copy()
        q[i] = c * row_i + s * row_j
        q[j] = -np.conj(s) * row_i + c * row_j
    return q


def synth_pencil(spec: SyntheticSpec) -> Pencil:
    """Build the pencil realizing the spec's spectrum.

    A is diagonal over the finite eigenvalues with ones on the infinite
    rows; B is the identity with zeros on the infinite rows. The optional
    unitary similarity is applied to both matrices.
    """
    k = len(spec.eigenvalues)
    diag_a = np.concatenate([
        np.asarray(spec.eigenvalues, dtype=np.complex128),
        np.ones(spec.infinite_count, dtype=np.complex128),
    ])
    diag_b = np.concatenate([
        np.ones(k, dtype=np.complex128),
        np.zeros(spec.infinite_count, dtype=np.complex128),
    ])
    a = np.diag(diag_a)
    b = np.diag(diag_b)
    q = similarity_matrix(spec)
    if q is not None:
        a = q @ a @ q.conj().T
        b = q @ b @ q.conj().T
    return make_pencil(SparseMatrix(a), SparseMatrix(b))


def exact_projection(spec: SyntheticSpec, f: ProbeVector, c: Contour,
                     transform: np.ndarray | None = None) -> np.ndarray:
    """Exact spectral projection of f for the contour circle, by residues.

    In the diagonal frame the resolvent is diagonal with entries
    1/(lambda_i - z), so the contour integral keeps component i exactly
    when lambda_i lies strictly inside the circle and zeroes it otherwise;
    infinite-eigenvalue rows contribute nothing. For a transformed pencil
    pass the unitary from :func:`similarity_matrix` to conjugate by.

    Raises :class:`OnContour` when an eigenvalue sits on the circle to
    within 1e-12 of its radius.
    """
    evs = np.asarray(spec.eigenvalues, dtype=np.complex128)
    dist = np.abs(evs - c.center)
    if np.any(np.abs(dist - c.radius) < 1e-12 * c.radius):
        raise OnContour(f"eigenvalue on the contour of radius {c.radius}")
    mask = np.zeros(spec.n, dtype=np.complex128)
    mask[: evs.size][dist < c.radius] = 1.0
    values = f.values
    if transform is not None:
        return transform @ (mask * (transform.conj().T @ values))
    return mask * values


def brute_projection(p: Pencil, f: ProbeVector, c_center: complex, c_radius: float,
                     n_large: int) -> np.ndarray:
    """High-accuracy reference projection using a direct solve at every node.

    No Krylov spaces and no shift reuse; one fresh factorization per node.
    A node that collides with the spectrum is perturbed radially outward by
    1e-8 of the region size and retried once.
    """
    if n_large < 64:
        raise ConfigError(f"reference rule needs at least 64 nodes, got {n_large}")
    nodes, weights = _circle_rule(complex(c_center), float(c_radius), int(n_large))
    total = np.zeros(p.n, dtype=np.complex128)
    size = math.sqrt(2.0) * c_radius
    for z, w in zip(nodes, weights):
        try:
            x = solve_node_direct(p, complex(z), f.values)
        except ShiftIsEigenvalue:
            direction = (z - c_center) / abs(z - c_center)
            x = solve_node_direct(p, complex(z + direction * 1e-8 * size), f.values)
        total += w * x
    return total / TWO_PI_I
