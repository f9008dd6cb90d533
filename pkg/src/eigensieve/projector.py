"""Quadrature contours, approximate spectral projection, and region indicators.

The projector (1/2*pi*i) * integral of (A - z*B)^{-1} f over a closed curve
keeps exactly the components of f lying in the eigenspace enclosed by the
curve. A square region is circumscribed by a circle so the trapezoidal rule
applies to a periodic integrand, where its error decays exponentially in the
node count. That decay powers the region test: the ratio of projection norms
computed with 2*n0 and n0 nodes stays near 1 when eigenvalues are enclosed
and collapses towards 0 when none are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigError, ShiftIsEigenvalue
from .factorization import solve_node_direct
from .krylov import _solve_many, accumulate_reduced, solve_shifted
from .pencil import Pencil, ProbeVector

if TYPE_CHECKING:  # pragma: no cover
    from .search import Config, Region, RunCounters, ShiftCache

__all__ = ["Contour", "ProjectionResult", "Indicator", "make_contour", "project",
           "indicator", "legacy_indicator"]

TWO_PI_I = 2j * math.pi

# Norms below this floor are treated as exact zero when forming indicator
# ratios; far below any meaningful projection norm.
UNDERFLOW_FLOOR = 1e-300

# Admissibility threshold of the double-projection indicator, fixed by the
# original formulation rather than taken from the configuration.
LEGACY_THRESHOLD = 0.1


@dataclass(frozen=True)
class Contour:
    """Trapezoidal quadrature rule on a circle.

    Nodes are center + radius*exp(2*pi*i*j/n) and weights
    2*pi*i*(z_j - center)/n, so (1/2*pi*i) * sum(w_j * g(z_j)) is the
    trapezoidal approximation of the contour integral of g. The rule
    integrates 1/(z - center) exactly for every n.
    """

    center: complex
    radius: float
    nodes: np.ndarray
    weights: np.ndarray
    n: int


@dataclass(frozen=True)
class ProjectionResult:
    """Approximate projection of a probe vector with solve diagnostics."""

    vector: np.ndarray
    n_nodes: int
    max_node_residual: float


@dataclass(frozen=True)
class Indicator:
    """Region test value with the two projection norms behind it."""

    value: float
    coarse_norm: float
    fine_norm: float
    admissible: bool


def _circle_rule(center: complex, radius: float, n: int):
    j = np.arange(n)
    nodes = center + radius * np.exp(2j * math.pi * j / n)
    weights = TWO_PI_I * (nodes - center) / n
    return nodes, weights


def make_contour(region: Region, n: int) -> Contour:
    """Circumscribe the square region with a circle and build its n-node rule.

    The circle's radius is half_side*sqrt(2) so it passes through the
    square's corners; n must be even so the rule nests inside its
    doubled-count refinement node-for-node.
    """
    if n < 2 or n % 2 != 0:
        raise ConfigError(f"node count must be even and at least 2, got {n}")
    center = complex(region.center)
    radius = region.half_side * math.sqrt(2.0)
    nodes, weights = _circle_rule(center, radius, n)
    return Contour(center=center, radius=radius, nodes=nodes, weights=weights, n=n)


@dataclass(eq=False)
class _NodeSolve:
    """Solution record for one quadrature node.

    ``basis`` is None when the node was solved directly, in which case ``y``
    is the full-size solution vector rather than a reduced one.
    """

    basis: object
    y: np.ndarray
    residual: float


def _perturb_radially(z, center, radius):
    # nudge the node off the spectrum, outward along the contour radius,
    # by 1e-8 of the region size (the circumscribed square's side)
    size = math.sqrt(2.0) * radius
    direction = (z - center) / abs(z - center)
    return z + direction * 1e-8 * size


def _solve_nodes_direct(pencil, probe, nodes, center, radius, counters):
    solves = []
    for z in nodes:
        z = complex(z)
        try:
            x = solve_node_direct(pencil, z, probe.values)
        except ShiftIsEigenvalue:
            x = solve_node_direct(pencil, _perturb_radially(z, center, radius), probe.values)
        if counters is not None:
            counters.add(factorizations=1, node_solves=1)
        solves.append(_NodeSolve(basis=None, y=x, residual=0.0))
    return solves


def _solve_nodes(pencil, probe, contour, cache, cfg, counters):
    """Solve (A - z*B) x = f for every contour node, reusing cached bases.

    Each node is served by the cached basis whose shift is nearest; nodes
    whose analytic residual exceeds cfg.eps get a fresh basis built at the
    node itself, which makes that solve exact. Returns one _NodeSolve per
    node, in node order.
    """
    if not cfg.reuse_krylov:
        return _solve_nodes_direct(pencil, probe, contour.nodes,
                                   contour.center, contour.radius, counters)

    nodes = contour.nodes
    if len(cache) == 0:
        cache.ensure_basis(pencil, probe, complex(nodes[0]), cfg)

    picks = [cache.select_basis(complex(z)) for z in nodes]
    groups = {}
    for q, basis in enumerate(picks):
        groups.setdefault(id(basis), (basis, []))[1].append(q)

    solves = [None] * len(nodes)
    n_solved = 0
    for basis, qs in groups.values():
        zs = nodes[np.array(qs)]
        Y, residuals, ok = _solve_many(basis, zs)
        n_solved += len(qs)
        for t, q in enumerate(qs):
            if ok[t] and residuals[t] <= cfg.eps:
                solves[q] = _NodeSolve(basis=basis, y=Y[t], residual=float(residuals[t]))
                continue
            # residual too large (or reduced system singular): build a basis
            # at the node itself and re-solve; at z == sigma the solve is exact
            z = complex(nodes[q])
            fresh = cache.ensure_basis(pencil, probe, z, cfg)
            sol = solve_shifted(fresh, z)
            n_solved += 1
            solves[q] = _NodeSolve(basis=fresh, y=sol.y, residual=sol.residual)
    if counters is not None:
        counters.add(node_solves=n_solved)
    return solves


def _weighted_sum(pencil_n, solves, indices, weights):
    """Accumulate (1/2*pi*i) * sum(w_q * x_q) over the given node subset."""
    by_basis = {}
    direct = None
    for q, w in zip(indices, weights):
        ns = solves[q]
        if ns.basis is None:
            if direct is None:
                direct = np.zeros(pencil_n, dtype=np.complex128)
            direct += w * ns.y
        else:
            by_basis.setdefault(id(ns.basis), (ns.basis, []))[1].append((w, ns.y))
    total = direct if direct is not None else np.zeros(pencil_n, dtype=np.complex128)
    for basis, pairs in by_basis.values():
        total = total + accumulate_reduced(basis, pairs)
    return total / TWO_PI_I


def project(pencil: Pencil, f: ProbeVector, c: Contour, cache: ShiftCache,
            cfg: Config, counters: RunCounters | None = None) -> ProjectionResult:
    """Approximate the spectral projection of f for the given contour."""
    solves = _solve_nodes(pencil, f, c, cache, cfg, counters)
    vector = _weighted_sum(pencil.n, solves, range(c.n), c.weights)
    max_residual = max((s.residual for s in solves), default=0.0)
    return ProjectionResult(vector=vector, n_nodes=c.n, max_node_residual=max_residual)


def indicator(pencil: Pencil, f: ProbeVector, r: Region, cache: ShiftCache,
              cfg: Config, counters: RunCounters | None = None) -> Indicator:
    """Nested-quadrature region test: ratio of 2*n0- to n0-node projection norms.

    All 2*n0 node solves are performed once; the n0-node sum reuses the
    even-indexed nodes, which coincide with the n0-node rule exactly (same
    nodes, weights scaled by the node count). A ratio above cfg.delta0
    marks the region admissible.
    """
    if cfg.n0 < 2:
        raise ConfigError(f"quadrature base count must be at least 2, got {cfg.n0}")
    if counters is not None:
        counters.add(regions_tested=1)
    contour = make_contour(r, 2 * cfg.n0)
    solves = _solve_nodes(pencil, f, contour, cache, cfg, counters)

    fine_vec = _weighted_sum(pencil.n, solves, range(contour.n), contour.weights)
    evens = range(0, contour.n, 2)
    coarse_vec = _weighted_sum(pencil.n, solves, evens, 2.0 * contour.weights[::2])

    fine_norm = float(np.linalg.norm(fine_vec))
    coarse_norm = float(np.linalg.norm(coarse_vec))
    value = fine_norm / coarse_norm if coarse_norm >= UNDERFLOW_FLOOR else 0.0
    return Indicator(value=value, coarse_norm=coarse_norm, fine_norm=fine_norm,
                     admissible=value > cfg.delta0)


def legacy_indicator(pencil: Pencil, f: ProbeVector, r: Region, cache: ShiftCache,
                     cfg: Config, counters: RunCounters | None = None) -> Indicator:
    """Double-projection region test: project, normalize, project again.

    The second projection needs bases built for a different right-hand
    side, so it runs against a scratch cache; that extra subspace work per
    shift is what the nested-quadrature indicator avoids. Admissibility
    compares against the fixed threshold 0.1.
    """
    if counters is not None:
        counters.add(regions_tested=1)
    contour = make_contour(r, 2 * cfg.n0)
    first = project(pencil, f, contour, cache, cfg, counters)
    first_norm = float(np.linalg.norm(first.vector))
    if first_norm < UNDERFLOW_FLOOR:
        return Indicator(value=0.0, coarse_norm=first_norm, fine_norm=0.0, admissible=False)

    normalized = ProbeVector(values=first.vector / first_norm, seed=f.seed)
    second = project(pencil, normalized, contour, cache.fresh(), cfg, counters)
    value = float(np.linalg.norm(second.vector))
    return Indicator(value=value, coarse_norm=first_norm, fine_norm=value,
                     admissible=value > LEGACY_THRESHOLD)
