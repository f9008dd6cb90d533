"""Recursive quadtree search driver with shift-cache management.

A square search region is tested with the nested-quadrature indicator;
admissible regions are split into four equal squares and tested again, until
the region size drops below the target precision and the center is emitted
as an eigenvalue estimate. Krylov bases are cached per shift and shared
across the whole recursion, growing lazily whenever a node solve misses the
residual tolerance.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import (CacheEmpty, ConfigError, InternalError, ShiftBudgetExceeded,
                     ShiftConstructionFailed, ShiftIsEigenvalue)
from .krylov import KrylovBasis, build_basis
from .pencil import Pencil, ProbeVector, random_probe
from .projector import indicator, legacy_indicator

__all__ = ["Region", "Config", "ShiftCache", "EigenvalueEstimate", "RunCounters",
           "subdivide", "dedup", "find_eigenvalues"]


@dataclass(frozen=True)
class Region:
    """Axis-aligned square in the complex plane."""

    center: complex
    half_side: float
    depth: int = 0

    def __post_init__(self):
        if not self.half_side > 0:
            raise ConfigError(f"region half_side must be positive, got {self.half_side}")

    @property
    def size(self):
        """Side length of the square."""
        return 2.0 * self.half_side


@dataclass
class Config:
    """Search parameters.

    d0:    stop subdividing once the region side is at most this size; the
           emitted estimates are accurate to about d0.
    eps:   node-solve residual tolerance; a larger residual triggers a new
           shift at the failing node.
    delta0: indicator admissibility threshold.
    m:     Krylov basis dimension per shift.
    n0:    base quadrature node count (the indicator solves 2*n0 nodes).
    seed:  probe-vector seed; fixes all randomness of a run.
    max_depth: recursion safety net, never reached with sane d0.
    shift_budget: maximum number of cached bases per run.
    initial_shift_grid: g for a g-by-g grid of up-front shifts in the root
           region (1 means just the root center); further shifts grow
           lazily on residual failure.
    use_legacy_indicator: test regions with the double-projection indicator
           instead of the nested-quadrature one.
    reuse_krylov: when False, every quadrature node is solved with a fresh
           direct factorization (no basis reuse); reference/control mode.
    """

    d0: float = 1e-9
    eps: float = 1e-10
    delta0: float = 0.2
    m: int = 50
    n0: int = 4
    seed: int = 42
    max_depth: int = 60
    shift_budget: int = 256
    initial_shift_grid: int = 1
    use_legacy_indicator: bool = False
    reuse_krylov: bool = True

    def __post_init__(self):
        if not self.d0 > 0:
            raise ConfigError(f"d0 must be positive, got {self.d0}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if not 0.0 < self.delta0 < 1.0:
            raise ConfigError(f"delta0 must lie in (0, 1), got {self.delta0}")
        if self.m < 1:
            raise ConfigError(f"m must be at least 1, got {self.m}")
        if self.n0 < 2:
            raise ConfigError(f"n0 must be at least 2, got {self.n0}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be at least 1, got {self.max_depth}")
        if self.shift_budget < 1:
            raise ConfigError(f"shift_budget must be at least 1, got {self.shift_budget}")
        if self.initial_shift_grid < 1:
            raise ConfigError(
                f"initial_shift_grid must be at least 1, got {self.initial_shift_grid}"
            )


@dataclass(frozen=True)
class EigenvalueEstimate:
    """Converged box center with its provenance."""

    value: complex
    box_half_side: float
    indicator_value: float
    depth: int
    boundary: bool = False


class RunCounters:
    """Exact event counts for one run; increments are thread-safe."""

    def __init__(self):
        self.factorizations = 0
        self.node_solves = 0
        self.regions_tested = 0
        self._lock = threading.Lock()

    def add(self, factorizations=0, node_solves=0, regions_tested=0):
        with self._lock:
            self.factorizations += factorizations
            self.node_solves += node_solves
            self.regions_tested += regions_tested


class ShiftCache:
    """Shift-keyed store of Krylov bases, bounded by a budget.

    Reads are lock-free; insertion is serialized, and when two workers race
    to build the same shift the first writer wins and the loser's basis is
    discarded.
    """

    def __init__(self, budget=256, counters=None):
        self.budget = int(budget)
        self.counters = counters
        self._entries: dict[complex, KrylovBasis] = {}
        # single reference updated atomically so lock-free readers always
        # see a consistent (sigmas, bases) pair
        self._snapshot = (np.zeros(0, dtype=np.complex128), ())
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._snapshot[1])

    @property
    def entries(self):
        """Snapshot of the stored bases keyed by requested shift."""
        return dict(self._entries)

    def fresh(self):
        """Empty cache with the same budget and counters."""
        return ShiftCache(self.budget, self.counters)

    def select_basis(self, z: complex) -> KrylovBasis:
        """Return the basis whose shift is nearest to z.

        Ties break lexicographically on (Re sigma, Im sigma). Raises
        :class:`CacheEmpty` when nothing is stored yet.
        """
        sigmas, bases = self._snapshot
        if len(bases) == 0:
            raise CacheEmpty("no Krylov basis cached; seed one at the node")
        dist = np.abs(sigmas - z)
        best = int(np.argmin(dist))
        dmin = dist[best]
        if np.count_nonzero(dist == dmin) > 1:
            tied = np.flatnonzero(dist == dmin)
            best = min(tied, key=lambda i: (sigmas[i].real, sigmas[i].imag))
        return bases[best]

    def ensure_basis(self, pencil: Pencil, f: ProbeVector, sigma: complex,
                     cfg: Config) -> KrylovBasis:
        """Return the basis stored for sigma, building it if absent.

        When sigma is (numerically) an eigenvalue the shift is perturbed by
        (1 + i)*1e-8*max(1, |sigma|) and the build retried, at most three
        times. Raises :class:`ShiftBudgetExceeded` when the cache is full
        and :class:`ShiftConstructionFailed` after the retries run out.
        """
        sigma = complex(sigma)
        existing = self._entries.get(sigma)
        if existing is not None:
            return existing
        if len(self) >= self.budget:
            raise ShiftBudgetExceeded(
                f"shift cache budget of {self.budget} exhausted at sigma={sigma}"
            )
        attempt = sigma
        basis = None
        for _ in range(4):
            try:
                basis = build_basis(pencil, attempt, f, cfg.m)
                break
            except ShiftIsEigenvalue:
                attempt = attempt + (1 + 1j) * 1e-8 * max(1.0, abs(attempt))
        if basis is None:
            raise ShiftConstructionFailed(
                f"could not factorize near sigma={sigma} after 3 perturbations"
            )
        if self.counters is not None:
            self.counters.add(factorizations=1)
        with self._lock:
            racing = self._entries.get(sigma)
            if racing is not None:
                return racing
            sigmas, bases = self._snapshot
            if len(bases) >= self.budget:
                raise ShiftBudgetExceeded(
                    f"shift cache budget of {self.budget} exhausted at sigma={sigma}"
                )
            self._entries[sigma] = basis
            self._snapshot = (np.append(sigmas, basis.sigma), bases + (basis,))
        return basis


def subdivide(r: Region) -> list[Region]:
    """Split a square into its four equal quadrants (NW, NE, SW, SE)."""
    q = r.half_side / 2.0
    d = r.depth + 1
    return [
        Region(center=r.center + complex(-q, q), half_side=q, depth=d),
        Region(center=r.center + complex(q, q), half_side=q, depth=d),
        Region(center=r.center + complex(-q, -q), half_side=q, depth=d),
        Region(center=r.center + complex(q, -q), half_side=q, depth=d),
    ]


def dedup(estimates: list[EigenvalueEstimate], tol: float) -> list[EigenvalueEstimate]:
    """Merge estimates closer than tol by single-linkage clustering.

    Sibling leaf boxes circumscribed by overlapping circles can claim the
    same eigenvalue; each cluster keeps the member with the largest
    indicator value (ties go to the lexicographically smallest (Re, Im)).
    """
    if tol <= 0:
        raise ConfigError(f"dedup tolerance must be positive, got {tol}")
    k = len(estimates)
    if k <= 1:
        return list(estimates)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    values = np.array([e.value for e in estimates])
    for i in range(k):
        close = np.flatnonzero(np.abs(values - values[i]) <= tol)
        for j in close:
            ri, rj = find(i), find(int(j))
            if ri != rj:
                parent[rj] = ri

    clusters: dict[int, list[EigenvalueEstimate]] = {}
    for i, e in enumerate(estimates):
        clusters.setdefault(find(i), []).append(e)
    survivors = [
        min(members, key=lambda e: (-e.indicator_value, e.value.real, e.value.imag))
        for members in clusters.values()
    ]
    survivors.sort(key=lambda e: (e.value.real, e.value.imag))
    return survivors


def _initial_shifts(root: Region, g: int):
    if g == 1:
        return [root.center]
    step = 2.0 * root.half_side / g
    start = root.center + complex(-root.half_side + step / 2, -root.half_side + step / 2)
    return [start + complex(i * step, j * step) for j in range(g) for i in range(g)]


def _chebyshev_from_center(value: complex, center: complex) -> float:
    return max(abs(value.real - center.real), abs(value.imag - center.imag))


def find_eigenvalues(pencil: Pencil, root: Region, cfg: Config | None = None, *,
                     threads: int = 1, cache: ShiftCache | None = None,
                     counters: RunCounters | None = None,
                     region_log: list | None = None) -> list[EigenvalueEstimate]:
    """Compute all generalized eigenvalues of the pencil inside a square region.

    Runs the recursive indicator-and-subdivide search with a single probe
    vector drawn from cfg.seed. Returns deduplicated estimates sorted by
    (Re, Im), each accurate to about cfg.d0; estimates within 10*d0 of the
    region boundary carry ``boundary=True``.

    ``threads`` > 1 evaluates sibling regions concurrently; single-threaded
    runs are the bitwise-deterministic reference. A caller-supplied ``cache``
    or ``counters`` is used in place of fresh ones (useful for inspecting
    the bases built or the work performed), and ``region_log`` collects one
    record per tested region when provided.
    """
    cfg = cfg if cfg is not None else Config()
    if counters is None:
        counters = RunCounters()
    if cache is None:
        cache = ShiftCache(cfg.shift_budget, counters)
    elif cache.counters is None:
        cache.counters = counters

    probe = random_probe(pencil.n, cfg.seed)
    if cfg.reuse_krylov:
        for sigma in _initial_shifts(root, cfg.initial_shift_grid):
            cache.ensure_basis(pencil, probe, sigma, cfg)

    test = legacy_indicator if cfg.use_legacy_indicator else indicator

    def evaluate(region):
        return region, test(pencil, probe, region, cache, cfg, counters)

    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        leaves = []
        frontier = [root]
        while frontier:
            if executor is not None:
                results = list(executor.map(evaluate, frontier))
            else:
                results = [evaluate(region) for region in frontier]
            next_frontier = []
            for region, ind in results:
                if region_log is not None:
                    region_log.append({
                        "re": region.center.real,
                        "im": region.center.imag,
                        "half_side": region.half_side,
                        "depth": region.depth,
                        "indicator": ind.value,
                        "admissible": ind.admissible,
                    })
                if not ind.admissible:
                    continue
                if region.size > cfg.d0:
                    if region.depth + 1 > cfg.max_depth:
                        raise InternalError(
                            f"recursion exceeded max_depth={cfg.max_depth} at {region}"
                        )
                    next_frontier.extend(subdivide(region))
                else:
                    leaves.append(EigenvalueEstimate(
                        value=region.center,
                        box_half_side=region.half_side,
                        indicator_value=ind.value,
                        depth=region.depth,
                    ))
            frontier = next_frontier
    finally:
        if executor is not None:
            executor.shutdown()

    inside = [e for e in leaves
              if _chebyshev_from_center(e.value, root.center) <= root.half_side + cfg.d0]
    merged = dedup(inside, 4.0 * cfg.d0)
    flagged = [
        replace(e, boundary=(root.half_side - _chebyshev_from_center(e.value, root.center)
                             <= 10.0 * cfg.d0))
        for e in merged
    ]
    return flagged
