"""Proper norms on groups, weight systems, and exact metric utilities.

A *norm handle* evaluates a candidate proper norm exactly (all values are
nonnegative ints) and can enumerate its balls.  Three evaluation engines
coexist:

* closed-form norms (the l1 norm on Z^d),
* breadth-first word norms over a standard generating set,
* weight-generated norms: cheapest factorization into arbitrary group
  elements, each letter s paying weight(s).

A weight system is a base norm together with finitely many symmetric
overrides.  The generated norm is computed by Dijkstra over the Cayley
graph whose generator set is truncated to letters of weight at most the
current best bound; the truncation is sound because any factorization
using a heavier letter already costs more than the bound.  Searches carry
explicit element caps and raise BudgetExceededError ("inconclusive")
instead of ever returning a wrong value.

The module also provides the finite-metric-space toolkit used by the
dimension diagnostics: strict scale components, pointwise coarse
envelopes between two norms, and a plain-text norm cache with bit-exact
round-tripping.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional

from .errors import BudgetExceededError, CacheFormatError, GroupMismatchError
from .groups import Element, GroupDescriptor

DEFAULT_ELEMENT_CAP = 500_000
DEFAULT_SPACE_CAP = 5_000

Coords = tuple[int, ...]


# ---------------------------------------------------------------------------
# norm handles


class NormHandle:
    """Base class: exact integer-valued norm with memoized evaluation."""

    tag = "abstract"

    def __init__(self, group: GroupDescriptor, provenance: str):
        self.group = group
        self.provenance = provenance
        self.memo: dict[Coords, int] = {}

    def provenance_hash(self) -> str:
        return hashlib.sha256(self.provenance.encode("utf-8")).hexdigest()[:16]

    def value(self, coords: Coords) -> int:
        cached = self.memo.get(coords)
        if cached is None:
            cached = self._compute(coords)
            self.memo[coords] = cached
        return cached

    def value_of(self, x: Element) -> int:
        if x.group != self.group:
            raise GroupMismatchError("element group does not match norm handle")
        return self.value(x.coords)

    def distance(self, a: Coords, b: Coords) -> int:
        g = self.group
        return self.value(g.mul_coords(g.inv_coords(a), b))

    def _compute(self, coords: Coords) -> int:
        raise NotImplementedError

    def ball_coords(self, radius: int, cap: int = DEFAULT_ELEMENT_CAP) -> list[Coords]:
        """All elements of norm <= radius, sorted canonically."""
        raise NotImplementedError

    def ball(self, radius: int, cap: int = DEFAULT_SPACE_CAP) -> "FiniteMetricSpace":
        return ball(self, radius, cap=cap)


class AnalyticL1Norm(NormHandle):
    """The l1 norm on Z^d; equals the word norm over standard generators."""

    tag = "analytic"

    def __init__(self, group: GroupDescriptor):
        if group.kind != "free_abelian":
            raise ValueError("analytic l1 norm is defined on free abelian groups")
        super().__init__(group, f"analytic l1 norm on {group.label()}")
        self.z_slope = Fraction(1)  # |z^t| = |t| on the center generator

    def value(self, coords: Coords) -> int:  # no memo needed
        return sum(abs(c) for c in coords)

    def _compute(self, coords: Coords) -> int:
        return self.value(coords)

    def ball_coords(self, radius: int, cap: int = DEFAULT_ELEMENT_CAP) -> list[Coords]:
        if radius < 0:
            return []
        out = [tuple(p) for p in _l1_ball_points(self.group.rank, radius)]
        if len(out) > cap:
            raise BudgetExceededError("l1 ball exceeds element cap", len(out), cap)
        return sorted(out)


def _l1_ball_points(rank: int, radius: int) -> Iterator[list[int]]:
    if rank == 0:
        yield []
        return
    for c in range(-radius, radius + 1):
        for rest in _l1_ball_points(rank - 1, radius - abs(c)):
            yield [c] + rest


class WordNorm(NormHandle):
    """Word norm over the standard generators, computed by lazy BFS.

    The BFS table grows monotonically and is shared by all queries; it is
    the breadth-first oracle the rest of the package is checked against.
    """

    tag = "word"

    def __init__(self, group: GroupDescriptor, cap: int = DEFAULT_ELEMENT_CAP):
        super().__init__(group, f"word norm on {group.label()} over standard generators")
        self.cap = cap
        self._gens = group.generator_coords()
        e = group.identity_coords()
        self._table: dict[Coords, int] = {e: 0}
        self._frontier: list[Coords] = [e]
        self._radius_done = 0

    def _expand_layer(self) -> None:
        mul = self.group.mul_coords
        new = []
        for u in self._frontier:
            for s in self._gens:
                w = mul(u, s)
                if w not in self._table:
                    self._table[w] = self._radius_done + 1
                    new.append(w)
        self._frontier = new
        self._radius_done += 1
        if len(self._table) > self.cap:
            raise BudgetExceededError(
                "word-norm table exceeded element cap", len(self._table), self.cap
            )

    def _compute(self, coords: Coords) -> int:
        while coords not in self._table:
            if not self._frontier:
                raise ValueError(f"{coords!r} is not reachable from the generators")
            self._expand_layer()
        return self._table[coords]

    def ball_coords(self, radius: int, cap: int = DEFAULT_ELEMENT_CAP) -> list[Coords]:
        if radius < 0:
            return []
        while self._radius_done < radius and self._frontier:
            self._expand_layer()
            if len(self._table) > cap:
                raise BudgetExceededError(
                    "word ball exceeds element cap", len(self._table), cap
                )
        return sorted(c for c, d in self._table.items() if d <= radius)


# ---------------------------------------------------------------------------
# weight systems and generated norms


@dataclass
class WeightSystem:
    """A base norm plus finitely many symmetric weight overrides.

    The weight of a letter s is overrides[s] when present, else the base
    norm of s.  Overrides are symmetrized on construction (a letter and
    its inverse always share a weight); the identity cannot be overridden
    and weights must be positive, so every generated norm vanishes only
    at the identity.
    """

    base: NormHandle
    overrides: dict[Coords, int] = field(default_factory=dict)

    def __post_init__(self):
        g = self.base.group
        e = g.identity_coords()
        symmetric: dict[Coords, int] = {}
        for coords, w in self.overrides.items():
            g.check_coords(coords)
            if coords == e:
                raise ValueError("the identity cannot carry a weight override")
            if not isinstance(w, int) or w < 1:
                raise ValueError("override weights must be positive integers")
            inv = g.inv_coords(coords)
            for key in (coords, inv):
                if symmetric.setdefault(key, w) != w:
                    raise ValueError(f"conflicting override weights for {key!r}")
        self.overrides = symmetric

    @property
    def group(self) -> GroupDescriptor:
        return self.base.group

    def weight(self, coords: Coords) -> int:
        w = self.overrides.get(coords)
        return w if w is not None else self.base.value(coords)

    def generators_up_to(self, bound: int, cap: int = DEFAULT_ELEMENT_CAP) -> list[tuple[Coords, int]]:
        """Every letter of weight <= bound, with its weight."""
        e = self.group.identity_coords()
        gens: dict[Coords, int] = {}
        for coords in self.base.ball_coords(bound, cap=cap):
            if coords == e:
                continue
            w = self.weight(coords)
            if w <= bound:
                gens[coords] = w
        for coords, w in self.overrides.items():
            if w <= bound:
                gens[coords] = w
        return sorted(gens.items())

    def describe(self) -> str:
        ov = sorted(self.overrides.items())
        return f"base=[{self.base.provenance}]; overrides={ov}"


class WeightGeneratedNorm(NormHandle):
    """Cheapest-factorization norm of a weight system, via Dijkstra.

    This is the general engine: sound for any weight system, intended as
    the cross-check oracle on small instances.  The generator set is
    truncated to letters of weight <= the current search bound, which
    never discards an optimal factorization.
    """

    tag = "weight-generated"

    def __init__(self, system: WeightSystem, cap: int = DEFAULT_ELEMENT_CAP):
        super().__init__(
            system.group, f"weight norm on {system.group.label()}; {system.describe()}"
        )
        self.system = system
        self.cap = cap
        self._table: dict[Coords, int] = {system.group.identity_coords(): 0}
        self._table_bound = -1

    def table_up_to(self, bound: int, cap: Optional[int] = None) -> dict[Coords, int]:
        """Exact distances from the identity for every norm value <= bound."""
        cap = self.cap if cap is None else cap
        if bound <= self._table_bound:
            return self._table
        gens = self.system.generators_up_to(bound, cap=cap)
        mul = self.group.mul_coords
        e = self.group.identity_coords()
        dist: dict[Coords, int] = {e: 0}
        heap: list[tuple[int, Coords]] = [(0, e)]
        popped = 0
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist.get(u, d):
                continue
            popped += 1
            if popped > cap:
                raise BudgetExceededError(
                    "weighted search exceeded element cap", popped, cap
                )
            for s, w in gens:
                nd = d + w
                if nd > bound:
                    continue
                v = mul(u, s)
                if nd < dist.get(v, nd + 1):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        self._table = dist
        self._table_bound = bound
        return dist

    def _compute(self, coords: Coords) -> int:
        if coords == self.group.identity_coords():
            return 0
        bound = self.system.weight(coords)  # one-letter factorization
        table = self.table_up_to(bound)
        return table[coords]

    def ball_coords(self, radius: int, cap: int = DEFAULT_ELEMENT_CAP) -> list[Coords]:
        if radius < 0:
            return []
        table = self.table_up_to(radius, cap=cap)
        out = sorted(c for c, d in table.items() if d <= radius)
        if len(out) > cap:
            raise BudgetExceededError("norm ball exceeds element cap", len(out), cap)
        return out


class CentralOverrideNorm(NormHandle):
    """Norm generated by a base norm plus overrides on powers of one
    central element, evaluated through the collapsed closed form.

    With overrides weight C on z^(±h_1), ..., z^(±h_m), z central:

        |x| = min over y in Z^m, C*sum|y_i| <= base(x), of
              C*sum|y_i| + base(x * z^(-<y, h>))

    Collapsing is valid because central letters commute to one side and
    the non-override letters of an optimal factorization merge, by
    subadditivity, into a single remainder letter.
    """

    tag = "weight-generated"

    def __init__(self, base: NormHandle, z: Coords, h: tuple[int, ...], weight: int):
        group = base.group
        if not group.is_central_coords(z):
            raise ValueError("override target is not central")
        if len(set(h)) != len(h) or any(hi < 1 for hi in h):
            raise ValueError("override exponents must be distinct positive integers")
        super().__init__(
            group,
            f"central override norm on {group.label()}; base=[{base.provenance}]; "
            f"z={z}; h={tuple(h)}; C={weight}",
        )
        self.base = base
        self.z = z
        self.h = tuple(h)
        self.weight = weight
        self._system: Optional[WeightSystem] = None

    def system(self) -> WeightSystem:
        if self._system is None:
            g = self.group
            overrides = {g.pow_coords(self.z, hi): self.weight for hi in self.h}
            self._system = WeightSystem(self.base, overrides)
        return self._system

    def _compute(self, coords: Coords) -> int:
        return closed_form_norm(self.base, self.z, self.h, self.weight, coords)

    def ball_coords(self, radius: int, cap: int = DEFAULT_ELEMENT_CAP) -> list[Coords]:
        # region discovery via the general engine, values re-checked exactly
        engine = WeightGeneratedNorm(self.system(), cap=cap)
        region = engine.ball_coords(radius, cap=cap)
        return sorted(c for c in region if self.value(c) <= radius)


def norm_from_weights(system: WeightSystem, x: Element) -> int:
    """Exact generated-norm value of x under the weight system."""
    return WeightGeneratedNorm(system).value_of(x)


def signed_l1_vectors(rank: int, radius: int) -> Iterator[tuple[int, ...]]:
    """All integer vectors of l1 norm <= radius, in deterministic order."""
    for point in _l1_ball_points(rank, radius):
        yield tuple(point)


def closed_form_norm(
    base: NormHandle, z: Coords, h: tuple[int, ...], weight: int, coords: Coords
) -> int:
    """Collapsed evaluation of the norm generated by base plus overrides
    weight on z^(±h_i).  Requires override weight <= base(z^(h_i)) so the
    generated norm never exceeds the base norm."""
    group = base.group
    if not group.is_central_coords(z):
        raise ValueError("override target is not central")
    base_value = base.value(coords)
    if weight < 1:
        raise ValueError("override weight must be positive")
    best = base_value
    budget = base_value // weight
    if budget == 0:
        return best
    m = len(h)
    for y in signed_l1_vectors(m, budget):
        size = sum(abs(c) for c in y)
        if size == 0:
            continue
        shift = sum(yi * hi for yi, hi in zip(y, h))
        target = group.mul_coords(coords, group.pow_coords(z, -shift))
        cand = weight * size + base.value(target)
        if cand < best:
            best = cand
    return best


# ---------------------------------------------------------------------------
# finite metric spaces


class UnionFind:
    """Union-find with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]


@dataclass
class FiniteMetricSpace:
    """A finite metric space with exact (int or Fraction) distances.

    ``coords`` optionally records integer coordinates when the points sit
    inside Z^d with the l1 metric; the cover heuristics exploit it.
    """

    labels: list
    dist: list[list]
    coords: Optional[list[Coords]] = None

    def __post_init__(self):
        n = len(self.labels)
        if len(self.dist) != n or any(len(row) != n for row in self.dist):
            raise ValueError("distance matrix shape does not match point count")
        if self.coords is not None and len(self.coords) != n:
            raise ValueError("coordinate list length does not match point count")

    def __len__(self) -> int:
        return len(self.labels)

    def distance(self, i: int, j: int):
        return self.dist[i][j]

    def validate(self) -> None:
        """Exact metric axioms; raises ValueError on the first violation."""
        n = len(self)
        for i in range(n):
            if self.dist[i][i] != 0:
                raise ValueError(f"nonzero self-distance at point {i}")
            for j in range(n):
                d = self.dist[i][j]
                if d != self.dist[j][i]:
                    raise ValueError(f"asymmetric distance at ({i},{j})")
                if i != j and d <= 0:
                    raise ValueError(f"non-positive distance at ({i},{j})")
        for i in range(n):
            for j in range(n):
                dij = self.dist[i][j]
                for k in range(n):
                    if dij > self.dist[i][k] + self.dist[k][j]:
                        raise ValueError(f"triangle violation at ({i},{j},{k})")

    def subspace(self, indices: list[int]) -> "FiniteMetricSpace":
        return FiniteMetricSpace(
            [self.labels[i] for i in indices],
            [[self.dist[i][j] for j in indices] for i in indices],
            None if self.coords is None else [self.coords[i] for i in indices],
        )

    @classmethod
    def from_l1_points(cls, points: Iterable[Coords]) -> "FiniteMetricSpace":
        pts = [tuple(p) for p in points]
        dist = [
            [sum(abs(a - b) for a, b in zip(p, q)) for q in pts] for p in pts
        ]
        return cls(list(pts), dist, coords=pts)


def ball(handle: NormHandle, radius: int, cap: int = DEFAULT_SPACE_CAP) -> FiniteMetricSpace:
    """The closed ball of the norm as a finite metric space.

    Distances are left-invariant: d(a, b) = |a^{-1} b|.
    """
    pts = handle.ball_coords(radius, cap=max(cap, DEFAULT_ELEMENT_CAP))
    if len(pts) > cap:
        raise BudgetExceededError("ball exceeds metric-space cap", len(pts), cap)
    pts = sorted(pts, key=lambda c: (handle.value(c), c))
    dist = [[handle.distance(p, q) for q in pts] for p in pts]
    coords = pts if handle.group.kind == "free_abelian" else None
    return FiniteMetricSpace(list(pts), dist, coords=coords)


def s_components(space: FiniteMetricSpace, s) -> list[list[int]]:
    """Partition indices into chain components at scale s.

    Two points are chained when some sequence of points joins them with
    every consecutive distance strictly below s.
    """
    if s < 0:
        raise ValueError("scale must be nonnegative")
    n = len(space)
    uf = UnionFind(n)
    for i in range(n):
        for j in range(i + 1, n):
            if space.dist[i][j] < s:
                uf.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    return sorted(sorted(g) for g in groups.values())


@dataclass
class EnvelopeReport:
    """Pointwise coarse envelopes of one norm against another.

    For each distance value t attained by norm ``a`` inside its ball of
    the given radius, ``lower[t]``/``upper[t]`` are the min/max of the
    corresponding ``b``-distances over the same point pairs.
    """

    radius: int
    lower: dict[int, int]
    upper: dict[int, int]

    def rows(self) -> list[tuple[int, int, int]]:
        return [(t, self.lower[t], self.upper[t]) for t in sorted(self.lower)]


def coarse_envelopes(
    a: NormHandle, b: NormHandle, radius: int, cap: int = DEFAULT_SPACE_CAP
) -> EnvelopeReport:
    if a.group != b.group:
        raise GroupMismatchError("envelope norms must live on the same group")
    pts = a.ball_coords(radius, cap=max(cap, DEFAULT_ELEMENT_CAP))
    if len(pts) > cap:
        raise BudgetExceededError("envelope window exceeds cap", len(pts), cap)
    lower: dict[int, int] = {}
    upper: dict[int, int] = {}
    for i, p in enumerate(pts):
        for q in pts[i:]:
            t = a.distance(p, q)
            v = b.distance(p, q)
            if t not in lower:
                lower[t] = upper[t] = v
            else:
                lower[t] = min(lower[t], v)
                upper[t] = max(upper[t], v)
    return EnvelopeReport(radius, lower, upper)


# ---------------------------------------------------------------------------
# proper-norm verification


@dataclass
class ProperNormReport:
    provenance: str
    radius: int
    window_size: int
    violations: list[tuple]
    sublevel_counts: dict[int, int]

    @property
    def passed(self) -> bool:
        return not self.violations


def verify_proper_norm(
    handle: NormHandle,
    radius: int,
    window: Optional[list[Coords]] = None,
    cap: int = DEFAULT_SPACE_CAP,
    max_violations: int = 20,
) -> ProperNormReport:
    """Check the proper-norm axioms exhaustively on a finite window.

    The window defaults to the norm's own ball of the given radius; an
    explicit element window may be supplied when that ball is too large to
    enumerate.  Checks: the norm vanishes exactly at the identity, is
    symmetric under inversion, and is subadditive over all window pairs
    (products are evaluated even when they leave the window).  Sublevel
    cardinalities within the window are reported alongside.
    """
    g = handle.group
    if window is None:
        window = handle.ball_coords(radius, cap=max(cap, DEFAULT_ELEMENT_CAP))
        if len(window) > cap:
            raise BudgetExceededError("verification window exceeds cap", len(window), cap)
    violations: list[tuple] = []

    def note(kind: str, *data) -> None:
        if len(violations) < max_violations:
            violations.append((kind, *data))

    e = g.identity_coords()
    if handle.value(e) != 0:
        note("identity", e, handle.value(e))
    for x in window:
        v = handle.value(x)
        if v == 0 and x != e:
            note("identity", x, v)
        if v < 0:
            note("negative", x, v)
        vi = handle.value(g.inv_coords(x))
        if vi != v:
            note("symmetry", x, v, vi)
    window_values = {x: handle.value(x) for x in window}
    for x, vx in window_values.items():
        for y, vy in window_values.items():
            vxy = handle.value(g.mul_coords(x, y))
            if vxy > vx + vy:
                note("subadditivity", x, y, vxy, vx + vy)
    counts: dict[int, int] = {}
    for r in range(radius + 1):
        counts[r] = sum(1 for v in window_values.values() if v <= r)
    return ProperNormReport(handle.provenance, radius, len(window), violations, counts)


# ---------------------------------------------------------------------------
# norm cache files

CACHE_MAGIC = "nagata-cache"
CACHE_VERSION = "v1"


def save_norm_cache(handle: NormHandle, path) -> None:
    """Write all memoized values: one '<coords> <norm>' line per element,
    sorted, under a provenance-stamped header.  Round-trips bit-exactly."""
    lines = [f"{CACHE_MAGIC} {CACHE_VERSION} {handle.group.label()} {handle.provenance_hash()}"]
    for coords in sorted(handle.memo):
        lines.append(f"{','.join(str(c) for c in coords)} {handle.memo[coords]}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_cache_entries(path) -> tuple[str, str, dict[Coords, int]]:
    """Parse a cache file; returns (group label, provenance hash, entries)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CacheFormatError(f"{path}: empty cache file")
    head = lines[0].split(" ")
    if len(head) != 4 or head[0] != CACHE_MAGIC or head[1] != CACHE_VERSION:
        raise CacheFormatError(f"{path}: bad cache header {lines[0]!r}")
    entries: dict[Coords, int] = {}
    for ln in lines[1:]:
        if not ln:
            continue
        try:
            coord_part, value_part = ln.split(" ")
            coords = tuple(int(c) for c in coord_part.split(","))
            value = int(value_part)
        except ValueError as exc:
            raise CacheFormatError(f"{path}: bad cache line {ln!r}") from exc
        if coords in entries and entries[coords] != value:
            raise CacheFormatError(f"{path}: conflicting entries for {coords}")
        entries[coords] = value
    return head[2], head[3], entries


def load_norm_cache(handle: NormHandle, path) -> int:
    """Merge a cache file into the handle's memo; returns entry count.

    The header must name the same group and provenance hash, and loaded
    values may never contradict already-computed ones.
    """
    label, phash, entries = read_cache_entries(path)
    if label != handle.group.label():
        raise CacheFormatError(f"{path}: cache is for group {label}, not {handle.group.label()}")
    if phash != handle.provenance_hash():
        raise CacheFormatError(f"{path}: cache provenance hash does not match handle")
    for coords, value in entries.items():
        handle.group.check_coords(coords)
        existing = handle.memo.get(coords)
        if existing is not None and existing != value:
            raise CacheFormatError(f"{path}: cached value for {coords} contradicts evaluation")
        handle.memo[coords] = value
    return len(entries)
