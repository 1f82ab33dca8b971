"""Finite quivers, paths and loops, augmentation, self-loop decoration and lattice tori.

Paths are stored left to right in traversal order: ``Path((e1, e2, e3))`` first
walks ``e1``, then ``e2``, then ``e3``, so ``target(e_a) == source(e_{a+1})``.
Operator products along a path are formed in the ``dirac`` module.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property

from .errors import ResourceLimitError, ValidationError

DEFAULT_LOOP_LIMIT = 12


@dataclass(frozen=True)
class LatticeSpec:
    d: int
    m: int
    self_loops: bool = False
    a: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError(f"lattice dimension d must be >= 1, got {self.d}")
        if self.m < 2:
            raise ValidationError(f"lattice size m must be >= 2, got {self.m}")
        if self.a <= 0 or self.tau <= 0:
            raise ValidationError("lattice spacing a and self-loop scale tau must be positive")

    @property
    def volume(self) -> int:
        return self.m**self.d

    def coords(self, v: int) -> tuple[int, ...]:
        """Row-major coordinates in (Z/m)^d; axis 1 is the most significant digit."""
        out = []
        for _ in range(self.d):
            v, r = divmod(v, self.m)
            out.append(r)
        return tuple(reversed(out))

    def index(self, x) -> int:
        v = 0
        for c in x:
            v = v * self.m + (c % self.m)
        return v

    def shift(self, v: int, j: int) -> int:
        """Neighbour of ``v`` one step along signed axis ``j`` (1-based, sign = direction)."""
        x = list(self.coords(v))
        x[abs(j) - 1] += 1 if j > 0 else -1
        return self.index(x)


@dataclass(frozen=True)
class Quiver:
    """A finite directed multigraph. Edge ids are positions in ``edges``.

    ``parent[e]`` is -1 for an original edge and the id of the reversed edge
    for edges added by :func:`augment`. ``distance`` is the graph distance rho
    (``None`` means rho = 1 everywhere).
    """

    vertex_count: int
    edges: tuple[tuple[int, int], ...]
    distance: tuple[float, ...] | None = None
    parent: tuple[int, ...] | None = None
    lattice: LatticeSpec | None = None
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(s), int(t)) for s, t in self.edges))
        if self.vertex_count < 0:
            raise ValidationError("vertex_count must be nonnegative")
        for e, (s, t) in enumerate(self.edges):
            if not (0 <= s < self.vertex_count and 0 <= t < self.vertex_count):
                raise ValidationError(f"edge {e}=({s},{t}) has an endpoint outside [0, {self.vertex_count})")
        if self.distance is not None:
            dist = tuple(float(x) for x in self.distance)
            if len(dist) != len(self.edges):
                raise ValidationError("distance must have one entry per edge")
            if any(x <= 0 for x in dist):
                raise ValidationError("graph distances must be strictly positive")
            object.__setattr__(self, "distance", dist)
        if self.parent is not None:
            par = tuple(int(x) for x in self.parent)
            if len(par) != len(self.edges):
                raise ValidationError("parent must have one entry per edge")
            object.__setattr__(self, "parent", par)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def source(self, e: int) -> int:
        return self.edges[e][0]

    def target(self, e: int) -> int:
        return self.edges[e][1]

    def rho(self, e: int) -> float:
        return 1.0 if self.distance is None else self.distance[e]

    def is_self_loop(self, e: int) -> bool:
        s, t = self.edges[e]
        return s == t

    @property
    def is_augmented(self) -> bool:
        return self.parent is not None

    def original(self, e: int) -> int:
        """The edge of the unaugmented quiver that ``e`` comes from."""
        if self.parent is None or self.parent[e] < 0:
            return e
        return self.parent[e]

    def is_reversed(self, e: int) -> bool:
        return self.parent is not None and self.parent[e] >= 0

    @cached_property
    def reverse_map(self) -> dict[int, int]:
        """Original edge -> its reversed copy, and back. Empty unless augmented."""
        out: dict[int, int] = {}
        if self.parent is not None:
            for e, p in enumerate(self.parent):
                if p >= 0:
                    out[p] = e
                    out[e] = p
        return out

    @cached_property
    def out_edges(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for e, (s, _) in enumerate(self.edges):
            out[s].append(e)
        return tuple(tuple(x) for x in out)

    @cached_property
    def in_edges(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for e, (_, t) in enumerate(self.edges):
            inc[t].append(e)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def self_loop_at(self) -> dict[int, int]:
        """Vertex -> the last self-loop attached to it (the one :func:`add_self_loops` appends)."""
        out = {}
        for e, (s, t) in enumerate(self.edges):
            if s == t and not self.is_reversed(e):
                out[s] = e
        return out

    def adjacency(self):
        import numpy as np

        a = np.zeros((self.vertex_count, self.vertex_count), dtype=np.int64)
        for s, t in self.edges:
            a[s, t] += 1
        return a

    def components(self) -> list[list[int]]:
        """Connected components of the underlying undirected graph."""
        nbrs: list[set[int]] = [set() for _ in range(self.vertex_count)]
        for s, t in self.edges:
            nbrs[s].add(t)
            nbrs[t].add(s)
        seen = [False] * self.vertex_count
        comps = []
        for v in range(self.vertex_count):
            if seen[v]:
                continue
            comp, queue = [], deque([v])
            seen[v] = True
            while queue:
                x = queue.popleft()
                comp.append(x)
                for y in sorted(nbrs[x]):
                    if not seen[y]:
                        seen[y] = True
                        queue.append(y)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return self.vertex_count > 0 and len(self.components()) == 1

    def without_self_loops(self) -> tuple["Quiver", list[int]]:
        """Drop all self-loops. Returns the smaller quiver and the kept edge ids."""
        keep = [e for e in range(self.edge_count) if not self.is_self_loop(e)]
        dist = None if self.distance is None else tuple(self.distance[e] for e in keep)
        lat = None if self.lattice is None else replace(self.lattice, self_loops=False)
        q = Quiver(self.vertex_count, tuple(self.edges[e] for e in keep), dist, None, lat)
        return q, keep


@dataclass(frozen=True)
class Path:
    """A path as a tuple of edge ids; an empty tuple is the constant path E_base."""

    edges: tuple[int, ...] = ()
    base: int = 0

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(int(e) for e in self.edges))

    @classmethod
    def trivial(cls, v: int) -> "Path":
        return cls((), v)

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def is_trivial(self) -> bool:
        return not self.edges

    def source(self, q: Quiver) -> int:
        return q.source(self.edges[0]) if self.edges else self.base

    def target(self, q: Quiver) -> int:
        return q.target(self.edges[-1]) if self.edges else self.base

    def is_valid(self, q: Quiver) -> bool:
        if any(not 0 <= e < q.edge_count for e in self.edges):
            return False
        return all(q.target(a) == q.source(b) for a, b in zip(self.edges, self.edges[1:]))

    def is_loop(self, q: Quiver) -> bool:
        return bool(self.edges) and self.is_valid(q) and self.source(q) == self.target(q)

    def then(self, q: Quiver, other: "Path") -> "Path | None":
        """Walk ``self`` and then ``other``; None (the zero of the path algebra) if they do not meet."""
        if self.target(q) != other.source(q):
            return None
        return Path(self.edges + other.edges, self.source(q))


def augment(q: Quiver) -> Quiver:
    """Append a reversed copy of every edge that is not a self-loop."""
    if q.is_augmented:
        raise ValidationError("quiver is already augmented")
    extra = [e for e in range(q.edge_count) if not q.is_self_loop(e)]
    edges = q.edges + tuple((q.target(e), q.source(e)) for e in extra)
    parent = (-1,) * q.edge_count + tuple(extra)
    dist = None if q.distance is None else q.distance + tuple(q.distance[e] for e in extra)
    return Quiver(q.vertex_count, edges, dist, parent, q.lattice, dict(q.meta))


def add_self_loops(q: Quiver, rho: float | None = None) -> Quiver:
    """Append one self-loop o_v per vertex. Their distance is ``rho`` (a/tau on lattices, else 1)."""
    lat = q.lattice
    if rho is None:
        rho = lat.a / lat.tau if lat is not None else 1.0
    n = q.vertex_count
    edges = q.edges + tuple((v, v) for v in range(n))
    if q.distance is None and rho == 1.0:
        dist = None
    else:
        base = q.distance if q.distance is not None else (1.0,) * q.edge_count
        dist = base + (float(rho),) * n
    parent = None if q.parent is None else q.parent + (-1,) * n
    lat = None if lat is None else replace(lat, self_loops=True)
    return Quiver(n, edges, dist, parent, lat, dict(q.meta))


def make_torus(spec: LatticeSpec) -> Quiver:
    """T^d_m: edge ``v*d + (i-1)`` joins v to v + e_i; O^d_m appends self-loops when requested."""
    d, m = spec.d, spec.m
    edges = []
    for v in range(m**d):
        for i in range(1, d + 1):
            edges.append((v, spec.shift(v, i)))
    lat = replace(spec, self_loops=False)
    q = Quiver(m**d, tuple(edges), (float(spec.a),) * len(edges) if spec.a != 1.0 else None, None, lat)
    if spec.self_loops:
        q = add_self_loops(q, spec.a / spec.tau)
    return q


def make_shifted_torus(m: int) -> Quiver:
    """The m x m grid whose right boundary wraps to the next row (vertex labels 1..m^2 stored as 0..m^2-1)."""
    if m < 2:
        raise ValidationError("shifted torus needs m >= 2")
    n = m * m
    edges = [(v, v + 1) for v in range(1, n)]
    edges += [(v, v + m) for v in range(1, n - m + 1)]
    edges += [(m * (m - 1) + v, v) for v in range(1, m + 1)]
    edges.append((1, n))
    return Quiver(n, tuple((s - 1, t - 1) for s, t in edges), meta={"kind": "shifted-torus", "m": m})


def lattice_step(q: Quiver, v: int, j: int) -> int:
    """Edge id of the step from ``v`` along signed axis ``j`` in an augmented torus."""
    lat = q.lattice
    if lat is None or not q.is_augmented:
        raise ValidationError("lattice steps need an augmented lattice quiver")
    if not 1 <= abs(j) <= lat.d:
        raise ValidationError(f"axis {j} out of range for d={lat.d}")
    if j > 0:
        return v * lat.d + j - 1
    w = lat.shift(v, j)
    return q.reverse_map[w * lat.d - j - 1]


def signed_axes(d: int) -> list[int]:
    return [s * i for i in range(1, d + 1) for s in (1, -1)]


def lattice_path(q: Quiver, v: int, steps) -> Path:
    """Path from ``v`` following a sequence of signed axes."""
    lat = q.lattice
    out, x = [], v
    for j in steps:
        out.append(lattice_step(q, x, j))
        x = lat.shift(x, j)
    return Path(tuple(out), v)


def plaquettes(q: Quiver, v: int) -> list[Path]:
    """All 4d(d-1) plaquettes P_{i,j}(v): steps i, j, -i, -j for signed axes with |i| != |j|."""
    lat = q.lattice
    if lat is None or not q.is_augmented:
        raise ValidationError("plaquettes need an augmented lattice torus (use augment(make_torus(...)))")
    if lat.d < 2:
        return []
    if lat.m < 3:
        raise ValidationError("plaquettes need m >= 3")
    axes = signed_axes(lat.d)
    return [lattice_path(q, v, (i, j, -i, -j)) for i in axes for j in axes if abs(i) != abs(j)]


def _distances_to(q: Quiver, base: int) -> list[int]:
    inf = q.vertex_count + 1
    dist = [inf] * q.vertex_count
    dist[base] = 0
    queue = deque([base])
    while queue:
        x = queue.popleft()
        for e in q.in_edges[x]:
            s = q.source(e)
            if dist[s] == inf:
                dist[s] = dist[x] + 1
                queue.append(s)
    return dist


def iter_loops(q: Quiver, length: int, base: int | None = None, limit: int = DEFAULT_LOOP_LIMIT):
    """Yield edge tuples of all loops of the given length, sorted by edge sequence."""
    if length < 0:
        raise ValidationError("loop length must be nonnegative")
    if length > limit:
        raise ResourceLimitError(f"loop length {length} exceeds the configured limit {limit}")
    if length == 0:
        return
    if base is not None and not 0 <= base < q.vertex_count:
        raise ValidationError(f"base vertex {base} out of range")
    out_sorted = [sorted(x) for x in q.out_edges]
    dist_cache: dict[int, list[int]] = {}
    for first in range(q.edge_count):
        b = q.source(first)
        if base is not None and b != base:
            continue
        if b not in dist_cache:
            dist_cache[b] = _distances_to(q, b)
        dist = dist_cache[b]
        path = [first]

        def walk(x, remaining):
            if remaining == 0:
                if x == b:
                    yield tuple(path)
                return
            if dist[x] > remaining:
                return
            for e in out_sorted[x]:
                path.append(e)
                yield from walk(q.target(e), remaining - 1)
                path.pop()

        yield from walk(q.target(first), length - 1)


def enumerate_loops(q: Quiver, length: int, base: int | None = None, limit: int = DEFAULT_LOOP_LIMIT) -> list[Path]:
    return [Path(edges, q.source(edges[0])) for edges in iter_loops(q, length, base, limit)]


def insert_self_loops(q: Quiver, p: Path, positions, vertices) -> Path:
    """Insert self-loops o_{v_a} so that they end up at the 1-based ``positions`` of the result.

    Insertions happen one at a time in increasing position. Position i of the
    current path is legal when v_a is the source of the edge sitting there,
    or when i is one past the end and v_a is the endpoint. Any illegal step
    returns the constant path at the source of ``p``.
    """
    positions, vertices = tuple(positions), tuple(vertices)
    if len(positions) != len(vertices):
        raise ValidationError("need one vertex per insertion position")
    if any(b <= a for a, b in zip(positions, positions[1:])):
        raise ValidationError("insertion positions must be strictly increasing")
    start = p.source(q)
    trivial = Path.trivial(start)
    edges = list(p.edges)
    for i, v in zip(positions, vertices):
        loop = q.self_loop_at.get(v)
        if loop is None or i < 1 or i > len(edges) + 1:
            return trivial
        at = q.source(edges[i - 1]) if i <= len(edges) else (q.target(edges[-1]) if edges else start)
        if at != v:
            return trivial
        edges.insert(i - 1, loop)
    return Path(tuple(edges), start)


def delete_self_loops(q: Quiver, p: Path, positions) -> Path:
    """Remove the self-loops at the 1-based ``positions`` of ``p`` (inverse of insertion)."""
    edges = list(p.edges)
    for i in sorted(positions, reverse=True):
        if not 1 <= i <= len(edges) or not q.is_self_loop(edges[i - 1]):
            raise ValidationError(f"position {i} of the path is not a self-loop")
        del edges[i - 1]
    return Path(tuple(edges), p.source(q))


def insertion_data(q: Quiver, p: Path) -> tuple[Path, tuple[int, ...], tuple[int, ...]]:
    """Split a loop into its self-loop-free part, the self-loop positions and their vertices."""
    pos = tuple(i + 1 for i, e in enumerate(p.edges) if q.is_self_loop(e))
    verts = tuple(q.source(p.edges[i - 1]) for i in pos)
    return delete_self_loops(q, p, pos), pos, verts


def forced_vertices(q: Quiver, p: Path, positions) -> tuple[int, ...] | None:
    """The only vertex labels for which inserting at ``positions`` is legal, or None."""
    final = len(p) + len(positions)
    if any(i < 1 or i > final for i in positions):
        return None
    # walk the final path: slots not in positions are filled by the edges of p in order
    x = p.source(q)
    it = iter(p.edges)
    pos = set(positions)
    verts = []
    for slot in range(1, final + 1):
        if slot in pos:
            verts.append(x)
        else:
            e = next(it)
            x = q.target(e)
    return tuple(verts)


def increasing_tuples(k: int, size: int):
    return itertools.combinations(range(1, k + 1), size)
