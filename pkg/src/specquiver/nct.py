"""Prespectral profiles, Bratteli diagrams and networks, gauge-group bookkeeping.

A profile (n, r) stands for the algebra of block matrices M_{n_1} + ... + M_{n_l}
acting on the Hilbert space r_1 C^{n_1} + ... + r_l C^{n_l}. A Bratteli diagram
C (l_s x l_t) is a unital *-morphism between two profiles when
n_t = C^T n_s and r_s = C r_t.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import ResourceLimitError, ValidationError
from .quiver import Quiver

DEFAULT_NODE_BUDGET = 200_000


@dataclass(frozen=True)
class PrespectralProfile:
    n: tuple[int, ...]
    r: tuple[int, ...]

    def __post_init__(self):
        n, r = tuple(int(x) for x in self.n), tuple(int(x) for x in self.r)
        if len(n) != len(r) or not n:
            raise ValidationError("a profile needs equally long, nonempty n and r")
        if min(n) < 1 or min(r) < 1:
            raise ValidationError("profile entries must be positive")
        pairs = sorted(zip(n, r))
        object.__setattr__(self, "n", tuple(p[0] for p in pairs))
        object.__setattr__(self, "r", tuple(p[1] for p in pairs))

    @property
    def length(self) -> int:
        return len(self.n)

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self.n, self.r))

    @property
    def hilbert_dim(self) -> int:
        return sum(a * b for a, b in zip(self.n, self.r))

    @property
    def algebra_dim(self) -> int:
        return sum(a * a for a in self.n)

    def summand_offsets(self) -> list[int]:
        """Start of each summand's block r_i C^{n_i} inside the Hilbert space."""
        out, pos = [], 0
        for a, b in zip(self.n, self.r):
            out.append(pos)
            pos += a * b
        return out

    def to_json(self) -> dict:
        return {"n": list(self.n), "r": list(self.r)}


def full_matrix(N: int) -> PrespectralProfile:
    """M_N acting on C^N."""
    return PrespectralProfile((N,), (1,))


@dataclass(frozen=True)
class BratteliDiagram:
    C: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.C)
        if not rows or len({len(r) for r in rows}) != 1 or not rows[0]:
            raise ValidationError("a Bratteli diagram needs a nonempty rectangular matrix")
        if any(x < 0 for row in rows for x in row):
            raise ValidationError("Bratteli diagram entries must be nonnegative")
        object.__setattr__(self, "C", rows)

    @classmethod
    def of(cls, a) -> "BratteliDiagram":
        return cls(tuple(map(tuple, np.asarray(a, dtype=int).tolist())))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.C, dtype=np.int64)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.C), len(self.C[0])

    def compatible(self, src: PrespectralProfile, dst: PrespectralProfile) -> bool:
        c = self.array
        if c.shape != (src.length, dst.length):
            return False
        if (c.sum(axis=0) == 0).any() or (c.sum(axis=1) == 0).any():
            return False
        return np.array_equal(c.T @ np.array(src.n), np.array(dst.n)) and np.array_equal(
            c @ np.array(dst.r), np.array(src.r)
        )


@dataclass(frozen=True)
class BratteliNetwork:
    profiles: tuple[PrespectralProfile, ...]
    diagrams: tuple[BratteliDiagram, ...]

    def validate(self, q: Quiver) -> None:
        if len(self.profiles) != q.vertex_count or len(self.diagrams) != q.edge_count:
            raise ValidationError("network does not match the quiver's vertex and edge counts")
        for e, (s, t) in enumerate(q.edges):
            if not self.diagrams[e].compatible(self.profiles[s], self.profiles[t]):
                raise ValidationError(f"diagram on edge {e} is not compatible with its endpoint profiles")

    def dim(self, v: int) -> int:
        return self.profiles[v].hilbert_dim

    def to_json(self) -> dict:
        return {
            "profiles": {str(v): p.to_json() for v, p in enumerate(self.profiles)},
            "diagrams": {str(e): [list(row) for row in d.C] for e, d in enumerate(self.diagrams)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "BratteliNetwork":
        profs = data["profiles"]
        diags = data["diagrams"]
        profiles = tuple(PrespectralProfile(profs[str(v)]["n"], profs[str(v)]["r"]) for v in range(len(profs)))
        diagrams = tuple(BratteliDiagram.of(diags[str(e)]) for e in range(len(diags)))
        return cls(profiles, diagrams)


@dataclass(frozen=True)
class GroupProfile:
    unitary_factors: tuple[int, ...]
    permutation_order: int
    component_count: int

    @property
    def real_dimension(self) -> int:
        return sum(n * n for n in self.unitary_factors)

    @property
    def center_dimension(self) -> int:
        # one U(1) per unitary factor; the projective reduction would remove these
        return len(self.unitary_factors)

    def to_json(self) -> dict:
        return {
            "factors": list(self.unitary_factors),
            "permutation_order": self.permutation_order,
            "component_count": self.component_count,
            "real_dimension": self.real_dimension,
            "center_dimension": self.center_dimension,
        }


def profiles_of_dim(N: int) -> list[PrespectralProfile]:
    """Every profile whose Hilbert space has dimension N, in sorted order."""
    if N < 1:
        raise ValidationError("Hilbert dimension must be positive")
    pairs = sorted((n, r) for n in range(1, N + 1) for r in range(1, N // n + 1))
    out = []

    def grow(start, left, acc):
        if left == 0:
            out.append(PrespectralProfile(tuple(p[0] for p in acc), tuple(p[1] for p in acc)))
            return
        for k in range(start, len(pairs)):
            n, r = pairs[k]
            if n * r <= left:
                grow(k, left - n * r, acc + [pairs[k]])

    grow(0, N, [])
    return sorted(out, key=lambda p: p.pairs)


def _bounded_columns(m: tuple[int, ...], target: int, cap: list[int]):
    """Solutions c of sum_i c_i m_i = target with 0 <= c_i <= cap_i."""
    acc = [0] * len(m)

    def rec(i, left):
        if i == len(m):
            if left == 0:
                yield tuple(acc)
            return
        for c in range(min(cap[i], left // m[i]) + 1):
            acc[i] = c
            yield from rec(i + 1, left - c * m[i])
        acc[i] = 0

    yield from rec(0, target)


@lru_cache(maxsize=None)
def _bratteli_cached(src: PrespectralProfile, dst: PrespectralProfile) -> tuple[BratteliDiagram, ...]:
    if src.hilbert_dim != dst.hilbert_dim:
        return ()
    ls, lt = src.length, dst.length
    found = []

    # columns are filled left to right; row i can still absorb (r_i - used_i) / r_j copies in column j
    def rec(j, rowsum, chosen):
        left = [src.r[i] - rowsum[i] for i in range(ls)]
        if j == lt - 1:
            if any(x % dst.r[j] for x in left):
                return
            col = tuple(x // dst.r[j] for x in left)
            if sum(c * n for c, n in zip(col, src.n)) == dst.n[j]:
                found.append(chosen + [col])
            return
        cap = [x // dst.r[j] for x in left]
        for col in _bounded_columns(src.n, dst.n[j], cap):
            rec(j + 1, [rowsum[i] + col[i] * dst.r[j] for i in range(ls)], chosen + [col])

    rec(0, [0] * ls, [])
    mats = sorted(tuple(tuple(c[i] for c in cols_) for i in range(ls)) for cols_ in found)
    return tuple(BratteliDiagram(m) for m in mats)


def enumerate_bratteli(src: PrespectralProfile, dst: PrespectralProfile) -> list[BratteliDiagram]:
    """All C with dst.n = C^T src.n and src.r = C dst.r, sorted by their row-major entries."""
    return list(_bratteli_cached(src, dst))


def sym_permutations(x: PrespectralProfile) -> list[tuple[int, ...]]:
    """Sym(n, r): permutations sigma of the summands with (n, r)[sigma(i)] == (n, r)[i]."""
    classes: dict[tuple[int, int], list[int]] = {}
    for i, p in enumerate(x.pairs):
        classes.setdefault(p, []).append(i)
    groups = list(classes.values())
    out = []
    for choice in itertools.product(*(itertools.permutations(g) for g in groups)):
        sigma = [0] * x.length
        for g, img in zip(groups, choice):
            for i, j in zip(g, img):
                sigma[i] = j
        out.append(tuple(sigma))
    return sorted(out)


def sym_order(x: PrespectralProfile) -> int:
    counts: dict[tuple[int, int], int] = {}
    for p in x.pairs:
        counts[p] = counts.get(p, 0) + 1
    return math.prod(math.factorial(c) for c in counts.values())


def automorphism_profile(x: PrespectralProfile) -> GroupProfile:
    order = sym_order(x)
    return GroupProfile(tuple(x.n), order, order)


def _bfs_order(q: Quiver, start: int) -> list[int]:
    nbrs: list[set[int]] = [set() for _ in range(q.vertex_count)]
    for s, t in q.edges:
        nbrs[s].add(t)
        nbrs[t].add(s)
    seen, order, queue = {start}, [], deque([start])
    while queue:
        x = queue.popleft()
        order.append(x)
        for y in sorted(nbrs[x]):
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return order


def _propagate(q: Quiver, incident, domains: list[list[PrespectralProfile]], changed) -> bool:
    """Arc consistency: drop labels that have no compatible partner across some edge."""
    work = deque(changed)
    queued = set(work)
    while work:
        x = work.popleft()
        queued.discard(x)
        for e in incident[x]:
            s, t = q.edges[e]
            for y in {s, t}:
                if y == s:
                    keep = [p for p in domains[s] if any(_bratteli_cached(p, b) for b in domains[t])]
                else:
                    keep = [p for p in domains[t] if any(_bratteli_cached(a, p) for a in domains[s])]
                if len(keep) < len(domains[y]):
                    if not keep:
                        return False
                    domains[y] = keep
                    if y not in queued:
                        queued.add(y)
                        work.append(y)
    return True


def admissible_labelings(
    q: Quiver,
    N: int,
    anchor: dict[int, PrespectralProfile] | None = None,
    budget: int = DEFAULT_NODE_BUDGET,
):
    """Yield vertex labelings (tuples of profiles) for which every edge has some Bratteli diagram.

    Vertices are fixed in breadth-first order. After each choice the other
    vertices lose every label that has no compatible partner across an edge,
    so forced labels cost nothing and dead ends show up at once.
    """
    if not q.is_connected():
        raise ValidationError("network enumeration needs a connected quiver; split it into components first")
    anchor = dict(anchor or {})
    for v, p in anchor.items():
        if p.hilbert_dim != N:
            raise ValidationError(f"anchor profile at vertex {v} has dimension {p.hilbert_dim}, not {N}")
    candidates = profiles_of_dim(N)
    start = min(anchor) if anchor else 0
    order = _bfs_order(q, start)
    incident: list[list[int]] = [[] for _ in range(q.vertex_count)]
    for e, (s, t) in enumerate(q.edges):
        incident[s].append(e)
        if t != s:
            incident[t].append(e)
    domains = [[anchor[v]] if v in anchor else list(candidates) for v in range(q.vertex_count)]
    if not _propagate(q, incident, domains, range(q.vertex_count)):
        return
    nodes = 0

    def rec(i, doms):
        nonlocal nodes
        while i < len(order) and len(doms[order[i]]) == 1:
            i += 1
        if i == len(order):
            yield tuple(d[0] for d in doms)
            return
        v = order[i]
        for p in doms[v]:
            nodes += 1
            if nodes > budget:
                raise ResourceLimitError(f"network enumeration exceeded the node budget of {budget}")
            nxt = [list(d) for d in doms]
            nxt[v] = [p]
            if _propagate(q, incident, nxt, [v]):
                yield from rec(i + 1, nxt)

    yield from rec(0, domains)


def enumerate_networks(
    q: Quiver,
    N: int,
    anchor: dict[int, PrespectralProfile] | None = None,
    budget: int = DEFAULT_NODE_BUDGET,
) -> list[BratteliNetwork]:
    """All Bratteli networks over a connected quiver with Hilbert dimension N at every vertex.

    ``anchor`` pins the profile at chosen vertices, e.g. ``{0: full_matrix(N)}``.
    The node budget covers both the labelling search and the emitted networks.
    """
    out = []
    count = 0
    for labels in admissible_labelings(q, N, anchor, budget):
        per_edge = [_bratteli_cached(labels[s], labels[t]) for s, t in q.edges]
        for combo in itertools.product(*per_edge):
            count += 1
            if count > budget:
                raise ResourceLimitError(f"network enumeration exceeded the node budget of {budget}")
            out.append(BratteliNetwork(labels, tuple(combo)))
    return out


def is_admissible_labeling(q: Quiver, labels) -> bool:
    return all(_bratteli_cached(labels[s], labels[t]) for s, t in q.edges)


def rep_space_profile(q: Quiver, net: BratteliNetwork) -> GroupProfile:
    """The unitary group parametrising representations on this network: one U(n_t) block per edge."""
    factors = tuple(sorted(n for s, t in q.edges for n in net.profiles[t].n))
    return GroupProfile(factors, 1, 1)


def gauge_group_profile(q: Quiver, net: BratteliNetwork) -> GroupProfile:
    """Product over vertices of Sym(n_v, r_v) semidirect U(n_v)."""
    factors = tuple(sorted(n for p in net.profiles for n in p.n))
    order = math.prod(sym_order(p) for p in net.profiles)
    return GroupProfile(factors, order, order)


def falling_factorial(n: int, k: int) -> int:
    return math.prod(range(n - k + 1, n + 1)) if k <= n else 0


def rep_dimension_bound(q: Quiver, N: int) -> int:
    if N < 1:
        raise ValidationError("N must be positive")
    E = q.edge_count
    return N ** (2 * E) * falling_factorial(N * N, N) ** E


def check_dimension_bound(q: Quiver, N: int, networks=None) -> dict:
    """Compare every network's real dimension (and their total) against the bound."""
    nets = enumerate_networks(q, N) if networks is None else networks
    bound = rep_dimension_bound(q, N)
    dims = [rep_space_profile(q, net).real_dimension for net in nets]
    return {
        "bound": bound,
        "networks": len(nets),
        "max_dimension": max(dims, default=0),
        "total_dimension": sum(dims),
        "holds": all(x <= bound for x in dims),
    }


def gauge_containment(q: Quiver, N: int) -> dict:
    """Component counts of the network-based gauge group versus the product over all vertex labelings.

    The naive product also runs over spurious labelings, which admit no
    representation at all; the inclusion is strict whenever one exists.
    """
    cands = profiles_of_dim(N)
    naive_labels = naive_comp = 0
    good_labels = good_comp = 0
    for labels in itertools.product(cands, repeat=q.vertex_count):
        comp = math.prod(sym_order(p) for p in labels)
        naive_labels += 1
        naive_comp += comp
        if is_admissible_labeling(q, labels):
            good_labels += 1
            good_comp += comp
    return {
        "labelings": naive_labels,
        "admissible_labelings": good_labels,
        "naive_components": naive_comp,
        "network_components": good_comp,
        "strict": good_comp < naive_comp,
    }


# ---------------------------------------------------------------------------
# Hilbert-space realisation of a diagram


def lam(x: PrespectralProfile, blocks) -> np.ndarray:
    """Represent an algebra element (one block per summand) on the Hilbert space of ``x``."""
    if len(blocks) != x.length:
        raise ValidationError("need one block per summand")
    parts = []
    for b, n, r in zip(blocks, x.n, x.r):
        b = np.asarray(b)
        if b.shape != (n, n):
            raise ValidationError(f"block of shape {b.shape} where {n}x{n} was expected")
        parts.extend([b] * r)
    return scipy.linalg.block_diag(*parts)


def slot_layout(diag: BratteliDiagram, src: PrespectralProfile, dst: PrespectralProfile) -> list[list[int]]:
    """For each target summand, the source summands placed along its diagonal (nondecreasing size)."""
    C = diag.C
    out = []
    for j in range(dst.length):
        slots = [i for i in range(src.length) for _ in range(C[i][j])]
        out.append(sorted(slots, key=lambda i: (src.n[i], i)))
    return out


def permutation_matrix(diag: BratteliDiagram, src: PrespectralProfile, dst: PrespectralProfile) -> np.ndarray:
    """P with P[target, source] = 1 identifying sum_i q_i C^{m_i} with the refined target space.

    Each slot of each target copy takes the next unused copy of its source
    summand, scanning targets in order (summand, copy, slot).
    """
    if not diag.compatible(src, dst):
        raise ValidationError("diagram is not compatible with the given profiles")
    dim = src.hilbert_dim
    src_off = src.summand_offsets()
    used = [0] * src.length
    P = np.zeros((dim, dim), dtype=np.int64)
    row = 0
    for j, slots in enumerate(slot_layout(diag, src, dst)):
        for _ in range(dst.r[j]):
            for i in slots:
                col = src_off[i] + used[i] * src.n[i]
                used[i] += 1
                for k in range(src.n[i]):
                    P[row + k, col + k] = 1
                row += src.n[i]
    return P


@dataclass(frozen=True)
class MorphismRealization:
    diagram: BratteliDiagram
    src: PrespectralProfile
    dst: PrespectralProfile
    u: tuple[np.ndarray, ...]
    P: np.ndarray
    L: np.ndarray

    def embed(self, blocks) -> list[np.ndarray]:
        """The block-diagonal image B(a) in each target summand, before conjugating by u."""
        out = []
        for slots in slot_layout(self.diagram, self.src, self.dst):
            out.append(scipy.linalg.block_diag(*[np.asarray(blocks[i]) for i in slots]))
        return out

    def phi(self, blocks) -> list[np.ndarray]:
        return [u @ b @ u.conj().T for u, b in zip(self.u, self.embed(blocks))]

    def residual(self, blocks) -> float:
        lhs = lam(self.dst, self.phi(blocks))
        rhs = self.L @ lam(self.src, blocks) @ self.L.conj().T
        return float(np.linalg.norm(lhs - rhs))


def realize_morphism(diag: BratteliDiagram, src: PrespectralProfile, dst: PrespectralProfile, u=None) -> MorphismRealization:
    """phi = Ad(u) o B and the implementing unitary L = lambda_t(u) P."""
    P = permutation_matrix(diag, src, dst)
    if u is None:
        u = [np.eye(n, dtype=complex) for n in dst.n]
    u = tuple(np.asarray(x, dtype=complex) for x in u)
    L = lam(dst, u) @ P
    return MorphismRealization(diag, src, dst, u, P, L)


def random_algebra_element(x: PrespectralProfile, rng: np.random.Generator) -> list[np.ndarray]:
    return [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for n in x.n]


def is_morphism(L: np.ndarray, src: PrespectralProfile, dst: PrespectralProfile, rng, trials: int = 3, tol: float = 1e-8) -> bool:
    """Check that Ad(L) carries lambda_s(A_s) into lambda_t(A_t) on random samples."""
    offs = dst.summand_offsets()
    for _ in range(trials):
        img = L @ lam(src, random_algebra_element(src, rng)) @ L.conj().T
        blocks = []
        for j, (n, r) in enumerate(zip(dst.n, dst.r)):
            o = offs[j]
            blocks.append(img[o : o + n, o : o + n])
            for c in range(r):
                a = o + c * n
                if np.linalg.norm(img[a : a + n, a : a + n] - blocks[-1]) > tol:
                    return False
        if np.linalg.norm(img - lam(dst, blocks)) > tol * max(1.0, np.linalg.norm(img)):
            return False
    return True
