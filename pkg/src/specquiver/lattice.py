"""Closed-form traces on lattice tori, the length-6 loop decomposition, lattice
counting sequences and the plaquette curvature check."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg

from .dirac import ActionPolynomial, holonomy, higgs_fields
from .errors import ValidationError
from .quiver import LatticeSpec, Quiver, augment, lattice_path, make_torus, signed_axes
from .repcat import Representation, representation_from_matrices

# ---------------------------------------------------------------------------
# counting


def coordination(d: int, k: int) -> int:
    """Number of points of Z^d at L1 distance exactly k: the z^k coefficient of ((1+z)/(1-z))^d."""
    if d < 1 or k < 0:
        raise ValidationError("need d >= 1 and k >= 0")
    return sum(math.comb(d, j) * math.comb(k - j + d - 1, d - 1) for j in range(0, min(d, k) + 1))


def coordination_bfs(d: int, k: int, m: int | None = None) -> list[int]:
    """Sphere sizes 0..k by breadth-first search on T^d_m (m > 2k so nothing wraps)."""
    m = 2 * k + 2 if m is None else m
    if m <= 2 * k:
        raise ValidationError("BFS sphere counting needs m > 2k")
    q = augment(make_torus(LatticeSpec(d, m)))
    dist = {0: 0}
    frontier = [0]
    sizes = [1]
    for r in range(1, k + 1):
        nxt = []
        for v in frontier:
            for e in q.out_edges[v]:
                w = q.target(e)
                if w not in dist:
                    dist[w] = r
                    nxt.append(w)
        sizes.append(len(nxt))
        frontier = nxt
    return sizes


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def loop_count_lattice(d: int, k: int) -> int:
    """c_d(k): closed walks of length k at a point of Z^d (0 for odd k)."""
    if d < 1 or k < 0:
        raise ValidationError("need d >= 1 and k >= 0")
    if k % 2:
        return 0
    fk = math.factorial(k)
    return sum(fk // math.prod(math.factorial(x) for x in mu) ** 2 for mu in _compositions(k // 2, d))


def walks_complete(n: int, l: int) -> int:
    return (n - 1) ** l + (n - 1) * (-1) ** l


def walks_complete_looped(n: int, l: int) -> int:
    return n**l


def walks_uniform(n: int, lam: int, nu: int, l: int) -> int:
    """Closed walks on n vertices with lam self-loops each and nu edges between every pair."""
    return ((n - 1) * nu + lam) ** l + (n - 1) * (lam - nu) ** l


def underlying_adjacency(q: Quiver) -> np.ndarray:
    """Adjacency of the undirected underlying graph; a self-loop counts once on the diagonal."""
    A = np.zeros((q.vertex_count, q.vertex_count), dtype=object)
    for s, t in q.edges:
        A[s, t] += 1
        if s != t:
            A[t, s] += 1
    return A


def closed_walks(A: np.ndarray, l: int) -> int:
    """Tr(A^l) in exact integer arithmetic."""
    A = np.asarray(A, dtype=object)
    P = np.identity(A.shape[0], dtype=object)
    for _ in range(l):
        P = P.dot(A)
    return int(sum(P[i, i] for i in range(A.shape[0])))


def walk_bounds(q: Quiver, l: int) -> dict[str, int]:
    """Two upper bounds on closed walks in the underlying graph."""
    A = underlying_adjacency(q)
    n = q.vertex_count
    off = [A[i, j] for i in range(n) for j in range(n) if i != j]
    nu_all = max([int(x) for x in A.flat], default=0)
    nu = max([int(x) for x in off], default=0)
    lam = max([int(A[i, i]) for i in range(n)], default=0)
    return {
        "uniform_bound": n**l * nu_all**l,
        "loop_aware_bound": walks_uniform(n, lam, nu, l),
    }


def closed_walk_counts(kind: str, l: int, n: int | None = None, lam: int | None = None, nu: int | None = None, quiver: Quiver | None = None):
    if kind == "complete":
        return walks_complete(n, l)
    if kind == "complete_self_looped":
        return walks_complete_looped(n, l)
    if kind == "uniform":
        return walks_uniform(n, lam, nu, l)
    if kind == "bound":
        if quiver is None:
            raise ValidationError("bounds need a quiver")
        return walk_bounds(quiver, l)
    raise ValidationError(f"unknown walk family {kind!r}")


# ---------------------------------------------------------------------------
# batched lattice holonomies


@dataclass(frozen=True, eq=False)
class LatticeLinks:
    """Edge unitaries of a representation on T^d_m (or O^d_m) arranged by (vertex, axis)."""

    spec: LatticeSpec
    U: np.ndarray  # (V, d, N, N): map from H_v to H_{v+e_j}
    shift: np.ndarray  # (V, 2d+1) neighbour along signed axis, indexed by j + d
    phi: np.ndarray | None = None  # (V, N, N) Higgs field, when self-loops are present

    @property
    def N(self) -> int:
        return self.U.shape[-1]

    @property
    def V(self) -> int:
        return self.U.shape[0]

    def transport(self, x: np.ndarray, j: int) -> np.ndarray:
        """Operators stepping from the vertices x along signed axis j."""
        if j > 0:
            return self.U[x, j - 1]
        back = self.shift[x, j + self.spec.d]
        return np.conj(np.swapaxes(self.U[back, -j - 1], -1, -2))

    def word_traces(self, word, x=None) -> np.ndarray:
        """Tr of the composition-order holonomy of a signed-axis word from every vertex."""
        x = np.arange(self.V) if x is None else x
        h = np.broadcast_to(np.eye(self.N, dtype=complex), (len(x), self.N, self.N))
        y = x
        for j in word:
            h = self.transport(y, j) @ h
            y = self.shift[y, j + self.spec.d]
        return np.trace(h, axis1=-2, axis2=-1)

    def word_sum(self, word) -> complex:
        return complex(self.word_traces(word).sum())


def lattice_links(rep: Representation, rho=None) -> LatticeLinks:
    q = rep.quiver
    spec = q.lattice
    if spec is None or q.is_augmented:
        raise ValidationError("need a representation on an unaugmented lattice torus")
    dims = set(rep.dims)
    if len(dims) != 1:
        raise ValidationError("lattice closed forms need equal Hilbert dimension at every vertex")
    V, d = spec.volume, spec.d
    N = dims.pop()
    U = np.stack([np.stack([rep.L[v * d + i] for i in range(d)]) for v in range(V)])
    shift = np.zeros((V, 2 * d + 1), dtype=np.int64)
    for v in range(V):
        shift[v, d] = v
        for j in signed_axes(d):
            shift[v, j + d] = spec.shift(v, j)
    phi = None
    if spec.self_loops:
        fields = higgs_fields(rep, rho)
        phi = np.stack([fields[v] for v in range(V)])
    return LatticeLinks(spec, U, shift, phi)


def plaquette_sum(links: LatticeLinks) -> complex:
    """Sum of Wilson loops over all 4d(d-1) plaquettes at every vertex."""
    axes = signed_axes(links.spec.d)
    return sum(links.word_sum((i, j, -i, -j)) for i in axes for j in axes if abs(i) != abs(j))


def mixed_higgs_sum(links: LatticeLinks) -> complex:
    """sum_v sum_{+-j} Tr(phi_v T^* phi_{v+j} T), T the transport from v along j."""
    x = np.arange(links.V)
    total = 0j
    for j in signed_axes(links.spec.d):
        T = links.transport(x, j)
        w = links.shift[x, j + links.spec.d]
        Tc = np.conj(np.swapaxes(T, -1, -2))
        total += np.trace(links.phi @ Tc @ links.phi[w] @ T, axis1=-2, axis2=-1).sum()
    return complex(total)


def _higgs_power_sum(phi: np.ndarray, k: int) -> float:
    return float(np.trace(np.linalg.matrix_power(phi, k), axis1=-2, axis2=-1).real.sum())


# ---------------------------------------------------------------------------
# closed forms


@dataclass
class LatticeTraceReport:
    k: int
    constant_term: float
    plaquette_sum: float
    higgs_terms: dict[str, float] = field(default_factory=dict)
    mixed_terms: float = 0.0
    odd_terms: float = 0.0

    @property
    def total(self) -> float:
        return self.constant_term + self.plaquette_sum + sum(self.higgs_terms.values()) + self.mixed_terms + self.odd_terms

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "constant_term": self.constant_term,
            "plaquette_sum": self.plaquette_sum,
            "higgs_terms": self.higgs_terms,
            "mixed_terms": self.mixed_terms,
            "odd_terms": self.odd_terms,
            "total": self.total,
        }


def _check_lattice_hypotheses(rep: Representation, min_m: int = 5):
    spec = rep.quiver.lattice
    if spec is None:
        raise ValidationError("closed forms need a lattice torus representation")
    if spec.d < 2 or spec.m < min_m:
        raise ValidationError(f"closed forms assume d >= 2 and m >= {min_m}; got d={spec.d}, m={spec.m}")
    q = rep.quiver
    lat_rho = {q.rho(e) for e in range(spec.d * spec.volume)}
    if len(lat_rho) != 1:
        raise ValidationError("closed forms need one common distance on lattice edges")
    return spec, lat_rho.pop()


def lattice_trace_closed_form(rep: Representation, k: int, rho=None) -> LatticeTraceReport:
    """Tr(D^k), k <= 4, on T^d_m or O^d_m split into constant, plaquette and Higgs pieces.

    With lattice distance a, D = D_1 / a + Phi where D_1 has the bare edge
    unitaries and Phi = diag(phi_v).
    """
    if k not in range(5):
        raise ValidationError("closed forms cover k = 0..4")
    spec, a = _check_lattice_hypotheses(rep)
    links = lattice_links(rep, rho)
    V, d, N = links.V, spec.d, links.N
    const = {0: V * N, 1: 0, 2: 2 * d * V * N, 3: 0, 4: (8 * d * d - 2 * d) * V * N}[k] / a**k
    plaq = plaquette_sum(links).real / a**4 if k == 4 else 0.0
    rep_out = LatticeTraceReport(k, float(const), float(plaq))
    if links.phi is None:
        return rep_out
    phi = links.phi
    if k == 1:
        rep_out.higgs_terms["phi1"] = _higgs_power_sum(phi, 1)
    elif k == 2:
        rep_out.higgs_terms["phi2"] = _higgs_power_sum(phi, 2)
    elif k == 3:
        rep_out.higgs_terms["phi1"] = 6 * d * _higgs_power_sum(phi, 1) / a**2
        rep_out.higgs_terms["phi3"] = _higgs_power_sum(phi, 3)
    elif k == 4:
        rep_out.higgs_terms["phi2"] = 8 * d * _higgs_power_sum(phi, 2) / a**2
        rep_out.higgs_terms["phi4"] = _higgs_power_sum(phi, 4)
        rep_out.mixed_terms = 2 * mixed_higgs_sum(links).real / a**2
    return rep_out


def spectral_action_closed_form(rep: Representation, f: ActionPolynomial, a: float | None = None) -> LatticeTraceReport:
    """Tr f(aD) on O^d_m (or T^d_m) with lattice distance a and cutoff Lambda = 1/a.

    Grouping: the constant m^d N [f0 + 2d f2 + (8d^2 - 2d) f4], f4 times the
    plaquette sum, a^2 [(f2 + 8d f4) phi^2 + 2 f4 phi L phi L^*], a^4 f4 phi^4.
    Odd coefficients pick up Tr(phi) and Tr(phi^3); they are kept separately.
    """
    if f.degree > 4:
        raise ValidationError("the closed form covers polynomials of degree <= 4")
    spec, a_q = _check_lattice_hypotheses(rep)
    a = a_q if a is None else a
    if abs(a - a_q) > 1e-12 * a_q:
        raise ValidationError(f"lattice edges carry distance {a_q}, not {a}")
    if abs(f.scale - 1.0 / a) > 1e-12 / a:
        raise ValidationError("the closed form is stated at the cutoff Lambda = 1/a")
    c = list(f.coefficients) + [0.0] * (5 - len(f.coefficients))
    links = lattice_links(rep)
    V, d, N = links.V, spec.d, links.N
    out = LatticeTraceReport(f.degree, float(V * N * (c[0] + 2 * d * c[2] + (8 * d * d - 2 * d) * c[4])), float(c[4] * plaquette_sum(links).real))
    if links.phi is not None:
        phi = links.phi
        out.higgs_terms["phi2"] = a**2 * (c[2] + 8 * d * c[4]) * _higgs_power_sum(phi, 2)
        out.higgs_terms["phi4"] = a**4 * c[4] * _higgs_power_sum(phi, 4)
        out.mixed_terms = a**2 * 2 * c[4] * mixed_higgs_sum(links).real
        out.odd_terms = (c[1] * a + c[3] * 6 * d * a) * _higgs_power_sum(phi, 1) + c[3] * a**3 * _higgs_power_sum(phi, 3)
    return out


# ---------------------------------------------------------------------------
# length-6 loops


def _reduce_cyclic(word) -> tuple[int, ...]:
    st: list[int] = []
    for x in word:
        if st and st[-1] == -x:
            st.pop()
        else:
            st.append(x)
    while len(st) >= 2 and st[0] == -st[-1]:
        st = st[1:-1]
    return tuple(st)


def classify_word(word) -> str:
    """Class of a closed length-6 step word by its cyclically reduced form."""
    r = _reduce_cyclic(word)
    if not r:
        return "trivial"
    if len(r) == 4:
        return "square"
    if len(r) != 6:
        raise ValidationError(f"unexpected reduced length {len(r)}")
    if len({abs(x) for x in r}) == 2:
        return "rect"
    for k in range(6):
        s = r[k:] + r[:k]
        if s[3] == -s[0] and s[4] == -s[1] and s[5] == -s[2]:
            return "hex"
    return "door"


def closed_words(d: int, k: int):
    """All closed walks of length k on Z^d as signed-axis words, in lexicographic order of axes."""
    axes = signed_axes(d)
    pos = [0] * d
    word: list[int] = []

    def rec(left):
        if left == 0:
            if not any(pos):
                yield tuple(word)
            return
        if sum(abs(x) for x in pos) > left:
            return
        for j in axes:
            pos[abs(j) - 1] += 1 if j > 0 else -1
            word.append(j)
            yield from rec(left - 1)
            word.pop()
            pos[abs(j) - 1] -= 1 if j > 0 else -1

    yield from rec(k)


def representative_words(d: int) -> dict[str, list[tuple[int, ...]]]:
    """Canonical representatives summed over signed axes at each vertex."""
    ax = signed_axes(d)
    pairs = [(i, j) for i in ax for j in ax if abs(i) != abs(j)]
    triples = [(i, j, l) for i in ax for j in ax for l in ax if len({abs(i), abs(j), abs(l)}) == 3]
    return {
        "square": [(i, j, -i, -j) for i, j in pairs],
        "rect_h": [(i, i, j, -i, -i, -j) for i, j in pairs],
        "rect_v": [(i, j, j, -i, -j, -j) for i, j in pairs],
        "door": [(j, i, -j, l, -i, -l) for i, j, l in triples],
        "hex": [(i, j, l, -i, -j, -l) for i, j, l in triples],
    }


def d6_census(d: int) -> Counter:
    """How many closed length-6 walks at a vertex fall in each class."""
    return Counter(classify_word(w) for w in closed_words(d, 6))


def d6_coefficients(d: int) -> dict[str, Fraction]:
    """Multiplicity of each representative in Tr(D^6), from the census.

    Every walk of a class has the Wilson loop of one representative (after
    cancelling backtracks and rotating the base point), and the lattice
    symmetries spread them evenly, so the weight is walks / representatives.
    A rectangle is hit at six base points but the two representative families
    only root it at four, which gives 3/2.
    """
    census = d6_census(d)
    reps = representative_words(d)
    nrect = len(reps["rect_h"]) + len(reps["rect_v"])
    out = {"trivial": Fraction(census["trivial"])}
    out["square"] = Fraction(census["square"], len(reps["square"])) if reps["square"] else Fraction(0)
    out["rect_h"] = out["rect_v"] = Fraction(census["rect"], nrect) if nrect else Fraction(0)
    out["door"] = Fraction(census["door"], len(reps["door"])) if reps["door"] else Fraction(0)
    out["hex"] = Fraction(census["hex"], len(reps["hex"])) if reps["hex"] else Fraction(0)
    return out


def weisz_wohlert_table(d: int) -> dict[str, int]:
    """The coefficient table as usually quoted for the length-6 expansion."""
    return {
        "trivial": 4 * (10 * d**3 - 11 * d**2 + 6 * d),
        "square": 12 * d,
        "rect_h": 1,
        "rect_v": 1,
        "door": 3,
        "hex": 1,
    }


@dataclass
class D6Decomposition:
    d: int
    theta0: Fraction
    theta_square: Fraction
    theta_rect_h: Fraction
    theta_rect_v: Fraction
    theta_door: Fraction
    theta_hex: Fraction
    class_sums: dict[str, float]
    census: dict[str, int]
    loop_sums: dict[str, float]

    @property
    def thetas(self) -> dict[str, Fraction]:
        return {
            "trivial": self.theta0,
            "square": self.theta_square,
            "rect_h": self.theta_rect_h,
            "rect_v": self.theta_rect_v,
            "door": self.theta_door,
            "hex": self.theta_hex,
        }

    def reconstruct(self, thetas: dict | None = None) -> float:
        """sum over classes of theta times the representative sum."""
        th = self.thetas if thetas is None else thetas
        return float(sum(float(th[c]) * self.class_sums[c] for c in th))

    @property
    def exhaustive_total(self) -> float:
        return float(sum(self.loop_sums.values()))

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "theta": {k: str(v) for k, v in self.thetas.items()},
            "class_sums": self.class_sums,
            "census": self.census,
            "loop_sums": self.loop_sums,
            "reconstruction": self.reconstruct(),
            "exhaustive_total": self.exhaustive_total,
        }


def d6_decomposition(rep: Representation, exhaustive: bool = True) -> D6Decomposition:
    """Split Tr(D^6) on T^d_m (unit distance) into classes of length-6 loops.

    ``class_sums`` add the Wilson loops of the representatives over all
    vertices. With ``exhaustive`` every closed walk is also evaluated and its
    loop added to ``loop_sums`` under its class, giving an independent total.
    """
    spec = rep.quiver.lattice
    if spec is None or spec.self_loops:
        raise ValidationError("the length-6 decomposition needs a representation on T^d_m")
    if spec.d < 3 or spec.m <= 6:
        raise ValidationError(f"the length-6 decomposition assumes d >= 3 and m > 6; got d={spec.d}, m={spec.m}")
    q = rep.quiver
    if any(q.rho(e) != 1.0 for e in range(q.edge_count)):
        raise ValidationError("the length-6 decomposition is stated for unit distances")
    links = lattice_links(rep)
    coeffs = d6_coefficients(spec.d)
    sums = {"trivial": float(links.V * links.N)}
    for cls, words in representative_words(spec.d).items():
        sums[cls] = float(sum(links.word_sum(w).real for w in words))
    census: Counter = Counter()
    loop_sums: dict[str, float] = {}
    if exhaustive:
        for w in closed_words(spec.d, 6):
            c = classify_word(w)
            census[c] += 1
            loop_sums[c] = loop_sums.get(c, 0.0) + links.word_sum(w).real
    else:
        census = d6_census(spec.d)
    return D6Decomposition(
        spec.d,
        coeffs["trivial"],
        coeffs["square"],
        coeffs["rect_h"],
        coeffs["rect_v"],
        coeffs["door"],
        coeffs["hex"],
        sums,
        dict(census),
        loop_sums,
    )


# ---------------------------------------------------------------------------
# curvature of plaquettes


def smooth_gauge_field(d: int, m: int, N: int, a: float, seed: int = 0, modes: int = 3) -> np.ndarray:
    """Hermitian A_j(x) = sum_t H_{j,t} cos(k_t . x + c_t) at the sites x = a * coords.

    The field is fixed in physical units, so shrinking a samples it more finely.
    Returns an array of shape (m^d, d, N, N).
    """
    rng = np.random.Generator(np.random.Philox(seed))
    spec = LatticeSpec(d, m)
    xs = a * np.array([spec.coords(v) for v in range(spec.volume)], dtype=float)
    A = np.zeros((spec.volume, d, N, N), dtype=complex)
    for j in range(d):
        for _ in range(modes):
            z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
            H = (z + z.conj().T) / 2
            k = rng.uniform(0.5, 1.5, size=d)
            c = rng.uniform(0, 2 * np.pi)
            A[:, j] += np.cos(xs @ k + c)[:, None, None] * H
    return A


def _expi(H: np.ndarray, t: float) -> np.ndarray:
    w, V = np.linalg.eigh(H)
    return (V * np.exp(1j * t * w)) @ V.conj().T


def _unitary_log(U: np.ndarray, guard: float = 1e-6):
    T, Z = scipy.linalg.schur(U, output="complex")
    ev = np.diagonal(T)
    if np.min(np.abs(ev + 1.0)) < guard:
        return None
    return (Z * np.log(ev)) @ Z.conj().T


def links_from_field(A: np.ndarray, spec: LatticeSpec) -> Representation:
    """Representation on T^d_m with L_{(v, v+e_j)} = exp(i a A_j(v))."""
    q = make_torus(LatticeSpec(spec.d, spec.m))
    mats = [_expi(A[v, i], spec.a) for v in range(spec.volume) for i in range(spec.d)]
    return representation_from_matrices(q, mats)


@dataclass
class CurvatureResult:
    a: float
    max_residual: float
    mean_residual: float
    checked: int
    excluded_seam: int
    excluded_branch: list[tuple[int, int, int]]


def plaquette_curvature_check(A: np.ndarray, spec: LatticeSpec, skip_seam: bool = True) -> CurvatureResult:
    """Compare log of each plaquette holonomy with i a^2 F_ij(v).

    Holonomies are multiplied in walking order, U_i(v) U_j(v+i) U_i(v+j)^* U_j(v)^*,
    the order in which F_ij = D_i A_j - D_j A_i + i[A_i, A_j] appears. A field
    that is smooth in physical units cannot be periodic across the wrap of
    the torus for every a, so plaquettes touching the wrap are skipped unless
    ``skip_seam`` is False.
    """
    a = spec.a
    rep = links_from_field(A, spec)
    qa = augment(rep.quiver)
    res, excluded, seam = [], [], 0
    for v in range(spec.volume):
        x = spec.coords(v)
        for i in range(1, spec.d + 1):
            for j in range(i + 1, spec.d + 1):
                if skip_seam and (x[i - 1] == spec.m - 1 or x[j - 1] == spec.m - 1):
                    seam += 1
                    continue
                p = lattice_path(qa, v, (i, j, -i, -j))
                hol = holonomy(rep, p, order="traversal")
                lg = _unitary_log(hol)
                if lg is None:
                    excluded.append((v, i, j))
                    continue
                vi, vj = spec.shift(v, i), spec.shift(v, j)
                Ai, Aj = A[v, i - 1], A[v, j - 1]
                F = (A[vi, j - 1] - Aj) / a - (A[vj, i - 1] - Ai) / a + 1j * (Ai @ Aj - Aj @ Ai)
                res.append(float(np.linalg.norm(lg - 1j * a * a * F)))
    return CurvatureResult(a, max(res, default=0.0), float(np.mean(res)) if res else 0.0, len(res), seam, excluded)
