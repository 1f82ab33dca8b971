"""Weight matrices, holonomies, Dirac operators and the two routes to Tr(D^k).

Blocks follow the operator convention: an edge e: s -> t with weight b_e
contributes b_e to block (t, s), and the symmetrised matrix adds b_e^* to
block (s, t). A path [e_1, ..., e_k] then has holonomy b_{e_k} ... b_{e_1}
(first edge acts first), so summing traces of holonomies over all loops of
the augmented quiver reproduces Tr(D^k).
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .quiver import (
    DEFAULT_LOOP_LIMIT,
    Path,
    Quiver,
    _distances_to,
    augment,
    forced_vertices,
    increasing_tuples,
    insert_self_loops,
    iter_loops,
)
from .repcat import Representation

MAX_DEGREE = 8


@dataclass(frozen=True, eq=False)
class WeightAssignment:
    """One matrix (or scalar) per edge, mapping the source block to the target block."""

    b: tuple[np.ndarray, ...]

    @classmethod
    def of(cls, weights) -> "WeightAssignment":
        return cls(tuple(np.atleast_2d(np.asarray(w, dtype=complex)) for w in weights))


def _block_dims(q: Quiver, b: WeightAssignment, dims=None) -> list[int]:
    if dims is not None:
        return list(dims)
    out = [None] * q.vertex_count
    for e, (s, t) in enumerate(q.edges):
        rows, cols = b.b[e].shape
        for v, n in ((t, rows), (s, cols)):
            if out[v] is not None and out[v] != n:
                raise ValidationError(f"inconsistent block size at vertex {v}")
            out[v] = n
    return [1 if x is None else x for x in out]


def _offsets(dims) -> list[int]:
    return [int(x) for x in np.concatenate([[0], np.cumsum(dims)[:-1]])] if len(dims) else []


def weight_matrix(q: Quiver, b: WeightAssignment, symmetrize: bool = False, dims=None) -> np.ndarray:
    if len(b.b) != q.edge_count:
        raise ValidationError("need one weight per edge")
    dims = _block_dims(q, b, dims)
    offs = _offsets(dims)
    A = np.zeros((sum(dims), sum(dims)), dtype=complex)
    for e, (s, t) in enumerate(q.edges):
        w = b.b[e]
        if w.shape != (dims[t], dims[s]):
            raise ValidationError(f"weight on edge {e} has shape {w.shape}, expected {(dims[t], dims[s])}")
        A[offs[t] : offs[t] + dims[t], offs[s] : offs[s] + dims[s]] += w
        if symmetrize:
            A[offs[s] : offs[s] + dims[s], offs[t] : offs[t] + dims[t]] += w.conj().T
    return A


def _rho_tuple(q: Quiver, rho) -> tuple[float, ...]:
    if rho is None:
        return tuple(q.rho(e) for e in range(q.edge_count))
    if np.isscalar(rho):
        return (float(rho),) * q.edge_count
    rho = tuple(float(x) for x in rho)
    if len(rho) != q.edge_count or min(rho, default=1.0) <= 0:
        raise ValidationError("rho needs one positive entry per edge")
    return rho


_AUG_CACHE: "weakref.WeakKeyDictionary[Quiver, Quiver]" = weakref.WeakKeyDictionary()


def augmented(q: Quiver) -> Quiver:
    if q.is_augmented:
        return q
    try:
        return _AUG_CACHE[q]
    except (KeyError, TypeError):
        pass
    qa = augment(q)
    try:
        _AUG_CACHE[q] = qa
    except TypeError:
        pass
    return qa


def edge_operators(rep: Representation, rho=None, symmetric: bool = True) -> tuple[Quiver, list[np.ndarray]]:
    """Operators attached to the edges of the augmented quiver.

    Original edges carry L_e / rho(e), reversed copies L_e^* / rho(e). Self-loops
    have no reversed copy, so on the symmetric route they carry (L + L^*) / rho.
    """
    q = rep.quiver
    rho = _rho_tuple(q, rho)
    qa = augmented(q)
    ops = []
    for e in range(qa.edge_count):
        if e < q.edge_count:
            w = rep.L[e] / rho[e]
            if symmetric and q.is_self_loop(e):
                w = w + w.conj().T
        else:
            p = qa.parent[e]
            w = rep.L[p].conj().T / rho[p]
        ops.append(w)
    return qa, ops


def holonomy(rep: Representation, p: Path, rho=None, order: str = "composition", symmetric: bool = True) -> np.ndarray:
    """Product of edge operators along a path of the augmented quiver.

    ``order="composition"`` gives b_{e_k} ... b_{e_1}, the map from the start
    space to the end space. ``order="traversal"`` multiplies in walking order
    b_{e_1} ... b_{e_k}, which only makes sense when all blocks share one size.
    The constant path has zero holonomy.
    """
    qa, ops = edge_operators(rep, rho, symmetric)
    if not p.is_valid(qa):
        raise ValidationError("edges do not form a path in the augmented quiver")
    if p.is_trivial:
        n = rep.dims[p.base]
        return np.zeros((n, n), dtype=complex)
    if order == "composition":
        h = ops[p.edges[0]]
        for e in p.edges[1:]:
            h = ops[e] @ h
    elif order == "traversal":
        h = ops[p.edges[0]]
        for e in p.edges[1:]:
            h = h @ ops[e]
    else:
        raise ValidationError(f"unknown holonomy order {order!r}")
    return h


def wilson_loop(rep: Representation, p: Path, rho=None, order: str = "composition", symmetric: bool = True) -> complex:
    qa = augmented(rep.quiver)
    if not p.is_trivial and not p.is_loop(qa):
        raise ValidationError("Wilson loops need a closed path")
    return complex(np.trace(holonomy(rep, p, rho, order, symmetric)))


@dataclass(frozen=True, eq=False)
class DiracOperator:
    matrix: np.ndarray
    dims: tuple[int, ...]
    offsets: tuple[int, ...]

    def block(self, i: int, j: int) -> np.ndarray:
        oi, oj = self.offsets[i], self.offsets[j]
        return self.matrix[oi : oi + self.dims[i], oj : oj + self.dims[j]]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_residual(self) -> float:
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T))

    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def dirac(rep: Representation, rho=None) -> DiracOperator:
    """Block (t, s) gets L_e / rho(e) and block (s, t) its adjoint."""
    q = rep.quiver
    rho = _rho_tuple(q, rho)
    b = WeightAssignment(tuple(rep.L[e] / rho[e] for e in range(q.edge_count)))
    M = weight_matrix(q, b, symmetrize=True, dims=rep.dims)
    return DiracOperator(M, tuple(rep.dims), tuple(rep.offsets))


def trace_powers(D: DiracOperator | np.ndarray, kmax: int) -> np.ndarray:
    """Complex Tr(D^k) for k = 0..kmax by repeated multiplication."""
    M = D.matrix if isinstance(D, DiracOperator) else np.asarray(D)
    out = np.zeros(kmax + 1, dtype=complex)
    P = np.eye(M.shape[0], dtype=complex)
    out[0] = M.shape[0]
    for k in range(1, kmax + 1):
        P = P @ M
        out[k] = np.trace(P)
    return out


def trace_power_matrix(D: DiracOperator, k: int) -> float:
    if k < 0:
        raise ValidationError("k must be nonnegative")
    return float(trace_powers(D, k)[k].real)


def loop_trace_sum(qa: Quiver, ops, dims, k: int, limit: int = DEFAULT_LOOP_LIMIT, weight=None) -> complex:
    """Sum of Tr(hol(p)) over every loop of length k, built with prefix products along a DFS.

    ``weight(p_edges)`` may rescale each loop; the default is 1.
    """
    if k > limit:
        raise ResourceLimitError(f"loop length {k} exceeds the configured limit {limit}")
    if k == 0:
        return complex(sum(dims))
    outs = [sorted(x) for x in qa.out_edges]
    total = 0j
    for base in range(qa.vertex_count):
        dist = _distances_to(qa, base)
        stack: list[int] = []

        def walk(x, h, remaining):
            nonlocal total
            if remaining == 0:
                if x == base:
                    w = 1.0 if weight is None else weight(stack)
                    total += w * np.trace(h)
                return
            if dist[x] > remaining:
                return
            for e in outs[x]:
                stack.append(e)
                walk(qa.target(e), ops[e] @ h, remaining - 1)
                stack.pop()

        walk(base, np.eye(dims[base], dtype=complex), k)
    return total


def trace_power_paths(rep: Representation, k: int, rho=None, limit: int = DEFAULT_LOOP_LIMIT) -> float:
    """Tr(D^k) as the sum of symmetric Wilson loops over all length-k loops of the augmented quiver."""
    qa, ops = edge_operators(rep, rho, symmetric=True)
    return float(loop_trace_sum(qa, ops, rep.dims, k, limit).real)


@dataclass(frozen=True)
class ActionPolynomial:
    coefficients: tuple[float, ...]
    scale: float = 1.0

    def __post_init__(self):
        c = tuple(float(x) for x in self.coefficients)
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        if len(c) - 1 > MAX_DEGREE:
            raise ValidationError(f"polynomial degree {len(c) - 1} exceeds the maximum {MAX_DEGREE}")
        if self.scale <= 0:
            raise ValidationError("the cutoff scale must be positive")
        object.__setattr__(self, "coefficients", c or (0.0,))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        return sum(c * x**k for k, c in enumerate(self.coefficients))


def spectral_action(rep: Representation, f: ActionPolynomial, rho=None) -> float:
    """Tr f(D / Lambda) for polynomial f."""
    D = dirac(rep, rho)
    tr = trace_powers(D, f.degree)
    val = sum(c * tr[k] / f.scale**k for k, c in enumerate(f.coefficients))
    return float(np.real(val))


def higgs_fields(rep: Representation, rho=None) -> dict[int, np.ndarray]:
    """phi_v = sum of (L_o + L_o^*) / rho(o) over the self-loops o at v."""
    q = rep.quiver
    rho = _rho_tuple(q, rho)
    out: dict[int, np.ndarray] = {}
    for e in range(q.edge_count):
        if q.is_self_loop(e):
            v = q.source(e)
            w = (rep.L[e] + rep.L[e].conj().T) / rho[e]
            out[v] = out[v] + w if v in out else w
    if not out:
        raise ValidationError("the quiver has no self-loops")
    return out


def trace_power_insertion(rep: Representation, k: int, rho=None, limit: int = DEFAULT_LOOP_LIMIT) -> float:
    """Tr(D^k) on a self-looped quiver, assembled from loops of the self-loop-free part.

    Each loop p of length k - q receives q self-loop insertions at every
    increasing position tuple; an inserted o_v contributes phi_v. Loops made
    only of self-loops give sum_v Tr(phi_v^k). Every piece is a path sum.
    """
    q = rep.quiver
    rho = _rho_tuple(q, rho)
    phi = higgs_fields(rep, rho)
    base_q, keep = q.without_self_loops()
    base_rep = rep.restrict(base_q, keep)
    base_rho = tuple(rho[e] for e in keep)
    total = trace_power_paths(base_rep, k, base_rho, limit) if k > 0 else 0.0
    if k == 0:
        return float(rep.total_dim)

    qa_full, _ = edge_operators(rep, rho)
    qa_base, base_ops = edge_operators(base_rep, base_rho)
    # map edges of the augmented base quiver into the augmented full quiver
    to_full = {}
    for e in range(qa_base.edge_count):
        orig = keep[qa_base.original(e)]
        to_full[e] = qa_full.reverse_map[orig] if qa_base.is_reversed(e) else orig
    full_ops = {}
    for e in range(qa_base.edge_count):
        full_ops[to_full[e]] = base_ops[e]
    for v, ph in phi.items():
        full_ops[qa_full.self_loop_at[v]] = ph

    for nq in range(1, k):
        for edges in _base_loops(qa_base, k - nq, limit):
            p = Path(tuple(to_full[e] for e in edges), qa_base.source(edges[0]))
            for pos in increasing_tuples(k, nq):
                verts = forced_vertices(qa_full, p, pos)
                if verts is None:
                    continue
                p_ins = insert_self_loops(qa_full, p, pos, verts)
                if p_ins.is_trivial:
                    continue
                h = full_ops[p_ins.edges[0]]
                for e in p_ins.edges[1:]:
                    h = full_ops[e] @ h
                total += float(np.trace(h).real)
    for ph in phi.values():
        total += float(np.trace(np.linalg.matrix_power(ph, k)).real)
    return total


def _base_loops(qa: Quiver, length: int, limit: int):
    return iter_loops(qa, length, None, limit)


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / (1.0 + abs(b))
