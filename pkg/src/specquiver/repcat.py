"""Representations (network plus edge unitaries), the gauge action, and the module picture."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .nct import (
    BratteliDiagram,
    BratteliNetwork,
    PrespectralProfile,
    full_matrix,
    lam,
    permutation_matrix,
    sym_permutations,
)
from .quiver import Path, Quiver

UNITARY_TOL = 1e-10


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed U(n): QR of a complex Ginibre matrix with R's diagonal made positive."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    qm, rm = np.linalg.qr(z)
    d = np.diagonal(rm)
    return qm * (d / np.abs(d))


def unitarity_residual(u: np.ndarray) -> float:
    eye = np.eye(u.shape[0])
    return max(np.linalg.norm(u @ u.conj().T - eye), np.linalg.norm(u.conj().T @ u - eye))


@dataclass(frozen=True, eq=False)
class Representation:
    quiver: Quiver
    network: BratteliNetwork
    L: tuple[np.ndarray, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        q, net = self.quiver, self.network
        if len(self.L) != q.edge_count:
            raise ValidationError("need one matrix per edge")
        for e, (s, t) in enumerate(q.edges):
            shape = (net.dim(t), net.dim(s))
            if self.L[e].shape != shape:
                raise ValidationError(f"edge {e} matrix has shape {self.L[e].shape}, expected {shape}")

    @property
    def dims(self) -> list[int]:
        return [p.hilbert_dim for p in self.network.profiles]

    @property
    def offsets(self) -> list[int]:
        out, pos = [], 0
        for d in self.dims:
            out.append(pos)
            pos += d
        return out

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def max_unitarity_residual(self) -> float:
        return max((unitarity_residual(x) for x in self.L), default=0.0)

    def restrict(self, q: Quiver, keep: list[int]) -> "Representation":
        """The same vertex data on a sub-quiver whose edge e is edge keep[e] here."""
        net = BratteliNetwork(self.network.profiles, tuple(self.network.diagrams[e] for e in keep))
        return Representation(q, net, tuple(self.L[e] for e in keep), dict(self.meta))

    def to_json(self) -> dict:
        from .io import quiver_to_json

        return {
            "quiver": quiver_to_json(self.quiver),
            "network": self.network.to_json(),
            "matrices": {
                str(e): [[[float(z.real), float(z.imag)] for z in row] for row in m] for e, m in enumerate(self.L)
            },
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Representation":
        from .io import quiver_from_json

        q = quiver_from_json(data["quiver"])
        net = BratteliNetwork.from_json(data["network"])
        mats = data["matrices"]
        L = tuple(np.array([[complex(a, b) for a, b in row] for row in mats[str(e)]]) for e in range(len(mats)))
        return cls(q, net, L, data.get("meta", {}))


def random_representation(q: Quiver, net: BratteliNetwork, seed=0) -> Representation:
    """L_e = lambda_t(u_e) P(C_e) with each u_e block drawn from Haar measure."""
    net.validate(q)
    rng = make_rng(seed)
    mats = []
    for e, (s, t) in enumerate(q.edges):
        src, dst = net.profiles[s], net.profiles[t]
        u = [haar_unitary(n, rng) for n in dst.n]
        mats.append(lam(dst, u) @ permutation_matrix(net.diagrams[e], src, dst))
    meta = {"seed": seed if isinstance(seed, int) else None}
    return Representation(q, net, tuple(mats), meta)


def uniform_network(q: Quiver, N: int) -> BratteliNetwork:
    """Every vertex carries M_N on C^N and every edge the diagram [1]."""
    p = full_matrix(N)
    return BratteliNetwork((p,) * q.vertex_count, (BratteliDiagram(((1,),)),) * q.edge_count)


def unit_representation(q: Quiver, N: int) -> Representation:
    return Representation(q, uniform_network(q, N), tuple(np.eye(N, dtype=complex) for _ in q.edges))


def representation_from_matrices(q: Quiver, mats) -> Representation:
    """Wrap one N x N unitary per edge on the uniform full-matrix network."""
    mats = tuple(np.asarray(m, dtype=complex) for m in mats)
    if not mats:
        raise ValidationError("need at least one edge matrix to infer N")
    return Representation(q, uniform_network(q, mats[0].shape[0]), mats)


# ---------------------------------------------------------------------------
# gauge group


@dataclass(frozen=True, eq=False)
class GaugeElement:
    sigma: tuple[tuple[int, ...], ...]
    g: tuple[tuple[np.ndarray, ...], ...]

    def check(self, net: BratteliNetwork) -> None:
        if len(self.sigma) != len(net.profiles) or len(self.g) != len(net.profiles):
            raise ValidationError("gauge element needs one (sigma, g) per vertex")
        for v, p in enumerate(net.profiles):
            s = self.sigma[v]
            if sorted(s) != list(range(p.length)) or any(p.pairs[s[i]] != p.pairs[i] for i in range(p.length)):
                raise ValidationError(f"sigma at vertex {v} does not preserve (n, r)")
            if len(self.g[v]) != p.length:
                raise ValidationError(f"g at vertex {v} needs one block per summand")
            for b, n in zip(self.g[v], p.n):
                if b.shape != (n, n) or unitarity_residual(b) > UNITARY_TOL:
                    raise ValidationError(f"g at vertex {v} is not a block unitary of sizes {p.n}")


def identity_gauge(net: BratteliNetwork) -> GaugeElement:
    return GaugeElement(
        tuple(tuple(range(p.length)) for p in net.profiles),
        tuple(tuple(np.eye(n, dtype=complex) for n in p.n) for p in net.profiles),
    )


def random_gauge_element(net: BratteliNetwork, seed=0) -> GaugeElement:
    rng = make_rng(seed)
    sig, gs = [], []
    for p in net.profiles:
        perms = sym_permutations(p)
        sig.append(perms[int(rng.integers(len(perms)))])
        gs.append(tuple(haar_unitary(n, rng) for n in p.n))
    return GaugeElement(tuple(sig), tuple(gs))


def summand_permutation(p: PrespectralProfile, sigma) -> np.ndarray:
    """Move the whole block of summand i to the slot of summand sigma(i)."""
    offs = p.summand_offsets()
    dim = p.hilbert_dim
    out = np.zeros((dim, dim))
    for i, j in enumerate(sigma):
        size = p.n[i] * p.r[i]
        out[offs[j] : offs[j] + size, offs[i] : offs[i] + size] = np.eye(size)
    return out


def upsilon(p: PrespectralProfile, sigma, g) -> np.ndarray:
    """Hilbert-space operator of (sigma, g): permute summands, then apply lambda(g)."""
    return lam(p, g) @ summand_permutation(p, sigma)


def _permute_diagram(C: BratteliDiagram, sig_s, sig_t) -> BratteliDiagram:
    old = C.array
    new = np.zeros_like(old)
    for i in range(old.shape[0]):
        for j in range(old.shape[1]):
            new[sig_s[i], sig_t[j]] = old[i, j]
    return BratteliDiagram.of(new)


def gauge_transform(rep: Representation, el: GaugeElement) -> Representation:
    """L'_e = Y_t L_e Y_s^{-1}; diagrams are relabelled by the summand permutations."""
    net = rep.network
    el.check(net)
    ups = [upsilon(p, el.sigma[v], el.g[v]) for v, p in enumerate(net.profiles)]
    q = rep.quiver
    mats, diags = [], []
    for e, (s, t) in enumerate(q.edges):
        mats.append(ups[t] @ rep.L[e] @ ups[s].conj().T)
        diags.append(_permute_diagram(net.diagrams[e], el.sigma[s], el.sigma[t]))
    return Representation(q, BratteliNetwork(net.profiles, tuple(diags)), tuple(mats), dict(rep.meta))


def compose_gauge(second: GaugeElement, first: GaugeElement) -> GaugeElement:
    """(tau, h)(sigma, g) = (tau sigma, h * tau(g)) where tau(g)_j = g_{tau^-1(j)}."""
    sig, gs = [], []
    for tau, h, sigma, g in zip(second.sigma, second.g, first.sigma, first.g):
        sig.append(tuple(tau[sigma[i]] for i in range(len(sigma))))
        inv = [0] * len(tau)
        for i, j in enumerate(tau):
            inv[j] = i
        gs.append(tuple(h[j] @ g[inv[j]] for j in range(len(tau))))
    return GaugeElement(tuple(sig), tuple(gs))


def rep_distance(a: Representation, b: Representation) -> float:
    """Largest per-edge Frobenius distance between the edge matrices."""
    if a.quiver.edges != b.quiver.edges:
        raise ValidationError("representations live on different quivers")
    return max((float(np.linalg.norm(x - y)) for x, y in zip(a.L, b.L)), default=0.0)


def adjoint_distance(a: Representation, b: Representation) -> float:
    """Largest distance between Ad(L_e) of the two representations on the matrix units of A_s.

    Edge unitaries that differ by something commuting with the image of the
    source algebra (a phase, say) induce the same morphism and compare equal here.
    """
    if a.quiver.edges != b.quiver.edges:
        raise ValidationError("representations live on different quivers")
    worst = 0.0
    for e, (s, _) in enumerate(a.quiver.edges):
        p = a.network.profiles[s]
        for k, n in enumerate(p.n):
            for i in range(n):
                for j in range(n):
                    blocks = [np.zeros((m, m), dtype=complex) for m in p.n]
                    blocks[k][i, j] = 1.0
                    x = lam(p, blocks)
                    diff = a.L[e] @ x @ a.L[e].conj().T - b.L[e] @ x @ b.L[e].conj().T
                    worst = max(worst, float(np.linalg.norm(diff)))
    return worst


# ---------------------------------------------------------------------------
# modules over the path algebra


@dataclass(frozen=True, eq=False)
class PathModule:
    """The direct sum of the vertex spaces with the path algebra acting on it.

    ``projections[v]`` is E_v and ``generators[e]`` the action of the edge e,
    both as operators on the total space.
    """

    quiver: Quiver
    network: BratteliNetwork
    projections: tuple[np.ndarray, ...]
    generators: tuple[np.ndarray, ...]

    @property
    def total_profile(self) -> PrespectralProfile:
        n = [x for p in self.network.profiles for x in p.n]
        r = [x for p in self.network.profiles for x in p.r]
        return PrespectralProfile(tuple(n), tuple(r))

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0] if self.projections else 0

    def operator(self, p: Path) -> np.ndarray:
        if p.is_trivial:
            return self.projections[p.base]
        if not p.is_valid(self.quiver):
            return np.zeros((self.dim, self.dim), dtype=complex)
        out = self.projections[p.source(self.quiver)]
        for e in p.edges:
            out = self.generators[e] @ out
        return out

    def act(self, p: Path, x: np.ndarray) -> np.ndarray:
        return self.operator(p) @ x

    def product(self, p2: Path, p1: Path) -> np.ndarray:
        """Operator of the algebra product p2 . p1 (first p1, then p2); zero if they do not compose."""
        joined = p1.then(self.quiver, p2)
        if joined is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.operator(joined)


def to_module(rep: Representation) -> PathModule:
    offs, dims, total = rep.offsets, rep.dims, rep.total_dim
    projs = []
    for o, d in zip(offs, dims):
        P = np.zeros((total, total), dtype=complex)
        P[o : o + d, o : o + d] = np.eye(d)
        projs.append(P)
    gens = []
    for e, (s, t) in enumerate(rep.quiver.edges):
        G = np.zeros((total, total), dtype=complex)
        G[offs[t] : offs[t] + dims[t], offs[s] : offs[s] + dims[s]] = rep.L[e]
        gens.append(G)
    return PathModule(rep.quiver, rep.network, tuple(projs), tuple(gens))


def to_representation(mod: PathModule, q: Quiver | None = None) -> Representation:
    """Recover vertex spaces from the E_v and edge maps by restriction."""
    q = mod.quiver if q is None else q
    total = mod.dim
    eye = np.eye(total)
    acc = np.zeros((total, total), dtype=complex)
    supports = []
    for P in mod.projections:
        if np.linalg.norm(P @ P - P) > 1e-10 or np.linalg.norm(P - P.conj().T) > 1e-10:
            raise ValidationError("vertex idempotents must be orthogonal projections")
        acc += P
        supports.append(np.flatnonzero(np.abs(np.diagonal(P) - 1.0) < 1e-10))
    if np.linalg.norm(acc - eye) > 1e-10:
        raise ValidationError("vertex projections do not sum to the identity")
    mats = []
    for e, (s, t) in enumerate(q.edges):
        op = mod.projections[t] @ mod.generators[e] @ mod.projections[s]
        mats.append(op[np.ix_(supports[t], supports[s])])
    return Representation(q, mod.network, tuple(mats))
