import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specquiver.dirac import (
    ActionPolynomial,
    WeightAssignment,
    dirac,
    higgs_fields,
    holonomy,
    relative_error,
    spectral_action,
    trace_power_insertion,
    trace_power_matrix,
    trace_power_paths,
    trace_powers,
    weight_matrix,
    wilson_loop,
)
from specquiver.errors import ResourceLimitError, ValidationError
from specquiver.quiver import LatticeSpec, Path, Quiver, add_self_loops, augment, enumerate_loops, make_torus
from specquiver.repcat import (
    Representation,
    haar_unitary,
    make_rng,
    random_representation,
    representation_from_matrices,
    unit_representation,
    uniform_network,
)

from conftest import haar_torus

C3 = Quiver(3, ((0, 1), (1, 2), (2, 0)))


def test_cycle_weight_matrix():
    b = WeightAssignment.of([2.0, 3.0j, -1.0])
    A = weight_matrix(C3, b)
    assert np.count_nonzero(A) == 3
    assert A[1, 0] == 2.0 and A[2, 1] == 3.0j and A[0, 2] == -1.0
    S = weight_matrix(C3, b, symmetrize=True)
    assert np.count_nonzero(S) == 6
    assert np.allclose(S, S.conj().T)
    assert S[0, 1] == 2.0 and S[1, 2] == -3.0j


def test_zero_weights():
    assert not weight_matrix(C3, WeightAssignment.of([0, 0, 0]), symmetrize=True).any()


def test_jordan_weight_matrix():
    J = Quiver(1, ((0, 0),))
    b = WeightAssignment.of([1 + 2j])
    assert weight_matrix(J, b)[0, 0] == 1 + 2j
    assert weight_matrix(J, b, symmetrize=True)[0, 0] == 2.0


def test_holonomy_examples():
    q = Quiver(2, ((0, 1), (1, 0), (0, 0)))
    qa = augment(q)
    rep = unit_representation(q, 3)
    assert np.all(holonomy(rep, Path.trivial(0)) == 0)
    rep = random_representation(q, uniform_network(q, 3), 1)
    back = qa.reverse_map[0]
    assert abs(wilson_loop(rep, Path((0, back), 0)) - 3) < 1e-12
    with pytest.raises(ValidationError):
        wilson_loop(rep, Path((0,), 0))


def test_unit_weights_give_dimension():
    q = Quiver(3, ((0, 1), (1, 2), (2, 0), (0, 2)))
    qa = augment(q)
    rep = unit_representation(q, 4)
    for k in (2, 3, 4):
        for p in enumerate_loops(qa, k):
            assert wilson_loop(rep, p) == 4


def _order_sums(rep, k):
    loops = enumerate_loops(augment(rep.quiver), k)
    a = sum(wilson_loop(rep, p) for p in loops)
    b = sum(wilson_loop(rep, p, order="traversal") for p in loops)
    return a.real, b.real


def test_product_order_only_matters_when_nonabelian():
    abelian = haar_torus(2, 3, 1, seed=3)
    for k in (3, 4):
        a, b = _order_sums(abelian, k)
        assert a == pytest.approx(b, abs=1e-10)
    rep = haar_torus(2, 3, 2, seed=3)
    a, b = _order_sums(rep, 3)
    assert a == pytest.approx(trace_powers(dirac(rep), 3)[3].real, abs=1e-10)
    assert abs(a - b) > 1.0


def test_torus_dirac_is_hermitian(t25):
    D = dirac(t25)
    assert D.dim == 50
    assert D.hermiticity_residual() < 1e-12
    assert np.allclose(D.block(5, 0), t25.L[0])
    assert np.allclose(D.block(0, 5), t25.L[0].conj().T)


def test_edgeless_dirac():
    q = Quiver(3, ())
    from specquiver.nct import BratteliNetwork, full_matrix

    rep = Representation(q, BratteliNetwork((full_matrix(2),) * 3, ()), ())
    assert not dirac(rep).matrix.any()


def test_jordan_two_loops():
    q = Quiver(1, ((0, 0), (0, 0)))
    rng = make_rng(0)
    b1, b2 = haar_unitary(3, rng), haar_unitary(3, rng)
    D = dirac(representation_from_matrices(q, [b1, b2])).matrix
    assert np.allclose(D, b1 + b1.conj().T + b2 + b2.conj().T)


def test_trace_examples(t25):
    D = dirac(t25)
    tr = trace_powers(D, 5)
    assert tr[0] == 50
    assert abs(tr[1]) < 1e-12 and abs(tr[3]) < 1e-10
    assert abs(trace_power_matrix(D, 2) - 200) < 1e-10
    p4 = trace_power_paths(t25, 4)
    assert relative_error(p4, tr[4].real) < 1e-8


def test_spectral_action_examples(t25):
    assert spectral_action(t25, ActionPolynomial((1.5,))) == pytest.approx(75.0)
    assert spectral_action(t25, ActionPolynomial((0, 0, 1))) == pytest.approx(200.0)
    assert spectral_action(t25, ActionPolynomial((0, 0, 1), 2.0)) == pytest.approx(50.0)


def test_polynomial_degree_limit():
    ActionPolynomial(tuple(range(9)))
    with pytest.raises(ValidationError):
        ActionPolynomial(tuple(range(10)))
    assert ActionPolynomial((1, 2, 0, 0)).degree == 1


def test_path_route_limit(t25):
    with pytest.raises(ResourceLimitError):
        trace_power_paths(t25, 4, limit=3)


def test_higgs_fields():
    q = Quiver(1, ((0, 0),))
    rep = random_representation(q, uniform_network(q, 4), 2)
    phi = higgs_fields(rep)[0]
    assert np.allclose(phi, phi.conj().T)
    w = np.linalg.eigvalsh(phi)
    assert w.min() >= -2 - 1e-12 and w.max() <= 2 + 1e-12
    assert np.allclose(higgs_fields(unit_representation(q, 2))[0], 2 * np.eye(2))
    scaled = higgs_fields(rep, rho=(0.5 / 2.0,))[0]
    assert np.allclose(np.linalg.eigvalsh(scaled), 4 * w)
    with pytest.raises(ValidationError):
        higgs_fields(unit_representation(C3, 1))


def test_insertion_route_k2():
    rep = haar_torus(2, 3, 2, seed=4, self_loops=True)
    tr = trace_powers(dirac(rep), 4)
    phi = higgs_fields(rep)
    base_q, keep = rep.quiver.without_self_loops()
    base = trace_powers(dirac(rep.restrict(base_q, keep)), 2)[2].real
    expect = base + sum(np.trace(p @ p).real for p in phi.values())
    assert trace_power_insertion(rep, 2) == pytest.approx(expect, rel=1e-12)
    assert relative_error(trace_power_insertion(rep, 2), tr[2].real) < 1e-10
    assert relative_error(trace_power_insertion(rep, 4), tr[4].real) < 1e-8


@st.composite
def quivers(draw):
    n = draw(st.integers(1, 4))
    edges = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), min_size=1, max_size=6))
    return Quiver(n, tuple(edges))


@settings(max_examples=40, deadline=None)
@given(st.data(), st.integers(1, 3), st.integers(0, 10**6))
def test_dual_route_random_quivers(data, N, seed):
    q = data.draw(quivers())
    rng = make_rng(seed)
    rho = tuple(float(x) for x in rng.uniform(0.5, 2.0, size=q.edge_count))
    rep = random_representation(q, uniform_network(q, N), seed)
    tr = trace_powers(dirac(rep, rho), 5)
    assert max(abs(t.imag) for t in tr) <= 1e-10 * (1 + max(abs(t) for t in tr))
    for k in range(6):
        p = trace_power_paths(rep, k, rho)
        assert abs(p - tr[k].real) <= 1e-8 * (1 + abs(tr[k].real))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6))
def test_wilson_cyclicity(seed, k):
    q = Quiver(3, ((0, 1), (1, 2), (2, 0), (1, 1), (0, 2)))
    qa = augment(q)
    rep = random_representation(q, uniform_network(q, 2), seed)
    loops = enumerate_loops(qa, k)
    p = loops[seed % len(loops)]
    w = wilson_loop(rep, p)
    for r in range(1, k):
        e = p.edges[r:] + p.edges[:r]
        assert abs(wilson_loop(rep, Path(e, qa.source(e[0]))) - w) < 1e-10


def test_insertion_without_self_loops_is_plain_trace():
    rep = haar_torus(2, 3, 1, seed=1, self_loops=True)
    # identical base operators and phi = 0 if the self-loop matrices were absent
    q0, keep = rep.quiver.without_self_loops()
    base = rep.restrict(q0, keep)
    assert trace_power_paths(base, 4) == pytest.approx(trace_powers(dirac(base), 4)[4].real)
    assert add_self_loops(q0).edge_count == rep.quiver.edge_count
