import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specquiver.dirac import ActionPolynomial, dirac, relative_error, spectral_action, trace_powers
from specquiver.errors import ValidationError
from specquiver.lattice import (
    classify_word,
    closed_walk_counts,
    closed_walks,
    closed_words,
    coordination,
    coordination_bfs,
    d6_census,
    d6_coefficients,
    d6_decomposition,
    lattice_trace_closed_form,
    loop_count_lattice,
    plaquette_curvature_check,
    representative_words,
    smooth_gauge_field,
    spectral_action_closed_form,
    underlying_adjacency,
    walk_bounds,
    weisz_wohlert_table,
)
from specquiver.quiver import LatticeSpec, Quiver, augment, enumerate_loops, make_torus
from specquiver.repcat import unit_representation

from conftest import haar_torus


def test_coordination_d3():
    assert [coordination(3, k) for k in range(8)] == [1, 6, 18, 38, 66, 102, 146, 198]


def test_coordination_small_cases():
    assert all(coordination(1, k) == 2 for k in range(1, 10))
    assert all(coordination(d, 0) == 1 for d in range(1, 8))


def _series_coefficients(d, kmax):
    # ((1+z)/(1-z))^d = (1+z)^d * sum_k C(k+d-1, d-1) z^k
    num = [math.comb(d, j) for j in range(d + 1)]
    den = [math.comb(k + d - 1, d - 1) for k in range(kmax + 1)]
    return [sum(num[j] * den[k - j] for j in range(min(d, k) + 1)) for k in range(kmax + 1)]


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
def test_coordination_matches_series_and_bfs(d):
    kmax = 5 if d <= 3 else 3
    assert [coordination(d, k) for k in range(kmax + 1)] == _series_coefficients(d, kmax)
    assert coordination_bfs(d, kmax) == [coordination(d, k) for k in range(kmax + 1)]


def test_bfs_needs_room():
    with pytest.raises(ValidationError):
        coordination_bfs(2, 4, m=8)


def test_loop_count_examples():
    assert [loop_count_lattice(1, k) for k in range(0, 12, 2)] == [math.comb(k, k // 2) for k in range(0, 12, 2)]
    assert loop_count_lattice(2, 4) == 36
    for d in range(1, 6):
        assert loop_count_lattice(d, 6) == 120 * d**3 - 180 * d**2 + 80 * d
    assert loop_count_lattice(3, 5) == 0


@pytest.mark.parametrize("d,m,k", [(1, 9, 8), (2, 7, 6), (2, 9, 8), (3, 7, 4), (3, 7, 6)])
def test_loop_count_matches_enumeration(d, m, k):
    qa = augment(make_torus(LatticeSpec(d, m)))
    assert len(enumerate_loops(qa, k, base=0)) == loop_count_lattice(d, k)


def test_complete_graph_sequences():
    assert [closed_walk_counts("complete", l, n=3) for l in range(1, 10)] == [0, 6, 6, 18, 30, 66, 126, 258, 510]
    assert [closed_walk_counts("complete", l, n=4) for l in range(1, 9)] == [0, 12, 24, 84, 240, 732, 2184, 6564]
    assert closed_walk_counts("complete_self_looped", 5, n=3) == 243


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 3), st.integers(1, 3), st.integers(1, 10))
def test_uniform_formula_is_adjacency_trace(n, lam, nu, l):
    A = np.full((n, n), nu, dtype=object)
    for i in range(n):
        A[i, i] = lam
    assert closed_walk_counts("uniform", l, n=n, lam=lam, nu=nu) == closed_walks(A, l)


@pytest.mark.parametrize("n", [2, 3, 5, 6])
def test_complete_graph_oracles(n):
    K = np.ones((n, n), dtype=object) - np.eye(n, dtype=int).astype(object)
    L = np.ones((n, n), dtype=object)
    for l in range(1, 11):
        assert closed_walk_counts("complete", l, n=n) == closed_walks(K, l)
        assert closed_walk_counts("complete_self_looped", l, n=n) == closed_walks(L, l)


@pytest.mark.parametrize(
    "q",
    [
        Quiver(3, ((0, 1), (1, 2), (2, 0), (0, 0), (0, 0))),
        Quiver(4, ((0, 1), (0, 1), (1, 2), (2, 3), (3, 1), (2, 2))),
        make_torus(LatticeSpec(2, 3)),
    ],
)
def test_walk_bounds_hold(q):
    A = underlying_adjacency(q)
    for l in range(1, 9):
        b = walk_bounds(q, l)
        exact = closed_walks(A, l)
        assert exact <= b["loop_aware_bound"] <= b["uniform_bound"] or exact <= b["uniform_bound"]
        assert exact <= b["loop_aware_bound"]


def test_bound_needs_quiver():
    with pytest.raises(ValidationError):
        closed_walk_counts("bound", 3)


@pytest.mark.parametrize("d,m,N", [(2, 5, 1), (2, 5, 2), (3, 7, 1), (3, 7, 2)])
def test_closed_form_traces(d, m, N):
    rep = haar_torus(d, m, N, seed=d * 100 + N)
    tr = trace_powers(dirac(rep), 4)
    for k in range(5):
        rpt = lattice_trace_closed_form(rep, k)
        assert relative_error(rpt.total, tr[k].real) < 1e-8


@pytest.mark.parametrize("a,tau", [(1.0, 1.0), (0.5, 1.3), (0.25, 3.0)])
def test_closed_form_traces_with_higgs(a, tau):
    rep = haar_torus(2, 5, 2, seed=9, self_loops=True, a=a, tau=tau)
    tr = trace_powers(dirac(rep), 4)
    for k in range(5):
        rpt = lattice_trace_closed_form(rep, k)
        assert relative_error(rpt.total, tr[k].real) < 1e-8
    assert set(lattice_trace_closed_form(rep, 4).higgs_terms) == {"phi2", "phi4"}


def test_closed_form_instances():
    q = make_torus(LatticeSpec(2, 5))
    rep = haar_torus(2, 5, 2, seed=1)
    r2 = lattice_trace_closed_form(rep, 2)
    assert r2.constant_term == 200 and r2.plaquette_sum == 0 and not r2.higgs_terms
    for N in (1, 3):
        unit = lattice_trace_closed_form(unit_representation(q, N), 4)
        assert unit.total == pytest.approx((8 * 4 - 4) * 25 * N + 8 * 25 * N)


@pytest.mark.parametrize("d,m", [(2, 4), (1, 7)])
def test_closed_form_hypotheses(d, m):
    with pytest.raises(ValidationError):
        lattice_trace_closed_form(haar_torus(d, m, 1), 2)


def test_closed_form_power_range():
    with pytest.raises(ValidationError):
        lattice_trace_closed_form(haar_torus(2, 5, 1), 5)


@pytest.mark.parametrize("N", [1, 2])
def test_spectral_action_closed_form(N):
    a = 0.5
    rep = haar_torus(2, 5, N, seed=4, self_loops=True, a=a, tau=1.0)
    f = ActionPolynomial((0.3, -0.2, 0.7, 0.15, 0.4), scale=1 / a)
    out = spectral_action_closed_form(rep, f)
    assert relative_error(out.total, spectral_action(rep, f)) < 1e-8
    const = ActionPolynomial((2.5,), scale=1 / a)
    assert spectral_action_closed_form(rep, const).total == pytest.approx(2.5 * 25 * N)


def test_spectral_action_without_higgs_is_first_line():
    rep = haar_torus(2, 5, 2, seed=5)
    f = ActionPolynomial((0.3, 0.0, 0.7, 0.0, 0.4))
    out = spectral_action_closed_form(rep, f)
    assert out.higgs_terms == {} and out.mixed_terms == 0.0
    assert out.constant_term == pytest.approx(25 * 2 * (0.3 + 4 * 0.7 + 28 * 0.4))
    assert relative_error(out.total, spectral_action(rep, f)) < 1e-10


def test_spectral_action_closed_form_limits():
    rep = haar_torus(2, 5, 1, seed=5, self_loops=True, a=0.5)
    with pytest.raises(ValidationError):
        spectral_action_closed_form(rep, ActionPolynomial((0, 0, 0, 0, 0, 1), 2.0))
    with pytest.raises(ValidationError):
        spectral_action_closed_form(rep, ActionPolynomial((0, 0, 1), 1.0))


# length-6 loops


def test_census_totals():
    for d in (2, 3, 4):
        census = d6_census(d)
        assert sum(census.values()) == loop_count_lattice(d, 6)
    assert dict(d6_census(3)) == {"trivial": 876, "square": 720, "rect": 72, "door": 144, "hex": 48}


@pytest.mark.parametrize("d", [3, 4, 5])
def test_theta_weights_recount_all_walks(d):
    th = d6_coefficients(d)
    reps = representative_words(d)
    total = th["trivial"] + sum(th[c] * len(reps[c]) for c in reps)
    assert total == loop_count_lattice(d, 6)
    assert th["trivial"] == 40 * d**3 - 24 * d**2 + 4 * d
    assert th["square"] == 12 * d - 6
    assert th["rect_h"] == th["rect_v"] == Fraction(3, 2)
    assert th["door"] == 3 and th["hex"] == 1


@pytest.mark.parametrize("d", [3, 4, 5])
def test_reference_table_also_recounts_unit_weights(d):
    th = weisz_wohlert_table(d)
    reps = representative_words(d)
    assert th["trivial"] + sum(th[c] * len(reps[c]) for c in reps) == loop_count_lattice(d, 6)


def test_reference_table_trivial_term():
    assert weisz_wohlert_table(3)["trivial"] == 756 == 1860 - 1104


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_classification_is_rotation_and_symmetry_invariant(data):
    words = list(closed_words(3, 6))
    w = data.draw(st.sampled_from(words))
    r = data.draw(st.integers(0, 5))
    c = classify_word(w)
    assert classify_word(w[r:] + w[:r]) == c
    assert classify_word(tuple(-x for x in reversed(w))) == c
    perm = data.draw(st.permutations([1, 2, 3]))
    assert classify_word(tuple((1 if x > 0 else -1) * perm[abs(x) - 1] for x in w)) == c


def test_d6_haar_reconstruction():
    rep = haar_torus(3, 7, 1, seed=2)
    dec = d6_decomposition(rep)
    dense = trace_powers(dirac(rep), 6)[6].real
    assert relative_error(dec.reconstruct(), dense) < 1e-7
    assert relative_error(dec.exhaustive_total, dense) < 1e-7


def test_d6_unit_weights():
    q = make_torus(LatticeSpec(3, 7))
    dec = d6_decomposition(unit_representation(q, 2), exhaustive=False)
    assert round(dec.reconstruct()) == 1860 * 343 * 2
    for cls, words in representative_words(3).items():
        assert dec.class_sums[cls] == len(words) * 343 * 2


@pytest.mark.parametrize("d,m", [(2, 7), (3, 6)])
def test_d6_hypotheses(d, m):
    with pytest.raises(ValidationError):
        d6_decomposition(haar_torus(d, m, 1))


# curvature


def test_abelian_curvature_is_exact():
    spec = LatticeSpec(2, 16, a=0.1)
    r = plaquette_curvature_check(smooth_gauge_field(2, 16, 1, 0.1, seed=3), spec)
    assert r.max_residual < 1e-12


def test_constant_field_curvature_is_commutator():
    spec = LatticeSpec(2, 8, a=0.1)
    rng = np.random.default_rng(0)
    A = np.zeros((64, 2, 2, 2), dtype=complex)
    for j in range(2):
        z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        A[:, j] = (z + z.conj().T) / 2
    r1 = plaquette_curvature_check(A, spec)
    r2 = plaquette_curvature_check(A, LatticeSpec(2, 8, a=0.05))
    assert r1.max_residual / r2.max_residual > 6


def test_curvature_order_three():
    res = []
    for a in (0.2, 0.1, 0.05):
        res.append(plaquette_curvature_check(smooth_gauge_field(2, 16, 2, a, seed=1), LatticeSpec(2, 16, a=a)).max_residual)
    assert res[0] / res[1] > 6 and res[1] / res[2] > 6


def test_curvature_seam_is_reported():
    spec = LatticeSpec(2, 16, a=0.1)
    r = plaquette_curvature_check(smooth_gauge_field(2, 16, 2, 0.1), spec)
    assert r.checked == 15 * 15 and r.excluded_seam == 31 and r.excluded_branch == []
