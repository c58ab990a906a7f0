import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import G_direct, bisect_level, brute_hard_threshold, dense_Q, random_graph
from dircomm.dcomp import is_d_connected
from dircomm.graph import DirectedGraph, EdgeMask
from dircomm.measures import Community
from dircomm.rsvd import (
    ENParams,
    L0Params,
    SparseUnitVector,
    en_rsvd,
    en_solve,
    en_threshold_level,
    hard_threshold_solve,
    l0_rsvd,
    principal_singular_value,
    soft_threshold,
    threshold_function,
)


def two_component_graph():
    # A: sources {0,1,2} -> terminals {0,1,2}; B: sources {3..7} -> terminals {3..7}
    A = [(i, j) for i in range(3) for j in range(3) if i != j]
    B = [(i, j) for i in range(3, 8) for j in range(3, 8) if i != j and (i + j) % 3]
    s, d = zip(*(A + B))
    return DirectedGraph.from_edges(s, d, n=8)


# -- SparseUnitVector ------------------------------------------------------

def test_sparse_vector_normalizes_layout():
    v = SparseUnitVector([3, 1], [0.6, 0.8])
    assert v.support.tolist() == [1, 3] and v.values.tolist() == [0.8, 0.6]
    assert SparseUnitVector([1, 2], [0.0, 1.0]).nnz == 1
    with pytest.raises(ValueError):
        SparseUnitVector([1, 1], [0.5, 0.5])
    ind = SparseUnitVector.indicator([4, 2])
    assert math.isclose(ind.norm(), 1.0) and ind.support.tolist() == [2, 4]
    np.testing.assert_allclose(ind.dense(5), [0, 0, 2**-0.5, 0, 2**-0.5])


# -- hard threshold --------------------------------------------------------

def test_hard_threshold_examples():
    u = hard_threshold_solve(np.array([5.0, 0, 0]), 1.0)
    assert u.support.tolist() == [0] and u.values.tolist() == [1.0]
    u = hard_threshold_solve(np.array([3.0, 2.0, 1.0]), 0.5)
    assert u.support.tolist() == [0, 1]
    np.testing.assert_allclose(u.values, np.array([3, 2]) / math.sqrt(13))
    assert hard_threshold_solve(np.zeros(4), 0.1).is_empty
    with pytest.raises(ValueError):
        hard_threshold_solve(np.ones(2), 0.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 100), st.integers(0, 2**32 - 1), st.booleans())
def test_hard_threshold_matches_brute_force(n, seed, integer):
    rng = np.random.default_rng(seed)
    z = rng.integers(-4, 5, n).astype(float) if integer else rng.standard_normal(n)
    if not z.any():
        return
    rho = float(np.exp(rng.uniform(-6, 1)))
    keep, vals = brute_hard_threshold(z, rho)
    u = hard_threshold_solve(z, rho)
    assert u.support.tolist() == keep.tolist()
    np.testing.assert_allclose(u.values, vals, rtol=0, atol=1e-15)


def test_hard_threshold_tie_keeps_smaller_index():
    u = hard_threshold_solve(np.array([0.0, 1.0, 1.0, 1.0]), 0.9)
    assert u.support.tolist() == [1]


# -- soft threshold and elastic net ----------------------------------------

def test_soft_threshold_examples():
    z = np.array([2.0, -1.0])
    np.testing.assert_array_equal(soft_threshold(z, 0.0), z)
    np.testing.assert_array_equal(soft_threshold(z, 2.0), [0.0, 0.0])
    np.testing.assert_allclose(soft_threshold(z, 0.5), [1.5, -0.5])


@pytest.mark.parametrize("a, c", [(1.0, 0.5), (3.0, 2.0), (-0.2, 10.0), (7.0, 1e-3)])
def test_threshold_level_single_entry(a, c):
    z = np.array([0.0, a, 0.0])
    d = en_threshold_level(z, c)
    assert math.isclose(d, abs(a) / math.sqrt(1 + 4 * c), rel_tol=1e-12)
    r = abs(a) - d
    assert math.isclose(r * r / (4 * d * d) + r / (2 * d), c, rel_tol=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 50), st.integers(0, 2**32 - 1))
def test_threshold_level_solves_equation(n, seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    c = float(np.exp(rng.uniform(-4, 4)))
    d = en_threshold_level(z, c)
    assert 0 < d < np.max(np.abs(z))
    assert math.isclose(threshold_function(z, d), c, rel_tol=1e-10, abs_tol=1e-10)
    assert math.isclose(d, bisect_level(z, c), rel_tol=1e-8, abs_tol=1e-12)


def test_threshold_function_strictly_decreasing(rng):
    for _ in range(100):
        z = rng.standard_normal(int(rng.integers(1, 30)))
        top = np.max(np.abs(z))
        d1, d2 = np.sort(rng.uniform(0, top, 2))[::-1]
        if d1 == d2:
            continue
        assert G_direct(z, d1) < G_direct(z, d2)


def _en_constraint(u, alpha):
    return (1 - alpha) * float(u.values @ u.values) + alpha * float(np.abs(u.values).sum())


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 60), st.floats(0.001, 0.999), st.floats(0.05, 5.0), st.integers(0, 2**32 - 1))
def test_en_solution_activates_constraint(n, alpha, c, seed):
    z = np.random.default_rng(seed).standard_normal(n)
    u = en_solve(z, alpha, c)
    assert math.isclose(_en_constraint(u, alpha), c, rel_tol=1e-9, abs_tol=1e-9)
    # signs follow z, support is where |z| exceeds the threshold
    assert np.all(np.sign(u.values) == np.sign(z[u.support]))


def test_en_single_entry_closed_form():
    alpha, c, a = 0.3, 1.0, 2.5
    u = en_solve(np.array([0.0, 0.0, a]), alpha, c)
    want = (-alpha + math.sqrt(alpha**2 + 4 * (1 - alpha) * c)) / (2 * (1 - alpha))
    assert u.support.tolist() == [2] and math.isclose(u.values[0], want, rel_tol=1e-12)


def test_en_alpha_zero_is_normalization(rng):
    z = rng.standard_normal(7)
    u = en_solve(z, 0.0, 2.0)
    np.testing.assert_allclose(u.dense(7), math.sqrt(2.0) * z / np.linalg.norm(z))


def test_en_beats_random_feasible_vectors(rng):
    for _ in range(5):
        n = int(rng.integers(2, 11))
        z = rng.standard_normal(n)
        alpha = float(rng.uniform(0.05, 0.95))
        u = en_solve(z, alpha, 1.0)
        best = u.dot(z)
        X = rng.standard_normal((10000, n)) * (rng.random((10000, n)) < 0.7)
        q = (1 - alpha) * (X * X).sum(1)
        l1 = alpha * np.abs(X).sum(1)
        # scale every draw onto the constraint boundary
        scale = np.where(q > 0, (-l1 + np.sqrt(l1**2 + 4 * q)) / (2 * np.maximum(q, 1e-300)), 0)
        assert np.max((X * scale[:, None]) @ z) <= best + 1e-12


# -- alternating solvers ---------------------------------------------------

def test_l0_two_components_confined_to_seed_component():
    g = two_component_graph()
    mask = EdgeMask.full(g)
    eta = 1e-4
    r = l0_rsvd(g, mask, L0Params(eta), SparseUnitVector.indicator([1]))
    assert r.u.support.tolist() == [0, 1, 2] and r.v.support.tolist() == [0, 1, 2]
    assert math.isclose(r.objective, 1 - eta * 6, abs_tol=1e-8)
    assert r.converged and not r.degenerate


def test_l0_single_edge():
    g = DirectedGraph.from_edges([0], [1], n=2)
    r = l0_rsvd(g, EdgeMask.full(g), L0Params(0.5), SparseUnitVector([1], [1.0]))
    assert r.u.support.tolist() == [0] and r.v.support.tolist() == [1]


def test_l0_large_penalty_keeps_single_edge():
    g = two_component_graph()
    r = l0_rsvd(g, EdgeMask.full(g), L0Params(5.0), SparseUnitVector.indicator([1]))
    assert r.u.nnz == 1 and r.v.nnz == 1 and not r.degenerate
    assert g.qval[np.flatnonzero((g.edge_src == r.u.support[0]) & (g.out_dst == r.v.support[0]))].size == 1


def test_l0_large_eta_picks_strict_subgraph():
    g = two_component_graph()
    r = l0_rsvd(g, EdgeMask.full(g), L0Params(0.2), SparseUnitVector.indicator([1]))
    assert not r.degenerate
    S, T = set(r.u.support.tolist()), set(r.v.support.tolist())
    assert S <= {0, 1, 2} and T <= {0, 1, 2} and len(S) + len(T) < 6


def _objective(g, u, v, pen):
    Q = dense_Q(g)
    return u.dense(g.n) @ Q @ v.dense(g.n) - pen


@settings(max_examples=50, deadline=None)
@given(st.integers(4, 30), st.integers(0, 2**32 - 1), st.floats(-9, -1))
def test_l0_monotone_connected_and_objective(n, seed, log_eta):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, 0.2, weighted=bool(seed % 2))
    if g.m == 0:
        return
    eta, omega = math.exp(log_eta), float(rng.uniform(0.5, 2))
    v0 = SparseUnitVector.indicator([int(np.argmax(g.in_deg))])
    r = l0_rsvd(g, EdgeMask.full(g), L0Params(eta, omega), v0)
    assert np.all(np.diff(r.trace) >= -1e-12)
    if r.degenerate:
        return
    assert is_d_connected(g, EdgeMask.full(g), r.community(g))
    pen = eta * (r.u.nnz + omega * r.v.nnz)
    assert math.isclose(r.objective, _objective(g, r.u, r.v, pen), abs_tol=1e-10)
    assert r.u.norm() <= 1 + 1e-12 and r.v.norm() <= 1 + 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(4, 30), st.integers(0, 2**32 - 1), st.floats(0.0, 0.9))
def test_en_monotone_and_objective(n, seed, alpha):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, 0.2)
    if g.m == 0:
        return
    v0 = SparseUnitVector.indicator([int(np.argmax(g.in_deg))])
    r = en_rsvd(g, EdgeMask.full(g), ENParams(alpha), v0)
    assert np.all(np.diff(r.trace) >= -1e-12)
    if not r.degenerate:
        assert math.isclose(r.objective, _objective(g, r.u, r.v, 0.0), abs_tol=1e-10)


def test_en_alpha_zero_is_power_iteration(rng):
    g = random_graph(rng, 12, 0.5)
    v0 = SparseUnitVector.from_dense(np.sqrt(g.in_deg) + rng.random(12))
    r = en_rsvd(g, EdgeMask.full(g), ENParams(0.0), v0, tol=1e-12, max_iter=5000)
    U, s, Vt = np.linalg.svd(dense_Q(g))
    assert math.isclose(r.objective, s[0], rel_tol=1e-9)
    assert math.isclose(abs(r.v.dense(12) @ Vt[0]), 1.0, rel_tol=1e-6)


def test_en_small_alpha_confined_to_component():
    g = two_component_graph()
    r = en_rsvd(g, EdgeMask.full(g), ENParams(0.05), SparseUnitVector.indicator([1]))
    assert set(r.u.support.tolist()) <= {0, 1, 2} and set(r.v.support.tolist()) <= {0, 1, 2}


def test_solver_input_checks():
    g = two_component_graph()
    with pytest.raises(ValueError):
        l0_rsvd(g, EdgeMask.full(g), L0Params(0.1), np.zeros(8))
    with pytest.raises(ValueError):
        L0Params(-1.0)
    with pytest.raises(ValueError):
        ENParams(1.0)
    assert ENParams(0.3).beta == 0.3


# -- principal singular value ----------------------------------------------

def test_sigma_of_component_is_one():
    g = two_component_graph()
    m = EdgeMask.full(g)
    assert math.isclose(principal_singular_value(g, m, Community([0, 1, 2], [0, 1, 2])), 1.0,
                        abs_tol=1e-8)
    assert principal_singular_value(g, m, Community([0, 1], [0, 1, 2])) < 1 - 1e-6
    with pytest.raises(ValueError):
        principal_singular_value(g, m, Community([0], [5]))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_sigma_matches_dense_svd(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, 0.4, weighted=bool(seed % 2))
    S = np.sort(rng.choice(n, rng.integers(1, n + 1), replace=False))
    T = np.sort(rng.choice(n, rng.integers(1, n + 1), replace=False))
    sub = dense_Q(g)[np.ix_(S, T)]
    if not sub.any():
        return
    want = np.linalg.svd(sub, compute_uv=False)[0]
    got = principal_singular_value(g, EdgeMask.full(g), Community(S, T))
    assert got <= 1 + 1e-9
    assert math.isclose(got, want, abs_tol=1e-8)
