import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import double_cover_components, random_graph
from dircomm.dcomp import directional_components, directional_components_frontier, is_d_connected
from dircomm.graph import DirectedGraph, EdgeMask, mask_community
from dircomm.measures import Community, d_cut


def _as_set(comps):
    return {(tuple(c.S.tolist()), tuple(c.T.tolist())) for c in comps}


def test_single_edge():
    g = DirectedGraph.from_edges([0], [1], n=2)
    (c,) = directional_components(g)
    assert c.S.tolist() == [0] and c.T.tolist() == [1]


def test_two_disjoint_stars():
    g = DirectedGraph.from_edges([0, 0, 0, 4, 4], [1, 2, 3, 5, 6], n=7)
    comps = directional_components(g)
    assert _as_set(comps) == {((0,), (1, 2, 3)), ((4,), (5, 6))}
    # ordered by edge count
    assert comps[0].T.size == 3


def test_empty_mask_gives_no_components(rng):
    g = random_graph(rng, 10, 0.3)
    mask = mask_community(EdgeMask.full(g), g, Community(range(10), range(10)))
    assert directional_components(g, mask) == []
    assert directional_components_frontier(g, mask) == []


def test_ordering_ties_by_smallest_node():
    g = DirectedGraph.from_edges([5, 0], [6, 1], n=7)
    comps = directional_components(g)
    assert [c.S[0] for c in comps] == [0, 5]


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 14), st.floats(0.02, 0.4), st.integers(0, 2**32 - 1))
def test_matches_double_cover_oracle(n, p, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, p)
    mask = EdgeMask.full(g)
    if g.m:
        mask._deactivate(g, rng.choice(g.m, g.m // 4, replace=False))
    want = double_cover_components(g, mask)
    fast = directional_components(g, mask)
    assert _as_set(fast) == want
    assert _as_set(directional_components_frontier(g, mask)) == want
    assert [c.key() for c in fast] == [c.key() for c in directional_components_frontier(g, mask)]


def test_decomposition_invariants(rng):
    for _ in range(20):
        g = random_graph(rng, 25, 0.06)
        mask = EdgeMask.full(g)
        comps = directional_components(g, mask)
        S_all = np.concatenate([c.S for c in comps])
        T_all = np.concatenate([c.T for c in comps])
        assert S_all.size == np.unique(S_all).size
        assert T_all.size == np.unique(T_all).size
        # every edge inside exactly one rectangle
        src, dst, _ = g.edges()
        hits = np.zeros(g.m, int)
        for c in comps:
            hits += np.isin(src, c.S) & np.isin(dst, c.T)
        assert np.all(hits == 1)
        for a in comps:
            assert is_d_connected(g, mask, a)
            for b in comps:
                if a is not b:
                    assert d_cut(g, mask, a, b) == 0


def test_is_d_connected_examples():
    g = DirectedGraph.from_edges([0], [1], n=3)
    m = EdgeMask.full(g)
    assert is_d_connected(g, m, Community([0], [1]))
    assert not is_d_connected(g, m, Community([0, 2], [1]))
    assert not is_d_connected(g, m, Community([2], [0]))
    with pytest.raises(ValueError):
        is_d_connected(g, m, Community([], [1]))


def test_is_d_connected_needs_alternating_path():
    # 0->2, 1->2, 1->3: all four D-connected through terminal 2 and source 1
    g = DirectedGraph.from_edges([0, 1, 1], [2, 2, 3], n=4)
    m = EdgeMask.full(g)
    assert is_d_connected(g, m, Community([0, 1], [2, 3]))
    # without 1->2 the rectangle splits into ({0},{2}) and ({1},{3})
    h = DirectedGraph.from_edges([0, 1], [2, 3], n=4)
    assert not is_d_connected(h, EdgeMask.full(h), Community([0, 1], [2, 3]))
