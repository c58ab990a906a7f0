"""Directional components and D-connectivity.

A directional component is a connected component of the bipartite double
cover of the graph: one copy of every node as a source, one as a terminal,
and an undirected link ``(i_source, j_terminal)`` for every active edge.
"""
from __future__ import annotations

from collections import deque

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .graph import DirectedGraph, EdgeMask, rectangle_edges
from .measures import Community

__all__ = [
    "directional_components",
    "directional_components_frontier",
    "component_edge_labels",
    "is_d_connected",
]


def _cover_labels(n_left, n_right, left, right):
    nodes = n_left + n_right
    adj = sp.coo_matrix(
        (np.ones(left.size, dtype=np.int8), (left, n_left + right)), shape=(nodes, nodes)
    )
    return connected_components(adj, directed=False)[1]


def component_edge_labels(g: DirectedGraph, mask: EdgeMask) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(edge_ids, raw_label)`` for active edges; equal labels share a component."""
    eids = np.flatnonzero(mask.active)
    if eids.size == 0:
        return eids, eids
    lab = _cover_labels(g.n, g.n, g.edge_src[eids], g.out_dst[eids])
    return eids, lab[g.edge_src[eids]]


def _order_components(g, groups):
    # groups: list of (edge_count, S, T)
    groups.sort(key=lambda x: (-x[0], int(min(x[1][0], x[2][0]))))
    return [Community.build(g, S, T) for _, S, T in groups]


def directional_components(g: DirectedGraph, mask: EdgeMask | None = None) -> list[Community]:
    """Decompose the active edges of ``g`` into directional components.

    Components are ordered by edge count (descending), ties by the smallest
    node index they contain.  Nodes without active edges belong to none.
    """
    if mask is None:
        mask = EdgeMask.full(g)
    eids, lab = component_edge_labels(g, mask)
    if eids.size == 0:
        return []
    _, lab = np.unique(lab, return_inverse=True)
    order = np.argsort(lab, kind="stable")
    lab_sorted = lab[order]
    cuts = np.flatnonzero(np.diff(lab_sorted)) + 1
    groups = []
    for part in np.split(eids[order], cuts):
        groups.append((part.size, np.unique(g.edge_src[part]), np.unique(g.out_dst[part])))
    return _order_components(g, groups)


def directional_components_frontier(g: DirectedGraph, mask: EdgeMask | None = None) -> list[Community]:
    """Grow components by alternately adding terminals of new sources and
    sources of new terminals, consuming edges as they are used."""
    if mask is None:
        mask = EdgeMask.full(g)
    used = ~mask.active.copy()
    remaining_out = mask.out_count.copy()
    groups = []
    for seed in range(g.n):
        if remaining_out[seed] == 0:
            continue
        S, T = {seed}, set()
        new_s, new_t = deque([seed]), deque()
        n_edges = 0
        while new_s or new_t:
            while new_s:
                i = new_s.popleft()
                for e in g.out_edges(i):
                    if used[e]:
                        continue
                    used[e] = True
                    remaining_out[i] -= 1
                    n_edges += 1
                    j = int(g.out_dst[e])
                    if j not in T:
                        T.add(j)
                        new_t.append(j)
            while new_t:
                j = new_t.popleft()
                for e in g.in_edges(j):
                    if used[e]:
                        continue
                    used[e] = True
                    i = int(g.edge_src[e])
                    remaining_out[i] -= 1
                    n_edges += 1
                    if i not in S:
                        S.add(i)
                        new_s.append(i)
        groups.append((n_edges, np.array(sorted(S)), np.array(sorted(T))))
    return _order_components(g, groups)


def is_d_connected(g: DirectedGraph, mask: EdgeMask, c: Community) -> bool:
    """True iff the active edges inside ``(S, T)`` form a single directional
    component covering every node of ``S`` and ``T``."""
    if c.S.size == 0 or c.T.size == 0:
        raise ValueError("S and T must be nonempty")
    eids = rectangle_edges(g, mask, c.S, c.T)
    if eids.size == 0:
        return False
    left = np.searchsorted(c.S, g.edge_src[eids])
    right = np.searchsorted(c.T, g.out_dst[eids])
    lab = _cover_labels(c.S.size, c.T.size, left, right)
    return bool(np.all(lab == lab[0]))
