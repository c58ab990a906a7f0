"""Shared graph builders and dense reference implementations for the tests."""
import itertools

import numpy as np
import pytest

from dircomm.graph import DirectedGraph


def random_graph(rng, n, p=0.3, weighted=False):
    A = rng.random((n, n)) < p
    np.fill_diagonal(A, False)
    src, dst = np.nonzero(A)
    w = rng.uniform(0.5, 3.0, src.size) if weighted else None
    return DirectedGraph.from_edges(src, dst, w, n=n)


def dense_W(g, mask=None):
    W = np.zeros((g.n, g.n))
    src, dst, w = g.edges()
    keep = np.ones(g.m, bool) if mask is None else mask.active
    np.add.at(W, (src[keep], dst[keep]), w[keep])
    return W


def dense_Q(g, mask=None):
    """Q = D_r^{-1/2} W D_c^{-1/2} from frozen degrees, 0/0 = 0."""
    W = dense_W(g, mask)
    dr, dc = g.out_deg, g.in_deg
    ir = np.divide(1.0, np.sqrt(dr), out=np.zeros_like(dr), where=dr > 0)
    ic = np.divide(1.0, np.sqrt(dc), out=np.zeros_like(dc), where=dc > 0)
    return ir[:, None] * W * ic[None, :]


def double_cover_components(g, mask=None):
    """Directional components via networkx on the bipartite double cover."""
    import networkx as nx

    H = nx.Graph()
    src, dst, _ = g.edges()
    keep = np.ones(g.m, bool) if mask is None else mask.active
    H.add_edges_from((("s", int(i)), ("t", int(j))) for i, j in zip(src[keep], dst[keep]))
    out = set()
    for comp in nx.connected_components(H):
        S = tuple(sorted(x for tag, x in comp if tag == "s"))
        T = tuple(sorted(x for tag, x in comp if tag == "t"))
        out.add((S, T))
    return out


def dense_conductance(W, dr, dc, S, T):
    n = W.shape[0]
    Sb = np.setdiff1d(np.arange(n), S)
    Tb = np.setdiff1d(np.arange(n), T)
    cut = W[np.ix_(S, Tb)].sum() + W[np.ix_(Sb, T)].sum()
    denom = min(dr[S].sum() + dc[T].sum(), dr[Sb].sum() + dc[Tb].sum())
    return cut / denom


def brute_hard_threshold(z, rho):
    """Smallest l maximizing |z_l| - rho * l, ties by smaller index."""
    idx = np.flatnonzero(z)
    order = sorted(idx, key=lambda i: (-abs(z[i]), i))
    best_l, best = None, -np.inf
    for l in range(1, len(order) + 1):
        val = np.sqrt(sum(z[i] ** 2 for i in order[:l])) - rho * l
        if val > best:
            best, best_l = val, l
    keep = np.array(sorted(order[:best_l]))
    return keep, z[keep] / np.linalg.norm(z[keep])


def G_direct(z, x):
    a = np.abs(z)
    r = a[a > x] - x
    return np.sum(r**2) / (4 * x * x) + np.sum(r) / (2 * x)


def bisect_level(z, c, iters=120):
    """Root of G_z(d) = c by bisection on (0, max|z|)."""
    lo, hi = 0.0, float(np.max(np.abs(z)))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == 0.0 or G_direct(z, mid) > c:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def all_subsets(items):
    items = list(items)
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def toy_graph():
    """Complete community on {0..3}, noisy community on {4..9}, three cross edges."""
    A, B = list(range(4)), list(range(4, 10))
    E = [(i, j) for i in A for j in A if i != j]
    coin = np.random.default_rng(0)
    E += [(i, j) for i in B for j in B if i != j and coin.random() < 0.8]
    E += [(0, 5), (6, 1), (8, 2)]
    s, d = zip(*E)
    return DirectedGraph.from_edges(s, d, n=10), A, B


def disjoint_blocks(sizes, p=1.0, seed=0):
    """Directed graph made of dense diagonal blocks with no edges between them."""
    coin = np.random.default_rng(seed)
    src, dst, start = [], [], 0
    for k in sizes:
        for i in range(start, start + k):
            for j in range(start, start + k):
                if i != j and coin.random() < p:
                    src.append(i)
                    dst.append(j)
        start += k
    return DirectedGraph.from_edges(src, dst, n=start)
