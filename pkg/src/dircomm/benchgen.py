"""Planted directional-community benchmark graphs.

An approximation of the LFR construction for directed graphs.  In-degrees
follow a truncated power law, community sizes another one, and every in-edge
of a node comes from inside its community with probability ``1 - mu``.
Planted communities are symmetric (``S_k == T_k``) until the terminal labels
are shuffled.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .graph import DirectedGraph
from .measures import Community, Cover

__all__ = [
    "BenchParams",
    "GroundTruth",
    "GeneratorError",
    "PRESETS",
    "preset",
    "generate",
    "shuffle_terminal_labels",
    "power_law_sample",
]

PRESETS = {"big": (40, 200), "small": (20, 100)}


class GeneratorError(ValueError):
    """Parameters cannot be realized."""


@dataclass(frozen=True)
class BenchParams:
    n: int = 1000
    k: float = 20.0
    mu: float = 0.1
    tau1: float = -2.0
    tau2: float = -1.0
    k_max: int = 50
    size_min: int = 40
    size_max: int = 200
    shuffle: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 1 <= self.size_min <= self.size_max <= self.n:
            raise ValueError("need 1 <= size_min <= size_max <= n")
        if not 0 <= self.mu < 1:
            raise ValueError("mu must lie in [0, 1)")
        if not 1 <= self.k <= self.k_max:
            raise ValueError("need 1 <= k <= k_max")
        if self.k_max >= self.n:
            raise ValueError("k_max must be below n")


def preset(name: str, **kw) -> BenchParams:
    lo, hi = PRESETS[name]
    return BenchParams(size_min=lo, size_max=hi, **kw)


@dataclass
class GroundTruth:
    """Planted cover before and after the terminal shuffle."""

    planted: Cover
    cover: Cover
    permutation: np.ndarray

    @property
    def n(self) -> int:
        return self.cover.n

    def __len__(self):
        return len(self.cover)


def _pl_mean(lo, hi, tau):
    # mean of density proportional to x**tau on [lo, hi]
    if tau == -1:
        return (hi - lo) / np.log(hi / lo)
    if tau == -2:
        return np.log(hi / lo) / (1 / lo - 1 / hi)
    a, b = tau + 1, tau + 2
    return (a / b) * (hi**b - lo**b) / (hi**a - lo**a)


def power_law_sample(rng, size, lo, hi, tau):
    """Inverse-CDF draws from a density proportional to ``x**tau`` on ``[lo, hi]``."""
    u = rng.random(size)
    if tau == -1:
        return lo * (hi / lo) ** u
    a = tau + 1
    return (lo**a + u * (hi**a - lo**a)) ** (1 / a)


def _in_degrees(p: BenchParams, rng) -> np.ndarray:
    hi = float(p.k_max)
    if p.k >= hi:
        return np.full(p.n, p.k_max, dtype=np.int64)
    # choose the lower cut so the continuous law has mean k
    f = lambda lo: _pl_mean(lo, hi, p.tau1) - p.k
    lo = p.k if f(1e-9) > 0 else brentq(f, 1e-9, p.k)
    x = power_law_sample(rng, p.n, lo, hi, p.tau1)
    # unbiased stochastic rounding
    d = np.floor(x + rng.random(p.n)).astype(np.int64)
    return np.clip(d, 1, p.k_max)


def _community_sizes(p: BenchParams, rng, retries=1000) -> np.ndarray:
    lo, hi = p.size_min, p.size_max
    for _ in range(retries):
        sizes = []
        total = 0
        while total < p.n:
            s = int(round(power_law_sample(rng, 1, lo, hi, p.tau2)[0]))
            sizes.append(s)
            total += s
        # trim the last one
        sizes[-1] -= total - p.n
        if sizes[-1] >= lo:
            return np.array(sizes, dtype=np.int64)
    raise GeneratorError("could not partition n nodes into sizes within bounds")


def _assign(need: np.ndarray, sizes: np.ndarray, rng) -> np.ndarray:
    """Community of every node; large internal degrees are placed first."""
    free = sizes.copy()
    memb = np.empty(need.size, dtype=np.int64)
    for node in np.lexsort((rng.random(need.size), -need)):
        ok = np.flatnonzero((sizes > need[node]) & (free > 0))
        if ok.size == 0:
            ok = np.flatnonzero(free == free.max())
        c = int(rng.choice(ok))
        memb[node] = c
        free[c] -= 1
    return memb


def _wire(deg, block_start, block_size, internal, n, rng, retries=30):
    """Draw one source per in-edge, resampling duplicate pairs."""
    dst = np.repeat(np.arange(n, dtype=np.int64), deg)
    inside = internal
    a = block_start[dst]
    s = block_size[dst]

    def draw(sel):
        out = np.empty(sel.size, dtype=np.int64)
        di, ii = dst[sel], inside[sel]
        ai, si = a[sel], s[sel]
        # internal: uniform over the block without the terminal itself
        x = np.floor(rng.random(sel.size) * np.where(ii, si - 1, n - si)).astype(np.int64)
        src_in = ai + x
        src_in += src_in >= di
        # external: uniform over nodes outside the block
        src_out = np.where(x < ai, x, x + si)
        out[:] = np.where(ii, src_in, src_out)
        return out

    src = draw(np.arange(dst.size))
    for _ in range(retries):
        key = dst * n + src
        order = np.argsort(key, kind="stable")
        dup = np.zeros(key.size, dtype=bool)
        dup[order[1:]] = key[order[1:]] == key[order[:-1]]
        bad = np.flatnonzero(dup)
        if bad.size == 0:
            return src, dst
        src[bad] = draw(bad)
    # nearly saturated terminals: exact draws without replacement
    for j in np.unique(dst[bad]):
        rows = np.flatnonzero(dst == j)
        lo, size = int(block_start[j]), int(block_size[j])
        block = np.setdiff1d(np.arange(lo, lo + size), [j])
        outside = np.r_[np.arange(lo), np.arange(lo + size, n)]
        r_in, r_out = rows[inside[rows]], rows[~inside[rows]]
        src[r_in] = rng.choice(block, size=r_in.size, replace=False)
        src[r_out] = rng.choice(outside, size=r_out.size, replace=False)
    return src, dst


def generate(params: BenchParams) -> tuple[DirectedGraph, GroundTruth]:
    """Sample a benchmark graph and its planted cover (shuffled if requested)."""
    rng = np.random.default_rng(params.rng_seed)
    p = params
    deg = _in_degrees(p, rng)
    sizes = _community_sizes(p, rng)
    if sizes.max() <= 1:
        raise GeneratorError("communities need at least two nodes")
    need = np.ceil((1 - p.mu) * deg).astype(np.int64)
    memb = _assign(need, sizes, rng)

    # positional layout: communities are contiguous blocks, then relabelled
    order = np.lexsort((rng.random(p.n), memb))
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    pos_memb = memb[order]
    pos_deg = deg[order]
    block_start = starts[pos_memb]
    block_size = sizes[pos_memb]

    n_int = rng.binomial(pos_deg, 1 - p.mu)
    n_int = np.minimum(n_int, block_size - 1)
    n_ext = np.minimum(pos_deg - n_int, p.n - block_size)
    deg_eff = n_int + n_ext
    offsets = np.concatenate(([0], np.cumsum(deg_eff)[:-1]))
    rank = np.arange(int(deg_eff.sum())) - np.repeat(offsets, deg_eff)
    internal = rank < np.repeat(n_int, deg_eff)
    src, dst = _wire(deg_eff, block_start, block_size, internal, p.n, rng)

    # position -> node id
    node_of = order
    g = DirectedGraph.from_edges(node_of[src], node_of[dst], n=p.n)
    planted = Cover(
        [Community.build(g, np.flatnonzero(memb == c), np.flatnonzero(memb == c))
         for c in range(sizes.size)],
        p.n, ground_truth=True)
    truth = GroundTruth(planted, planted, np.arange(p.n))
    if p.shuffle:
        g, truth = shuffle_terminal_labels(g, truth, int(rng.integers(2**63 - 1)))
    return g, truth


def shuffle_terminal_labels(g: DirectedGraph, truth: GroundTruth | None, rng_seed,
                            permutation: np.ndarray | None = None):
    """Relabel every terminal endpoint by a uniform permutation ``pi``.

    Edge ``(i, j)`` becomes ``(i, pi(j))``; edges that become self-edges are
    dropped.  The terminal cover is mapped to ``pi(T_k)``.
    """
    if permutation is None:
        permutation = np.random.default_rng(rng_seed).permutation(g.n)
    pi = np.asarray(permutation, dtype=np.int64)
    if pi.shape != (g.n,) or not np.array_equal(np.sort(pi), np.arange(g.n)):
        raise ValueError("permutation must be a bijection of range(n)")
    src, dst, w = g.edges()
    h = DirectedGraph.from_edges(src, pi[dst], w, n=g.n, labels=g.labels)
    if truth is None:
        return h, None
    comps = [Community.build(h, c.S, pi[c.T]) for c in truth.cover.communities]
    planted = Cover([Community.build(h, c.S, c.T) for c in truth.planted.communities],
                    truth.planted.n, ground_truth=True)
    out = GroundTruth(planted, Cover(comps, truth.cover.n, ground_truth=True),
                      pi[truth.permutation])
    return h, out


def with_seed(params: BenchParams, seed: int) -> BenchParams:
    return replace(params, rng_seed=seed)
