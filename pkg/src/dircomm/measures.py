"""Quality measures for directional communities.

Volumes always use the degrees frozen in the graph; cut terms only count
edges that are still active in the mask.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .graph import DirectedGraph, EdgeMask, rectangle_edges

__all__ = [
    "Community",
    "Cover",
    "DegenerateCommunity",
    "d_cut",
    "internal_weight",
    "conductance",
    "conductance_or_one",
    "penalized_conductance",
    "size_omega",
    "commonality",
    "overlapping_nmi",
    "cover_accuracy",
    "accuracy_report",
]


class DegenerateCommunity(ValueError):
    """A measure is undefined for this community (zero denominator)."""


def _as_index(x) -> np.ndarray:
    return np.unique(np.asarray(list(x) if isinstance(x, (set, frozenset)) else x, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class Community:
    """Directional community ``C(S, T)`` over node indices.

    Use :meth:`build` to attach a graph and cache ``vol_S`` (sum of
    out-degrees over ``S``) and ``vol_T`` (sum of in-degrees over ``T``).
    """

    S: np.ndarray
    T: np.ndarray
    vol_S: float | None = None
    vol_T: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "S", _as_index(self.S))
        object.__setattr__(self, "T", _as_index(self.T))

    @classmethod
    def build(cls, g: DirectedGraph, S, T) -> "Community":
        S, T = _as_index(S), _as_index(T)
        if (S.size and (S[0] < 0 or S[-1] >= g.n)) or (T.size and (T[0] < 0 or T[-1] >= g.n)):
            raise ValueError("community node index out of range")
        return cls(S, T, float(g.out_deg[S].sum()), float(g.in_deg[T].sum()))

    def key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return tuple(self.S.tolist()), tuple(self.T.tolist())

    def __eq__(self, other):
        if not isinstance(other, Community):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Community(|S|={self.S.size}, |T|={self.T.size})"


@dataclass
class Cover:
    """A collection of (possibly overlapping) communities over ``n`` nodes."""

    communities: list[Community]
    n: int
    ground_truth: bool = False

    def source_sets(self) -> list[np.ndarray]:
        return [c.S for c in self.communities]

    def terminal_sets(self) -> list[np.ndarray]:
        return [c.T for c in self.communities]

    def __len__(self):
        return len(self.communities)


def _vols(g: DirectedGraph, c: Community) -> tuple[float, float]:
    if c.vol_S is None or c.vol_T is None:
        return float(g.out_deg[c.S].sum()), float(g.in_deg[c.T].sum())
    return c.vol_S, c.vol_T


def _rect_weight(g, mask, S, T) -> float:
    if len(S) == 0 or len(T) == 0:
        return 0.0
    return float(g.weight[rectangle_edges(g, mask, S, T)].sum())


def internal_weight(g: DirectedGraph, mask: EdgeMask, c: Community) -> float:
    """Total active weight inside the ``(S, T)`` rectangle."""
    return _rect_weight(g, mask, c.S, c.T)


def d_cut(g: DirectedGraph, mask: EdgeMask, c1: Community, c2: Community) -> float:
    """Directional cut: active weight ``S1 -> T2`` plus ``S2 -> T1``."""
    return _rect_weight(g, mask, c1.S, c2.T) + _rect_weight(g, mask, c2.S, c1.T)


def _cut_to_complement(g, mask, c) -> float:
    # d-Cut(C(S,T), C(S^c,T^c)) without materializing complements
    inner = internal_weight(g, mask, c)
    out_s = float(mask.active_out[c.S].sum())
    in_t = float(mask.active_in[c.T].sum())
    return max(out_s - inner, 0.0) + max(in_t - inner, 0.0)


def conductance(g: DirectedGraph, mask: EdgeMask, c: Community) -> float:
    """Directional conductance of ``c``; raises :class:`DegenerateCommunity`
    when both volume sums in the denominator's ``min`` vanish."""
    vs, vt = _vols(g, c)
    own = vs + vt
    rest = 2.0 * g.total_weight - own
    denom = min(own, rest)
    if denom <= 0:
        raise DegenerateCommunity("conductance denominator is zero")
    return min(_cut_to_complement(g, mask, c) / denom, 1.0)


def conductance_or_one(g: DirectedGraph, mask: EdgeMask, c: Community) -> float:
    try:
        return conductance(g, mask, c)
    except DegenerateCommunity:
        return 1.0


def size_omega(c: Community, omega: float = 1.0) -> float:
    """Community size ``|S| + omega * |T|``."""
    if c.S.size == 0 or c.T.size == 0:
        raise ValueError("S and T must be nonempty")
    return float(c.S.size + omega * c.T.size)


def penalized_conductance(g: DirectedGraph, mask: EdgeMask, c: Community,
                          eta: float, omega: float = 1.0) -> float:
    """Cut over ``Vol(S) + Vol(T)`` plus the size penalty ``2 eta SZ_omega``.

    Unlike :func:`conductance` the denominator is not the min-form.
    """
    vs, vt = _vols(g, c)
    if vs + vt <= 0:
        raise DegenerateCommunity("Vol(S) + Vol(T) is zero")
    return _cut_to_complement(g, mask, c) / (vs + vt) + 2.0 * eta * size_omega(c, omega)


def commonality(c: Community) -> float:
    """Jaccard overlap of the source and terminal parts."""
    union = np.union1d(c.S, c.T).size
    if union == 0:
        raise ValueError("empty community")
    return float(np.intersect1d(c.S, c.T, assume_unique=True).size / union)


# -- overlapping normalized mutual information ----------------------------

def _h(p):
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = -p[pos] * np.log2(p[pos])
    return out


def _indicator(sets: Sequence[np.ndarray], n: int) -> sp.csr_matrix:
    rows = np.repeat(np.arange(len(sets)), [len(s) for s in sets])
    cols = np.concatenate([np.asarray(s, dtype=np.int64) for s in sets]) if sets else np.empty(0, np.int64)
    if cols.size and (cols.min() < 0 or cols.max() >= n):
        raise ValueError("cover refers to nodes outside the universe")
    return sp.csr_matrix((np.ones(cols.size), (rows, cols)), shape=(len(sets), n))


def _conditional(sx, sy, inter, n):
    """Rows: H(X_k | Y) under the LFK admissibility rule; also H(X_k)."""
    a = inter / n
    b = (sx[:, None] - inter) / n
    c = (sy[None, :] - inter) / n
    d = np.clip(1.0 - a - b - c, 0.0, 1.0)
    px, py = sx / n, sy / n
    hx = _h(px) + _h(1 - px)
    hy = _h(py) + _h(1 - py)
    joint = _h(a) + _h(b) + _h(c) + _h(d)
    cond = joint - hy[None, :]
    ok = _h(a) + _h(d) > _h(b) + _h(c)
    cond = np.where(ok, cond, hx[:, None])
    best = cond.min(axis=1) if cond.shape[1] else hx.copy()
    return np.minimum(best, hx), hx


def overlapping_nmi(X: Sequence, Y: Sequence, n: int, variant: str = "max") -> float:
    """Normalized mutual information between two overlapping covers.

    ``variant="max"`` normalizes the mutual information by the larger cover
    entropy, ``"sum"`` by their mean, and ``"lfk"`` uses the original
    per-community normalized conditional entropies.  Empty sets are ignored.
    """
    X = [np.unique(np.asarray(s, dtype=np.int64)) for s in X if len(s)]
    Y = [np.unique(np.asarray(s, dtype=np.int64)) for s in Y if len(s)]
    if not X or not Y:
        raise ValueError("covers must contain at least one nonempty set")
    if n <= 0:
        raise ValueError("n must be positive")
    ix, iy = _indicator(X, n), _indicator(Y, n)
    inter = (ix @ iy.T).toarray()
    sx = np.asarray(ix.sum(axis=1)).ravel()
    sy = np.asarray(iy.sum(axis=1)).ravel()
    hxy, hx = _conditional(sx, sy, inter, n)
    hyx, hy = _conditional(sy, sx, inter.T, n)

    if variant == "lfk":
        # a zero-entropy community carries no information: ratio counted as 1
        rx = np.divide(hxy, hx, out=np.ones_like(hx), where=hx > 0)
        ry = np.divide(hyx, hy, out=np.ones_like(hy), where=hy > 0)
        return float(np.clip(1.0 - 0.5 * (rx.mean() + ry.mean()), 0.0, 1.0))

    HX, HY = hx.sum(), hy.sum()
    mi = 0.5 * (HX - hxy.sum() + HY - hyx.sum())
    if variant == "max":
        norm = max(HX, HY)
    elif variant == "sum":
        norm = 0.5 * (HX + HY)
    else:
        raise ValueError(f"unknown NMI variant {variant!r}")
    if norm <= 0:
        same = sorted(map(tuple, X)) == sorted(map(tuple, Y))
        return 1.0 if same else 0.0
    return float(np.clip(mi / norm, 0.0, 1.0))


def accuracy_report(found: Cover, truth: Cover, variant: str = "max") -> tuple[float, float, float]:
    """Return ``(source_nmi, terminal_nmi, mean)`` for two directional covers."""
    if len(found) == 0 or len(truth) == 0:
        raise ValueError("empty cover")
    if found.n != truth.n:
        raise ValueError("covers are over different node universes")
    s = overlapping_nmi(found.source_sets(), truth.source_sets(), truth.n, variant)
    t = overlapping_nmi(found.terminal_sets(), truth.terminal_sets(), truth.n, variant)
    return s, t, 0.5 * (s + t)


def cover_accuracy(found: Cover, truth: Cover, variant: str = "max") -> float:
    """Mean of source-part and terminal-part overlapping NMI."""
    return accuracy_report(found, truth, variant)[2]
