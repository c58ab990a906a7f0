"""Directed graph storage, edge masking and normalized Laplacian products.

The graph keeps every edge twice: grouped by source (CSR order, which also
defines the canonical edge id) and grouped by terminal (CSC order, carrying a
pointer back to the edge id).  The normalized value

    Q(i, j) = W(i, j) / sqrt(d_out(i) * d_in(j))

is precomputed per edge.  Degrees are frozen at construction; masking only
switches edges off.
"""
from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

__all__ = [
    "DirectedGraph",
    "DegreeVectors",
    "EdgeMask",
    "EdgeListError",
    "load_edge_list",
    "write_edge_list",
    "laplacian_matvec",
    "laplacian_rmatvec",
    "mask_community",
    "mask_node",
]


class EdgeListError(ValueError):
    """Raised for malformed edge-list input."""


class DegreeVectors(NamedTuple):
    out_deg: np.ndarray
    in_deg: np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def gather_ranges(indptr: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Concatenate ``arange(indptr[r], indptr[r + 1])`` for every ``r`` in ``rows``."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        return np.empty(0, dtype=np.int64)
    starts = indptr[rows]
    lens = indptr[rows + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    # offset of each segment inside the output, then shift back to starts
    shift = np.repeat(starts - (np.cumsum(lens) - lens), lens)
    return shift + np.arange(total, dtype=np.int64)


class DirectedGraph:
    """Immutable weighted directed graph without self-edges.

    Build with :meth:`from_edges` or :func:`load_edge_list`.  Node indices are
    dense in ``[0, n)``; ``labels[i]`` is the external label of node ``i``.
    """

    def __init__(self, n, out_ptr, out_dst, weight, labels):
        self.n = int(n)
        self.m = int(out_dst.size)
        self.out_ptr = _frozen(out_ptr)
        self.out_dst = _frozen(out_dst)
        self.weight = _frozen(weight)
        self.edge_src = _frozen(
            np.repeat(np.arange(self.n, dtype=np.int64), np.diff(out_ptr))
        )
        self.labels = _frozen(labels)

        # terminal grouping, each group sorted by source
        order = np.lexsort((self.edge_src, out_dst))
        self.in_eid = _frozen(order.astype(np.int64))
        self.in_src = _frozen(self.edge_src[order])
        counts = np.bincount(out_dst, minlength=self.n)
        self.in_ptr = _frozen(np.concatenate(([0], np.cumsum(counts))).astype(np.int64))
        self.in_count = _frozen(counts.astype(np.int64))
        self.out_count = _frozen(np.diff(out_ptr))

        self.out_deg = _frozen(
            np.bincount(self.edge_src, weights=weight, minlength=self.n).astype(np.float64))
        self.in_deg = _frozen(
            np.bincount(out_dst, weights=weight, minlength=self.n).astype(np.float64))
        self.total_weight = float(weight.sum())
        qval = weight / np.sqrt(self.out_deg[self.edge_src] * self.in_deg[out_dst])
        self.qval = _frozen(qval)
        self._index = None

    @classmethod
    def from_edges(cls, src, dst, weight=None, n=None, labels=None) -> "DirectedGraph":
        """Build a graph from parallel index arrays.

        Self-edges and zero-weight edges are dropped, duplicate ``(src, dst)``
        pairs are merged by summing their weights.
        """
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise ValueError("src and dst must have the same length")
        if weight is None:
            weight = np.ones(src.size, dtype=np.float64)
        else:
            weight = np.asarray(weight, dtype=np.float64).ravel()
            if weight.shape != src.shape:
                raise ValueError("weight must align with src/dst")
            if np.any(~np.isfinite(weight)) or np.any(weight < 0):
                raise ValueError("edge weights must be finite and nonnegative")
        if n is None:
            n = int(max(src.max(initial=-1), dst.max(initial=-1)) + 1)
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError("edge endpoint out of range [0, n)")
        keep = (src != dst) & (weight > 0)
        src, dst, weight = src[keep], dst[keep], weight[keep]

        order = np.lexsort((dst, src))
        src, dst, weight = src[order], dst[order], weight[order]
        if src.size:
            new = np.empty(src.size, dtype=bool)
            new[0] = True
            new[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
            starts = np.flatnonzero(new)
            weight = np.add.reduceat(weight, starts)
            src, dst = src[starts], dst[starts]
        counts = np.bincount(src, minlength=n)
        out_ptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        if labels is None:
            labels = np.array([str(i) for i in range(n)], dtype=object)
        else:
            labels = np.array([str(x) for x in labels], dtype=object)
            if labels.size != n:
                raise ValueError("need exactly one label per node")
        return cls(n, out_ptr, dst.astype(np.int64), weight.astype(np.float64), labels)

    # -- accessors -------------------------------------------------------

    @property
    def degrees(self) -> DegreeVectors:
        return DegreeVectors(self.out_deg, self.in_deg)

    def index_of(self, label) -> int:
        if self._index is None:
            self._index = {lab: i for i, lab in enumerate(self.labels)}
        return self._index[str(label)]

    def indices_of(self, labels: Iterable) -> np.ndarray:
        return np.array(sorted(self.index_of(x) for x in labels), dtype=np.int64)

    def edges(self):
        """Return ``(src, dst, weight)`` arrays in canonical edge-id order."""
        return self.edge_src, self.out_dst, self.weight

    def out_edges(self, i: int) -> np.ndarray:
        """Edge ids leaving node ``i``, sorted by terminal."""
        return np.arange(self.out_ptr[i], self.out_ptr[i + 1])

    def in_edges(self, j: int) -> np.ndarray:
        """Edge ids entering node ``j``, sorted by source."""
        return self.in_eid[self.in_ptr[j]:self.in_ptr[j + 1]]

    def __repr__(self):
        return f"DirectedGraph(n={self.n}, m={self.m})"


@dataclass
class EdgeMask:
    """Activity flags over the edges of one graph.

    ``active_out`` and ``active_in`` hold the weighted degrees restricted to
    active edges.  ``touches`` counts edge visits made by Laplacian products
    and community measures; it is instrumentation only.
    """

    active: np.ndarray
    active_count: int
    active_out: np.ndarray
    active_in: np.ndarray
    out_count: np.ndarray
    in_count: np.ndarray
    touches: int = 0

    @classmethod
    def full(cls, g: DirectedGraph) -> "EdgeMask":
        return cls(
            active=np.ones(g.m, dtype=bool),
            active_count=g.m,
            active_out=g.out_deg.copy(),
            active_in=g.in_deg.copy(),
            out_count=g.out_count.copy(),
            in_count=g.in_count.copy(),
        )

    def copy(self) -> "EdgeMask":
        return EdgeMask(
            self.active.copy(),
            self.active_count,
            self.active_out.copy(),
            self.active_in.copy(),
            self.out_count.copy(),
            self.in_count.copy(),
            self.touches,
        )

    def _deactivate(self, g: DirectedGraph, eids: np.ndarray) -> int:
        eids = eids[self.active[eids]]
        if eids.size == 0:
            return 0
        self.active[eids] = False
        self.active_count -= int(eids.size)
        w = g.weight[eids]
        src, dst = g.edge_src[eids], g.out_dst[eids]
        self.active_out -= np.bincount(src, weights=w, minlength=g.n)
        self.active_in -= np.bincount(dst, weights=w, minlength=g.n)
        self.out_count -= np.bincount(src, minlength=g.n)
        self.in_count -= np.bincount(dst, minlength=g.n)
        # exact zeros for nodes that lost every active edge
        self.active_out[self.out_count == 0] = 0.0
        self.active_in[self.in_count == 0] = 0.0
        return int(eids.size)


def _support_of(g: DirectedGraph, v):
    if isinstance(v, np.ndarray):
        if v.ndim != 1 or v.size != g.n:
            raise ValueError(f"expected a vector of length {g.n}, got shape {v.shape}")
        idx = np.flatnonzero(v)
        return idx, v[idx]
    idx = np.asarray(v.support, dtype=np.int64)
    vals = np.asarray(v.values, dtype=np.float64)
    if idx.shape != vals.shape:
        raise ValueError("support and values must align")
    if idx.size and (idx.min() < 0 or idx.max() >= g.n):
        raise ValueError(f"support index out of range for n={g.n}")
    return idx, vals


def _matvec(g, mask, idx, vals):
    pos = gather_ranges(g.in_ptr, idx)
    mask.touches += int(pos.size)
    eid = g.in_eid[pos]
    coef = g.qval[eid] * mask.active[eid] * np.repeat(vals, g.in_count[idx])
    return np.bincount(g.in_src[pos], weights=coef, minlength=g.n)


def _rmatvec(g, mask, idx, vals):
    eid = gather_ranges(g.out_ptr, idx)
    mask.touches += int(eid.size)
    coef = g.qval[eid] * mask.active[eid] * np.repeat(vals, g.out_count[idx])
    return np.bincount(g.out_dst[eid], weights=coef, minlength=g.n)


def laplacian_matvec(g: DirectedGraph, mask: EdgeMask, v) -> np.ndarray:
    """Dense ``Q v`` over active edges, visiting only in-edges of ``support(v)``.

    ``v`` is a length-``n`` array or any object with ``support``/``values``.
    """
    idx, vals = _support_of(g, v)
    return _matvec(g, mask, idx, vals)


def laplacian_rmatvec(g: DirectedGraph, mask: EdgeMask, u) -> np.ndarray:
    """Dense ``Q^T u`` over active edges, visiting only out-edges of ``support(u)``."""
    idx, vals = _support_of(g, u)
    return _rmatvec(g, mask, idx, vals)


def rectangle_edges(g: DirectedGraph, mask: EdgeMask, S, T) -> np.ndarray:
    """Ids of active edges ``(i, j)`` with ``i`` in ``S`` and ``j`` in ``T``."""
    S = np.asarray(S, dtype=np.int64)
    in_t = np.zeros(g.n, dtype=bool)
    in_t[np.asarray(T, dtype=np.int64)] = True
    eid = gather_ranges(g.out_ptr, S)
    mask.touches += int(eid.size)
    return eid[in_t[g.out_dst[eid]] & mask.active[eid]]


def mask_community(mask: EdgeMask, g: DirectedGraph, c) -> EdgeMask:
    """Deactivate every active edge inside the ``(c.S, c.T)`` rectangle, in place."""
    if len(c.S) == 0 or len(c.T) == 0:
        raise ValueError("community must have nonempty S and T")
    mask._deactivate(g, rectangle_edges(g, mask, c.S, c.T))
    return mask


def mask_node(mask: EdgeMask, g: DirectedGraph, node: int) -> EdgeMask:
    """Deactivate every edge incident to ``node``, in place."""
    eids = np.concatenate((g.out_edges(node), g.in_edges(node)))
    mask._deactivate(g, eids)
    return mask


# -- edge-list files -------------------------------------------------------

def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8"), True
    if isinstance(source, (list, tuple)):
        return io.StringIO("\n".join(source)), True
    return source, False


def load_edge_list(source) -> DirectedGraph:
    """Parse ``src dst [weight]`` lines into a :class:`DirectedGraph`.

    ``source`` may be a path, an open text stream or a list of lines.  Lines
    starting with ``#`` and blank lines are skipped.  Labels are remapped to
    dense indices in order of first appearance.
    """
    fh, close = _open_text(source)
    index: dict[str, int] = {}
    src, dst, wts = [], [], []
    try:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            tok = s.split()
            if len(tok) not in (2, 3):
                raise EdgeListError(f"line {lineno}: expected 2 or 3 fields, got {len(tok)}")
            if len(tok) == 3:
                try:
                    w = float(tok[2])
                except ValueError:
                    raise EdgeListError(f"line {lineno}: bad weight {tok[2]!r}") from None
                if not math.isfinite(w):
                    raise EdgeListError(f"line {lineno}: non-finite weight")
                if w < 0:
                    raise EdgeListError(f"line {lineno}: negative weight {w}")
            else:
                w = 1.0
            for lab in tok[:2]:
                if lab not in index:
                    index[lab] = len(index)
            src.append(index[tok[0]])
            dst.append(index[tok[1]])
            wts.append(w)
    finally:
        if close:
            fh.close()
    if not src:
        raise EdgeListError("edge list is empty")
    labels = np.empty(len(index), dtype=object)
    for lab, i in index.items():
        labels[i] = lab
    return DirectedGraph.from_edges(src, dst, wts, n=len(index), labels=labels)


def write_edge_list(g: DirectedGraph, dest, mask: EdgeMask | None = None, weights: bool = False):
    """Write the (active) edges of ``g`` in the edge-list format."""
    ids = np.arange(g.m) if mask is None else np.flatnonzero(mask.active)
    lab = g.labels
    lines = []
    for e in ids:
        s, t = lab[g.edge_src[e]], lab[g.out_dst[e]]
        lines.append(f"{s} {t} {float(g.weight[e])!r}\n" if weights else f"{s} {t}\n")
    text = "".join(lines)
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        dest.write(text)
