"""Rank-one regularized SVD of the normalized Laplacian.

Two penalties are supported.  The L0 form

    max  u'Qv - eta * (|u|_0 + omega * |v|_0),   |u|_2 <= 1, |v|_2 <= 1

is solved by alternating hard-threshold updates, the elastic-net form

    max  u'Qv   s.t. (1-alpha)|u|_2^2 + alpha|u|_1 <= c1  (same for v, beta, c2)

by alternating soft-threshold updates.  Each half-step solves its subproblem
exactly, so the objective never decreases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import DirectedGraph, EdgeMask, _matvec, _rmatvec, rectangle_edges
from .measures import Community

__all__ = [
    "SparseUnitVector",
    "L0Params",
    "ENParams",
    "RsvdResult",
    "hard_threshold_solve",
    "soft_threshold",
    "threshold_function",
    "en_threshold_level",
    "en_solve",
    "l0_rsvd",
    "en_rsvd",
    "principal_singular_value",
]


@dataclass(frozen=True, eq=False)
class SparseUnitVector:
    """Sparse vector stored as sorted support indices plus aligned values."""

    support: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.support, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape:
            raise ValueError("support and values must align")
        order = np.argsort(idx, kind="stable")
        idx, val = idx[order], val[order]
        if idx.size > 1 and np.any(np.diff(idx) == 0):
            raise ValueError("duplicate support index")
        keep = val != 0
        object.__setattr__(self, "support", idx[keep])
        object.__setattr__(self, "values", val[keep])

    @classmethod
    def from_dense(cls, x: np.ndarray) -> "SparseUnitVector":
        idx = np.flatnonzero(x)
        return cls(idx, x[idx])

    @classmethod
    def indicator(cls, nodes, weights=None) -> "SparseUnitVector":
        """Normalized indicator of ``nodes`` (optionally weighted)."""
        nodes = np.unique(np.asarray(nodes, dtype=np.int64))
        w = np.ones(nodes.size) if weights is None else np.asarray(weights, dtype=np.float64)
        return cls(nodes, w / np.linalg.norm(w))

    @classmethod
    def empty(cls) -> "SparseUnitVector":
        return cls(np.empty(0, np.int64), np.empty(0))

    @property
    def nnz(self) -> int:
        return int(self.support.size)

    @property
    def is_empty(self) -> bool:
        return self.support.size == 0

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.support] = self.values
        return out

    def dot(self, z: np.ndarray) -> float:
        return float(self.values @ z[self.support])

    def __repr__(self):
        return f"SparseUnitVector(nnz={self.nnz}, norm={self.norm():.6g})"


@dataclass(frozen=True)
class L0Params:
    eta: float
    omega: float = 1.0

    def __post_init__(self):
        if not self.eta > 0 or not self.omega > 0:
            raise ValueError("eta and omega must be positive")


@dataclass(frozen=True)
class ENParams:
    alpha: float
    beta: float | None = None
    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, "beta", self.alpha)
        for a in (self.alpha, self.beta):
            if not 0 <= a < 1:
                raise ValueError("alpha and beta must lie in [0, 1)")
        if not self.c1 > 0 or not self.c2 > 0:
            raise ValueError("c1 and c2 must be positive")


@dataclass
class RsvdResult:
    """Output of an alternating solver.

    ``trace`` holds the objective after every half-step (and after any
    connectivity pruning step); ``objective`` is its last entry.
    """

    u: SparseUnitVector
    v: SparseUnitVector
    objective: float
    iterations: int
    converged: bool
    degenerate: bool = False
    trace: list[float] = field(default_factory=list)

    def community(self, g: DirectedGraph) -> Community:
        return Community.build(g, self.u.support, self.v.support)


# -- single-vector subproblems ---------------------------------------------

def _sorted_magnitudes(z: np.ndarray):
    """Nonzero positions of ``z`` ordered by decreasing magnitude, ties by index."""
    idx = np.flatnonzero(z)
    a = np.abs(z[idx])
    order = np.lexsort((idx, -a))
    return idx[order], a[order]


def hard_threshold_solve(z: np.ndarray, rho: float) -> SparseUnitVector:
    """Maximize ``u'z - rho * |u|_0`` over ``|u|_2 <= 1``.

    Keeps the ``l`` largest-magnitude entries of ``z``, where ``l`` is the
    smallest integer with ``|z|_(l+1) <= sqrt(rho^2 + 2 rho |z_l|)``, and
    normalizes.  Ties in magnitude keep the smaller index.  An all-zero ``z``
    gives an empty vector.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    z = np.asarray(z, dtype=np.float64)
    idx, a = _sorted_magnitudes(z)
    if idx.size == 0:
        return SparseUnitVector.empty()
    norms = np.sqrt(np.cumsum(a * a))
    nxt = np.append(a[1:], 0.0)
    ok = nxt <= np.sqrt(rho * rho + 2.0 * rho * norms)
    l = int(np.argmax(ok)) + 1  # ok[-1] is always true
    keep = idx[:l]
    return SparseUnitVector(keep, z[keep] / norms[l - 1])


def soft_threshold(z: np.ndarray, d: float) -> np.ndarray:
    """``sign(z) * max(|z| - d, 0)``."""
    if d < 0:
        raise ValueError("threshold must be nonnegative")
    z = np.asarray(z, dtype=np.float64)
    return np.sign(z) * np.maximum(np.abs(z) - d, 0.0)


def threshold_function(z: np.ndarray, x: float) -> float:
    """The decreasing function whose level set fixes the soft threshold:

    ``sum_{|z_i| > x} (|z_i| - x)^2 / (4 x^2) + (|z_i| - x) / (2 x)``.
    """
    if not x > 0:
        raise ValueError("x must be positive")
    a = np.abs(np.asarray(z, dtype=np.float64))
    r = a[a > x] - x
    return float((r @ r) / (4.0 * x * x) + r.sum() / (2.0 * x))


def en_threshold_level(z: np.ndarray, c: float) -> float:
    """Solve ``threshold_function(z, d) = c`` for ``d > 0``.

    One pass over the sorted magnitudes with running sums locates the number
    ``k`` of entries above the threshold; ``d`` then has the closed form
    ``sqrt(sum_{i<=k} |z|_(i)^2 / (4c + k))``.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    _, a = _sorted_magnitudes(np.asarray(z, dtype=np.float64))
    p = a.size
    if p == 0:
        raise ValueError("z is all zero")
    s2 = np.cumsum(a * a)
    if p > 1:
        # G at x = a[k-1] with the k-1 larger entries active; the linear
        # terms cancel, leaving S2 / (4 x^2) - (k - 1) / 4
        k = np.arange(2, p + 1, dtype=np.float64)
        ak = a[1:]
        G = s2[:-1] / (4.0 * ak * ak) - (k - 1) / 4.0
        over = np.flatnonzero(G > c)
        khat = int(over[0]) + 1 if over.size else p
    else:
        khat = 1
    return math.sqrt(s2[khat - 1] / (4.0 * c + khat))


def en_solve(z: np.ndarray, alpha: float, c: float = 1.0) -> SparseUnitVector:
    """Maximize ``u'z`` subject to ``(1-alpha)|u|_2^2 + alpha|u|_1 <= c``.

    The maximizer is a scaled soft-thresholding of ``z`` and lies on the
    constraint boundary.  ``alpha = 0`` reduces to ``sqrt(c) z / |z|``.
    """
    z = np.asarray(z, dtype=np.float64)
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    if not c > 0:
        raise ValueError("c must be positive")
    idx = np.flatnonzero(z)
    if idx.size == 0:
        return SparseUnitVector.empty()
    zs = z[idx]
    level = c * (1.0 - alpha) / (alpha * alpha) if alpha * alpha > 0 else math.inf
    if not math.isfinite(level):
        # alpha is zero or so small that the l1 term is below rounding
        return SparseUnitVector(idx, math.sqrt(c) * zs / np.linalg.norm(zs))
    d = en_threshold_level(zs, level)
    s = soft_threshold(zs, d)
    return SparseUnitVector(idx, alpha / (2.0 * d * (1.0 - alpha)) * s)


# -- alternating solvers ---------------------------------------------------

def _inf_diff(a: SparseUnitVector | None, b: SparseUnitVector) -> float:
    if a is None:
        return math.inf
    idx = np.union1d(a.support, b.support)
    va = np.zeros(idx.size)
    vb = np.zeros(idx.size)
    va[np.searchsorted(idx, a.support)] = a.values
    vb[np.searchsorted(idx, b.support)] = b.values
    return float(np.max(np.abs(va - vb))) if idx.size else 0.0


def _as_start(g: DirectedGraph, v0) -> SparseUnitVector:
    if isinstance(v0, SparseUnitVector):
        v = v0
    else:
        v = SparseUnitVector.from_dense(np.asarray(v0, dtype=np.float64))
    if v.is_empty:
        raise ValueError("starting vector is zero")
    if v.support[-1] >= g.n:
        raise ValueError("starting vector longer than the graph")
    return v


def _prune_to_best_piece(g, mask, u, v, cost):
    """Restrict ``(u, v)`` to the D-connected piece of their rectangle with the
    best normalized objective.  Returns ``None`` when already D-connected."""
    from .dcomp import _cover_labels

    eids = rectangle_edges(g, mask, u.support, v.support)
    if eids.size == 0:
        return None
    left = np.searchsorted(u.support, g.edge_src[eids])
    right = np.searchsorted(v.support, g.out_dst[eids])
    ns, nt = u.support.size, v.support.size
    lab = _cover_labels(ns, nt, left, right)
    if np.all(lab == lab[0]):
        return None
    contrib = g.qval[eids] * u.values[left] * v.values[right]
    best = None
    for k in np.unique(lab[left]):
        S_loc = np.flatnonzero(lab[:ns] == k)
        T_loc = np.flatnonzero(lab[ns:] == k)
        nu = np.linalg.norm(u.values[S_loc])
        nv = np.linalg.norm(v.values[T_loc])
        if nu == 0 or nv == 0:
            continue
        val = contrib[lab[left] == k].sum() / (nu * nv) - cost(S_loc.size, T_loc.size)
        if best is None or val > best[0]:
            best = (val, S_loc, T_loc, nu, nv)
    if best is None:
        return None
    val, S_loc, T_loc, nu, nv = best
    u_new = SparseUnitVector(u.support[S_loc], u.values[S_loc] / nu)
    v_new = SparseUnitVector(v.support[T_loc], v.values[T_loc] / nv)
    return u_new, v_new, float(val)


def _alternate(g, mask, v, update_u, update_v, cost, tol, max_iter, prune, max_prunes=3):
    trace: list[float] = []
    u = None
    u_prev = v_prev = None
    converged = False
    prunes = 0
    it = 0
    while it < max_iter:
        it += 1
        z = _matvec(g, mask, v.support, v.values)
        u_new = update_u(z)
        if u_new.is_empty:
            return RsvdResult(u_new, v, -math.inf, it, False, True, trace)
        trace.append(u_new.dot(z) - cost(u_new.nnz, v.nnz))
        z = _rmatvec(g, mask, u_new.support, u_new.values)
        v_new = update_v(z)
        if v_new.is_empty:
            return RsvdResult(u_new, v_new, -math.inf, it, False, True, trace)
        trace.append(v_new.dot(z) - cost(u_new.nnz, v_new.nnz))
        delta = max(_inf_diff(u_prev, u_new), _inf_diff(v_prev, v_new))
        u, v = u_new, v_new
        u_prev, v_prev = u, v
        if delta < tol or it == max_iter:
            converged = delta < tol
            if prune:
                pruned = _prune_to_best_piece(g, mask, u, v, cost)
                if pruned is not None:
                    u, v, val = pruned
                    trace.append(val)
                    prunes += 1
                    if prunes <= max_prunes and it < max_iter:
                        u_prev, v_prev = u, v
                        converged = False
                        continue
            break
    return RsvdResult(u, v, trace[-1], it, converged, False, trace)


def l0_rsvd(g: DirectedGraph, mask: EdgeMask, params: L0Params, v0,
            tol: float = 1e-8, max_iter: int = 200, prune: bool = True) -> RsvdResult:
    """Alternating hard-threshold solver for the L0-penalized rank-one SVD.

    When the converged supports split into several D-connected pieces, the
    best piece is kept (which never lowers the objective) and iteration
    resumes from it, so the returned pair is D-connected.
    """
    eta, omega = params.eta, params.omega
    v = _as_start(g, v0)
    return _alternate(
        g, mask, v,
        update_u=lambda z: hard_threshold_solve(z, eta),
        update_v=lambda z: hard_threshold_solve(z, eta * omega),
        cost=lambda ns, nt: eta * (ns + omega * nt),
        tol=tol, max_iter=max_iter, prune=prune,
    )


def en_rsvd(g: DirectedGraph, mask: EdgeMask, params: ENParams, v0,
            tol: float = 1e-8, max_iter: int = 200) -> RsvdResult:
    """Alternating soft-threshold solver for the elastic-net constrained SVD."""
    v = _as_start(g, v0)
    return _alternate(
        g, mask, v,
        update_u=lambda z: en_solve(z, params.alpha, params.c1),
        update_v=lambda z: en_solve(z, params.beta, params.c2),
        cost=lambda ns, nt: 0.0,
        tol=tol, max_iter=max_iter, prune=False,
    )


def _block_sigma(A, v, tol, max_iter):
    At = A.T.tocsr()
    lo = hi = 0.0
    for _ in range(max_iter):
        u = A @ v
        lo = float(u @ u)
        w = At @ u
        hi = float(np.max(w / v))
        if math.sqrt(hi) - math.sqrt(lo) < tol:
            break
        v = w / np.linalg.norm(w)
    return 0.5 * (math.sqrt(lo) + math.sqrt(hi))


def principal_singular_value(g: DirectedGraph, mask: EdgeMask, restriction: Community,
                             tol: float = 1e-10, max_iter: int = 100000) -> float:
    """Largest singular value of ``Q`` restricted to the ``(S, T)`` rectangle.

    The rectangle is split into its D-connected blocks; on each block an
    alternating power iteration starts from the degree-weighted indicator of
    the block's terminals and stops once the Collatz-Wielandt upper bound and
    the Rayleigh lower bound on ``sigma_1`` agree to ``tol``.
    """
    from .dcomp import _cover_labels

    S, T = restriction.S, restriction.T
    if S.size == 0 or T.size == 0:
        raise ValueError("empty rectangle")
    eids = rectangle_edges(g, mask, S, T)
    if eids.size == 0:
        raise ValueError("rectangle contains no active edge")
    rows = np.searchsorted(S, g.edge_src[eids])
    cols = np.searchsorted(T, g.out_dst[eids])
    lab = _cover_labels(S.size, T.size, rows, cols)[rows]
    best = 0.0
    for k in np.unique(lab):
        sel = lab == k
        r_used, r = np.unique(rows[sel], return_inverse=True)
        c_used, c = np.unique(cols[sel], return_inverse=True)
        A = sp.csr_matrix((g.qval[eids[sel]], (r, c)), shape=(r_used.size, c_used.size))
        v = np.sqrt(g.in_deg[T[c_used]])
        best = max(best, _block_sigma(A, v / np.linalg.norm(v), tol, max_iter))
    return best
