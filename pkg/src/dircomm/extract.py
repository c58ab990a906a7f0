"""Single-community extraction by sweeping a decreasing sparsity grid."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dcomp import directional_components
from .graph import DirectedGraph, EdgeMask
from .measures import Community, conductance_or_one, size_omega
from .rsvd import (
    ENParams,
    L0Params,
    RsvdResult,
    SparseUnitVector,
    en_rsvd,
    l0_rsvd,
    principal_singular_value,
)

__all__ = [
    "SparsityGrid",
    "EarlyStop",
    "TraceEntry",
    "ExtractionTrace",
    "ExtractionFailed",
    "grid_l0",
    "grid_en",
    "should_stop",
    "extract_community",
    "ScanPoint",
    "submatrix_scan",
    "separating_eta",
    "write_scan_csv",
]


class ExtractionFailed(RuntimeError):
    """Every grid point collapsed to an empty support."""


@dataclass(frozen=True)
class SparsityGrid:
    """Decreasing sparsity levels: ``eta`` values for L0, ``alpha`` values for EN.

    ``omega`` applies to L0; ``c1``/``c2`` to EN.  ``beta`` follows ``alpha``.
    """

    kind: str
    values: tuple[float, ...]
    omega: float = 1.0
    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        if self.kind not in ("l0", "en"):
            raise ValueError("grid kind must be 'l0' or 'en'")
        vals = tuple(float(x) for x in self.values)
        if not vals:
            raise ValueError("grid must have at least one value")
        if any(b >= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sparsity grid must be strictly decreasing")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def solve(self, g, mask, i, v, tol, max_iter) -> RsvdResult:
        if self.kind == "l0":
            return l0_rsvd(g, mask, L0Params(self.values[i], self.omega), v, tol, max_iter)
        return en_rsvd(g, mask, ENParams(self.values[i], None, self.c1, self.c2), v, tol, max_iter)


def _steps(k_start, k_end, count):
    if count < 1:
        raise ValueError("count must be at least 1")
    i = np.arange(1, count + 1)
    return k_start + i * (k_end - k_start) / count


def grid_l0(k_start: float, k_end: float, count: int, omega: float = 1.0) -> SparsityGrid:
    """``eta_i = exp(-(k_start + i (k_end - k_start) / count))``, ``i = 1..count``."""
    return SparsityGrid("l0", tuple(np.exp(-_steps(k_start, k_end, count))), omega=omega)


def grid_en(k_start: float, k_end: float, count: int, c1: float = 1.0, c2: float = 1.0) -> SparsityGrid:
    """``alpha_i = 1 / (1 + exp(k_start + i (k_end - k_start) / count))``."""
    return SparsityGrid("en", tuple(1.0 / (1.0 + np.exp(_steps(k_start, k_end, count)))), c1=c1, c2=c2)


@dataclass(frozen=True)
class EarlyStop:
    s_p: float = 1.4
    s_l: float = 0.4

    def __post_init__(self):
        if not self.s_p > 1:
            raise ValueError("s_p must exceed 1")
        if not 0 < self.s_l < 1:
            raise ValueError("s_l must lie in (0, 1)")


def should_stop(phi: float, best_phi: float, stop: EarlyStop | None) -> bool:
    """Stop once ``phi`` bounces above ``s_p`` times a minimum that is below ``s_l``."""
    if stop is None or not math.isfinite(best_phi):
        return False
    return best_phi < stop.s_l and phi > stop.s_p * best_phi


@dataclass
class TraceEntry:
    index: int
    param: float
    phi: float
    objective: float
    iterations: int
    n_source: int
    n_terminal: int
    degenerate: bool = False
    community: Community | None = None


@dataclass
class ExtractionTrace:
    entries: list[TraceEntry] = field(default_factory=list)
    best_index: int | None = None
    stopped_early: bool = False

    @property
    def phis(self) -> list[float]:
        return [e.phi for e in self.entries]


def extract_community(g: DirectedGraph, mask: EdgeMask, grid: SparsityGrid, seed_v0,
                      stop: EarlyStop | None = EarlyStop(), tol: float = 1e-8,
                      max_iter: int = 200, phi_mask: EdgeMask | None = None,
                      ) -> tuple[Community, ExtractionTrace]:
    """Run the regularized SVD along ``grid``, warm-starting each level from
    the previous right vector, and return the minimum-conductance candidate.

    The solver works on ``mask``; conductance is measured on ``phi_mask``
    (default: ``mask`` itself).  With early stopping the minimum is taken
    over the prefix up to the stop.
    Raises :class:`ExtractionFailed` if no grid point yields a candidate.
    """
    v = seed_v0 if isinstance(seed_v0, SparseUnitVector) else SparseUnitVector.from_dense(
        np.asarray(seed_v0, dtype=np.float64))
    if v.is_empty:
        raise ValueError("seed vector is zero")
    if phi_mask is None:
        phi_mask = mask
    trace = ExtractionTrace()
    best: tuple[float, int, Community] | None = None
    for i, param in enumerate(grid.values):
        res = grid.solve(g, mask, i, v, tol, max_iter)
        if res.degenerate:
            trace.entries.append(TraceEntry(i, param, 1.0, res.objective, res.iterations, 0, 0, True))
            continue
        c = res.community(g)
        phi = conductance_or_one(g, phi_mask, c)
        trace.entries.append(
            TraceEntry(i, param, phi, res.objective, res.iterations, c.S.size, c.T.size, False, c))
        if best is None or phi < best[0]:
            best = (phi, i, c)
        v = res.v
        if should_stop(phi, best[0], stop):
            trace.stopped_early = True
            break
    if best is None:
        raise ExtractionFailed("all grid points were degenerate")
    trace.best_index = best[1]
    return best[2], trace


# -- submatrix scan --------------------------------------------------------

@dataclass
class ScanPoint:
    sz: float
    sigma1: float
    kind: str  # "sample", "component" or "reference"
    community: Community

    @property
    def is_component(self) -> bool:
        return self.kind != "sample"


def submatrix_scan(g: DirectedGraph, n_samples: int, omega: float = 1.0, rng_seed: int = 0,
                   references=(), mask: EdgeMask | None = None) -> list[ScanPoint]:
    """Principal singular values of random ``(S, T)`` sub-rectangles of ``Q``.

    Every directional component of the graph, plus any ``references``, is
    appended with its ``(SZ_omega, sigma_1)``.  Rectangles with no active
    edge have ``sigma_1 = 0``.
    """
    if g.n > 2000:
        raise ValueError("submatrix scan is limited to graphs with n <= 2000")
    if mask is None:
        mask = EdgeMask.full(g)
    rng = np.random.default_rng(rng_seed)

    def point(c, kind):
        try:
            s = principal_singular_value(g, mask, c)
        except ValueError:
            s = 0.0
        return ScanPoint(size_omega(c, omega), s, kind, c)

    out = []
    for _ in range(n_samples):
        ks, kt = rng.integers(1, g.n + 1, size=2)
        S = rng.choice(g.n, size=ks, replace=False)
        T = rng.choice(g.n, size=kt, replace=False)
        out.append(point(Community.build(g, S, T), "sample"))
    for c in directional_components(g, mask):
        out.append(point(c, "component"))
    for c in references:
        out.append(point(Community.build(g, c.S, c.T), "reference"))
    return out


def separating_eta(points: list[ScanPoint], target: int) -> tuple[float, float] | None:
    """Open interval of ``eta > 0`` for which ``points[target]`` is the unique
    maximizer of ``sigma1 - eta * sz``; ``None`` if no such ``eta`` exists."""
    p = points[target]
    lo, hi = 0.0, math.inf
    for k, q in enumerate(points):
        if k == target:
            continue
        if q.sz == p.sz:
            if q.sigma1 >= p.sigma1:
                return None
        elif q.sz < p.sz:
            hi = min(hi, (p.sigma1 - q.sigma1) / (p.sz - q.sz))
        else:
            lo = max(lo, (q.sigma1 - p.sigma1) / (q.sz - p.sz))
    if lo < hi and hi > 0:
        return lo, hi
    return None


def write_scan_csv(points: list[ScanPoint], dest) -> None:
    lines = ["sz,sigma1,is_component\n"]
    lines += [f"{float(p.sz)!r},{float(p.sigma1)!r},{int(p.is_component)}\n" for p in points]
    if hasattr(dest, "write"):
        dest.write("".join(lines))
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write("".join(lines))
