"""Sequential community harvesting: extract, mask, re-seed, repeat."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .extract import (
    EarlyStop,
    ExtractionFailed,
    ExtractionTrace,
    SparsityGrid,
    extract_community,
    grid_en,
    grid_l0,
)
from .graph import DirectedGraph, EdgeMask, mask_community, mask_node, rectangle_edges
from .measures import Community, Cover, commonality, conductance_or_one
from .rsvd import SparseUnitVector

__all__ = [
    "HarvestConfig",
    "HarvestedCommunity",
    "HarvestRecord",
    "NoActiveEdges",
    "select_seed",
    "harvest",
]

log = logging.getLogger(__name__)


class NoActiveEdges(RuntimeError):
    pass


@dataclass(frozen=True)
class HarvestConfig:
    """Harvest settings.

    ``grid_k = (k_start, k_end, count)`` is mapped to an L0 grid
    ``exp(-k)`` or an EN grid ``1 / (1 + exp(k))`` depending on ``penalty``.
    ``phi_reference="original"`` scores candidates against the unmasked
    graph, so sources left over from earlier communities still carry their
    harvested edges as cut; ``"masked"`` scores them on the current mask.
    ``rng_seed`` only matters with ``seed_strategy="random"``, which picks
    the seed terminal uniformly among nodes with active in-edges.
    """

    penalty: str = "l0"
    grid_k: tuple[float, float, int] = (10.0, 18.0, 200)
    stop: EarlyStop | None = EarlyStop()
    omega: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    stop_fraction: float = 0.10
    max_communities: int | None = None
    rng_seed: int = 0
    seed_strategy: str = "max_in_degree"
    phi_reference: str = "original"
    tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self):
        if self.penalty not in ("l0", "en"):
            raise ValueError("penalty must be 'l0' or 'en'")
        if not 0 < self.stop_fraction < 1:
            raise ValueError("stop_fraction must lie in (0, 1)")
        if self.max_communities is not None and self.max_communities < 1:
            raise ValueError("max_communities must be positive")
        if self.seed_strategy not in ("max_in_degree", "random"):
            raise ValueError("unknown seed strategy")
        if self.phi_reference not in ("original", "masked"):
            raise ValueError("phi_reference must be 'original' or 'masked'")

    def grid(self) -> SparsityGrid:
        a, b, count = self.grid_k
        if self.penalty == "l0":
            return grid_l0(a, b, int(count), omega=self.omega)
        return grid_en(a, b, int(count), c1=self.c1, c2=self.c2)


@dataclass
class HarvestedCommunity:
    community: Community
    n_edges: int
    phi: float
    phi_masked: float
    commonality: float
    grid_index: int
    seed: int
    seconds: float
    trace: ExtractionTrace


@dataclass
class HarvestRecord:
    communities: list[HarvestedCommunity] = field(default_factory=list)
    failed_seeds: list[int] = field(default_factory=list)
    remaining_edges: int = 0
    touches: int = 0

    def cover(self, n: int) -> Cover:
        return Cover([h.community for h in self.communities], n)

    def __len__(self):
        return len(self.communities)


def select_seed(g: DirectedGraph, mask: EdgeMask) -> int:
    """Node with the largest masked in-degree; smallest index on ties."""
    if mask.active_count == 0:
        raise NoActiveEdges("no active edges left")
    cand = np.where(mask.in_count > 0, mask.active_in, -np.inf)
    return int(np.argmax(cand))


def _random_seed(mask: EdgeMask, rng) -> int:
    live = np.flatnonzero(mask.in_count > 0)
    if live.size == 0:
        raise NoActiveEdges("no active edges left")
    return int(rng.choice(live))


def harvest(g: DirectedGraph, config: HarvestConfig = HarvestConfig(),
            mask: EdgeMask | None = None) -> HarvestRecord:
    """Repeatedly extract a community from the terminal seed, record it, and
    deactivate its internal edges, until fewer than ``stop_fraction * m``
    edges remain or ``max_communities`` are found.

    A seed whose extraction fails has all incident edges deactivated.
    """
    if g.m == 0:
        raise ValueError("graph has no edges")
    mask = EdgeMask.full(g) if mask is None else mask
    grid = config.grid()
    rng = np.random.default_rng(config.rng_seed)
    threshold = config.stop_fraction * g.m
    ref = EdgeMask.full(g) if config.phi_reference == "original" else None
    rec = HarvestRecord()
    while mask.active_count >= threshold and mask.active_count > 0:
        if config.max_communities is not None and len(rec) >= config.max_communities:
            break
        if config.seed_strategy == "random":
            seed = _random_seed(mask, rng)
        else:
            seed = select_seed(g, mask)
        t0 = time.perf_counter()
        try:
            c, trace = extract_community(g, mask, grid, SparseUnitVector.indicator([seed]),
                                         config.stop, config.tol, config.max_iter, ref)
        except ExtractionFailed:
            log.debug("extraction failed at seed %d", seed)
            rec.failed_seeds.append(seed)
            mask_node(mask, g, seed)
            continue
        inside = rectangle_edges(g, mask, c.S, c.T).size
        if inside == 0:
            rec.failed_seeds.append(seed)
            mask_node(mask, g, seed)
            continue
        phi = trace.entries[trace.best_index].phi
        rec.communities.append(HarvestedCommunity(
            c, int(inside), phi, conductance_or_one(g, mask, c), commonality(c),
            trace.best_index, seed, time.perf_counter() - t0, trace))
        log.debug("community %d: |S|=%d |T|=%d |E|=%d phi=%.4f", len(rec),
                  c.S.size, c.T.size, inside, phi)
        mask_community(mask, g, c)
    rec.remaining_edges = mask.active_count
    rec.touches = mask.touches + (ref.touches if ref is not None else 0)
    return rec
