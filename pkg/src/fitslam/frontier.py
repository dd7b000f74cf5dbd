"""Frontier detection and size-capped clustering on the exploration grids.

A frontier cell is known-navigable and 8-adjacent to at least one unknown
occupancy cell. Connected components are grown breadth-first in a fixed
neighbor order, split into chunks no larger than the cluster size cap, and
each chunk nominates its median-order cell as a candidate goal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import BinaryTraversabilityGrid, GridSpec, OccupancyGrid

# BFS growth order: E, NE, N, NW, W, SW, S, SE in (di, dj) with i along x.
_NEIGHBOR_ORDER = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]

DEFAULT_MAX_CLUSTER_SIZE = 30


@dataclass(frozen=True)
class ExplorationBoundary:
    """Axis-aligned world rectangle limiting the frontier search."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass
class FrontierCluster:
    cells: list  # BFS-ordered (i, j) indices, all satisfying the frontier predicate
    candidate: tuple  # median-order cell of the list

    def __post_init__(self):
        assert self.cells, "cluster must be nonempty"
        assert self.candidate in self.cells


@dataclass
class Blacklist:
    """Cells designated unreachable; nearby candidates are suppressed too.

    Suppression extends one cell around each entry so grid jitter cannot
    re-emit an adjacent copy of a failed goal.
    """

    cells: set = field(default_factory=set)
    failures: dict = field(default_factory=dict)
    _halo: set = field(default_factory=set)

    def add(self, cell: tuple) -> None:
        self.cells.add(cell)
        self.failures[cell] = self.failures.get(cell, 0) + 1
        i, j = cell
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                self._halo.add((i + di, j + dj))

    def suppresses(self, cell: tuple) -> bool:
        return cell in self._halo


def detect_frontiers(occ: OccupancyGrid, nav: BinaryTraversabilityGrid,
                     boundary: ExplorationBoundary) -> set:
    """Cells inside the boundary that are Free and touch unknown occupancy."""
    if occ.spec != nav.spec:
        raise ValueError("occupancy and traversability grids must share one GridSpec")
    spec = occ.spec
    unknown = occ.unknown_mask()
    near_unknown = np.zeros_like(unknown)
    for di, dj in _NEIGHBOR_ORDER:
        near_unknown |= _shift_bool(unknown, di, dj)
    xs, ys = spec.cell_centers()
    inside = ((xs >= boundary.x_min) & (xs <= boundary.x_max)
              & (ys >= boundary.y_min) & (ys <= boundary.y_max))
    mask = nav.free_mask() & near_unknown & inside
    jj, ii = np.nonzero(mask)
    return {(int(i), int(j)) for i, j in zip(ii, jj)}


def _shift_bool(arr: np.ndarray, di: int, dj: int) -> np.ndarray:
    out = np.zeros_like(arr)
    h, w = arr.shape
    src_j = slice(max(0, -dj), h - max(0, dj))
    dst_j = slice(max(0, dj), h - max(0, -dj))
    src_i = slice(max(0, -di), w - max(0, di))
    dst_i = slice(max(0, di), w - max(0, -di))
    out[dst_j, dst_i] = arr[src_j, src_i]
    return out


def cluster_frontiers(cells: set, spec: GridSpec,
                      max_cluster_size: int = DEFAULT_MAX_CLUSTER_SIZE,
                      blacklist: Blacklist | None = None) -> list:
    """Group frontier cells into deterministic, size-capped clusters.

    Components are seeded in row-major order and grown breadth-first with the
    fixed neighbor order; oversized components are split into consecutive
    chunks of the BFS visitation order. Clusters whose candidate is suppressed
    by the blacklist are dropped.
    """
    if max_cluster_size < 1:
        raise ValueError("max_cluster_size must be >= 1")
    blacklist = blacklist or Blacklist()
    w, h = spec.width, spec.height
    # Membership via linear indices in a flat byte table: BFS over tuples in a
    # set is several times slower at typical frontier sizes.
    remaining = bytearray(spec.n_cells)
    for i, j in cells:
        remaining[j * w + i] = 1
    seeds = sorted(spec.linear_index(*c) for c in cells)  # row-major order
    clusters = []
    for seed in seeds:
        if not remaining[seed]:
            continue
        order = _bfs_component(seed, remaining, w, h)
        for k in range(0, len(order), max_cluster_size):
            chunk = [(lin % w, lin // w) for lin in order[k:k + max_cluster_size]]
            candidate = chunk[(len(chunk) - 1) // 2]
            if blacklist.suppresses(candidate):
                continue
            clusters.append(FrontierCluster(cells=chunk, candidate=candidate))
    return clusters


def _bfs_component(seed: int, remaining: bytearray, w: int, h: int) -> list:
    """Pop one 8-connected component out of `remaining` in BFS order."""
    order = [seed]
    remaining[seed] = 0
    head = 0
    while head < len(order):
        lin = order[head]
        head += 1
        i, j = lin % w, lin // w
        for di, dj in _NEIGHBOR_ORDER:
            ni, nj = i + di, j + dj
            if 0 <= ni < w and 0 <= nj < h:
                nlin = nj * w + ni
                if remaining[nlin]:
                    remaining[nlin] = 0
                    order.append(nlin)
    return order


def mission_complete(clusters: list) -> bool:
    """Exploration succeeds once no candidate clusters remain."""
    return not clusters
