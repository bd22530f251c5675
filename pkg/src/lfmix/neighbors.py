"""Fixed-radius neighbor search over opinion space.

Two interchangeable implementations with identical output, compared set-for-set
in the test suite:

* ``neighbors_naive``: exact O(N^2) pairwise scan, the reference.
* ``neighbors_grid``: buckets opinions into axis-aligned cells of side epsilon
  and scans the 3^d surrounding cells, so any pair within epsilon is covered.

Both compare squared distances against epsilon squared; squaring is monotone
on nonnegative values, so the boundary rule (distance exactly epsilon counts)
is unchanged. Cells use floor indexing, left-closed. Above ``grid_dim_cap``
dimensions the 3^d scan loses to the naive pass and ``neighbors_grid`` falls
back, emitting a ``FallbackToNaive`` warning; output is exact either way.
"""

from __future__ import annotations

import itertools
import warnings

import numpy as np

from .errors import FallbackToNaive
from .model import NeighborSets, Scenario, SystemState

_NAIVE_CHUNK = 256
_AUTO_GRID_MIN_AGENTS = 64

_EMPTY = np.empty(0, dtype=np.int64)
_EMPTY.flags.writeable = False


class GridIndex:
    """Uniform grid over opinions: cell -> ascending ids of agents inside it.

    Every agent lands in exactly one cell under floor(coordinate / cell_size).
    """

    def __init__(self, opinions: np.ndarray, cell_size: float):
        self.cell_size = float(cell_size)
        coords = np.floor(opinions / self.cell_size).astype(np.int64)
        buckets: dict[tuple, list] = {}
        for i, row in enumerate(coords):
            buckets.setdefault(tuple(row.tolist()), []).append(i)
        self.cells = {key: np.asarray(ids, dtype=np.int64) for key, ids in buckets.items()}
        self._coords = coords

    def cell_of(self, agent: int) -> tuple:
        return tuple(self._coords[agent].tolist())

    def candidates(self, cell: tuple, offsets) -> np.ndarray:
        """Ascending ids from the cell's surrounding block."""
        parts = []
        for off in offsets:
            ids = self.cells.get(tuple(c + o for c, o in zip(cell, off)))
            if ids is not None:
                parts.append(ids)
        if not parts:
            return _EMPTY
        cand = np.concatenate(parts)
        cand.sort()
        return cand


def _split_by_group(hits: np.ndarray, i: int, group_of: np.ndarray, m: int, fol, fol_lead, lead):
    code = group_of[i]
    hit_codes = group_of[hits]
    if code == 0:
        fol[i] = hits[hit_codes == 0]
        fol_lead[i] = tuple(hits[hit_codes == k] for k in range(1, m + 1))
    else:
        lead[i] = hits[hit_codes == code]


def neighbors_naive(state: SystemState, scenario: Scenario) -> NeighborSets:
    """Exact pairwise neighbor sets; the reference implementation."""
    x = state.opinions
    eps2 = scenario.epsilon * scenario.epsilon
    group_of = scenario.partition.group_of
    m = scenario.m
    n = x.shape[0]
    fol: dict = {}
    fol_lead: dict = {}
    lead: dict = {}
    for start in range(0, n, _NAIVE_CHUNK):
        stop = min(start + _NAIVE_CHUNK, n)
        diff = x[start:stop, None, :] - x[None, :, :]
        within = (diff * diff).sum(axis=2) <= eps2
        for row in range(stop - start):
            hits = np.nonzero(within[row])[0]
            _split_by_group(hits, start + row, group_of, m, fol, fol_lead, lead)
    return NeighborSets(fol, fol_lead, lead)


def neighbors_grid(state: SystemState, scenario: Scenario) -> NeighborSets:
    """Grid-accelerated neighbor sets; output equals ``neighbors_naive``."""
    d = scenario.dimension
    if d > scenario.engine.grid_dim_cap:
        warnings.warn(
            f"dimension {d} above grid cap {scenario.engine.grid_dim_cap}; using naive scan",
            FallbackToNaive,
            stacklevel=2,
        )
        return neighbors_naive(state, scenario)
    x = state.opinions
    eps = scenario.epsilon
    eps2 = eps * eps
    group_of = scenario.partition.group_of
    m = scenario.m
    index = GridIndex(x, eps)
    offsets = tuple(itertools.product((-1, 0, 1), repeat=d))
    fol: dict = {}
    fol_lead: dict = {}
    lead: dict = {}
    for cell, members in index.cells.items():
        cand = index.candidates(cell, offsets)
        diff = x[members][:, None, :] - x[cand][None, :, :]
        within = (diff * diff).sum(axis=2) <= eps2
        for row, i in enumerate(members.tolist()):
            hits = cand[within[row]]
            _split_by_group(hits, i, group_of, m, fol, fol_lead, lead)
    return NeighborSets(fol, fol_lead, lead)


def compute_neighbors(state: SystemState, scenario: Scenario) -> NeighborSets:
    """Dispatch on the scenario's neighbor strategy ('auto' picks by size)."""
    strategy = scenario.engine.neighbor_strategy
    if strategy == "naive":
        return neighbors_naive(state, scenario)
    if strategy == "grid":
        return neighbors_grid(state, scenario)
    if state.n_agents >= _AUTO_GRID_MIN_AGENTS and scenario.dimension <= scenario.engine.grid_dim_cap:
        return neighbors_grid(state, scenario)
    return neighbors_naive(state, scenario)
