"""
Aggregation of distance matrices into suite diversity values, and the
47-measure catalogue.
"""

from __future__ import annotations

import logging
import time
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import entropy

from .config import CatalogueConfig
from .direct_measures import direct_measure
from .distances import DistanceMatrix, distance_matrix, prepare_suite
from .exceptions import RoadDiversityException
from .geometry import RoadGeometry, geometry_digest
from .models import (
    AggregationId,
    DirectMeasureId,
    DiversityMeasureId,
    DiversityValue,
    NormalizationBounds,
    PairwiseDistanceId,
    all_measures,
)

logger = logging.getLogger(__name__)

CATALOGUE_ERRORS = (RoadDiversityException, ValueError, ArithmeticError)

# entries kept by the branch and bound before its memo is reset
MEMO_LIMIT = 1_000_000


def _popcounts(n: int) -> np.ndarray:
    counts = np.zeros(1 << n, dtype=np.int8)
    for bit in range(n):
        counts[1 << bit : 1 << (bit + 1)] = counts[: 1 << bit] + 1
    return counts


def _min_to_subsets(row: np.ndarray, n: int) -> np.ndarray:
    """``out[T] = min(row[y] for y in T)`` for every bitmask T; inf for the empty set."""
    out = np.empty(1 << n)
    out[0] = np.inf
    for bit in range(n):
        out[1 << bit : 1 << (bit + 1)] = np.minimum(out[: 1 << bit], row[bit])
    return out


def weitzman_exact(values: np.ndarray) -> float:
    """
    Weitzman diversity by subset dynamic programming over bitmasks,
    one popcount layer at a time.
    """
    n = len(values)
    if n <= 1:
        return 0.0
    counts = _popcounts(n)
    layers = [np.flatnonzero(counts == k) for k in range(n + 1)]
    # n x 2^n link tables are cached only while they stay small
    cached = [_min_to_subsets(values[x], n) for x in range(n)] if n <= 16 else None
    best = np.full(1 << n, -np.inf)
    best[0] = 0.0
    for x in range(n):
        best[1 << x] = 0.0
    for size in range(2, n + 1):
        smaller = layers[size - 1]
        for x in range(n):
            bit = 1 << x
            subsets = smaller[(smaller & bit) == 0]
            link = cached[x] if cached is not None else _min_to_subsets(values[x], n)
            gain = best[subsets] + link[subsets]
            targets = subsets | bit
            best[targets] = np.maximum(best[targets], gain)
    return float(best[(1 << n) - 1])


class _BranchAndBound:
    """Budgeted search over removal orders for suites too large for the DP."""

    def __init__(self, values: np.ndarray, budget: float, memo_limit: int = MEMO_LIMIT):
        self.values = values
        self.memo_limit = memo_limit
        self.n = len(values)
        self.deadline = time.monotonic() + budget
        self.timed_out = False
        self.memo: Dict[int, float] = {}
        self.nodes = 0
        self.best = self._greedy()

    def _members(self, mask: int) -> List[int]:
        return [i for i in range(self.n) if mask >> i & 1]

    def _gains(self, members: List[int]) -> np.ndarray:
        sub = self.values[np.ix_(members, members)].copy()
        np.fill_diagonal(sub, np.inf)
        return sub.min(axis=1)

    def _upper_bound(self, members: List[int]) -> float:
        sub = self.values[np.ix_(members, members)]
        farthest = sub.max(axis=1)
        return float(farthest.sum() - farthest.min())

    def _greedy(self) -> float:
        mask = (1 << self.n) - 1
        total = 0.0
        while bin(mask).count("1") > 1:
            members = self._members(mask)
            gains = self._gains(members)
            pick = int(np.argmax(gains))
            total += float(gains[pick])
            mask &= ~(1 << members[pick])
        return total

    def search(self, mask: int, accumulated: float) -> None:
        if self.timed_out:
            return
        self.nodes += 1
        if self.nodes % 1024 == 0 and time.monotonic() > self.deadline:
            self.timed_out = True
            return
        members = self._members(mask)
        if len(members) <= 1:
            self.best = max(self.best, accumulated)
            return
        if self.memo.get(mask, -np.inf) >= accumulated:
            return
        if len(self.memo) >= self.memo_limit:
            logger.debug("Weitzman memo reached %d entries; clearing", len(self.memo))
            self.memo.clear()
        self.memo[mask] = accumulated
        if accumulated + self._upper_bound(members) <= self.best:
            return
        gains = self._gains(members)
        for index in np.argsort(-gains, kind="stable"):
            self.search(mask & ~(1 << members[index]), accumulated + float(gains[index]))


def weitzman_value(
    values: np.ndarray, budget: float = 300.0, exact_max: int = 20
) -> Tuple[float, bool]:
    """Weitzman diversity and whether the search ran out of budget."""
    values = np.asarray(values, dtype=float)
    if len(values) <= exact_max:
        return weitzman_exact(values), False
    search = _BranchAndBound(values, budget)
    search.search((1 << len(values)) - 1, 0.0)
    if search.timed_out:
        logger.warning(
            "Weitzman search hit the %.1fs budget for n=%d; returning the best lower bound",
            budget,
            len(values),
        )
    return search.best, search.timed_out


def minimum_spanning_tree(values: np.ndarray) -> List[Tuple[int, int, float]]:
    """Kruskal over the complete graph; equal weights are taken in (i, j) order."""
    n = len(values)
    rows, cols = np.triu_indices(n, k=1)
    weights = values[rows, cols]
    order = np.lexsort((cols, rows, weights))
    parent = list(range(n))

    def find(node: int) -> int:
        while parent[node] != node:
            parent[node] = parent[parent[node]]
            node = parent[node]
        return node

    tree = []
    for index in order:
        u, v = int(rows[index]), int(cols[index])
        root_u, root_v = find(u), find(v)
        if root_u != root_v:
            parent[root_v] = root_u
            tree.append((u, v, float(weights[index])))
            if len(tree) == n - 1:
                break
    return tree


def distance_entropy_value(values: np.ndarray) -> float:
    """Shannon entropy (nats) of the normalized MST edge weights."""
    if len(values) < 2:
        raise ValueError("distance entropy needs at least 2 elements")
    weights = np.sort([weight for _, _, weight in minimum_spanning_tree(np.asarray(values))])
    total = float(weights.sum())
    if total == 0.0:
        return 0.0
    return float(entropy(weights / total))


def _upper(values: np.ndarray) -> np.ndarray:
    n = len(values)
    if n < 2:
        raise ValueError("aggregation needs at least 2 elements")
    return values[np.triu_indices(n, k=1)]


def sum_value(values: np.ndarray) -> float:
    return float(np.sum(_upper(values)))


def average_value(values: np.ndarray) -> float:
    return float(np.mean(_upper(values)))


def average_of_maxima_value(values: np.ndarray) -> float:
    _upper(values)
    masked = np.where(np.eye(len(values), dtype=bool), -np.inf, values)
    return float(masked.max(axis=1).mean())


def _measure(m: DistanceMatrix, aggregation: AggregationId) -> DiversityMeasureId:
    if m.distance is None:
        raise ValueError("matrix has no road distance id; use the *_value functions")
    return DiversityMeasureId(distance=m.distance, aggregation=aggregation)


def weitzman(m: DistanceMatrix, budget: float = 300.0, exact_max: int = 20) -> DiversityValue:
    value, timed_out = weitzman_value(m.values, budget, exact_max)
    return DiversityValue(
        measure=_measure(m, AggregationId.WEITZMAN),
        value=value,
        timed_out=timed_out,
        aligned=m.aligned,
    )


def distance_entropy(m: DistanceMatrix) -> DiversityValue:
    return DiversityValue(
        measure=_measure(m, AggregationId.DISTANCE_ENTROPY),
        value=distance_entropy_value(m.values),
        aligned=m.aligned,
    )


def sum_aggregation(m: DistanceMatrix) -> DiversityValue:
    return DiversityValue(
        measure=_measure(m, AggregationId.SUM), value=sum_value(m.values), aligned=m.aligned
    )


def incremental_sum(previous: float, extended: DistanceMatrix, previous_n: int) -> float:
    """Sum over an extended matrix from the previous sum plus the new rows only."""
    new_rows = extended.values[previous_n:, :]
    added = sum(float(np.sum(row[: previous_n + k])) for k, row in enumerate(new_rows))
    return previous + added


def average_aggregation(m: DistanceMatrix) -> DiversityValue:
    return DiversityValue(
        measure=_measure(m, AggregationId.AVERAGE),
        value=average_value(m.values),
        aligned=m.aligned,
    )


def average_of_maxima(m: DistanceMatrix) -> DiversityValue:
    return DiversityValue(
        measure=_measure(m, AggregationId.AVERAGE_OF_MAXIMA),
        value=average_of_maxima_value(m.values),
        aligned=m.aligned,
    )


def aggregate(
    m: DistanceMatrix, aggregation: AggregationId, config: Optional[CatalogueConfig] = None
) -> DiversityValue:
    config = config or CatalogueConfig()
    if aggregation is AggregationId.WEITZMAN:
        return weitzman(m, config.weitzman_budget, config.weitzman_exact_max)
    if aggregation is AggregationId.DISTANCE_ENTROPY:
        return distance_entropy(m)
    if aggregation is AggregationId.SUM:
        return sum_aggregation(m)
    if aggregation is AggregationId.AVERAGE:
        return average_aggregation(m)
    if aggregation is AggregationId.AVERAGE_OF_MAXIMA:
        return average_of_maxima(m)
    raise ValueError(f"unknown aggregation {aggregation!r}")


def dedup_exact(suite: Sequence[RoadGeometry]) -> List[RoadGeometry]:
    """Drop roads whose geometry exactly repeats an earlier road."""
    seen = set()
    unique = []
    for g in suite:
        digest = geometry_digest(g)
        if digest not in seen:
            seen.add(digest)
            unique.append(g)
    if len(unique) < len(suite):
        logger.info("Dropped %d exact duplicate roads", len(suite) - len(unique))
    return unique


def _failed(measure: DiversityMeasureId, suite_id: str, aligned: bool, error: Exception) -> DiversityValue:
    logger.warning("Measure %s failed on suite %s: %s", measure.code, suite_id or "-", error)
    return DiversityValue(
        measure=measure, value=None, suite_id=suite_id, aligned=aligned, error=str(error)
    )


def compute_catalogue(
    suite: Sequence[RoadGeometry],
    config: Optional[CatalogueConfig] = None,
    aligned: bool = True,
    suite_id: str = "",
    bounds: Optional[NormalizationBounds] = None,
    matrices: Optional[Dict[PairwiseDistanceId, DistanceMatrix]] = None,
    jobs: int = 1,
) -> List[DiversityValue]:
    """
    All 47 diversity values for ``suite`` in catalogue order.

    One distance matrix per distance id feeds its five aggregations;
    precomputed ``matrices`` (e.g. pool submatrices) are used as given. A
    failing measure is recorded with ``value=None`` and its error; it never
    aborts the rest. ``bounds`` are the Manhattan normalization bounds,
    normally taken over the whole corpus.
    """
    config = config or CatalogueConfig()
    roads = list(suite)
    if config.dedup_exact:
        roads = dedup_exact(roads)
    if len(roads) < 2:
        raise ValueError(f"catalogue needs at least 2 roads, got {len(roads)}")
    matrices = {} if config.dedup_exact or matrices is None else dict(matrices)
    prepared = prepare_suite(roads, config)

    results: Dict[str, DiversityValue] = {}
    for distance in PairwiseDistanceId:
        try:
            matrix = matrices.get(distance)
            if matrix is None:
                matrix = distance_matrix(
                    prepared, distance, aligned, config, bounds, jobs=jobs, prepared=True
                )
        except CATALOGUE_ERRORS as exc:
            for aggregation in AggregationId:
                measure = DiversityMeasureId(distance=distance, aggregation=aggregation)
                results[measure.code] = _failed(measure, suite_id, aligned, exc)
            continue
        for aggregation in AggregationId:
            measure = DiversityMeasureId(distance=distance, aggregation=aggregation)
            try:
                value = aggregate(matrix, aggregation, config)
                results[measure.code] = value.model_copy(update={"suite_id": suite_id, "aligned": aligned})
            except CATALOGUE_ERRORS as exc:
                results[measure.code] = _failed(measure, suite_id, aligned, exc)

    for direct in DirectMeasureId:
        measure = DiversityMeasureId(direct=direct)
        try:
            value = direct_measure(
                direct,
                roads,
                codec=config.codec,
                resample_points=config.resample_points,
                align=aligned and config.hull_alignment,
            )
            results[measure.code] = value.model_copy(update={"suite_id": suite_id, "aligned": aligned})
        except CATALOGUE_ERRORS as exc:
            results[measure.code] = _failed(measure, suite_id, aligned, exc)

    return [results[measure.code] for measure in all_measures()]
