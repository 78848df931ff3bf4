"""Pareto machinery shared by the evolutionary engines.

Dominance is always computed on raw objective values; the configurable
bounds exist purely to normalize objective space for crowding distances,
density estimates and knee-point picks.  Invalid individuals enter
dominance as (inf, inf): every valid individual beats them and they beat
nothing.  All tie-breaks fall back to position index, which keeps every
routine here deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .errors import ConfigError
from .evalkit import ObjectiveVector

__all__ = [
    "ObjectiveBounds",
    "Nsga2Info",
    "Spea2Info",
    "ParetoArchive",
    "dominates",
    "objective_key",
    "fast_nondominated_sort",
    "crowding_distance",
    "nsga2_environmental",
    "crowded_better",
    "spea2_assign",
    "spea2_environmental",
    "nondominated",
    "merge_fronts",
    "knee_point",
]

T = TypeVar("T")

# Stand-in for an infinite error when geometry needs finite coordinates.
_ERROR_CLAMP = 1e18


@dataclass(frozen=True)
class ObjectiveBounds:
    """Per-objective normalization ranges (error first, size second)."""

    error_min: float = 0.0
    error_max: float = 1.0
    size_min: float = 4.0
    size_max: float = 64.0

    def __post_init__(self):
        if not self.error_min < self.error_max:
            raise ConfigError("error bounds must satisfy min < max")
        if not self.size_min < self.size_max:
            raise ConfigError("size bounds must satisfy min < max")


@dataclass(frozen=True)
class Nsga2Info:
    """Per-individual bookkeeping from non-dominated sorting."""

    rank: int
    nd: int
    dominated: tuple[int, ...]
    crowding: float = 0.0


@dataclass(frozen=True)
class Spea2Info:
    """Strength, raw fitness, density and their sum (minimized)."""

    strength: int
    raw: int
    density: float
    fitness: float


@dataclass(frozen=True)
class ParetoArchive:
    """Indices selected into a fixed-capacity archive.

    `padded` records whether dominated individuals were admitted to fill
    spare capacity; when it is False the members are mutually non-dominated.
    """

    members: tuple[int, ...]
    capacity: int
    padded: bool


def objective_key(obj: ObjectiveVector) -> tuple[float, float]:
    """Raw minimization key; invalid individuals collapse to (inf, inf)."""
    if not obj.valid:
        return (math.inf, math.inf)
    return (obj.error, float(obj.size))


def dominates(u: ObjectiveVector, v: ObjectiveVector) -> bool:
    """True when u is no worse in both objectives and better in at least one."""
    a, b = objective_key(u), objective_key(v)
    return a != b and a[0] <= b[0] and a[1] <= b[1]


def _key_arrays(objs: Sequence[ObjectiveVector]) -> tuple[np.ndarray, np.ndarray]:
    keys = [objective_key(o) for o in objs]
    e = np.array([k[0] for k in keys], dtype=np.float64)
    s = np.array([k[1] for k in keys], dtype=np.float64)
    return e, s


def _dominance_matrix(objs: Sequence[ObjectiveVector]) -> np.ndarray:
    """Boolean matrix D with D[i, j] = individual i dominates individual j."""
    e, s = _key_arrays(objs)
    e_le = e[:, None] <= e[None, :]
    s_le = s[:, None] <= s[None, :]
    strict = (e[:, None] < e[None, :]) | (s[:, None] < s[None, :])
    return e_le & s_le & strict


def fast_nondominated_sort(
    objs: Sequence[ObjectiveVector],
) -> tuple[list[list[int]], list[Nsga2Info]]:
    """Partition indices into fronts by repeated domination-count peeling.

    Parameters
    ----------
    objs : sequence of ObjectiveVector
        Objectives for each member, in population order.

    Returns
    -------
    fronts : list of list of int
        fronts[0] is the non-dominated set; removing fronts 0..i-1 makes
        fronts[i] non-dominated.  Indices ascend within each front.
    info : list of Nsga2Info
        Per-index rank, domination count and dominated set.  Crowding is
        left at 0; see crowding_distance.
    """
    if not objs:
        raise ConfigError("cannot sort an empty population")
    dom = _dominance_matrix(objs)
    nd = dom.sum(axis=0).astype(int)
    dominated_sets = [tuple(np.nonzero(dom[i])[0].tolist()) for i in range(len(objs))]

    rank = [0] * len(objs)
    remaining = nd.copy()
    current = sorted(np.nonzero(remaining == 0)[0].tolist())
    fronts: list[list[int]] = []
    while current:
        fronts.append(current)
        for p in current:
            rank[p] = len(fronts) - 1
        nxt: list[int] = []
        for p in current:
            for q in dominated_sets[p]:
                remaining[q] -= 1
                if remaining[q] == 0:
                    nxt.append(q)
        current = sorted(nxt)
    info = [
        Nsga2Info(rank=rank[i], nd=int(nd[i]), dominated=dominated_sets[i])
        for i in range(len(objs))
    ]
    return fronts, info


def _norm_points(objs: Sequence[ObjectiveVector], bounds: ObjectiveBounds) -> np.ndarray:
    # both coordinates are clamped: invalid members sit at a single remote
    # but finite corner instead of breaking arithmetic with inf - inf
    e, s = _key_arrays(objs)
    e = np.minimum(e, _ERROR_CLAMP)
    s = np.minimum(s, _ERROR_CLAMP)
    pts = np.empty((len(objs), 2), dtype=np.float64)
    pts[:, 0] = (e - bounds.error_min) / (bounds.error_max - bounds.error_min)
    pts[:, 1] = (s - bounds.size_min) / (bounds.size_max - bounds.size_min)
    return pts


def crowding_distance(
    objs: Sequence[ObjectiveVector],
    members: Sequence[int],
    bounds: ObjectiveBounds,
) -> dict[int, float]:
    """Crowding distance of each front member, normalized by `bounds`.

    For each objective the members are sorted (ties stay in index order);
    the two boundary members get +inf and interior members accumulate the
    gap between their neighbors divided by the configured objective range.
    """
    dist = {m: 0.0 for m in members}
    if not members:
        return dist
    e, s = _key_arrays(objs)
    e = np.minimum(e, _ERROR_CLAMP)
    s = np.minimum(s, _ERROR_CLAMP)
    for values, span in (
        (e, bounds.error_max - bounds.error_min),
        (s, bounds.size_max - bounds.size_min),
    ):
        order = sorted(members, key=lambda m: (values[m], m))
        dist[order[0]] = math.inf
        dist[order[-1]] = math.inf
        for prev, mid, nxt in zip(order, order[1:], order[2:]):
            if not math.isinf(dist[mid]):
                dist[mid] += (values[nxt] - values[prev]) / span
    return dist


def crowded_better(a: Nsga2Info, b: Nsga2Info) -> bool:
    """NSGA-II comparator: lower rank wins, then larger crowding."""
    if a.rank != b.rank:
        return a.rank < b.rank
    return a.crowding > b.crowding


def nsga2_environmental(
    objs: Sequence[ObjectiveVector],
    target_size: int,
    bounds: ObjectiveBounds,
) -> tuple[list[int], list[Nsga2Info]]:
    """Elitist survivor selection over a parent+offspring union.

    Fronts are admitted whole in rank order; the first front that does not
    fit is sorted by descending crowding (ties by index) and truncated.

    Returns the selected indices and their info records (rank and crowding
    filled in), aligned with each other.
    """
    if target_size > len(objs):
        raise ConfigError(f"cannot select {target_size} from {len(objs)}")
    fronts, info = fast_nondominated_sort(objs)
    chosen: list[int] = []
    chosen_info: list[Nsga2Info] = []
    for front in fronts:
        crowd = crowding_distance(objs, front, bounds)
        if len(chosen) + len(front) <= target_size:
            admitted = front
        else:
            admitted = sorted(front, key=lambda m: (-crowd[m], m))[: target_size - len(chosen)]
        for m in admitted:
            chosen.append(m)
            chosen_info.append(replace(info[m], crowding=crowd[m]))
        if len(chosen) == target_size:
            break
    return chosen, chosen_info


def spea2_assign(
    objs: Sequence[ObjectiveVector],
    bounds: ObjectiveBounds,
) -> list[Spea2Info]:
    """Strength/raw/density fitness over a combined population+archive set.

    S(i) counts the members i dominates.  R(i) sums the strengths of i's
    dominators (0 exactly for non-dominated members).  The density is
    D(i) = 1/(sigma_k + 2) where sigma_k is the distance to the k-th
    nearest neighbor in bounds-normalized objective space and
    k = floor(sqrt(|U|)), clamped to [1, |U|-1].  Final fitness F = R + D,
    minimized; F < 1 if and only if the member is non-dominated.
    """
    n = len(objs)
    if n == 0:
        raise ConfigError("cannot assign fitness to an empty set")
    dom = _dominance_matrix(objs)
    strength = dom.sum(axis=1).astype(int)
    raw = (strength[:, None] * dom).sum(axis=0).astype(int)

    if n == 1:
        return [Spea2Info(strength=0, raw=0, density=0.5, fitness=0.5)]
    pts = _norm_points(objs, bounds)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    k = min(max(1, int(math.isqrt(n))), n - 1)
    sigma_k = np.partition(dist, k, axis=1)[:, k]
    density = 1.0 / (sigma_k + 2.0)
    return [
        Spea2Info(
            strength=int(strength[i]),
            raw=int(raw[i]),
            density=float(density[i]),
            fitness=float(raw[i] + density[i]),
        )
        for i in range(n)
    ]


def _truncate(
    members: list[int],
    objs: Sequence[ObjectiveVector],
    bounds: ObjectiveBounds,
    capacity: int,
) -> list[int]:
    """Iteratively drop the most crowded member until capacity is met.

    The victim is the member with the lexicographically smallest sorted
    vector of distances to the others, skipping any member that is the
    sole holder of a per-objective minimum.  Distances are recomputed
    after each removal.
    """
    pts = _norm_points(objs, bounds)
    e, s = _key_arrays(objs)
    alive = list(members)
    while len(alive) > capacity:
        sub = pts[alive]
        diff = sub[:, None, :] - sub[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        vectors = np.sort(dist, axis=1)[:, 1:]  # drop self-distance 0

        e_min = min(e[m] for m in alive)
        s_min = min(s[m] for m in alive)
        only_e = [m for m in alive if e[m] == e_min]
        only_s = [m for m in alive if s[m] == s_min]
        protected = set()
        if len(only_e) == 1:
            protected.add(only_e[0])
        if len(only_s) == 1:
            protected.add(only_s[0])

        victim_pos = None
        victim_key = None
        for pos, m in enumerate(alive):
            if m in protected and len(alive) > len(protected):
                continue
            key = (tuple(vectors[pos]), m)
            if victim_key is None or key < victim_key:
                victim_key = key
                victim_pos = pos
        alive.pop(victim_pos)
    return alive


def spea2_environmental(
    objs: Sequence[ObjectiveVector],
    capacity: int,
    bounds: ObjectiveBounds,
    info: Sequence[Spea2Info] | None = None,
) -> ParetoArchive:
    """Build the next archive from a population+archive union.

    All non-dominated members (F < 1) are copied.  An overfull set is
    thinned by nearest-neighbor truncation that keeps per-objective
    extremes; an underfull one is padded with the best dominated members
    by ascending F, valid individuals strictly before invalid ones.
    """
    if capacity < 2:
        raise ConfigError("archive capacity must be at least 2")
    if info is None:
        info = spea2_assign(objs, bounds)
    nondom = [i for i in range(len(objs)) if info[i].fitness < 1.0]
    if len(nondom) > capacity:
        members = _truncate(nondom, objs, bounds, capacity)
        return ParetoArchive(members=tuple(sorted(members)), capacity=capacity, padded=False)
    if len(nondom) == capacity:
        return ParetoArchive(members=tuple(nondom), capacity=capacity, padded=False)

    rest = [i for i in range(len(objs)) if info[i].fitness >= 1.0]
    rest.sort(key=lambda i: (not objs[i].valid, info[i].fitness, i))
    members = nondom + rest[: capacity - len(nondom)]
    return ParetoArchive(
        members=tuple(sorted(members)),
        capacity=capacity,
        padded=len(members) > len(nondom),
    )


def nondominated(objs: Sequence[ObjectiveVector]) -> list[int]:
    """Indices whose objectives no other member dominates."""
    if not objs:
        return []
    dom = _dominance_matrix(objs)
    return np.nonzero(~dom.any(axis=0))[0].tolist()


def merge_fronts(
    groups: Iterable[Sequence[T]],
    objective_of: Callable[[T], ObjectiveVector],
    expr_of: Callable[[T], str],
) -> list[T]:
    """Pool several fronts and keep the overall non-dominated subset.

    Entries with identical objective pairs collapse to the one whose
    rendered expression sorts first; the result is ordered by ascending
    error, then size.
    """
    pool: list[T] = [item for group in groups for item in group]
    if not pool:
        return []
    objs = [objective_of(item) for item in pool]
    keep = nondominated(objs)
    best: dict[tuple[float, float], T] = {}
    for i in keep:
        key = objective_key(objs[i])
        cur = best.get(key)
        if cur is None or expr_of(pool[i]) < expr_of(cur):
            best[key] = pool[i]
    return [best[k] for k in sorted(best)]


def knee_point(objs: Sequence[ObjectiveVector], bounds: ObjectiveBounds) -> int:
    """Index of the member closest (normalized Euclidean) to the ideal corner.

    The ideal is zero error at the configured minimum size.  Offered as a
    convenience pick from a front, nothing more.
    """
    if not objs:
        raise ConfigError("empty front")
    pts = _norm_points(objs, bounds)
    best = None
    best_key = None
    for i in range(len(objs)):
        d = math.hypot(pts[i, 0], pts[i, 1])
        key = (d, i)
        if best_key is None or key < best_key:
            best_key = key
            best = i
    return best
