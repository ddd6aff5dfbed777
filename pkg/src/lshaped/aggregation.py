"""Partitioning schemes, selection rules and cut-aggregation strategies.

A partitioning scheme splits the scenario indices 0..N-1 into disjoint
covering parts; applying an aggregation strategy to one iteration's cuts
produces one aggregated cut per part actually populated.  Strategies:

    MultiCut      every cut kept as is
    SingleCut     everything summed into one aggregate
    Partial(T)    fixed index blocks of size T
    Dynamic(rule) streaming placement into a bounded buffer of slots
    Cluster(rule) buffer everything, then cluster (k-medoids)
    Granulated    fixed uniform pre-aggregation, then an inner strategy
                  over the granule-level cuts
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from .cuts import DistanceMeasure, OptimalityCut, aggregate_cuts, aggregation_distance
from .rng import XorShift64Star

KMEDOIDS_MAX_SWEEPS = 100


@dataclass(frozen=True, eq=False)
class PartitioningScheme:
    """Disjoint covering index sets over 0..n_scenarios-1."""

    parts: tuple[frozenset[int], ...]
    n_scenarios: int

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(frozenset(p) for p in self.parts))


def validate_partitioning(scheme: PartitioningScheme) -> list[str]:
    """Violations of the partition conditions (subset, disjoint, covering)."""
    out: list[str] = []
    seen: set[int] = set()
    universe = set(range(scheme.n_scenarios))
    for i, part in enumerate(scheme.parts):
        if not part:
            out.append(f"part {i} is empty")
        stray = part - universe
        if stray:
            out.append(f"part {i} contains out-of-range indices {sorted(stray)}")
        overlap = part & seen
        if overlap:
            out.append(f"overlap at {sorted(overlap)}")
        seen |= part
    missing = universe - seen
    if missing:
        out.append(f"uncovered: {sorted(missing)}")
    return out


def scheme_stats(scheme: PartitioningScheme) -> tuple[int, int]:
    """(aggregation size, aggregation level) = (#parts, largest part)."""
    issues = validate_partitioning(scheme)
    if issues:
        raise ValueError("invalid partitioning: " + "; ".join(issues))
    return len(scheme.parts), max(len(p) for p in scheme.parts)


def uniform_partition(n_scenarios: int, size: int) -> PartitioningScheme:
    """Contiguous index blocks of the given size; the last may be smaller."""
    if not 1 <= size <= n_scenarios:
        raise ValueError(f"block size {size} not in 1..{n_scenarios}")
    parts = [
        frozenset(range(start, min(start + size, n_scenarios)))
        for start in range(0, n_scenarios, size)
    ]
    return PartitioningScheme(parts=tuple(parts), n_scenarios=n_scenarios)


# --- strategy and rule descriptions ------------------------------------------


@dataclass(frozen=True)
class SelectUniform:
    """Fill slots to a fixed size in arrival order; replicates Partial on
    full first-iteration input."""

    size: int


@dataclass(frozen=True)
class SelectClosest:
    """Place each cut into the nearest slot within tolerance, else into the
    next empty slot, else into the nearest slot outright.  A slot is full at
    ceil(n_atoms / slots) members."""

    slots: int
    tolerance: float = 0.3
    measure: DistanceMeasure = DistanceMeasure.ANGULAR


@dataclass(frozen=True)
class Kmedoids:
    """Cluster the buffered cuts around k medoids under a distance measure."""

    clusters: int
    measure: DistanceMeasure = DistanceMeasure.ANGULAR
    seed: int = 0


@dataclass(frozen=True)
class MultiCut:
    pass


@dataclass(frozen=True)
class SingleCut:
    pass


@dataclass(frozen=True)
class Partial:
    size: int


@dataclass(frozen=True)
class Dynamic:
    rule: Union[SelectUniform, SelectClosest]


@dataclass(frozen=True)
class Cluster:
    rule: Kmedoids


@dataclass(frozen=True)
class Granulated:
    block_size: int
    inner: "AggregationScheme"


AggregationScheme = Union[MultiCut, SingleCut, Partial, Dynamic, Cluster, Granulated]
SelectionRule = Union[SelectUniform, SelectClosest]


def validate_scheme(scheme: AggregationScheme, n_scenarios: int) -> list[str]:
    """Parameter violations of a strategy for a given scenario count."""
    out: list[str] = []

    def check(s, n_atoms, granulated_ok=True):
        if isinstance(s, Partial):
            if not 1 <= s.size <= n_atoms:
                out.append(f"partial block size {s.size} not in 1..{n_atoms}")
        elif isinstance(s, Dynamic):
            rule = s.rule
            if isinstance(rule, SelectUniform):
                if not 1 <= rule.size <= n_atoms:
                    out.append(f"uniform slot size {rule.size} not in 1..{n_atoms}")
            elif isinstance(rule, SelectClosest):
                if rule.slots < 1:
                    out.append("closest rule needs at least one slot")
                if rule.measure is DistanceMeasure.ANGULAR and not 0 <= rule.tolerance <= 1:
                    out.append("angular tolerance must lie in [0, 1]")
                if rule.tolerance < 0:
                    out.append("distance tolerance must be nonnegative")
            else:
                out.append(f"unknown selection rule {rule!r}")
        elif isinstance(s, Cluster):
            if not isinstance(s.rule, Kmedoids):
                out.append(f"unknown cluster rule {s.rule!r}")
            elif s.rule.clusters < 1:
                out.append("k-medoids needs at least one cluster")
        elif isinstance(s, Granulated):
            if not granulated_ok:
                out.append("granulated strategies cannot be nested")
                return
            if not 1 <= s.block_size <= n_atoms:
                out.append(f"granule size {s.block_size} not in 1..{n_atoms}")
                return
            check(s.inner, math.ceil(n_atoms / s.block_size), granulated_ok=False)
        elif not isinstance(s, (MultiCut, SingleCut)):
            out.append(f"unknown aggregation strategy {s!r}")

    check(scheme, n_scenarios)
    return out


# --- streaming buffer ---------------------------------------------------------


class AggregateBuffer:
    """Fixed number of slots collecting cuts; full slots flush eagerly."""

    def __init__(self, n_slots: int):
        self.slots: list[list[OptimalityCut]] = [[] for _ in range(n_slots)]
        self.flushed: list[OptimalityCut] = []

    def place(self, slot: int, cut: OptimalityCut, full_at: int) -> None:
        self.slots[slot].append(cut)
        if len(self.slots[slot]) >= full_at:
            self.flushed.append(aggregate_cuts(self.slots[slot]))
            self.slots[slot] = []

    def flush_remaining(self) -> list[OptimalityCut]:
        for slot in self.slots:
            if slot:
                self.flushed.append(aggregate_cuts(slot))
        out = self.flushed
        self.flushed = []
        self.slots = [[] for _ in self.slots]
        return out


def _apply_select_uniform(rule: SelectUniform, cuts) -> list[OptimalityCut]:
    buf = AggregateBuffer(1)
    for cut in cuts:
        buf.place(0, cut, full_at=rule.size)
    return buf.flush_remaining()


def _slot_aggregate(slot: list[OptimalityCut]) -> OptimalityCut:
    return slot[0] if len(slot) == 1 else aggregate_cuts(slot)


def _apply_select_closest(rule: SelectClosest, cuts, n_atoms: int) -> list[OptimalityCut]:
    full_at = max(1, math.ceil(n_atoms / rule.slots))
    buf = AggregateBuffer(rule.slots)
    for cut in cuts:
        nonempty = [i for i, slot in enumerate(buf.slots) if slot]
        best = -1
        best_dist = math.inf
        for i in nonempty:
            dist = aggregation_distance(cut, _slot_aggregate(buf.slots[i]), rule.measure)
            if dist < best_dist:
                best, best_dist = i, dist
        if best >= 0 and best_dist <= rule.tolerance:
            target = best
        else:
            empty = next((i for i, slot in enumerate(buf.slots) if not slot), None)
            target = empty if empty is not None else best
        buf.place(target, cut, full_at=full_at)
    return buf.flush_remaining()


# --- k-medoids ----------------------------------------------------------------


def _distance_matrix(points: Sequence[OptimalityCut], measure: DistanceMeasure) -> np.ndarray:
    n = len(points)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = aggregation_distance(points[i], points[j], measure)
            dist[i, j] = dist[j, i] = d
    return dist


def _assign(dist: np.ndarray, medoids: list[int]) -> np.ndarray:
    # nearest medoid, ties to the lowest medoid index
    cols = dist[:, medoids]
    return np.argmin(cols, axis=1)


def _total_cost(dist: np.ndarray, medoids: list[int], assignment: np.ndarray) -> float:
    return float(sum(dist[i, medoids[assignment[i]]] for i in range(len(assignment))))


def _tie_pick(candidates: np.ndarray, rng: XorShift64Star) -> int:
    if len(candidates) == 1:
        return int(candidates[0])
    return int(candidates[rng.next_uint64() % len(candidates)])


def kmedoids_cluster(
    points: Sequence[OptimalityCut],
    k: int,
    measure: DistanceMeasure,
    seed: int = 0,
) -> tuple[list[int], list[int]]:
    """Alternating (Voronoi) k-medoids with a single-swap polish.

    Seeding is greedy: start from the point with minimum total distance and
    repeatedly add the point farthest from its nearest chosen medoid; the
    seed only breaks exact ties.  Alternating sweeps reassign points to
    their nearest medoid (ties to the lowest medoid index) and re-center
    each cluster; at a fixpoint, any cost-improving single-medoid swap is
    applied and the sweeps resume.  Total cost never increases and the
    procedure stops at a swap-optimal configuration or after
    KMEDOIDS_MAX_SWEEPS rounds.

    Returns (assignment, medoids): cluster index per point and the k medoid
    point indices.
    """
    n = len(points)
    if not 1 <= k <= n:
        raise ValueError(f"cluster count {k} not in 1..{n}")
    rng = XorShift64Star(seed)
    dist = _distance_matrix(points, measure)

    totals = dist.sum(axis=1)
    first = _tie_pick(np.flatnonzero(totals == totals.min()), rng)
    medoids = [first]
    while len(medoids) < k:
        nearest = dist[:, medoids].min(axis=1)
        nearest[medoids] = -1.0
        far = _tie_pick(np.flatnonzero(nearest == nearest.max()), rng)
        medoids.append(far)

    assignment = _assign(dist, medoids)
    for _ in range(KMEDOIDS_MAX_SWEEPS):
        changed = False
        for c in range(len(medoids)):
            cluster = np.flatnonzero(assignment == c)
            if len(cluster) == 0:
                continue
            inner = dist[np.ix_(cluster, cluster)].sum(axis=1)
            best = cluster[np.flatnonzero(inner == inner.min())[0]]
            if best != medoids[c]:
                medoids[c] = int(best)
                changed = True
        new_assignment = _assign(dist, medoids)
        if changed or not np.array_equal(new_assignment, assignment):
            assignment = new_assignment
            continue
        # fixpoint: try every single-medoid swap for a strict improvement
        cost = _total_cost(dist, medoids, assignment)
        swap = None
        for c in range(len(medoids)):
            for cand in range(n):
                if cand in medoids:
                    continue
                trial = list(medoids)
                trial[c] = cand
                trial_assign = _assign(dist, trial)
                trial_cost = _total_cost(dist, trial, trial_assign)
                if trial_cost < cost - 1e-12:
                    cost, swap = trial_cost, (c, cand)
        if swap is None:
            break
        medoids[swap[0]] = swap[1]
        assignment = _assign(dist, medoids)
    return [int(a) for a in assignment], [int(mi) for mi in medoids]


# --- strategy application -----------------------------------------------------


def _order_by_members(cuts: list[OptimalityCut]) -> list[OptimalityCut]:
    return sorted(cuts, key=lambda c: c.members)


def apply_scheme(
    scheme: AggregationScheme,
    cuts: Sequence[OptimalityCut],
    n_scenarios: int,
    atom_ids: Sequence[int] | None = None,
) -> list[OptimalityCut]:
    """Aggregate one iteration's cuts according to a strategy.

    ``cuts`` must have pairwise disjoint member sets (singletons in the
    common case).  ``atom_ids`` gives each cut's position in the atom
    universe of size ``n_scenarios``; it defaults to the smallest member
    index, which is correct for singleton input.  Output member sets
    partition the input member union, and summed coefficients are conserved
    exactly.
    """
    issues = validate_scheme(scheme, n_scenarios)
    if issues:
        raise ValueError("invalid aggregation strategy: " + "; ".join(issues))
    cuts = list(cuts)
    if not cuts:
        return []
    if atom_ids is None:
        atom_ids = [min(c.members) for c in cuts]
    if len(atom_ids) != len(cuts):
        raise ValueError("atom_ids must align with cuts")

    if isinstance(scheme, MultiCut):
        return cuts
    if isinstance(scheme, SingleCut):
        return [aggregate_cuts(cuts)]
    if isinstance(scheme, Partial):
        blocks: dict[int, list[OptimalityCut]] = {}
        for cut, atom in zip(cuts, atom_ids):
            blocks.setdefault(atom // scheme.size, []).append(cut)
        return [aggregate_cuts(blocks[i]) for i in sorted(blocks)]
    if isinstance(scheme, Dynamic):
        if isinstance(scheme.rule, SelectUniform):
            return _apply_select_uniform(scheme.rule, cuts)
        return _apply_select_closest(scheme.rule, cuts, n_scenarios)
    if isinstance(scheme, Cluster):
        rule = scheme.rule
        k = min(rule.clusters, len(cuts))
        assignment, _ = kmedoids_cluster(cuts, k, rule.measure, rule.seed)
        clusters: dict[int, list[OptimalityCut]] = {}
        for cut, c in zip(cuts, assignment):
            clusters.setdefault(c, []).append(cut)
        aggregated = [aggregate_cuts(group) for group in clusters.values()]
        return _order_by_members(aggregated)
    if isinstance(scheme, Granulated):
        granule_cuts, granule_ids = granulate(cuts, atom_ids, scheme.block_size)
        n_granules = math.ceil(n_scenarios / scheme.block_size)
        return apply_scheme(scheme.inner, granule_cuts, n_granules, atom_ids=granule_ids)
    raise ValueError(f"unknown aggregation strategy {scheme!r}")


def granulate(
    cuts: Sequence[OptimalityCut], atom_ids: Sequence[int], block_size: int
) -> tuple[list[OptimalityCut], list[int]]:
    """Pre-aggregate cuts into uniform granules of atom indices.

    Returns the granule-level cuts and their granule indices, both ordered
    by granule index.
    """
    blocks: dict[int, list[OptimalityCut]] = {}
    for cut, atom in zip(cuts, atom_ids):
        blocks.setdefault(atom // block_size, []).append(cut)
    granule_ids = sorted(blocks)
    return [aggregate_cuts(blocks[g]) for g in granule_ids], granule_ids


# --- textual strategy grammar (shared by the CLI) ------------------------------

_MEASURES = {m.value: m for m in DistanceMeasure}


def _parse_params(text: str) -> dict[str, str]:
    params: dict[str, str] = {}
    rest = text
    while rest:
        if rest.startswith("inner="):
            params["inner"] = rest[len("inner="):]
            break
        piece, _, rest = rest.partition(",")
        key, eq, value = piece.partition("=")
        if not eq:
            raise ValueError(f"malformed strategy parameter {piece!r}")
        params[key.strip()] = value.strip()
    return params


def _measure_param(params: dict[str, str]) -> DistanceMeasure:
    name = params.pop("measure", "angular")
    if name not in _MEASURES:
        raise ValueError(f"unknown distance measure {name!r}")
    return _MEASURES[name]


def parse_scheme(text: str) -> AggregationScheme:
    """Parse a strategy description like ``partial:T=16`` or
    ``granulated:T0=5,inner=kmedoids:k=20``."""
    name, _, param_text = text.strip().partition(":")
    params = _parse_params(param_text) if param_text else {}

    def done(result):
        if params:
            raise ValueError(f"unexpected parameters for {name!r}: {sorted(params)}")
        return result

    try:
        if name == "multi":
            return done(MultiCut())
        if name == "single":
            return done(SingleCut())
        if name == "partial":
            return done(Partial(size=int(params.pop("T", 1))))
        if name == "uniform":
            return done(Dynamic(SelectUniform(size=int(params.pop("T", 1)))))
        if name == "closest":
            measure = _measure_param(params)
            return done(
                Dynamic(
                    SelectClosest(
                        slots=int(params.pop("A", 8)),
                        tolerance=float(params.pop("tau", 0.3)),
                        measure=measure,
                    )
                )
            )
        if name == "kmedoids":
            measure = _measure_param(params)
            return done(
                Cluster(
                    Kmedoids(
                        clusters=int(params.pop("k", 20)),
                        measure=measure,
                        seed=int(params.pop("seed", 0)),
                    )
                )
            )
        if name == "granulated":
            inner = parse_scheme(params.pop("inner", "closest"))
            if isinstance(inner, Granulated):
                raise ValueError("granulated strategies cannot be nested")
            return done(Granulated(block_size=int(params.pop("T0", 5)), inner=inner))
    except ValueError:
        raise
    except Exception as exc:  # int()/float() conversion failures
        raise ValueError(f"malformed strategy {text!r}: {exc}") from exc
    raise ValueError(f"unknown aggregation strategy {name!r}")


def scheme_label(scheme: AggregationScheme) -> str:
    """Canonical textual form accepted back by parse_scheme."""
    if isinstance(scheme, MultiCut):
        return "multi"
    if isinstance(scheme, SingleCut):
        return "single"
    if isinstance(scheme, Partial):
        return f"partial:T={scheme.size}"
    if isinstance(scheme, Dynamic):
        rule = scheme.rule
        if isinstance(rule, SelectUniform):
            return f"uniform:T={rule.size}"
        return f"closest:A={rule.slots},tau={rule.tolerance:g},measure={rule.measure.value}"
    if isinstance(scheme, Cluster):
        rule = scheme.rule
        return f"kmedoids:k={rule.clusters},measure={rule.measure.value},seed={rule.seed}"
    if isinstance(scheme, Granulated):
        return f"granulated:T0={scheme.block_size},inner={scheme_label(scheme.inner)}"
    raise ValueError(f"unknown aggregation strategy {scheme!r}")


def with_parameter(scheme: AggregationScheme, name: str, value: float) -> AggregationScheme:
    """Return a copy of the strategy with one named parameter replaced.

    Used by the benchmark sweep; the parameter names match the textual
    grammar (T, A, tau, k, T0, seed).
    """
    if isinstance(scheme, Partial) and name == "T":
        return Partial(size=int(value))
    if isinstance(scheme, Dynamic):
        rule = scheme.rule
        if isinstance(rule, SelectUniform) and name == "T":
            return Dynamic(SelectUniform(size=int(value)))
        if isinstance(rule, SelectClosest):
            if name == "tau":
                return Dynamic(replace(rule, tolerance=float(value)))
            if name == "A":
                return Dynamic(replace(rule, slots=int(value)))
    if isinstance(scheme, Cluster):
        if name == "k":
            return Cluster(replace(scheme.rule, clusters=int(value)))
        if name == "seed":
            return Cluster(replace(scheme.rule, seed=int(value)))
    if isinstance(scheme, Granulated) and name == "T0":
        return Granulated(block_size=int(value), inner=scheme.inner)
    raise ValueError(f"strategy {scheme_label(scheme)!r} has no parameter {name!r}")
