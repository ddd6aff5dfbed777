"""Exact worst-case iteration bounds for aggregated cutting-plane solves.

Inputs: scenario count N, slope number b (the largest number of distinct
axis-parallel slopes of any scenario's recourse function, supplied by the
caller), and the recourse row dimension m.  All arithmetic is exact Python
integers; the values explode combinatorially fast, which is the point.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence


def binomial(n: int, k: int) -> int:
    if not 0 <= k <= n:
        raise ValueError(f"binomial requires 0 <= k <= n, got ({n}, {k})")
    return math.comb(n, k)


@lru_cache(maxsize=None)
def _stirling2(n: int, k: int) -> int:
    if n == 0 and k == 0:
        return 1
    if n == 0 or k == 0:
        return 0
    return k * _stirling2(n - 1, k) + _stirling2(n - 1, k - 1)


def stirling2(n: int, k: int) -> int:
    """Partitions of n elements into exactly k nonempty subsets."""
    if not 0 <= k <= n:
        raise ValueError(f"stirling2 requires 0 <= k <= n, got ({n}, {k})")
    return _stirling2(n, k)


def bell(n: int) -> int:
    """All partitions of n elements: sum of stirling2(n, k) over k."""
    if n < 0:
        raise ValueError("bell requires n >= 0")
    return sum(_stirling2(n, k) for k in range(n + 1))


def _check_positive(**kwargs: int) -> None:
    for name, value in kwargs.items():
        if value < 1:
            raise ValueError(f"{name} must be at least 1, got {value}")


def bound_single_cut(n_scenarios: int, b: int, m: int) -> int:
    """[1 + N(b-1)]^m iterations in the worst case with full aggregation."""
    _check_positive(n_scenarios=n_scenarios, b=b, m=m)
    return (1 + n_scenarios * (b - 1)) ** m


def bound_multi_cut(n_scenarios: int, b: int, m: int) -> int:
    """1 + N(b^m - 1) iterations in the worst case with no aggregation."""
    _check_positive(n_scenarios=n_scenarios, b=b, m=m)
    return 1 + n_scenarios * (b**m - 1)


def bound_aggregated(sizes: Sequence[int], b: int, m: int) -> int:
    """1 + sum_a [1 + |S_a|(b-1)]^m - A for a static partition with the
    given part sizes."""
    sizes = [int(s) for s in sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError("sizes must be a nonempty list of positive integers")
    _check_positive(b=b, m=m)
    return 1 + sum((1 + s * (b - 1)) ** m for s in sizes) - len(sizes)


def bound_aggregated_upper(size: int, level: int, b: int, m: int) -> int:
    """1 + A([1 + A_L(b-1)]^m - 1): upper bound from the aggregation size A
    and level A_L alone."""
    _check_positive(size=size, level=level, b=b, m=m)
    return 1 + size * ((1 + level * (b - 1)) ** m - 1)


def bound_dynamic(n_scenarios: int, b: int, m: int, initial_aggregates: int) -> int:
    """Worst case when the partition may change every iteration."""
    return bound_dynamic_restricted(n_scenarios, b, m, initial_aggregates, 1, n_scenarios)


def bound_dynamic_restricted(
    n_scenarios: int, b: int, m: int, initial_aggregates: int, lo: int, hi: int
) -> int:
    """Dynamic worst case when every iteration's largest part size lies in
    [lo, hi]:

        2 + sum_{a=lo..hi} C(N,a) [1 + a(b-1)]^m - sum_{a=lo..hi} S(N,a) - A_0
    """
    _check_positive(n_scenarios=n_scenarios, b=b, m=m)
    if not 1 <= initial_aggregates <= n_scenarios:
        raise ValueError("initial aggregate count must lie in 1..N")
    if not 1 <= lo <= hi <= n_scenarios:
        raise ValueError(f"invalid size limits [{lo}, {hi}] for N={n_scenarios}")
    facets = sum(
        binomial(n_scenarios, a) * (1 + a * (b - 1)) ** m for a in range(lo, hi + 1)
    )
    partitions = sum(stirling2(n_scenarios, a) for a in range(lo, hi + 1))
    return 2 + facets - partitions - initial_aggregates
