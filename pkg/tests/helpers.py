"""Shared fixtures-in-code: the P1 instance and seeded instance generators.

P1: one first-stage variable with unit cost and no first-stage rows; two
equally likely scenarios with recourse y - u = h_s - x, recourse costs
(1, 0), and h = 2 or 4.  The expected cost x + 0.5 max(2-x, 0)
+ 0.5 max(4-x, 0) is flat at 3.0 on x in [0, 2].
"""

from __future__ import annotations

import numpy as np

from lshaped import (
    FirstStage,
    RandomEntry,
    Scenario,
    StochasticTemplate,
    TwoStageProblem,
    sample_instance,
)

P1_OPTIMUM = 3.0


def build_p1() -> TwoStageProblem:
    first = FirstStage(c=[1.0], A=np.zeros((0, 1)), b=[])
    scenarios = (
        Scenario(pi=0.5, q=[1.0, 0.0], T=[[1.0]], h=[2.0]),
        Scenario(pi=0.5, q=[1.0, 0.0], T=[[1.0]], h=[4.0]),
    )
    return TwoStageProblem(first=first, W=[[1.0, -1.0]], scenarios=scenarios)


def random_template(seed: int) -> StochasticTemplate:
    """Complete-recourse template: W = [I | -I] with positive recourse costs
    keeps every subproblem feasible and bounded for any first-stage point."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    q_rows = int(rng.integers(1, 3))
    m = 2 * q_rows
    c = rng.uniform(0.5, 2.0, n)
    A = np.ones((1, n))
    b = [float(rng.uniform(1.0, 3.0))]
    W = np.hstack([np.eye(q_rows), -np.eye(q_rows)])
    q = rng.uniform(0.2, 2.0, m)
    T = rng.uniform(-1.0, 1.0, (q_rows, n))
    h = rng.uniform(-2.0, 2.0, q_rows)
    entries = []
    for _ in range(int(rng.integers(2, 4))):
        target = str(rng.choice(["h", "T", "q"]))
        row, col = int(rng.integers(0, q_rows)), 0
        count = int(rng.integers(2, 4))
        if target == "T":
            col = int(rng.integers(0, n))
            values = rng.uniform(-2.0, 2.0, count)
        elif target == "q":
            row, col = 0, int(rng.integers(0, m))
            values = rng.uniform(0.2, 2.0, count)  # negative costs unbound the recourse
        else:
            values = rng.uniform(-2.0, 2.0, count)
        probs = rng.uniform(0.1, 1.0, count)
        probs = probs / probs.sum()
        entries.append(RandomEntry(target, row, col, tuple(zip(values, probs))))
    return StochasticTemplate(FirstStage(c, A, b), W, q, T, h, tuple(entries))


def random_instance(seed: int, n_scenarios: int) -> TwoStageProblem:
    return sample_instance(random_template(seed), n_scenarios, seed + 1000)


def trend_template(seed: int) -> StochasticTemplate:
    """Larger sweep instance: 3 first-stage variables on a simplex, 2
    recourse rows, randomness on both right-hand sides and two technology
    entries."""
    rng = np.random.default_rng(seed)
    n, q_rows = 3, 2
    m = 2 * q_rows
    c = rng.uniform(0.5, 2.0, n)
    A = np.ones((1, n))
    b = [2.0]
    W = np.hstack([np.eye(q_rows), -np.eye(q_rows)])
    q = rng.uniform(0.2, 2.0, m)
    T = rng.uniform(-1.0, 1.0, (q_rows, n))
    h = rng.uniform(-2.0, 2.0, q_rows)
    entries = []
    for row in range(q_rows):
        values = rng.uniform(-2.0, 2.0, 4)
        probs = rng.uniform(0.1, 1.0, 4)
        probs = probs / probs.sum()
        entries.append(RandomEntry("h", row, 0, tuple(zip(values, probs))))
    for _ in range(2):
        values = rng.uniform(-1.5, 1.5, 3)
        probs = rng.uniform(0.1, 1.0, 3)
        probs = probs / probs.sum()
        entries.append(
            RandomEntry(
                "T", int(rng.integers(0, q_rows)), int(rng.integers(0, n)),
                tuple(zip(values, probs)),
            )
        )
    return StochasticTemplate(FirstStage(c, A, b), W, q, T, h, tuple(entries))


P1_CORE = """NAME          P1
ROWS
 N  OBJ
 G  R2
COLUMNS
    X         OBJ       1.0        R2        1.0
    Y         OBJ       1.0        R2        1.0
RHS
    RHS1      R2        2.0
ENDATA
"""

P1_TIME = """TIME          P1
PERIODS
    X         OBJ       T1
    Y         R2        T2
ENDATA
"""

P1_STOCH = """STOCH         P1
INDEP         DISCRETE
    RHS1      R2        2.0       0.5
    RHS1      R2        4.0       0.5
ENDATA
"""
