"""The decomposition loop: master maintenance, subproblem solves, cuts.

Each iteration solves the master for (x, theta) and solves every scenario
subproblem at x in parallel.  If any subproblem is infeasible, the iteration
adds only feasibility cuts and repeats.  Otherwise the scenario cuts are
partitioned by the configured strategy over the full scenario set, and each
aggregate enters the master unless the current iterate already satisfies it.
Filtering at the aggregate level keeps every new iteration's rows covering
all theta columns, which is what rules out objective-neutral theta
redistribution between scenarios.

The master keeps one theta column per scenario, so aggregates over arbitrary
scenario subsets stay valid as the partition changes across iterations; a
granulated strategy instead fixes one theta column per granule for the whole
run and works with granule-level cuts throughout.

The run terminates Converged when the relative gap
(upper_best - lower) / max(1, |upper_best|) reaches the tolerance or when an
iteration adds no cuts at all.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .aggregation import (
    AggregationScheme,
    Cluster,
    Granulated,
    Kmedoids,
    SingleCut,
    apply_scheme,
    granulate,
    scheme_label,
    validate_scheme,
)
from .cuts import (
    FeasibilityCut,
    OptimalityCut,
    make_feasibility_cut,
    make_optimality_cut,
)
from .problem import LinearProgram, TwoStageProblem, validate_problem
from .simplex import LpStatus, solve_lp

logger = logging.getLogger(__name__)
if not logger.hasHandlers():
    logger.addHandler(logging.NullHandler())


@dataclass
class EngineConfig:
    scheme: AggregationScheme = field(default_factory=SingleCut)
    rel_tol: float = 1e-2
    violation_tol: float = 1e-6
    max_iterations: int = 5000
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(eq=False)
class IterationRecord:
    index: int
    x: np.ndarray
    lower: float
    upper: float
    cuts_added: int
    cuts_skipped: int
    feasibility_cuts: int
    partition: tuple[tuple[int, ...], ...]


class SolveStatus:
    CONVERGED = "converged"
    ITERATION_LIMIT = "iteration_limit"
    MASTER_INFEASIBLE = "master_infeasible"


@dataclass(eq=False)
class SolveReport:
    status: str
    x: np.ndarray | None
    objective: float | None
    history: list[IterationRecord]
    n_iterations: int
    n_cuts: int
    wall_seconds: float
    cuts: list[OptimalityCut]
    scheme: str
    rel_tol: float


@dataclass(eq=False)
class SubproblemResult:
    feasible: bool
    value: float | None = None
    duals: np.ndarray | None = None
    farkas: np.ndarray | None = None


def solve_subproblem(problem: TwoStageProblem, s: int, x: np.ndarray) -> SubproblemResult:
    """Recourse value and duals of scenario s at first-stage point x.

    Optimal: value Q_s(x) with equality duals lam such that
    lam'(h_s - T_s x) = Q_s(x).  Infeasible: a certificate sigma with
    sigma'W <= 0.  An unbounded recourse is a modeling error and raises.
    """
    scen = problem.scenarios[s]
    x = np.asarray(x, dtype=float)
    lp = LinearProgram(
        c=scen.q,
        A=problem.W,
        b=scen.h - scen.T @ x,
        lb=np.zeros(problem.m),
        ub=np.full(problem.m, np.inf),
        n_structural=problem.m,
    )
    sol = solve_lp(lp)
    if sol.status is LpStatus.OPTIMAL:
        return SubproblemResult(feasible=True, value=sol.objective, duals=sol.duals)
    if sol.status is LpStatus.INFEASIBLE:
        return SubproblemResult(feasible=False, farkas=sol.farkas)
    raise RuntimeError(
        f"scenario {s} has an unbounded recourse problem; the model violates "
        "standard complete-recourse assumptions"
    )


class _Master:
    """Cut pool plus deterministic LP assembly.

    Columns: x (n), theta (one per scenario, or per granule for granulated
    runs), then one slack per cut row in insertion order.  Theta columns
    enter the objective only once covered by at least one row.
    """

    def __init__(self, problem: TwoStageProblem, n_theta: int):
        self.problem = problem
        self.n_theta = n_theta
        self.rows: list[tuple[np.ndarray, tuple[int, ...], float]] = []
        self.optimality: list[OptimalityCut] = []
        self.covered: set[int] = set()

    def add_optimality(self, cut: OptimalityCut, theta_cols: tuple[int, ...]) -> None:
        self.rows.append((cut.grad, theta_cols, cut.offset))
        self.optimality.append(cut)
        self.covered.update(theta_cols)

    def add_feasibility(self, cut: FeasibilityCut) -> None:
        self.rows.append((cut.grad, (), cut.offset))

    @property
    def all_covered(self) -> bool:
        return len(self.covered) == self.n_theta

    def build(self) -> LinearProgram:
        first = self.problem.first
        n, p = first.n, first.p
        n_rows = p + len(self.rows)
        n_cols = n + self.n_theta + len(self.rows)
        A = np.zeros((n_rows, n_cols))
        b = np.zeros(n_rows)
        if p:
            A[:p, :n] = first.A
            b[:p] = first.b
        for i, (grad, theta_cols, offset) in enumerate(self.rows):
            r = p + i
            A[r, :n] = grad
            for t in theta_cols:
                A[r, n + t] = 1.0
            A[r, n + self.n_theta + i] = -1.0  # surplus: row is >= offset
            b[r] = offset
        c = np.zeros(n_cols)
        c[:n] = first.c
        for t in self.covered:
            c[n + t] = 1.0
        lb = np.zeros(n_cols)
        lb[n : n + self.n_theta] = -np.inf
        ub = np.full(n_cols, np.inf)
        return LinearProgram(c=c, A=A, b=b, lb=lb, ub=ub, n_structural=n + self.n_theta)


def _effective_scheme(scheme: AggregationScheme, seed: int) -> AggregationScheme:
    # a clustering rule without an explicit seed inherits the engine seed
    if isinstance(scheme, Cluster) and scheme.rule.seed == 0 and seed != 0:
        return Cluster(Kmedoids(scheme.rule.clusters, scheme.rule.measure, seed))
    if isinstance(scheme, Granulated):
        inner = _effective_scheme(scheme.inner, seed)
        if inner is not scheme.inner:
            return Granulated(scheme.block_size, inner)
    return scheme


def _aggregate_violation(cut, x, theta, theta_cols) -> float:
    return float(cut.offset - cut.grad @ x - sum(theta[t] for t in theta_cols))


def solve_lshaped(problem: TwoStageProblem, config: EngineConfig) -> SolveReport:
    """Run the decomposition until convergence, iteration cap, or an
    infeasible master."""
    issues = validate_problem(problem)
    if issues:
        raise ValueError("invalid problem: " + "; ".join(issues))
    scheme = _effective_scheme(config.scheme, config.seed)
    scheme_issues = validate_scheme(scheme, problem.n_scenarios)
    if scheme_issues:
        raise ValueError("invalid aggregation strategy: " + "; ".join(scheme_issues))

    start = time.perf_counter()
    n = problem.n
    N = problem.n_scenarios
    granulated = isinstance(scheme, Granulated)
    if granulated:
        n_theta = math.ceil(N / scheme.block_size)
        theta_col = [s // scheme.block_size for s in range(N)]
        inner_scheme = scheme.inner
    else:
        n_theta = N
        theta_col = list(range(N))
        inner_scheme = scheme

    master = _Master(problem, n_theta)
    history: list[IterationRecord] = []
    upper_best = math.inf
    x_star: np.ndarray | None = None
    status = SolveStatus.ITERATION_LIMIT

    pool = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        for k in range(1, config.max_iterations + 1):
            sol = solve_lp(master.build())
            if sol.status is LpStatus.INFEASIBLE:
                status = SolveStatus.MASTER_INFEASIBLE
                break
            if sol.status is LpStatus.UNBOUNDED:
                raise RuntimeError(
                    "master problem is unbounded; add first-stage constraints "
                    "that bound the feasible region"
                )
            x = sol.x[:n]
            theta = sol.x[n : n + n_theta]
            lower = sol.objective if master.all_covered else -math.inf

            if pool is not None:
                results = list(pool.map(lambda s: solve_subproblem(problem, s, x), range(N)))
            else:
                results = [solve_subproblem(problem, s, x) for s in range(N)]

            infeasible = [s for s in range(N) if not results[s].feasible]
            if infeasible:
                for s in infeasible:
                    cut = make_feasibility_cut(
                        results[s].farkas, problem.scenarios[s], problem.W, s
                    )
                    master.add_feasibility(cut)
                history.append(
                    IterationRecord(
                        index=k, x=x, lower=lower, upper=math.inf,
                        cuts_added=0, cuts_skipped=0,
                        feasibility_cuts=len(infeasible), partition=(),
                    )
                )
                logger.debug("iteration %d: %d feasibility cuts", k, len(infeasible))
                continue

            recourse = sum(
                problem.scenarios[s].pi * results[s].value for s in range(N)
            )
            upper = float(problem.first.c @ x + recourse)
            if upper < upper_best:
                upper_best = upper
                x_star = x.copy()

            gap = (upper_best - lower) / max(1.0, abs(upper_best))
            if math.isfinite(lower) and gap <= config.rel_tol:
                history.append(
                    IterationRecord(
                        index=k, x=x, lower=lower, upper=upper,
                        cuts_added=0, cuts_skipped=0, feasibility_cuts=0, partition=(),
                    )
                )
                status = SolveStatus.CONVERGED
                logger.debug("iteration %d: converged, gap %.3g", k, gap)
                break

            # every scenario participates in aggregation each iteration, so
            # the new aggregates cover all theta columns; filtering happens
            # only at the aggregate level (a satisfied aggregate is skipped)
            singletons = [
                make_optimality_cut(s, results[s].duals, problem.scenarios[s], iteration=k)
                for s in range(N)
            ]
            if granulated:
                atoms, atom_ids = granulate(singletons, list(range(N)), scheme.block_size)
                n_atoms = n_theta
            else:
                atoms, atom_ids = singletons, list(range(N))
                n_atoms = N

            skipped = 0
            added = 0
            partition: list[tuple[int, ...]] = []
            aggregates = apply_scheme(inner_scheme, atoms, n_atoms, atom_ids=atom_ids)
            for agg in aggregates:
                if granulated:
                    cols = tuple(sorted({theta_col[s] for s in agg.members}))
                else:
                    cols = agg.members
                if set(cols) <= master.covered and _aggregate_violation(
                    agg, x, theta, cols
                ) <= config.violation_tol * (1.0 + abs(agg.offset)):
                    skipped += 1
                    continue
                master.add_optimality(agg, cols)
                partition.append(agg.members)
                added += 1

            history.append(
                IterationRecord(
                    index=k, x=x, lower=lower, upper=upper,
                    cuts_added=added, cuts_skipped=skipped,
                    feasibility_cuts=0, partition=tuple(partition),
                )
            )
            logger.debug(
                "iteration %d: lower %.6g upper %.6g added %d skipped %d",
                k, lower, upper, added, skipped,
            )
            if added == 0:
                status = SolveStatus.CONVERGED
                break
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    wall = time.perf_counter() - start
    converged = status == SolveStatus.CONVERGED
    objective = upper_best if (converged or math.isfinite(upper_best)) else None
    return SolveReport(
        status=status,
        x=x_star,
        objective=objective,
        history=history,
        n_iterations=len(history),
        n_cuts=len(master.optimality),
        wall_seconds=wall,
        cuts=list(master.optimality),
        scheme=scheme_label(config.scheme),
        rel_tol=config.rel_tol,
    )


def compute_relative_complexities(
    run: SolveReport, multi_baseline: SolveReport, single_baseline: SolveReport
) -> tuple[float, float, float]:
    """(cuts / multi-cut cuts, iterations / single-cut iterations,
    wall time / single-cut wall time); all three runs must have converged."""
    for name, report in (
        ("run", run), ("multi baseline", multi_baseline), ("single baseline", single_baseline)
    ):
        if report.status != SolveStatus.CONVERGED:
            raise ValueError(f"{name} did not converge")
    return (
        run.n_cuts / multi_baseline.n_cuts,
        run.n_iterations / single_baseline.n_iterations,
        run.wall_seconds / single_baseline.wall_seconds,
    )
