"""Self-contained bounded-variable simplex for equality-form LPs.

Solves   min c'x   s.t.   A x = b,   lb <= x <= ub   (bounds may be infinite)

with a two-phase revised simplex that maintains an explicit basis inverse.
Phase 1 minimizes the sum of artificial variables from a signed artificial
basis; a positive phase-1 optimum yields an infeasibility certificate sigma
(the phase-1 duals) with sigma'A_j <= 0 for columns bounded only below,
sigma'A_j >= 0 for columns bounded only above, sigma'A_j = 0 for free
columns, and sigma'b minus the finite-bound terms strictly positive.

Pricing is Dantzig (largest reduced-cost violation); after 50 consecutive
degenerate steps the solve switches to Bland's rule, which guarantees
termination.  All choices are index-deterministic: identical input produces
an identical pivot sequence and identical floating-point output.

Dual sign convention: duals y are the equality-row multipliers with
y = c_B' B^{-1}, so for a minimization subproblem whose nonbasic variables
sit at zero lower bounds, y'b equals the optimal objective.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .problem import LinearProgram

FEASIBILITY_TOL = 1e-9
OPTIMALITY_TOL = 1e-9
ZERO_PIVOT_TOL = 1e-11

_PHASE1_TOL = 1e-7
_BLAND_TRIGGER = 50
_REFACTOR_EVERY = 64
_RATIO_TIE_TOL = 1e-12


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class SimplexError(RuntimeError):
    """Raised when the pivot cap is hit or a pivot becomes numerically unusable."""


@dataclass(eq=False)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None
    farkas: np.ndarray | None = None


@dataclass
class KktReport:
    primal: float
    dual: float
    complementarity: float


class _Simplex:
    """Working state: extended columns (structurals then artificials)."""

    def __init__(self, lp: LinearProgram):
        A = np.array(lp.A, dtype=float)
        b = np.array(lp.b, dtype=float)
        m, n = A.shape
        self.m = m
        self.n_struct = n
        lb = np.array(lp.lb, dtype=float)
        ub = np.array(lp.ub, dtype=float)
        start = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
        resid = b - A @ start if n else b.copy()
        sign = np.where(resid >= 0.0, 1.0, -1.0)
        self.A = np.hstack([A, np.diag(sign)]) if m else A.copy()
        self.b = b
        self.lb = np.concatenate([lb, np.zeros(m)])
        self.ub = np.concatenate([ub, np.full(m, np.inf)])
        self.x = np.concatenate([start, np.abs(resid)])
        self.basis = np.arange(n, n + m, dtype=int)
        total = n + m
        self.in_basis = np.zeros(total, dtype=bool)
        self.in_basis[self.basis] = True
        # nonbasic resting spot: at finite ub when lb is infinite, else at lb
        # (or at zero for doubly-infinite columns)
        self.at_upper = ~np.isfinite(self.lb) & np.isfinite(self.ub)
        self.at_upper[self.basis] = False
        self.Binv = np.diag(sign) if m else np.zeros((0, 0))
        self._since_refactor = 0

    def _nonbasic_values(self) -> np.ndarray:
        vals = np.where(self.at_upper, self.ub, np.where(np.isfinite(self.lb), self.lb, 0.0))
        vals[self.in_basis] = 0.0
        return vals

    def refresh(self) -> None:
        """Refactorize and recompute basic values from scratch."""
        if self.m == 0:
            return
        self.Binv = np.linalg.inv(self.A[:, self.basis])
        vals = self._nonbasic_values()
        rhs = self.b - self.A @ vals
        x = vals
        x[self.basis] = self.Binv @ rhs
        self.x = x
        self._since_refactor = 0

    def duals(self, c: np.ndarray) -> np.ndarray:
        return c[self.basis] @ self.Binv if self.m else np.zeros(0)

    def _eta_update(self, w: np.ndarray, row: int, refactor_every: int) -> None:
        pivot = w[row]
        new_row = self.Binv[row] / pivot
        self.Binv = self.Binv - np.outer(w, new_row)
        self.Binv[row] = new_row
        self._since_refactor += 1
        if self._since_refactor >= refactor_every:
            self.refresh()

    def _basic_bound_violation(self) -> float:
        if self.m == 0:
            return 0.0
        xb = self.x[self.basis]
        low = np.maximum(self.lb[self.basis] - xb, 0.0)
        high = np.maximum(xb - self.ub[self.basis], 0.0)
        return float(max(low.max(initial=0.0), high.max(initial=0.0)))

    def run(self, c: np.ndarray, cap: int, refactor_every: int = _REFACTOR_EVERY) -> LpStatus:
        """Primal iterations for objective c until optimal or unbounded.

        Claimed optima and suspiciously small pivots are re-verified against
        a fresh factorization before being acted on; ratio-test ties go to
        the largest pivot element (Bland mode: lowest variable index).
        """
        bland = False
        degenerate_run = 0
        pivots = 0
        finite_lb = np.isfinite(self.lb)
        finite_ub = np.isfinite(self.ub)
        while pivots < cap:
            y = self.duals(c)
            d = c - y @ self.A if self.m else c.copy()
            nonbasic = ~self.in_basis
            at_lo = nonbasic & ~self.at_upper & finite_lb
            at_up = nonbasic & self.at_upper
            free = nonbasic & ~finite_lb & ~finite_ub
            improving = (
                (at_lo & (d < -OPTIMALITY_TOL))
                | (at_up & (d > OPTIMALITY_TOL))
                | (free & (np.abs(d) > OPTIMALITY_TOL))
            )
            if not improving.any():
                if self._since_refactor > 0:
                    self.refresh()
                    continue  # confirm optimality with a clean inverse
                if self._basic_bound_violation() > 1e-6:
                    raise SimplexError("basis lost primal feasibility")
                return LpStatus.OPTIMAL
            if bland:
                j = int(np.flatnonzero(improving)[0])
            else:
                score = np.where(improving, np.abs(d), -1.0)
                j = int(np.argmax(score))
            direction = 1.0
            if (self.at_upper[j]) or (free[j] and d[j] > 0):
                direction = -1.0

            w = self.Binv @ self.A[:, j] if self.m else np.zeros(0)
            delta = -direction * w  # basic-value rate of change per unit step

            # own-bound flip distance
            if finite_lb[j] and finite_ub[j]:
                t_own = self.ub[j] - self.lb[j]
            else:
                t_own = np.inf

            xb = self.x[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                room = np.full(self.m, np.inf)
                up = delta > ZERO_PIVOT_TOL
                dn = delta < -ZERO_PIVOT_TOL
                room[up] = (self.ub[self.basis[up]] - xb[up]) / delta[up]
                room[dn] = (self.lb[self.basis[dn]] - xb[dn]) / delta[dn]
            room = np.maximum(room, 0.0)
            t_basic = room.min() if self.m else np.inf

            if not np.isfinite(min(t_own, t_basic)):
                return LpStatus.UNBOUNDED

            if t_basic <= t_own:
                ties = np.flatnonzero(room <= t_basic + _RATIO_TIE_TOL)
                if bland:
                    leave_pos = int(ties[np.argmin(self.basis[ties])])
                else:
                    leave_pos = int(ties[np.argmax(np.abs(w[ties]))])
                if abs(w[leave_pos]) < 1e-7 and self._since_refactor > 0:
                    self.refresh()  # suspicious pivot: retry from a clean inverse
                    continue
                if abs(w[leave_pos]) <= ZERO_PIVOT_TOL:
                    raise SimplexError("pivot element below zero tolerance")
                step = float(room[leave_pos])
                self.x[j] += direction * step
                self.x[self.basis] -= direction * step * w
                old = int(self.basis[leave_pos])
                hit_upper = delta[leave_pos] > 0
                self.x[old] = self.ub[old] if hit_upper else self.lb[old]
                self.in_basis[old] = False
                self.at_upper[old] = bool(hit_upper)
                self.basis[leave_pos] = j
                self.in_basis[j] = True
                self.at_upper[j] = False
                self._eta_update(w, leave_pos, refactor_every)
            else:
                step = float(t_own)
                self.x[self.basis] -= direction * step * w
                self.at_upper[j] = not self.at_upper[j]
                self.x[j] = self.ub[j] if self.at_upper[j] else self.lb[j]

            pivots += 1
            if step <= ZERO_PIVOT_TOL:
                degenerate_run += 1
                if degenerate_run >= _BLAND_TRIGGER:
                    bland = True
            else:
                degenerate_run = 0
        raise SimplexError("simplex iteration limit exceeded")


def _solve_two_phase(lp: LinearProgram, cap: int, refactor_every: int) -> LpSolution:
    m, n = lp.A.shape
    state = _Simplex(lp)

    phase1_c = np.concatenate([np.zeros(n), np.ones(m)])
    status = state.run(phase1_c, cap, refactor_every)
    if status is not LpStatus.OPTIMAL:  # pragma: no cover - phase 1 is bounded below
        raise SimplexError("phase 1 terminated without an optimum")
    infeas = float(phase1_c @ state.x)
    if infeas > _PHASE1_TOL:
        sigma = state.duals(phase1_c)
        scale = np.max(np.abs(sigma))
        if scale > 0:
            sigma = sigma / scale
        return LpSolution(status=LpStatus.INFEASIBLE, farkas=sigma)

    # pin artificials at zero for phase 2
    state.ub[n:] = 0.0
    state.x[n:] = np.where(state.in_basis[n:], state.x[n:], 0.0)
    state.at_upper[n:] = False
    phase2_c = np.concatenate([lp.c, np.zeros(m)])
    status = state.run(phase2_c, cap, refactor_every)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(status=LpStatus.UNBOUNDED)
    x = state.x[:n].copy()
    duals = state.duals(phase2_c).copy()
    return LpSolution(
        status=LpStatus.OPTIMAL, x=x, objective=float(lp.c @ x), duals=duals, farkas=None
    )


def solve_lp(lp: LinearProgram, max_pivots: int | None = None) -> LpSolution:
    """Solve an equality-form LP; status-complete and deterministic.

    Optimal solutions carry equality-row duals; infeasible ones carry a
    Farkas certificate normalized to unit max-norm.  A solve that loses
    numerical footing is retried once with an aggressive refactorization
    cadence before the error propagates.
    """
    m, n = lp.A.shape
    cap = max_pivots if max_pivots is not None else max(2000, 100 * (n + m))
    try:
        return _solve_two_phase(lp, cap, _REFACTOR_EVERY)
    except SimplexError:
        return _solve_two_phase(lp, cap, 4)


def verify_kkt(lp: LinearProgram, sol: LpSolution) -> KktReport:
    """Residuals of the optimality conditions for a claimed optimal solution.

    primal: worst equality and bound violation; dual: worst reduced-cost sign
    violation given each variable's position; complementarity: worst product
    of a reduced cost with the distance to its finite active bound.
    """
    if sol.status is not LpStatus.OPTIMAL:
        raise ValueError("verify_kkt requires an optimal solution")
    x, y = sol.x, sol.duals
    primal = 0.0
    if len(lp.b):
        primal = float(np.max(np.abs(lp.A @ x - lp.b)))
    primal = max(primal, float(np.max(np.maximum(lp.lb - x, 0.0), initial=0.0)))
    primal = max(primal, float(np.max(np.maximum(x - lp.ub, 0.0), initial=0.0)))

    reduced = lp.c - (y @ lp.A if len(lp.b) else 0.0)
    pos_tol = FEASIBILITY_TOL * 10
    dual = 0.0
    comp = 0.0
    for j in range(len(x)):
        at_lower = np.isfinite(lp.lb[j]) and x[j] <= lp.lb[j] + pos_tol
        at_upper = np.isfinite(lp.ub[j]) and x[j] >= lp.ub[j] - pos_tol
        r = float(reduced[j])
        if at_lower and at_upper:
            continue  # fixed variable: any reduced cost is fine
        if at_lower:
            dual = max(dual, -r)
        elif at_upper:
            dual = max(dual, r)
        else:
            dual = max(dual, abs(r))
        if np.isfinite(lp.lb[j]):
            comp = max(comp, max(r, 0.0) * (x[j] - lp.lb[j]))
        if np.isfinite(lp.ub[j]):
            comp = max(comp, max(-r, 0.0) * (lp.ub[j] - x[j]))
    return KktReport(primal=primal, dual=max(dual, 0.0), complementarity=comp)


def verify_farkas(lp: LinearProgram, sigma: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
    """Check that sigma certifies infeasibility of {A x = b, lb <= x <= ub}.

    Requires sup over the box of sigma'(A x) to fall strictly short of
    sigma'b: sign conditions on columns with an infinite bound, finite-bound
    contributions subtracted explicitly.
    """
    sA = sigma @ lp.A
    bound_sum = 0.0
    for j, v in enumerate(sA):
        if v > tol:
            if not np.isfinite(lp.ub[j]):
                return False
            bound_sum += v * lp.ub[j]
        elif v < -tol:
            if not np.isfinite(lp.lb[j]):
                return False
            bound_sum += v * lp.lb[j]
    return float(sigma @ lp.b) - bound_sum > tol
