import itertools

import numpy as np
import pytest

from lshaped import (
    LinearProgram,
    LpSolution,
    LpStatus,
    solve_lp,
    verify_farkas,
    verify_kkt,
)


def brute_force_optimum(lp):
    """Vertex enumeration over basic solutions; needs finite bounds on every
    nonbasic choice, which the generated LPs guarantee."""
    m, n = lp.A.shape
    if m == 0:
        x = np.where(lp.c >= 0, lp.lb, lp.ub)
        return float(lp.c @ x)
    best = np.inf
    for basis in itertools.combinations(range(n), m):
        B = lp.A[:, basis]
        if abs(np.linalg.det(B)) < 1e-9:
            continue
        nonbasis = [j for j in range(n) if j not in basis]
        for bits in itertools.product((0, 1), repeat=len(nonbasis)):
            xn = np.array(
                [lp.lb[j] if bit == 0 else lp.ub[j] for j, bit in zip(nonbasis, bits)]
            )
            if not np.isfinite(xn).all():
                continue
            x = np.zeros(n)
            x[list(nonbasis)] = xn
            rhs = lp.b - lp.A[:, nonbasis] @ xn if nonbasis else lp.b
            xb = np.linalg.solve(B, rhs)
            x[list(basis)] = xb
            if (x >= lp.lb - 1e-9).all() and (x <= lp.ub + 1e-9).all():
                best = min(best, float(lp.c @ x))
    return best


def random_box_lp(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 9))
    n = int(rng.integers(m + 1, 11))
    A = rng.uniform(-2.0, 2.0, (m, n))
    lb = np.zeros(n)
    ub = rng.uniform(0.5, 3.0, n)
    x0 = rng.uniform(0.0, 1.0, n) * ub  # interior point makes the LP feasible
    b = A @ x0
    c = rng.uniform(-1.5, 1.5, n)
    return LinearProgram(c=c, A=A, b=b, lb=lb, ub=ub)


class TestExamples:
    def test_bound_active_optimum(self):
        lp = LinearProgram(c=[-1.0], A=np.zeros((0, 1)), b=[], lb=[0.0], ub=[2.0])
        sol = solve_lp(lp)
        assert sol.status is LpStatus.OPTIMAL
        assert sol.x[0] == pytest.approx(2.0)
        assert sol.objective == pytest.approx(-2.0)

    def test_symmetric_lp_dual(self):
        lp = LinearProgram(
            c=[1.0, 1.0], A=[[1.0, 1.0]], b=[1.0], lb=[0.0, 0.0], ub=[np.inf, np.inf]
        )
        sol = solve_lp(lp)
        assert sol.objective == pytest.approx(1.0)
        assert sol.duals[0] == pytest.approx(1.0)

    def test_one_row_infeasibility_certificate(self):
        lp = LinearProgram(c=[0.0], A=[[1.0]], b=[-1.0], lb=[0.0], ub=[np.inf])
        sol = solve_lp(lp)
        assert sol.status is LpStatus.INFEASIBLE
        assert sol.farkas[0] == pytest.approx(-1.0)
        assert sol.farkas @ lp.b > 1e-9
        assert (sol.farkas @ lp.A <= 1e-9).all()

    def test_unbounded(self):
        lp = LinearProgram(c=[-1.0], A=np.zeros((0, 1)), b=[], lb=[0.0], ub=[np.inf])
        assert solve_lp(lp).status is LpStatus.UNBOUNDED


class TestKkt:
    def test_solver_output_has_small_residuals(self):
        for seed in range(10):
            lp = random_box_lp(seed)
            sol = solve_lp(lp)
            rep = verify_kkt(lp, sol)
            assert max(rep.primal, rep.dual, rep.complementarity) <= 1e-8

    def test_perturbed_solution_shows_primal_residual(self):
        lp = random_box_lp(3)
        sol = solve_lp(lp)
        shifted = np.array(sol.x)
        shifted[0] += 1e-3
        fake = LpSolution(
            status=LpStatus.OPTIMAL, x=shifted, objective=float(lp.c @ shifted),
            duals=sol.duals,
        )
        expected = 1e-3 * float(np.max(np.abs(lp.A[:, 0])))
        rep = verify_kkt(lp, fake)
        assert rep.primal == pytest.approx(expected, rel=1e-6)

    def test_zero_objective_zero_duals(self):
        lp = LinearProgram(
            c=[0.0, 0.0], A=[[1.0, 1.0]], b=[1.0], lb=[0.0, 0.0], ub=[np.inf, np.inf]
        )
        sol = solve_lp(lp)
        rep = verify_kkt(lp, sol)
        assert rep.dual <= 1e-12
        assert np.allclose(sol.duals, 0.0)

    def test_requires_optimal_status(self):
        lp = LinearProgram(c=[0.0], A=[[1.0]], b=[-1.0], lb=[0.0], ub=[np.inf])
        with pytest.raises(ValueError):
            verify_kkt(lp, solve_lp(lp))


class TestProperties:
    def test_brute_force_cross_check_100_lps(self):
        for seed in range(100):
            lp = random_box_lp(seed)
            sol = solve_lp(lp)
            assert sol.status is LpStatus.OPTIMAL, seed
            assert sol.objective == pytest.approx(brute_force_optimum(lp), abs=1e-7)

    def test_weak_duality(self):
        for seed in range(30):
            lp = random_box_lp(seed)
            sol = solve_lp(lp)
            reduced = lp.c - sol.duals @ lp.A
            dual_obj = float(sol.duals @ lp.b)
            dual_obj += float(np.sum(np.maximum(reduced, 0.0) * lp.lb))
            dual_obj += float(np.sum(np.minimum(reduced, 0.0) * lp.ub))
            assert dual_obj <= sol.objective + 1e-8

    def test_farkas_certificates_on_infeasible_lps(self):
        rng = np.random.default_rng(11)
        found = 0
        for seed in range(60):
            lp = random_box_lp(seed)
            # push the rhs outside the reachable box image
            span = np.abs(lp.A).sum(axis=1) * np.max(lp.ub)
            bad_b = lp.b + span + rng.uniform(1.0, 2.0, len(lp.b))
            bad = LinearProgram(c=lp.c, A=lp.A, b=bad_b, lb=lp.lb, ub=lp.ub)
            sol = solve_lp(bad)
            if sol.status is not LpStatus.INFEASIBLE:
                continue
            found += 1
            assert verify_farkas(bad, sol.farkas)
            for _ in range(5):
                x = rng.uniform(0.0, 1.0, bad.A.shape[1]) * bad.ub
                assert float(sol.farkas @ (bad.A @ x - bad.b)) < 0.0
        assert found >= 30

    def test_determinism(self):
        for seed in (1, 17):
            lp = random_box_lp(seed)
            a = solve_lp(lp)
            b = solve_lp(lp)
            assert np.array_equal(a.x, b.x)
            assert a.objective == b.objective
            assert np.array_equal(a.duals, b.duals)

    def test_iteration_cap_raises(self):
        from lshaped import SimplexError

        lp = random_box_lp(0)
        with pytest.raises(SimplexError, match="iteration limit"):
            solve_lp(lp, max_pivots=1)

    def test_degenerate_duplicate_rows(self):
        lp = LinearProgram(
            c=[1.0, 2.0, 0.0],
            A=[[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]],
            b=[1.0, 1.0],
            lb=np.zeros(3),
            ub=np.full(3, np.inf),
        )
        sol = solve_lp(lp)
        assert sol.status is LpStatus.OPTIMAL
        assert sol.objective == pytest.approx(0.0)
