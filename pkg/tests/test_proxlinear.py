"""Prox-linear method: model solver, surrogate gradient, rate estimation."""

import numpy as np
import pytest

from proxkit import (
    BudgetExceeded,
    CompositeProblem,
    L1Mean,
    RandomStream,
    SmoothMap,
    Zero,
    estimate_local_rate,
    make_lasso,
    make_phase_retrieval,
    model_value,
    proxlinear_run,
    proxlinear_step,
    prox_map,
)
from proxkit.proxlinear import _solve_model_subproblem


def linear_l1mean_problem(seed=41, d=4, m=7):
    """F(x) = mean |Ax - b|: the model at any anchor is F itself."""
    rng = RandomStream(seed)
    A, b = rng.normal((m, d)), rng.normal(m)
    c = SmoothMap(
        eval=lambda x: A @ x - b, jvp=lambda x, v: A @ v,
        vjp=lambda x, u: A.T @ u, beta=0.0, dim_in=d, dim_out=m,
    )
    return CompositeProblem(Zero(), L1Mean(m), c), A, b


class TestModelValue:
    def test_model_is_exact_for_affine_inner_map(self):
        prob, _, _ = linear_l1mean_problem()
        rng = RandomStream(42)
        for _ in range(10):
            y, x = rng.normal(4), rng.normal(4)
            assert abs(model_value(prob, y, x) - prob.value(x)) < 1e-12


class TestModelSubproblem:
    def test_certified_gap_bounds_suboptimality(self):
        # [ORACLE] the PDHG result is checked against scipy on the exact
        # QP/LP reformulation of the model subproblem
        from scipy.optimize import minimize

        prob, A, b = linear_l1mean_problem()
        x_t = RandomStream(43).normal(4)
        beta = 2.0
        x, u, gap = _solve_model_subproblem(prob, x_t, beta, gap_tol=1e-8)

        def obj(v):
            return np.mean(np.abs(A @ v - b)) + 0.5 * beta * float((v - x_t) @ (v - x_t))

        ref = minimize(obj, x_t, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
        assert gap <= 1e-8
        # ref.fun >= true optimum, so the measured suboptimality cannot
        # exceed the certified gap
        assert obj(x) - ref.fun <= gap + 1e-12

    def test_budget_exceeded_carries_best_point(self):
        prob, _, _ = linear_l1mean_problem()
        x_t = RandomStream(44).normal(4)
        with pytest.raises(BudgetExceeded) as ei:
            _solve_model_subproblem(prob, x_t, 2.0, gap_tol=1e-13, max_iters=50)
        assert ei.value.best_point is not None
        assert ei.value.achieved > 0


class TestProxlinearStep:
    def test_identity_bypass_is_proximal_gradient(self):
        inst = make_lasso(d=8, m=20, lam=0.2, seed=1)
        prob = inst.problem
        x = RandomStream(45).normal(8)
        beta = prob.L * prob.beta
        x_next, surr, _ = proxlinear_step(prob, x, beta, inner_tol=1e-10)
        # [DERIVED] independent ISTA step on 0.5||Ax-b||^2 + lam||x||_1
        A, b = inst.arrays["A"], inst.arrays["b"]
        grad = A.T @ (A @ x - b)
        t = 0.2 / beta
        z = x - grad / beta
        ref = np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
        assert np.allclose(x_next, ref, atol=1e-12)
        assert surr.gap == 0.0

    def test_surrogate_vanishes_at_minimizer(self):
        prob, A, b = linear_l1mean_problem(seed=46, d=3, m=3)
        x_star = np.linalg.solve(A, b)  # F(x_star) = 0 is the minimum
        _, surr, _ = proxlinear_step(prob, x_star, 1.0, inner_tol=1e-12)
        assert surr.norm < 1e-5


class TestProxlinearRun:
    def test_descent_and_termination(self):
        inst = make_phase_retrieval(d=6, m=48, outlier_frac=0.0, seed=2)
        x0 = inst.ground_truth + 0.1 * RandomStream(47).normal(6)
        rep = proxlinear_run(inst.problem, x0, outer_iters=30, stat_tol=1e-9)
        objs = rep.objective_history
        assert objs[-1] <= objs[0]
        assert rep.stationarity_history[-1] < 1e-6
        d = min(np.linalg.norm(rep.solution - inst.ground_truth),
                np.linalg.norm(rep.solution + inst.ground_truth))
        assert d < 1e-7

    def test_report_counters_monotone(self):
        inst = make_lasso(d=10, m=25, lam=0.1, seed=3)
        rep = proxlinear_run(inst.problem, np.zeros(10), outer_iters=20)
        assert all(b >= a for a, b in zip(rep.evals_history, rep.evals_history[1:]))


class TestSandwich:
    def test_surrogate_comparable_to_envelope_gradient(self):
        # spot check of the 1/4 / 3x sandwich at a handful of points
        inst = make_phase_retrieval(d=8, m=64, outlier_frac=0.1, seed=4)
        prob = inst.problem
        beta = prob.rho
        rng = RandomStream(48)
        for _ in range(3):
            x = inst.ground_truth + rng.normal(8)
            _, surr, _ = proxlinear_step(prob, x, beta, inner_tol=1e-9)
            mp = prox_map(prob, 1.0 / (2.0 * beta), x, inner_tol=1e-9)
            gn = np.linalg.norm(mp.envelope_gradient)
            assert 0.25 * gn - 1e-6 <= surr.norm <= 3.0 * gn + 1e-6


class TestRateEstimate:
    def test_quadratic_sequence(self):
        r = [10.0 ** -(2.0**k) for k in range(1, 7)]
        assert estimate_local_rate(r).kind == "quadratic"

    def test_quadratic_with_noise_floor(self):
        r = [1e-1, 1e-2, 1e-4, 1e-8, 1e-15, 1.2e-15, 0.9e-15]
        assert estimate_local_rate(r).kind == "quadratic"

    def test_geometric_sequence(self):
        r = [0.5**k for k in range(40)]
        est = estimate_local_rate(r)
        assert est.kind == "linear"
        assert abs(est.rate - 0.5) < 1e-6
        assert est.r_squared > 0.999

    def test_flat_noise_is_undetermined(self):
        rng = RandomStream(49)
        r = list(1.0 + 0.5 * rng.uniform(size=30))
        assert estimate_local_rate(r).kind == "undetermined"

    def test_short_history_undetermined(self):
        assert estimate_local_rate([1.0, 0.5]).kind == "undetermined"
