"""Proximally guided stochastic subgradient method."""

import numpy as np
import pytest

from proxkit import (
    InvalidModulus,
    OracleFailure,
    RandomStream,
    default_schedule,
    make_phase_retrieval,
    pgsg_run,
)
from proxkit.pgsg import _INNER_OFFSET, StochasticProblem


class TestSchedule:
    def test_inner_count_offset(self):
        # [DERIVED] ceil(648 ln 648) = 4196
        assert _INNER_OFFSET == 4196
        sched = default_schedule(rho=1.0)
        assert sched.inner_counts(0) == 4196
        assert sched.inner_counts(10) == 4206

    def test_step_sizes(self):
        # [DERIVED] alpha_j = 2 / (rho (j + 49))
        sched = default_schedule(rho=2.0)
        assert sched.inner_steps(0) == pytest.approx(2.0 / (2.0 * 49.0))
        assert sched.inner_steps(51) == pytest.approx(2.0 / (2.0 * 100.0))
        steps = [sched.inner_steps(j) for j in range(100)]
        assert all(b < a for a, b in zip(steps, steps[1:]))

    def test_rho_must_be_positive(self):
        with pytest.raises(InvalidModulus):
            default_schedule(0.0)


def tiny_quadratic_problem(rho=1.0, dim=3):
    """f(x, zeta) = 0.5||x - zeta||^2 with zeta ~ N(0, I): F has minimum 0."""
    return StochasticProblem(
        sample=lambda rng: rng.normal(dim),
        stoch_value=lambda x, z: 0.5 * float((x - z) @ (x - z)),
        stoch_subgrad=lambda x, z: x - z,
        rho=rho, lip=10.0, dim=dim,
        full_value=lambda x: 0.5 * float(x @ x) + 0.5 * dim,
    )


class TestPgsgRun:
    def test_inner_loop_matches_reference(self):
        # [ORACLE] one outer step replayed by an independent loop using
        # the same presampled noise
        dim = 3
        prob = tiny_quadratic_problem(dim=dim)
        sched = default_schedule(prob.rho)
        x0 = np.array([2.0, -1.0, 0.5])
        rep = pgsg_run(prob, x0, outer_iters=1, schedule=sched,
                       rng=RandomStream(7, stream_id=1))

        rng = RandomStream(7, stream_id=1)
        j0 = sched.inner_counts(0)
        y = x0.copy()
        acc = y.copy()
        for j in range(j0 - 1):
            z = rng.normal(dim)
            v = (y - z) + 2.0 * prob.rho * (y - x0)
            y = y - sched.inner_steps(j) * v
            acc += y
        x1 = acc / j0
        # the run's solution is the (only) iterate x_1
        assert np.allclose(rep.solution, x1, atol=1e-12)

    def test_objective_decreases_on_quadratic(self):
        prob = tiny_quadratic_problem()
        rep = pgsg_run(prob, 5.0 * np.ones(3), outer_iters=20,
                       schedule=default_schedule(prob.rho),
                       rng=RandomStream(8, stream_id=2))
        assert rep.objective_history[-1] < rep.objective_history[0]
        assert np.linalg.norm(rep.solution) < 1.0

    def test_eval_accounting(self):
        prob = tiny_quadratic_problem()
        T = 3
        rep = pgsg_run(prob, np.zeros(3), outer_iters=T,
                       schedule=default_schedule(prob.rho),
                       rng=RandomStream(9, stream_id=3))
        expect = sum(_INNER_OFFSET + t - 1 for t in range(T))
        assert rep.oracle_calls["stoch_subgrad"] == expect

    def test_non_finite_subgradient_raises(self):
        prob = tiny_quadratic_problem()
        prob.stoch_subgrad = lambda x, z: np.full(3, np.nan)
        with pytest.raises(OracleFailure):
            pgsg_run(prob, np.zeros(3), outer_iters=1,
                     schedule=default_schedule(prob.rho),
                     rng=RandomStream(10, stream_id=4))

    def test_deterministic_given_stream(self):
        prob = tiny_quadratic_problem()
        runs = [
            pgsg_run(prob, np.ones(3), outer_iters=2,
                     schedule=default_schedule(prob.rho),
                     rng=RandomStream(11, stream_id=5)).solution
            for _ in range(2)
        ]
        assert np.array_equal(runs[0], runs[1])

    def test_envelope_stationarity_on_instance(self):
        # phase retrieval carries a deterministic envelope oracle, so the
        # recorded stationarity is a Moreau envelope gradient norm
        inst = make_phase_retrieval(d=4, m=24, outlier_frac=0.1, seed=5)
        sp = inst.stochastic
        rep = pgsg_run(sp, RandomStream(12).normal(4), outer_iters=4,
                       schedule=default_schedule(sp.rho),
                       rng=RandomStream(12, stream_id=6), stat_every=2)
        assert all(np.isfinite(s) and s >= 0 for s in rep.stationarity_history)
        assert rep.iteration_index[0] == 1  # first outer step is recorded
