import math

import numpy as np
import pytest

from qsatlink.optimizer import NoFeasiblePoint, OptimizerConfig, SearchSpace, maximize


def test_one_dimensional_quadratic():
    r = maximize(lambda x: -(x[0] - 0.3) ** 2, SearchSpace(((0.0, 1.0),)))
    assert r.best_point[0] == pytest.approx(0.3, abs=1e-4)
    assert r.best_value == pytest.approx(0.0, abs=1e-8)


def test_ordering_constraint_active():
    # unconstrained peak at (0.5, 0.5) violates x0 >= x1 + 0.5
    space = SearchSpace(((0.0, 1.0), (0.0, 1.0)), constraints=((0, 1, 0.5),))
    r = maximize(lambda x: -(x[0] - 0.5) ** 2 - (x[1] - 0.5) ** 2, space,
                 OptimizerConfig(restarts=12))
    assert space.feasible(r.best_point)
    # the constrained optimum lies on x0 - x1 = 0.5 at (0.75, 0.25)
    assert r.best_point[0] == pytest.approx(0.75, abs=5e-3)
    assert r.best_point[1] == pytest.approx(0.25, abs=5e-3)


def test_two_dimensional_interior():
    space = SearchSpace(((0.0, 1.0), (0.0, 1.0)), constraints=((0, 1, 0.01),))
    r = maximize(lambda x: -(x[0] - 0.7) ** 2 - 2 * (x[1] - 0.2) ** 2, space)
    assert np.allclose(r.best_point, [0.7, 0.2], atol=1e-3)


def test_deterministic_for_fixed_seed():
    f = lambda x: math.sin(5 * x[0]) * math.cos(3 * x[1])
    space = SearchSpace(((0.0, 2.0), (0.0, 2.0)))
    a = maximize(f, space, OptimizerConfig(seed=3))
    b = maximize(f, space, OptimizerConfig(seed=3))
    assert np.array_equal(a.best_point, b.best_point) and a.best_value == b.best_value
    assert a.trace == b.trace


def test_trace_is_non_decreasing_and_points_feasible():
    space = SearchSpace(((0.1, 1.2), (0.005, 0.5)), constraints=((0, 1, 0.01),))
    r = maximize(lambda x: math.sin(7 * x[0]) + math.cos(11 * x[1]), space)
    assert all(b >= a for a, b in zip(r.trace, r.trace[1:]))
    assert space.feasible(r.best_point)
    assert len(r.trace) == OptimizerConfig().restarts


def test_eval_budget_is_roughly_respected():
    cfg = OptimizerConfig(restarts=2, max_evals=50)
    r = maximize(lambda x: -sum((x - 0.4) ** 2), SearchSpace(((0.0, 1.0),) * 3), cfg)
    # scipy may overshoot its budget by one simplex
    assert r.evals_used <= cfg.restarts * (cfg.max_evals + 10)


def test_random_concave_quadratics():
    rng = np.random.default_rng(42)
    space = SearchSpace(((0.0, 1.0),) * 4)
    for _ in range(20):
        centre = rng.uniform(0.2, 0.8, 4)
        a = rng.normal(size=(4, 4))
        hess = a @ a.T + 0.5 * np.eye(4)
        f = lambda x, c=centre, h=hess: -float((x - c) @ h @ (x - c))
        r = maximize(f, space, OptimizerConfig(restarts=4))
        assert np.allclose(r.best_point, centre, atol=1e-3)


def test_warm_start_is_used_first():
    space = SearchSpace(((0.0, 1.0),))
    r = maximize(lambda x: -(x[0] - 0.9) ** 2, space, OptimizerConfig(restarts=1), x0=[0.88])
    assert r.best_point[0] == pytest.approx(0.9, abs=1e-4)
    clipped = maximize(lambda x: -(x[0] - 0.9) ** 2, space, OptimizerConfig(restarts=1),
                       x0=[5.0])
    assert space.feasible(clipped.best_point)


def test_no_feasible_point():
    with pytest.raises(NoFeasiblePoint):
        maximize(lambda x: -math.inf, SearchSpace(((0.0, 1.0),)), OptimizerConfig(restarts=2))


def test_plateau_flag():
    r = maximize(lambda x: 0.0, SearchSpace(((0.0, 1.0), (0.0, 1.0))))
    assert r.plateau and r.best_value == 0.0
    assert not maximize(lambda x: x[0], SearchSpace(((0.0, 1.0),))).plateau


@pytest.mark.parametrize("kwargs", [{"restarts": 0}, {"max_evals": 5}, {"tolerance": 0.0}])
def test_config_invariants(kwargs):
    with pytest.raises(ValueError):
        OptimizerConfig(**kwargs)


@pytest.mark.parametrize("bounds, constraints", [(((1.0, 1.0),), ()),
                                                 (((0.0, 1.0),), ((0, 1, 0.1),)),
                                                 (((0.0, 1.0), (0.0, 1.0)), ((0, 1, 0.0),))])
def test_space_invariants(bounds, constraints):
    with pytest.raises(ValueError):
        SearchSpace(bounds, constraints)
