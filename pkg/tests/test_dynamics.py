"""Time stepping and Galerkin reduction to coefficient systems."""

import numpy as np
import pytest

from idebundles.dynamics import (discretize, evolution_operator,
                                 linear_system, solve, step,
                                 variational_matrix)
from idebundles.habitat import gridfun, lp_norm
from idebundles.harness import problem_from_config

from conftest import study_config


def _linear_problem(weight=1.0, variant="piecewise_constant"):
    cfg = study_config(variant)
    cfg["kernel"] = {"variant": "sine_modes",
                     "params": {"modes": [{"weight": weight, "freq": 1}]}}
    cfg["growth"] = {"variant": "linear", "params": {"c": 1.0}}
    return problem_from_config(cfg)


def test_rank_one_eigenmode_is_preserved():
    problem = _linear_problem(weight=1.0, variant="spectral")
    grid = problem.habitat
    u0 = gridfun(grid, fn=lambda x: np.sqrt(2.0) * np.sin(np.pi * np.asarray(x)))
    traj = solve(problem, 0, u0, 10, n=8)
    norms = [lp_norm(u, 2.0) for u in traj.states]
    assert np.allclose(norms, 1.0, atol=1e-8)
    assert traj.verify(problem, 8)


def test_blow_up_raises():
    problem = _linear_problem(weight=4.0)
    grid = discretize(problem, 8).meta["grid"]
    u0 = gridfun(grid, fn=lambda x: np.sin(np.pi * np.asarray(x)))
    with pytest.raises(RuntimeError, match="blow-up"):
        solve(problem, 0, u0, 60, n=8)


def test_step_lands_in_scheme_range():
    from idebundles.projection import project
    problem = problem_from_config(study_config("piecewise_constant"))
    grid = discretize(problem, 8).meta["grid"]
    u0 = gridfun(grid, fn=lambda x: 0.01 * np.sin(np.pi * np.asarray(x)))
    u1 = step(problem, 0, u0, 8)
    again = project(problem.scheme, u1, 8)
    assert np.max(np.abs(u1.values - again.values)) < 1e-12


@pytest.mark.parametrize("variant", ["piecewise_constant", "piecewise_linear",
                                     "spectral"])
def test_coefficient_round_trip(variant):
    problem = problem_from_config(study_config(variant))
    system = discretize(problem, 16)
    rng = np.random.default_rng(5)
    c = 0.01 * rng.standard_normal(system.dim)
    u = system.meta["synthesize"](c)
    back = system.meta["coefficients"](u)
    assert np.max(np.abs(back - c)) < 1e-10


def test_coefficient_step_matches_function_step():
    problem = problem_from_config(study_config("piecewise_constant"))
    system = discretize(problem, 16)
    grid = system.meta["grid"]
    u0 = gridfun(grid, fn=lambda x: 0.01 * np.sin(np.pi * np.asarray(x)))
    u0p = step(problem, 0, u0, 0)            # no projection
    c0 = system.meta["coefficients"](u0)
    c1 = system.step(0, c0)
    u1 = system.meta["synthesize"](c1)
    # the coefficient step is the projected function step
    from idebundles.projection import project
    proj = project(problem.scheme,
                   step(problem, 0, system.meta["synthesize"](c0), 0), 16)
    assert np.max(np.abs(u1.values - proj.values)) < 1e-10


def test_variational_matrix_matches_finite_differences():
    problem = problem_from_config(study_config("piecewise_constant"))
    system = discretize(problem, 8)
    A = variational_matrix(problem, 0, 8).matrix
    eps = 1e-7
    fd = np.zeros((8, 8))
    for j in range(8):
        e = np.zeros(8)
        e[j] = eps
        fd[:, j] = (system.step(0, e) - system.step(0, -e)) / (2 * eps)
    assert np.max(np.abs(A - fd)) < 1e-6


def test_evolution_operator_composes_left_to_right():
    mats = [np.diag([2.0, 1.0]), np.diag([1.0, 3.0])]
    phi = evolution_operator(mats, 0, 2).matrix
    assert np.allclose(phi, np.diag([2.0, 3.0]))


def test_linear_system_period_inference():
    sys1 = linear_system(np.eye(2))
    assert sys1.period == 1
    sys2 = linear_system([np.eye(2), 2 * np.eye(2)])
    assert sys2.period == 2
    assert np.allclose(sys2.matrix(3), 2 * np.eye(2))
