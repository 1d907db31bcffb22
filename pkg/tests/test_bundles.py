"""Lyapunov-Perron fixed points, invariant graphs, and the hierarchy."""

import numpy as np
import pytest
from dataclasses import replace

from idebundles.bundles import (LPConfig, bundle_graph, c0_bound,
                                center_graph, default_base_grid,
                                hierarchy_check, lipschitz_estimate,
                                lp_fixed_point, membership_test)
from idebundles.spectrum import spectral_splitting

from conftest import (center_coupling_system, quadratic_coupling_system,
                      three_mode_system)


CFG = LPConfig(gamma=1.0, delta=0.2, theta=0.0, horizon=80,
               fixed_point_tol=1e-12, max_iter=100)


@pytest.fixture
def toy():
    return quadratic_coupling_system()


@pytest.fixture
def toy_split(toy):
    return spectral_splitting(toy, gamma=1.0)


def test_stable_graph_matches_quadratic_oracle(toy, toy_split):
    for x in (0.05, -0.03, 0.01):
        v = np.array([x, 0.0])
        w, info = lp_fixed_point(toy, toy_split, CFG, 0, v, "stable")
        assert abs(w[1] - (-(4.0 / 7.0) * x ** 2)) < 1e-10
        assert abs(w[0]) < 1e-12
        assert info["update"] < CFG.fixed_point_tol


def test_unstable_graph_is_trivial(toy, toy_split):
    for y in (0.05, -0.02):
        v = np.array([0.0, y])
        w, _ = lp_fixed_point(toy, toy_split, CFG, 0, v, "unstable")
        assert np.max(np.abs(w)) < 1e-10


def test_center_graph_matches_quadratic_oracle():
    system = center_coupling_system()
    split_i = spectral_splitting(system, gamma=1.4)
    split_j = spectral_splitting(system, gamma=0.7)
    cfg = replace(CFG, horizon=200)
    for y in (0.05, -0.04):
        v = np.array([0.0, y])
        w, _ = center_graph(system, split_i, split_j, cfg, 0, v)
        assert abs(w[0] - 2.0 * y ** 2) < 1e-10


def test_center_graph_requires_ordered_rates():
    system = center_coupling_system()
    split_i = spectral_splitting(system, gamma=1.4)
    split_j = spectral_splitting(system, gamma=0.7)
    with pytest.raises(ValueError):
        center_graph(system, split_j, split_i, CFG, 0, np.array([0.0, 0.01]))


def test_short_horizon_is_rejected(toy, toy_split):
    with pytest.raises(ValueError, match="horizon"):
        lp_fixed_point(toy, toy_split, replace(CFG, horizon=5), 0,
                       np.array([0.01, 0.0]), "stable")


def test_divergent_iteration_is_reported(toy_split):
    # an uncut quadratic coupling with a large constant is not a contraction
    from idebundles.dynamics import linear_system
    L = np.diag([0.5, 2.0])
    hot = replace(linear_system(L),
                  nonlinearity=lambda t, c: 50.0 * np.array([c[1] ** 2,
                                                             c[0] ** 2]))
    with pytest.raises(RuntimeError):
        lp_fixed_point(hot, toy_split, replace(CFG, max_iter=30), 0,
                       np.array([0.5, 0.0]), "stable")


def test_fixed_point_robust_to_horizon_and_rate(toy, toy_split):
    v = np.array([0.03, 0.0])
    w0, _ = lp_fixed_point(toy, toy_split, CFG, 0, v, "stable")
    w1, _ = lp_fixed_point(toy, toy_split, replace(CFG, horizon=160), 0, v,
                           "stable")
    w2, _ = lp_fixed_point(toy, toy_split, replace(CFG, gamma=0.75,
                                                   horizon=160), 0, v, "stable")
    assert np.linalg.norm(w1 - w0) < 10 * CFG.fixed_point_tol
    assert np.linalg.norm(w2 - w0) < 10 * CFG.fixed_point_tol


def test_membership_test_separates_graph_points(toy, toy_split):
    x = 0.04
    on_graph = np.array([x, -(4.0 / 7.0) * x ** 2])
    off_graph = np.array([x, 0.05])
    assert membership_test(toy, 0, on_graph, 1.0, 40, "stable")
    assert not membership_test(toy, 0, off_graph, 1.0, 40, "stable")
    assert membership_test(toy, 0, np.zeros(2), 1.0, 40, "stable")


def test_bundle_graph_lipschitz_estimate_below_bound(toy, toy_split):
    samples = default_base_grid(toy_split, 0, "stable", radius=0.05, pts=9)
    graph = bundle_graph(toy, toy_split, CFG, 0, samples, "stable")
    # slope of -(4/7) x^2 over |x| <= 0.05 stays below 2*(4/7)*0.05
    assert graph.lip_estimate <= 2 * (4.0 / 7.0) * 0.05 + 1e-10
    # effective Lipschitz constant of the coupling over the sampled ball
    L_eff = 2 * 0.05
    check = lipschitz_estimate(graph, K=1.0, L=L_eff, delta=0.5)
    assert check["ok"]


def test_c0_bound_reference_value():
    assert c0_bound(K=1.0, L=0.01, delta=0.1, theta=0.0) == pytest.approx(0.125)


def test_hierarchy_lattice_on_three_mode_toy():
    system = three_mode_system()
    entries = []
    for gamma in (0.5, 2.0):
        split = spectral_splitting(system, gamma=gamma)
        lp = replace(CFG, gamma=gamma, horizon=200, fixed_point_tol=1e-11)
        for direction in ("stable", "unstable"):
            samples = default_base_grid(split, 0, direction, radius=0.02, pts=3)
            graph = bundle_graph(system, split, lp, 0, samples, direction)
            entries.append({"graph": graph, "direction": direction,
                            "gamma": gamma})
    report = hierarchy_check(system, entries, horizon=40)
    assert report["passed"], report["checks"]
    names = {c["check"] for c in report["checks"]}
    assert "stable(0.5) in stable(2.0)" in names
    assert "unstable(2.0) in unstable(0.5)" in names
