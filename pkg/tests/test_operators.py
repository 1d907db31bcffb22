"""Kernels, growth functions, norms of the integral operator, and audits."""

import math

import numpy as np
import pytest

from idebundles.habitat import GridFunction, build_grid, lp_norm, space_norm
from idebundles.operators import (ExponentConfig, GrowthSpec, KernelSpec,
                                  cutoff_chi, cutoff_chi_d1, cutoff_modify,
                                  delta_max_gap, delta_max_stable,
                                  delta_max_unstable, fredholm_apply,
                                  hammerstein_apply, hammerstein_derivative,
                                  hille_tamarkin_norm, hypothesis_audit,
                                  nemytskii_apply, nemytskii_derivative,
                                  smoothing_constant)


@pytest.fixture
def grid():
    return build_grid(0.0, 1.0, 64, order=4)


@pytest.fixture
def cfg():
    return ExponentConfig(p=2.0, q=1.5, m=1)


def test_exponent_config_validation():
    with pytest.raises(ValueError):
        ExponentConfig(p=2.0, q=2.5, m=1)      # needs q < p
    with pytest.raises(ValueError):
        ExponentConfig(p=2.0, q=1.5, m=3)      # needs m q < p
    assert abs(ExponentConfig(p=2.0, q=1.5, m=1).q_conj - 3.0) < 1e-14


def test_fredholm_apply_laplace_closed_form(grid):
    # int_0^1 (d/2) e^{-d|x-y|} dy at x = 0 equals (1 - e^{-d}) / 2
    k = KernelSpec(variant="laplace", params={"delta": 2.0})
    one = GridFunction(grid=grid, values=np.ones(grid.npoints), p=1.5)
    kv = fredholm_apply(k, 0, one, grid)
    at0 = kv.evaluator(np.array([0.0]))[0]
    assert abs(at0 - 0.5 * (1.0 - math.exp(-2.0))) < 1e-12


def test_hille_tamarkin_constant_kernel_equals_constant(grid, cfg):
    xs = np.linspace(0.0, 1.0, 9)
    k = KernelSpec(variant="tabulated",
                   params={"array": 0.7 * np.ones((9, 9)), "x": xs, "y": xs})
    assert abs(hille_tamarkin_norm(k, 0, cfg, grid) - 0.7) < 1e-10


def test_hille_tamarkin_dominates_operator_norm(grid, cfg, rng):
    k = KernelSpec(variant="laplace", params={"delta": 2.0})
    ht = hille_tamarkin_norm(k, 0, cfg, grid)
    for _ in range(50):
        v = GridFunction(grid=grid, values=rng.standard_normal(grid.npoints),
                         p=cfg.q)
        kv = fredholm_apply(k, 0, v, grid)
        assert lp_norm(kv, cfg.p) <= ht * lp_norm(v, cfg.q) + 1e-8


def test_smoothing_constant_laplace(grid, cfg):
    k = KernelSpec(variant="laplace", params={"delta": 2.0})
    space, C = smoothing_constant(k, 0, cfg, grid)
    assert space.variant == "W1p"
    assert abs(C - math.sqrt(2.0)) < 1e-12


def test_smoothing_constant_root_exp(grid):
    k = KernelSpec(variant="root_exp", params={"delta": 1.0, "alpha": 0.5})
    space, C = smoothing_constant(k, 0, ExponentConfig(p=4.0, q=2.0, m=1), grid)
    assert space.variant == "Hoelder"
    assert space.alpha == 0.5
    assert abs(C - 0.5) < 1e-12


def test_cutoff_chi_plateau_and_support():
    rho = 0.2
    z = np.array([0.0, 0.1, rho, 2 * rho, 0.5])
    chi = cutoff_chi(z, rho)
    assert np.allclose(chi[:3], 1.0)
    assert np.allclose(chi[3:], 0.0)
    # values in between stay in [0, 1] and the derivative matches FD
    zz = np.linspace(-0.5, 0.5, 201)
    chi = cutoff_chi(zz, rho)
    assert np.all((chi >= 0.0) & (chi <= 1.0))
    h = 1e-6
    fd = (cutoff_chi(zz + h, rho) - cutoff_chi(zz - h, rho)) / (2 * h)
    assert np.max(np.abs(fd - cutoff_chi_d1(zz, rho))) < 1e-5


def test_growth_derivatives_match_finite_differences(grid, rng):
    for spec in (GrowthSpec(variant="ricker", params={"r": 1.2}),
                 GrowthSpec(variant="beverton_holt", params={"a": 2.0, "b": 1.0}),
                 GrowthSpec(variant="localized_quadratic",
                            params={"c1": 1.0, "a": 0.05, "rho": 0.05})):
        x = grid.quad_points
        z = 0.02 * rng.standard_normal(grid.npoints)
        h = 1e-6
        fd = (spec.value(0, x, z + h) - spec.value(0, x, z - h)) / (2 * h)
        assert np.max(np.abs(fd - spec.deriv(0, x, z, 1))) < 1e-6


def test_nemytskii_derivative_is_pointwise_multiplication(grid):
    g = GrowthSpec(variant="ricker", params={"r": 1.5})
    u = GridFunction(grid=grid, values=0.3 * np.ones(grid.npoints), p=2.0)
    hdir = GridFunction(grid=grid, values=np.cos(grid.quad_points), p=2.0)
    out = nemytskii_derivative(g, 0, u, 1, [hdir])
    expected = g.deriv(0, grid.quad_points, u.values[0], 1) * hdir.values[0]
    assert np.allclose(out.values[0], expected)


def test_hammerstein_derivative_matches_finite_differences(grid, rng):
    k = KernelSpec(variant="laplace", params={"delta": 2.0})
    g = GrowthSpec(variant="ricker", params={"r": 1.5})
    u = GridFunction(grid=grid,
                     values=0.5 + 0.1 * rng.standard_normal(grid.npoints), p=2.0)
    hdir = GridFunction(grid=grid, values=rng.standard_normal(grid.npoints), p=2.0)
    eps = 1e-6
    up = GridFunction(grid=grid, values=u.values[0] + eps * hdir.values[0], p=2.0)
    um = GridFunction(grid=grid, values=u.values[0] - eps * hdir.values[0], p=2.0)
    fd = (hammerstein_apply(k, g, 0, up, grid).values
          - hammerstein_apply(k, g, 0, um, grid).values) / (2 * eps)
    an = hammerstein_derivative(k, g, 0, u, 1, [hdir], grid).values
    assert np.max(np.abs(fd - an)) <= 1e-5 * max(np.max(np.abs(an)), 1.0)


def test_cutoff_modify_vanishes_at_reference(grid):
    g = GrowthSpec(variant="ricker", params={"r": 1.5})
    rho = 0.1
    modified = cutoff_modify(g, lambda t, x: np.zeros_like(np.asarray(x)), rho)
    x = grid.quad_points
    assert np.allclose(modified.value(0, x, np.zeros_like(x)), 0.0)
    # inside the plateau the modification is a plain shift by g(., 0)
    z = 0.05 * np.ones_like(x)
    assert np.allclose(modified.value(0, x, z),
                       g.value(0, x, z) - g.value(0, x, np.zeros_like(x)))
    # outside twice the radius the modified growth is identically zero
    z = 0.5 * np.ones_like(x)
    assert np.allclose(modified.value(0, x, z), 0.0)


def test_delta_max_formulas():
    assert abs(delta_max_gap(0.5, 2.0) - 0.75) < 1e-14
    # alpha ((alpha+beta)/(alpha+alpha^m))^{1/m} - alpha at (0.5, 2, m=2)
    assert abs(delta_max_stable(0.5, 2.0, 2)
               - 0.5 * (math.sqrt(2.5 / 0.75) - 1.0)) < 1e-14
    assert delta_max_unstable(0.5, 2.0, 2) > 0.0
    assert delta_max_stable(0.5, 2.0, 1) == pytest.approx(0.75)


def test_hypothesis_audit_passes_for_small_growth(grid, cfg):
    k = KernelSpec(variant="laplace", params={"delta": 2.0})
    g = GrowthSpec(variant="localized_quadratic",
                   params={"c1": 1.0, "a": 0.05, "rho": 0.05})
    budget, report = hypothesis_audit(k, g, cfg, grid,
                                      {"K": 1.0, "alpha": 0.5, "beta": 2.0})
    assert report["passed"]
    assert report["smallness_lhs"] < report["smallness_rhs"]
    assert budget.L >= 0.0


def test_hypothesis_audit_fails_for_steep_growth(grid, cfg):
    k = KernelSpec(variant="laplace", params={"delta": 2.0})
    g = GrowthSpec(variant="localized_quadratic",
                   params={"c1": 1.0, "a": 20.0, "rho": 0.05})
    _, report = hypothesis_audit(k, g, cfg, grid,
                                 {"K": 1.0, "alpha": 0.5, "beta": 2.0})
    assert not report["passed"]
    assert report["inequality"] == "4*K*L < delta_max"
