"""Shared fixtures: toy systems with known invariant graphs and configs."""

import numpy as np
import pytest
from dataclasses import replace

from idebundles.dynamics import linear_system
from idebundles.operators import cutoff_chi


def quadratic_coupling_system(rho=0.2):
    """2-mode system diag(0.5, 2) with N = (0, chi(x) x^2).

    For |x| <= rho, invariance of the pseudo-stable graph over the first
    axis forces w(x/2) = 2 w(x) + x^2, so w(x) = c x^2 with c/4 = 2c + 1,
    i.e. w(x) = -(4/7) x^2; the pseudo-unstable graph is trivial.
    """
    L = np.diag([0.5, 2.0])

    def N(t, c):
        x = c[0]
        return np.array([0.0, cutoff_chi(np.array([x]), rho)[0] * x ** 2])

    return replace(linear_system(L), nonlinearity=N)


def center_coupling_system(rho=0.2):
    """diag(0.5, 1) with N = (chi(y) y^2, 0); center graph h(y) = 2 y^2."""
    L = np.diag([0.5, 1.0])

    def N(t, c):
        y = c[1]
        return np.array([cutoff_chi(np.array([y]), rho)[0] * y ** 2, 0.0])

    return replace(linear_system(L), nonlinearity=N)


def three_mode_system(eps=0.01, rho=0.1):
    """diag(0.25, 1, 4) plus a small cut-off cyclic quadratic coupling."""
    L = np.diag([0.25, 1.0, 4.0])

    def N(t, c):
        z = cutoff_chi(np.abs(c), rho) * c
        return eps * np.array([z[1] ** 2, z[2] ** 2, z[0] ** 2])

    return replace(linear_system(L), nonlinearity=N)


def study_config(variant="piecewise_constant", **overrides):
    """Two-mode separable-kernel problem with a localized quadratic growth."""
    cfg = {
        "habitat": {"a": 0.0, "b": 1.0},
        "kernel": {"variant": "sine_modes", "params": {"modes": [
            {"weight": 2.0, "freq": 1}, {"weight": 0.5, "freq": 3}]}},
        "growth": {"variant": "localized_quadratic",
                   "params": {"c1": 1.0, "a": 0.05, "rho": 0.05}},
        "exponents": {"p": 2.0, "q": 1.5, "m": 1},
        "scheme": {"variant": variant},
        "levels": [8, 16, 32, 64],
        "reference_level": 256,
        "rates": [1.0],
        "amplitudes": [0.01],
        "taus": [0],
        "direction": "stable",
    }
    cfg.update(overrides)
    return cfg


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


_VERDICTS = {}


def record_verdict(num, ok, desc):
    """Collect one acceptance verdict; echoed in the terminal summary."""
    line = f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'}: {desc}"
    _VERDICTS[num] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[num])
