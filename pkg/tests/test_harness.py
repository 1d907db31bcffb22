"""Convergence studies, order fitting, and report emission."""

import json

import numpy as np
import pytest

from idebundles.harness import (AuditError, emit_report, fit_order,
                                problem_from_config, run_convergence_study,
                                study_from_config)

from conftest import study_config


def test_fit_order_exact_first_order():
    pairs = [(n, 3.0 / n) for n in (10, 20, 40)]
    assert fit_order(pairs) == pytest.approx(1.0, abs=1e-12)


def test_fit_order_constant_errors():
    pairs = [(n, 0.25) for n in (10, 20, 40)]
    assert fit_order(pairs) == pytest.approx(0.0, abs=1e-12)


def test_fit_order_with_noise(rng):
    pairs = [(n, (5.0 / n ** 2) * (1.0 + 0.01 * rng.standard_normal()))
             for n in (8, 16, 32, 64, 128)]
    assert abs(fit_order(pairs) - 2.0) < 0.05


def test_fit_order_needs_three_positive_points():
    with pytest.raises(ValueError):
        fit_order([(8, 0.1), (16, 0.0), (32, 0.0)])


def test_linear_problem_is_reported_exact(tmp_path):
    cfg = study_config("spectral", levels=[4, 8, 16], reference_level=32)
    report = run_convergence_study(study_from_config(cfg))
    # nonlinear image lies in the span of the two kernel modes, so every
    # spectral level beyond them reproduces the reference graph exactly
    assert report.exact
    assert report.fitted_order is None
    paths = emit_report(report, tmp_path)
    assert all(p.exists() for p in paths)


def test_study_orders_match_scheme(tmp_path):
    cfg = study_config("piecewise_constant", levels=[8, 16, 32],
                       reference_level=128)
    report = run_convergence_study(study_from_config(cfg))
    assert abs(report.fitted_order - 1.0) < 0.3
    assert all(report.errors[a] >= report.errors[b] - 1e-12
               for a, b in zip(report.levels, report.levels[1:]))


def test_audit_failure_aborts_with_named_inequality():
    cfg = study_config("piecewise_constant", levels=[8, 16, 32],
                       reference_level=64)
    cfg["growth"] = {"variant": "localized_quadratic",
                     "params": {"c1": 1.0, "a": 20.0, "rho": 0.05}}
    with pytest.raises(AuditError, match="4\\*K\\*L"):
        run_convergence_study(study_from_config(cfg))


def test_report_files_are_deterministic(tmp_path):
    cfg = study_config("piecewise_constant", levels=[8, 16, 32],
                       reference_level=64)
    r1 = run_convergence_study(study_from_config(cfg))
    r2 = run_convergence_study(study_from_config(cfg))
    assert r1.errors == r2.errors
    p1 = emit_report(r1, tmp_path / "a")
    p2 = emit_report(r2, tmp_path / "b")
    for a, b in zip(p1, p2):
        assert a.read_bytes() == b.read_bytes()


def test_report_json_round_trip(tmp_path):
    cfg = study_config("piecewise_constant", levels=[8, 16, 32],
                       reference_level=64)
    report = run_convergence_study(study_from_config(cfg))
    csv_path, json_path = emit_report(report, tmp_path)
    summary = json.loads(json_path.read_text())
    for n in report.levels:
        assert summary["errors"][str(n)] == report.errors[n]
    assert summary["fitted_order"] == report.fitted_order
    header, *rows = csv_path.read_text().strip().split("\n")
    assert header == "n,error,deriv_error"
    assert len(rows) == len(report.levels)


def test_problem_from_config_builds_requested_pieces():
    problem = problem_from_config(study_config("piecewise_linear"))
    assert problem.scheme.variant == "piecewise_linear"
    assert problem.exponents.p == 2.0
    assert problem.habitat.length == pytest.approx(1.0)


def test_study_config_validates_reference_level():
    cfg = study_config("piecewise_constant", reference_level=32)
    with pytest.raises(ValueError):
        study_from_config(cfg)
