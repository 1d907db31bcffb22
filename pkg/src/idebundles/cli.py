"""Command-line entry point.

Subcommands: simulate, project-error, spectrum, bundle, hierarchy,
converge.  Each reads a JSON config (--config), writes CSV/JSON output
(--out), and exits 0 on success, 2 on a hypothesis-audit failure, 1 on
any other error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .habitat import gridfun, lp_norm
from .projection import GammaModel, verify_error_bound
from .habitat import SmoothingSpace
from .dynamics import discretize, solve
from .spectrum import dichotomy_spectrum, floquet_spectrum, spectral_splitting
from .bundles import LPConfig, bundle_graph, default_base_grid, hierarchy_check
from .harness import (
    AuditError,
    emit_report,
    problem_from_config,
    run_convergence_study,
    study_from_config,
    _sine_mode,
)


def _load(config_path):
    with open(config_path) as fh:
        return json.load(fh)


def _write_json(out_dir, name, payload):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    return path


@click.group()
def main():
    """Invariant bundles of discretized integrodifference equations."""


def _command(fn):
    """Shared option plumbing and exit-code policy."""

    @click.option("--config", "config_path", required=True, type=click.Path(exists=True))
    @click.option("--out", "out_dir", default="out", type=click.Path())
    @click.option("--verbose", is_flag=True, default=False)
    def wrapper(config_path, out_dir, verbose):
        try:
            fn(_load(config_path), out_dir, verbose)
        except AuditError as exc:
            click.echo(f"audit failure: {exc}", err=True)
            sys.exit(2)
        except Exception as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@main.command("simulate")
@_command
def simulate_cmd(cfg, out_dir, verbose):
    """Step the equation forward and emit trajectory norms."""
    problem = problem_from_config(cfg)
    n = int(cfg.get("level", 0))
    grid = discretize(problem, n).meta["grid"] if n else problem.habitat
    init = cfg.get("initial", {"kind": "sine", "freq": 1, "coef": 0.1})
    base = _sine_mode(grid.a, grid.b, int(init["freq"]), float(init.get("coef", 1.0)))
    u0 = gridfun(grid, fn=base)
    traj = solve(problem, int(cfg.get("tau", 0)), u0, int(cfg.get("steps", 10)), n)
    rows = ["t,norm"]
    for i, u in enumerate(traj.states):
        rows.append(f"{traj.tau + i},{lp_norm(u):.17g}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trajectory.csv").write_text("\n".join(rows) + "\n")
    if verbose:
        click.echo(f"wrote {out / 'trajectory.csv'}")


@main.command("project-error")
@_command
def project_error_cmd(cfg, out_dir, verbose):
    """Projection errors against the Gamma bound over the mesh levels."""
    problem = problem_from_config(cfg)
    scheme = problem.scheme
    space = SmoothingSpace(cfg.get("space", {}).get("variant", "W1p"),
                           alpha=cfg.get("space", {}).get("alpha", 1.0))
    model = GammaModel(scheme_variant=scheme.variant, space=space,
                       C=float(cfg.get("gamma_constant", scheme.mesh.C)),
                       l=int(cfg.get("gamma_l", 1)),
                       length=problem.habitat.length,
                       p=problem.exponents.p if problem.exponents else 2.0)
    corpus = []
    for spec in cfg.get("corpus", [{"kind": "sine", "freq": 1}]):
        f = _sine_mode(problem.habitat.a, problem.habitat.b, int(spec["freq"]),
                       float(spec.get("coef", 1.0)))
        df = _sine_mode_derivative(problem.habitat, spec)
        corpus.append(gridfun(problem.habitat, fn=f, dfn=df, p=model.p))
    report = verify_error_bound(scheme, model, corpus,
                                levels=[int(n) for n in cfg["levels"]])
    _write_json(out_dir, "projection_errors.json", report)
    if not report["passed"]:
        raise RuntimeError("projection error exceeded the Gamma bound")


def _sine_mode_derivative(grid, spec):
    import math
    freq, coef = int(spec["freq"]), float(spec.get("coef", 1.0))
    L = grid.b - grid.a
    scale = math.sqrt(2.0 / L) * coef * freq * math.pi / L
    return lambda x: scale * np.cos(freq * math.pi * (np.asarray(x) - grid.a) / L)


@main.command("spectrum")
@_command
def spectrum_cmd(cfg, out_dir, verbose):
    """Dichotomy spectrum by Floquet reduction and by rate scan."""
    problem = problem_from_config(cfg)
    n = int(cfg.get("level", 16))
    fl = floquet_spectrum(problem, n)
    payload = {"floquet_intervals": fl.intervals, "accumulation": fl.accumulation}
    if cfg.get("scan", True):
        grid = cfg.get("gamma_grid")
        if grid is None:
            pts = fl.point_values() or [1.0]
            grid = sorted({g * f for g in pts for f in (0.5, 0.9, 1.0, 1.1, 2.0)})
        sc = dichotomy_spectrum(problem, n, gamma_grid=grid,
                                tol=float(cfg.get("tol", 1e-3)))
        payload["scan_intervals"] = sc.intervals
        payload["resolvent_samples"] = sc.resolvent_samples
        payload["method_note"] = ("scan admissibility uses finite-window "
                                  "singular-value splittings (an approximation "
                                  "of the unbounded-time spectrum)")
    _write_json(out_dir, "spectrum.json", payload)


@main.command("bundle")
@_command
def bundle_cmd(cfg, out_dir, verbose):
    """Invariant-bundle graph over one spectral gap."""
    study = study_from_config(cfg)
    system = discretize(study.problem, study.levels[-1])
    split = spectral_splitting(system, gamma=study.lp.gamma)
    samples = default_base_grid(split, study.taus[0], study.direction,
                                radius=float(cfg.get("sample_radius", 0.05)),
                                pts=int(cfg.get("sample_points", 9)))
    graph = bundle_graph(system, split, study.lp, study.taus[0], samples,
                         study.direction)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["sample,base_norm,value_norm"]
    for i, (v, w) in enumerate(zip(graph.base_coeffs, graph.values)):
        rows.append(f"{i},{system.norm(v):.17g},{system.norm(w):.17g}")
    (out / "bundle.csv").write_text("\n".join(rows) + "\n")
    _write_json(out_dir, "bundle.json", {
        "direction": graph.direction, "gamma": graph.gamma,
        "lip_estimate": graph.lip_estimate, "meta": graph.meta,
        "K": split.K, "alpha": split.alpha, "beta": split.beta,
    })


@main.command("hierarchy")
@_command
def hierarchy_cmd(cfg, out_dir, verbose):
    """Inclusion lattice of the bundles over all configured gaps."""
    study = study_from_config(cfg)
    system = discretize(study.problem, study.levels[-1])
    radius = float(cfg.get("sample_radius", 0.05))
    pts = int(cfg.get("sample_points", 5))
    entries = []
    for gamma in study.rates:
        split = spectral_splitting(system, gamma=gamma)
        from dataclasses import replace
        lp = replace(study.lp, gamma=gamma)
        for direction in ("stable", "unstable"):
            samples = default_base_grid(split, 0, direction, radius, pts)
            graph = bundle_graph(system, split, lp, 0, samples, direction)
            entries.append({"graph": graph, "direction": direction, "gamma": gamma})
    report = hierarchy_check(system, entries,
                             horizon=int(cfg.get("membership_horizon", 40)))
    _write_json(out_dir, "hierarchy.json", report)
    if not report["passed"]:
        raise RuntimeError("hierarchy lattice check failed")


@main.command("converge")
@_command
def converge_cmd(cfg, out_dir, verbose):
    """Bundle-graph convergence study across discretization levels."""
    study = study_from_config(cfg)
    report = run_convergence_study(study)
    paths = emit_report(report, out_dir)
    if verbose:
        for p in paths:
            click.echo(f"wrote {p}")
        click.echo(f"fitted order: {report.fitted_order}")


if __name__ == "__main__":
    main()
