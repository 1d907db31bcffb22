"""Experiment orchestration: configs, convergence studies, reports.

A convergence study computes the same bundle graph at several
discretization levels and at a fine reference level (the stand-in for
the undiscretized equation, labeled "reference level" throughout), and
fits the decay order of the graph errors against the projection
scheme's convergence exponent.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .habitat import GridFunction, MeshFamily, build_grid, eval_gridfunction, gridfun, lp_norm
from .operators import (
    ExponentConfig,
    GrowthSpec,
    KernelSpec,
    TimeDependence,
    hypothesis_audit,
)
from .projection import ProjectionScheme, build_spectral_basis
from .dynamics import IDEProblem, discretize
from .spectrum import spectral_splitting
from .bundles import LPConfig, lp_fixed_point

__all__ = [
    "AuditError",
    "StudyConfig",
    "ConvergenceReport",
    "problem_from_config",
    "study_from_config",
    "run_convergence_study",
    "fit_order",
    "emit_report",
]


class AuditError(RuntimeError):
    """The smallness condition gating the bundle solver is violated."""


@dataclass
class StudyConfig:
    raw: dict
    problem: IDEProblem
    levels: List[int]
    reference_level: int
    rates: List[float]
    lp: LPConfig
    amplitudes: List[float]
    taus: List[int]
    direction: str = "stable"
    derivative_order: int = 1
    fd_step: float = 1e-4

    def __post_init__(self):
        if sorted(self.levels) != list(self.levels):
            raise ValueError("levels must be ascending")
        if any(n >= self.reference_level for n in self.levels):
            raise ValueError("reference level must exceed all study levels")


def _sine_mode(a: float, b: float, freq: int, weight: float = 1.0):
    scale = math.sqrt(2.0 / (b - a))
    return lambda x: weight * scale * np.sin(freq * math.pi * (np.asarray(x) - a) / (b - a))


def build_kernel(cfg: dict, a: float, b: float) -> KernelSpec:
    variant = cfg["variant"]
    params = cfg.get("params", {})
    time_dep = _time_dependence(cfg.get("time", {}))
    if variant == "sine_modes":
        def mk(prm):
            pairs = []
            for mode in prm["modes"]:
                f = _sine_mode(a, b, mode["freq"])
                pairs.append((mode["weight"], f, f))
            return {"pairs": pairs}
        if isinstance(params, list):
            params = [mk(prm) for prm in params]
        else:
            params = mk(params)
        variant = "separable"
    return KernelSpec(variant=variant, params=params, time=time_dep)


def build_growth(cfg: dict) -> GrowthSpec:
    return GrowthSpec(variant=cfg["variant"], params=cfg.get("params", {}),
                      time=_time_dependence(cfg.get("time", {})),
                      max_order=cfg.get("max_order", 2))


def _time_dependence(cfg: dict) -> TimeDependence:
    return TimeDependence(kind=cfg.get("kind", "autonomous"),
                          period=cfg.get("period", 1),
                          t_min=cfg.get("t_min", 0), t_max=cfg.get("t_max", 0))


def problem_from_config(cfg: dict) -> IDEProblem:
    hab = cfg.get("habitat", {})
    a, b = float(hab.get("a", 0.0)), float(hab.get("b", 1.0))
    order = int(hab.get("quad_order", 4))
    ref_cells = int(hab.get("cells", cfg.get("reference_level", 128)))
    grid = build_grid(a, b, ref_cells, order)
    kernel = build_kernel(cfg["kernel"], a, b)
    growth = build_growth(cfg["growth"])
    exps = cfg.get("exponents")
    exponents = ExponentConfig(p=exps["p"], q=exps["q"], m=exps.get("m", 1)) if exps else None
    scheme = None
    if "scheme" in cfg:
        sc = cfg["scheme"]
        levels = [int(n) for n in cfg.get("levels", [])]
        nref = int(cfg.get("reference_level", max(levels) if levels else 16))
        mesh = MeshFamily(C=float(sc.get("mesh_constant", b - a)),
                          levels=tuple(levels + [nref]))
        if sc["variant"] == "spectral":
            scheme = build_spectral_basis(kernel, growth, grid,
                                          int(sc.get("n_max", nref)))
        else:
            scheme = ProjectionScheme(variant=sc["variant"], mesh=mesh,
                                      a=a, b=b, order=order)
    return IDEProblem(kernel=kernel, growth=growth, habitat=grid,
                      exponents=exponents, scheme=scheme)


def study_from_config(cfg: dict) -> StudyConfig:
    problem = problem_from_config(cfg)
    lp = LPConfig(gamma=float(cfg["rates"][0]),
                  delta=float(cfg.get("delta", 0.1)),
                  horizon=int(cfg.get("horizon", 80)),
                  fixed_point_tol=float(cfg.get("fixed_point_tol", 1e-10)),
                  max_iter=int(cfg.get("max_iter", 200)))
    rho = None
    gp = cfg["growth"].get("params", {})
    if isinstance(gp, dict):
        rho = gp.get("rho")
    fd_step = float(cfg.get("fd_step", 1e-3 * rho if rho else 1e-4))
    return StudyConfig(raw=cfg, problem=problem,
                       levels=[int(n) for n in cfg["levels"]],
                       reference_level=int(cfg["reference_level"]),
                       rates=[float(g) for g in cfg["rates"]], lp=lp,
                       amplitudes=[float(v) for v in cfg.get("amplitudes", [0.01])],
                       taus=[int(t) for t in cfg.get("taus", [0])],
                       direction=cfg.get("direction", "stable"),
                       derivative_order=int(cfg.get("derivative_order", 1)),
                       fd_step=fd_step)


@dataclass
class ConvergenceReport:
    levels: List[int]
    reference_level: int
    errors: Dict[int, float]
    deriv_errors: Dict[int, float]
    fitted_order: Optional[float]
    deriv_fitted_order: Optional[float]
    gamma_exponent: float
    gamma_label: str
    exact: bool
    audits: Dict[int, dict]
    runtimes: Dict[int, float] = field(default_factory=dict)


def fit_order(pairs: Sequence[Tuple[float, float]]) -> float:
    """Least-squares slope of log(error) against log(1/n)."""
    pts = [(n, e) for n, e in pairs if e > 0]
    if len(pts) < 3:
        raise ValueError("need at least 3 positive errors to fit an order")
    xs = np.log([1.0 / n for n, _ in pts])
    ys = np.log([e for _, e in pts])
    return float(np.polyfit(xs, ys, 1)[0])


def _base_function(cfg: StudyConfig):
    spec = cfg.raw.get("base_function", {"kind": "sine", "freq": 3})
    a, b = cfg.problem.habitat.a, cfg.problem.habitat.b
    if spec["kind"] == "sine":
        return _sine_mode(a, b, int(spec["freq"]), float(spec.get("coef", 1.0)))
    raise ValueError(f"unknown base function kind {spec['kind']!r}")


def _graph_samples(cfg: StudyConfig, n: int, amps: Sequence[float]):
    """Bundle-graph values at the given amplitudes, one synthesized per (tau, amp)."""
    problem = cfg.problem
    system = discretize(problem, n)
    split = spectral_splitting(system, gamma=cfg.lp.gamma)
    base = _base_function(cfg)
    grid_n = system.meta["grid"]
    out = {}
    for tau in cfg.taus:
        P = split.projector(tau)
        for amp in amps:
            u = gridfun(grid_n, fn=lambda x, A=amp: A * base(x))
            c = system.meta["coefficients"](u)
            v = P @ c if cfg.direction == "stable" else c - P @ c
            w, _ = lp_fixed_point(system, split, cfg.lp, tau, v, cfg.direction)
            out[(tau, amp)] = system.meta["synthesize"](w)
    return system, split, out


def _audit_level(cfg: StudyConfig, split) -> dict:
    problem = cfg.problem
    constants = {"K": split.K, "alpha": split.alpha, "beta": split.beta}
    _, report = hypothesis_audit(problem.kernel, problem.growth, problem.exponents,
                                 problem.habitat, constants)
    return report


def _function_errors(ws_n, ws_ref, vnorms, ref_grid, p):
    errs = []
    for key, wref in ws_ref.items():
        wn = ws_n[key]
        vals_n = eval_gridfunction(wn, ref_grid.quad_points)
        vals_r = eval_gridfunction(wref, ref_grid.quad_points)
        diff = GridFunction(grid=ref_grid, values=vals_n - vals_r, p=p)
        errs.append(lp_norm(diff, p) / vnorms[key])
    return max(errs)


def run_convergence_study(cfg: StudyConfig) -> ConvergenceReport:
    problem = cfg.problem
    p = problem.exponents.p if problem.exponents else 2.0
    scheme = problem.scheme
    if scheme.variant == "piecewise_constant":
        gamma_exp, gamma_label = 1.0, "closed-form"
    elif scheme.variant == "piecewise_linear":
        gamma_exp, gamma_label = 2.0, "closed-form"
    else:
        gamma_exp, gamma_label = float("nan"), "fitted"
    h = cfg.fd_step
    amps = list(cfg.amplitudes)
    if cfg.derivative_order >= 1:
        amps = sorted(set(amps) | {a + h for a in cfg.amplitudes}
                      | {a - h for a in cfg.amplitudes})

    audits = {}
    runtimes = {}
    graphs = {}
    for n in cfg.levels + [cfg.reference_level]:
        t0 = time.perf_counter()
        system, split, ws = _graph_samples(cfg, n, amps)
        audits[n] = _audit_level(cfg, split)
        if not audits[n]["passed"]:
            raise AuditError(
                f"hypothesis audit failed at level {n}: "
                f"{audits[n]['inequality']} violated "
                f"(4*K*L = {audits[n]['smallness_lhs']:.6g} >= "
                f"delta_max = {audits[n]['smallness_rhs']:.6g})")
        graphs[n] = ws
        runtimes[n] = time.perf_counter() - t0

    ref_grid = graphs[cfg.reference_level][(cfg.taus[0], amps[0])].grid
    base = _base_function(cfg)
    vnorms = {}
    for tau in cfg.taus:
        for amp in amps:
            u = gridfun(ref_grid, fn=lambda x, A=amp: A * base(x))
            vnorms[(tau, amp)] = lp_norm(u, p)

    errors = {}
    for n in cfg.levels:
        errors[n] = _function_errors(graphs[n], graphs[cfg.reference_level],
                                     vnorms, ref_grid, p)
    deriv_errors = {}
    if cfg.derivative_order >= 1:
        for n in cfg.levels:
            errs = []
            for tau in cfg.taus:
                for amp in cfg.amplitudes:
                    dn = _fd_field(graphs[n], ref_grid, tau, amp, h)
                    dr = _fd_field(graphs[cfg.reference_level], ref_grid, tau, amp, h)
                    diff = GridFunction(grid=ref_grid, values=dn - dr, p=p)
                    errs.append(lp_norm(diff, p) / vnorms[(tau, amp)])
            deriv_errors[n] = max(errs)

    exact = all(e < 1e-14 for e in errors.values())
    fitted = None if exact else fit_order(list(errors.items()))
    dfitted = None
    if deriv_errors and not all(e < 1e-14 for e in deriv_errors.values()):
        dfitted = fit_order(list(deriv_errors.items()))
    return ConvergenceReport(levels=cfg.levels, reference_level=cfg.reference_level,
                             errors=errors, deriv_errors=deriv_errors,
                             fitted_order=fitted, deriv_fitted_order=dfitted,
                             gamma_exponent=gamma_exp, gamma_label=gamma_label,
                             exact=exact, audits=audits, runtimes=runtimes)


def _fd_field(ws, ref_grid, tau, amp, h):
    wp = eval_gridfunction(ws[(tau, amp + h)], ref_grid.quad_points)
    wm = eval_gridfunction(ws[(tau, amp - h)], ref_grid.quad_points)
    return (wp - wm) / (2 * h)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def emit_report(report: ConvergenceReport, out_dir) -> List[Path]:
    """Write levels.csv and summary.json (byte-deterministic for fixed inputs;
    runtimes are intentionally excluded from the files)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "levels.csv"
    lines = ["n,error,deriv_error"]
    for n in report.levels:
        de = report.deriv_errors.get(n, "")
        lines.append(f"{n},{_fmt(report.errors[n])},{_fmt(de) if de != '' else ''}")
    csv_path.write_text("\n".join(lines) + "\n")

    def clean_audit(a):
        return {k: v for k, v in a.items() if not callable(v)}

    summary = {
        "levels": report.levels,
        "reference_level": report.reference_level,
        "errors": {str(n): report.errors[n] for n in report.levels},
        "deriv_errors": {str(n): v for n, v in sorted(report.deriv_errors.items())},
        "fitted_order": report.fitted_order,
        "deriv_fitted_order": report.deriv_fitted_order,
        "gamma_exponent": report.gamma_exponent,
        "gamma_label": report.gamma_label,
        "exact": report.exact,
        "audits": {str(n): clean_audit(a) for n, a in sorted(report.audits.items())},
    }
    json_path = out / "summary.json"
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True,
                                    default=_json_default) + "\n")
    return [csv_path, json_path]


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)
