"""Invariant-bundle graphs via Lyapunov-Perron iteration.

The pseudo-stable (or -unstable) bundle through the zero solution is the
graph of a map w(tau, .) from the corresponding spectral subspace into
its complement.  w is found as the fixed point of the variation-of-
constants operator on a truncated weighted sequence space: the sum is
split by the dichotomy projectors, solved forward on the stable range
and backward (through the invertible unstable coordinates) on its
complement, and truncated at a horizon chosen so that the discarded
tail is below the fixed-point tolerance.

The solver is gated on the *observed* contraction factor of the
iteration; the theoretical smallness condition is checked separately by
the hypothesis audit in the operators module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import CoefficientSystem
from .spectrum import DichotomyData

__all__ = [
    "LPConfig",
    "BundleGraph",
    "lp_fixed_point",
    "bundle_graph",
    "default_base_grid",
    "center_graph",
    "c0_bound",
    "lipschitz_estimate",
    "membership_test",
    "hierarchy_check",
]


@dataclass(frozen=True)
class LPConfig:
    gamma: float
    delta: float = 0.1
    theta: float = 0.0
    horizon: int = 60
    fixed_point_tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self):
        if self.gamma <= 0 or self.horizon < 2:
            raise ValueError("need gamma > 0 and horizon >= 2")
        if not (0 < self.fixed_point_tol < 1):
            raise ValueError("fixed_point_tol must lie in (0, 1)")


def _required_horizon(ratio: float, tol: float) -> int:
    if ratio <= 0:
        return 2
    if ratio >= 1:
        raise ValueError("rate gap collapsed: truncation tail does not decay")
    return 2 * math.ceil(math.log(tol) / math.log(ratio))


@dataclass
class BundleGraph:
    tau: int
    direction: str                       # stable | unstable | center
    base_coeffs: List[np.ndarray]        # sampled base vectors (full dimension)
    values: List[np.ndarray]             # complement values w(tau, v)
    lip_estimate: float
    gamma: float
    meta: dict = field(default_factory=dict)


def _solve_in_span(L, U_from, U_to, rhs_coords):
    """Coordinates xi with L (U_from xi) = U_to rhs_coords (unstable backward step)."""
    M = U_to.T @ L @ U_from
    return np.linalg.solve(M, rhs_coords)


def lp_fixed_point(system: CoefficientSystem, splitting: DichotomyData,
                   cfg: LPConfig, tau: int, v: np.ndarray,
                   direction: str = "stable"):
    """Complement value w(tau, v) of the pseudo-stable/-unstable graph.

    v is a full-dimension vector; its component outside the base
    subspace is discarded.  Returns (w, info) where info records the
    iteration count, observed contraction factor and final update size.
    """
    if direction not in ("stable", "unstable"):
        raise ValueError("direction must be 'stable' or 'unstable'")
    gamma = cfg.gamma
    T = cfg.horizon
    tol = cfg.fixed_point_tol
    dim = system.dim
    v = np.asarray(v, dtype=float)
    if direction == "stable":
        ratio = splitting.alpha / gamma if splitting.alpha > 0 else 0.0
    else:
        ratio = gamma / splitting.beta if np.isfinite(splitting.beta) else 0.0
    need = _required_horizon(ratio, tol)
    if T < need:
        raise ValueError(f"horizon {T} too short for the tail bound (need >= {need})")

    P = [splitting.projector(t) for t in (range(tau, tau + T + 1)
                                          if direction == "stable"
                                          else range(tau - T, tau + 1))]
    U = [splitting.unstable_basis(t) for t in (range(tau, tau + T + 1)
                                               if direction == "stable"
                                               else range(tau - T, tau + 1))]
    if direction == "stable":
        Ls = [system.matrix(tau + i) for i in range(T)]
        Ns = lambda i, u: system.nonlinearity(tau + i, u)
        weights = gamma ** (-np.arange(T + 1, dtype=float))
        base = P[0] @ v
    else:
        Ls = [system.matrix(tau - T + i) for i in range(T)]
        Ns = lambda i, u: system.nonlinearity(tau - T + i, u)
        weights = gamma ** (np.arange(T, -1, -1, dtype=float))
        base = (np.eye(dim) - P[T]) @ v

    r = U[0].shape[1]
    u = [np.zeros(dim) for _ in range(T + 1)]
    diffs = []
    info = {"iterations": 0, "contraction": 0.0, "update": np.inf}
    for it in range(cfg.max_iter):
        if direction == "stable":
            a = [np.zeros(dim) for _ in range(T + 1)]
            a[0] = base
            for i in range(T):
                # re-project each step: roundoff leaking into the unstable
                # direction would otherwise grow like beta^T
                a[i + 1] = P[i + 1] @ (Ls[i] @ a[i] + Ns(i, u[i]))
            b = [np.zeros(dim) for _ in range(T + 1)]
            if r > 0:
                beta = np.zeros(U[T].shape[1])
                for i in range(T - 1, -1, -1):
                    y = (np.eye(dim) - P[i + 1]) @ Ns(i, u[i]) + U[i + 1] @ beta
                    beta = _solve_in_span(Ls[i], U[i], U[i + 1], U[i + 1].T @ y)
                    b[i] = U[i] @ beta
            new = [a[i] - b[i] for i in range(T + 1)]
            w = -b[0]
        else:
            a = [np.zeros(dim) for _ in range(T + 1)]
            for i in range(T):
                a[i + 1] = P[i + 1] @ (Ls[i] @ a[i] + Ns(i, u[i]))
            d = [np.zeros(dim) for _ in range(T + 1)]
            d[T] = base
            if U[T].shape[1] > 0:
                xi = U[T].T @ base
                for i in range(T - 1, -1, -1):
                    rhs = xi - U[i + 1].T @ ((np.eye(dim) - P[i + 1]) @ Ns(i, u[i]))
                    xi = _solve_in_span(Ls[i], U[i], U[i + 1], rhs)
                    d[i] = U[i] @ xi
            new = [a[i] + d[i] for i in range(T + 1)]
            w = a[T]
        diff = max(weights[i] * system.norm(new[i] - u[i]) for i in range(T + 1))
        u = new
        diffs.append(diff)
        info["iterations"] = it + 1
        info["update"] = diff
        if len(diffs) >= 2 and diffs[-2] > 0:
            info["contraction"] = diffs[-1] / diffs[-2]
        if diff < tol:
            info["sequence"] = u
            return w, info
        if len(diffs) >= 4 and diffs[-1] >= diffs[-2] >= diffs[-3]:
            raise RuntimeError(
                f"Lyapunov-Perron iteration is not contracting (factor "
                f"{info['contraction']:.3f} at gamma = {gamma})")
    raise RuntimeError(f"no fixed point within {cfg.max_iter} iterations "
                       f"(last update {diffs[-1]:.3e})")


def default_base_grid(splitting: DichotomyData, tau: int, direction: str,
                      radius: float, pts: int = 9,
                      max_samples: int = 256) -> List[np.ndarray]:
    """Deterministic grid of base vectors inside the given radius.

    Low base dimensions get a full tensor grid; when that would exceed
    max_samples the grid falls back to pts points along every base axis
    plus the origin, keeping the count linear in the dimension.
    """
    basis = (splitting.stable_basis(tau) if direction == "stable"
             else splitting.unstable_basis(tau))
    r = basis.shape[1]
    if r == 0:
        return [np.zeros(basis.shape[0])]
    if pts ** r <= max_samples:
        axes = [np.linspace(-radius, radius, pts)] * r
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=-1)
    else:
        coords = [np.zeros(r)]
        for j in range(r):
            for s in np.linspace(-radius, radius, pts):
                if s != 0.0:
                    c = np.zeros(r)
                    c[j] = s
                    coords.append(c)
        coords = np.asarray(coords)
    return [basis @ c for c in coords]


def bundle_graph(system: CoefficientSystem, splitting: DichotomyData,
                 cfg: LPConfig, tau: int, base_samples: Sequence[np.ndarray],
                 direction: str = "stable") -> BundleGraph:
    """Sampled graph map over the base subspace, with its Lipschitz estimate."""
    vs, ws, infos = [], [], []
    for v in base_samples:
        w, info = lp_fixed_point(system, splitting, cfg, tau, v, direction)
        vs.append(np.asarray(v, dtype=float))
        ws.append(w)
        infos.append(info)
    lip = 0.0
    for i in range(len(vs)):
        for j in range(i + 1, len(vs)):
            dv = system.norm(vs[i] - vs[j])
            if dv > 0:
                lip = max(lip, system.norm(ws[i] - ws[j]) / dv)
    return BundleGraph(tau=tau, direction=direction, base_coeffs=vs, values=ws,
                       lip_estimate=lip, gamma=cfg.gamma,
                       meta={"contraction": max(i["contraction"] for i in infos),
                             "iterations": max(i["iterations"] for i in infos)})


def center_graph(system: CoefficientSystem, splitting_i: DichotomyData,
                 splitting_j: DichotomyData, cfg: LPConfig, tau: int,
                 v: np.ndarray, budget_L: Optional[float] = None):
    """Pseudo-center value over the intersection fiber, by the coupled iteration.

    splitting_i belongs to the larger rate, splitting_j to the smaller
    one (gamma_j < gamma_i); v must lie in range(P_i) cap range(I - P_j).
    Returns (w_center, info): w_center is the sum of the pseudo-stable
    and pseudo-unstable corrections.
    """
    gi, gj = splitting_i.gamma, splitting_j.gamma
    if not gj < gi:
        raise ValueError("need gamma_j < gamma_i for a center pair")
    v = np.asarray(v, dtype=float)
    cfg_i = replace(cfg, gamma=gi)
    cfg_j = replace(cfg, gamma=gj)
    dim = system.dim
    u = np.zeros(dim)   # pseudo-unstable correction (complement of split_i base)
    w = np.zeros(dim)   # pseudo-stable correction (complement of split_j base)
    info = {"iterations": 0, "update": np.inf}
    for it in range(cfg.max_iter):
        u_new, _ = lp_fixed_point(system, splitting_i, cfg_i, tau, v + w, "stable")
        w_new, _ = lp_fixed_point(system, splitting_j, cfg_j, tau, u + v, "unstable")
        upd = max(system.norm(u_new - u), system.norm(w_new - w))
        u, w = u_new, w_new
        info["iterations"] = it + 1
        info["update"] = upd
        if upd < cfg.fixed_point_tol:
            if budget_L is not None:
                Ks = (splitting_i.K, splitting_j.K)
                info["contraction_bound"] = max(
                    2 * K * K * budget_L / (cfg.delta - 4 * K * budget_L)
                    for K in Ks)
            return u + w, info
    raise RuntimeError(f"coupled center iteration did not converge "
                       f"(last update {info['update']:.3e})")


def c0_bound(K: float, L: float, delta: float, theta: float = 0.0,
             L_bar: float = 0.0) -> float:
    """Graph Lipschitz bound K^2 (L + |theta| Lbar) / (delta - 2 K (L + |theta| Lbar))."""
    eff = L + abs(theta) * L_bar
    den = delta - 2.0 * K * eff
    if den <= 0:
        return float("inf")
    return K * K * eff / den


def lipschitz_estimate(graph: BundleGraph, K: float, L: float, delta: float,
                       theta: float = 0.0, L_bar: float = 0.0) -> dict:
    """Compare the sampled graph Lipschitz constant with the closed-form bound."""
    bound = c0_bound(K, L, delta, theta, L_bar)
    return {"estimate": graph.lip_estimate, "bound": bound,
            "ok": graph.lip_estimate <= bound + 1e-12}


def _backward_step(system: CoefficientSystem, t: int, target: np.ndarray,
                   tol: float = 1e-12) -> np.ndarray:
    """Solve L_t x + N_t(x) = target for x (needs an invertible linear part)."""
    L = system.matrix(t)
    if np.linalg.cond(L) > 1e12:
        raise ValueError("backward membership test needs an invertible linear part")
    x = np.linalg.solve(L, target)
    for _ in range(200):
        x_new = np.linalg.solve(L, target - system.nonlinearity(t, x))
        if np.linalg.norm(x_new - x) < tol * max(1.0, np.linalg.norm(x)):
            return x_new
        x = x_new
    from scipy.optimize import root
    sol = root(lambda z: system.matrix(t) @ z + system.nonlinearity(t, z) - target, x)
    if not sol.success:
        raise RuntimeError("backward step failed to converge")
    return sol.x


def membership_test(system: CoefficientSystem, tau: int, u0: np.ndarray,
                    gamma: float, horizon: int, direction: str = "stable",
                    ceiling: float = 1e3) -> bool:
    """Monitor the gamma-weighted orbit norm over the horizon.

    True when the weighted norm stays below ceiling * ||u0|| and its
    log-linear trend is non-increasing.
    """
    if horizon < 10:
        raise ValueError("horizon must be at least 10 steps")
    u0 = np.asarray(u0, dtype=float)
    n0 = system.norm(u0)
    if n0 == 0.0:
        return True
    weighted = [n0]
    u = u0
    for k in range(1, horizon + 1):
        if direction == "stable":
            u = system.step(tau + k - 1, u)
        else:
            u = _backward_step(system, tau - k, u)
        m = system.norm(u) / gamma ** k if direction == "stable" \
            else system.norm(u) * gamma ** k
        if not np.isfinite(m) or m > ceiling * n0:
            return False
        weighted.append(m)
    logs = np.log(np.maximum(weighted, 1e-300))
    slope = np.polyfit(np.arange(len(logs)), logs, 1)[0]
    return bool(slope <= 1e-9)


def hierarchy_check(system: CoefficientSystem, entries: Sequence[dict],
                    horizon: int = 40, ceiling: float = 1e3,
                    tol: float = 1e-6) -> dict:
    """Verify the inclusion lattice of computed bundle graphs.

    entries: dicts with keys graph (BundleGraph), direction
    ('stable' | 'unstable' | 'center') and gamma (a rate, or a pair
    (gamma_i, gamma_j) for center entries).
    """
    checks = []

    def points(entry):
        g = entry["graph"]
        return [v + w for v, w in zip(g.base_coeffs, g.values)]

    def run(name, pts, gamma, direction):
        ok = all(membership_test(system, 0, u, gamma, horizon, direction, ceiling)
                 for u in pts)
        checks.append({"check": name, "ok": ok})
        return ok

    stables = [e for e in entries if e["direction"] == "stable"]
    unstables = [e for e in entries if e["direction"] == "unstable"]
    centers = [e for e in entries if e["direction"] == "center"]

    # nesting of pseudo-stable bundles: smaller rate inside larger rate
    for a in stables:
        for b in stables:
            if a["gamma"] < b["gamma"]:
                run(f"stable({a['gamma']}) in stable({b['gamma']})",
                    points(a), b["gamma"], "stable")
    for a in unstables:
        for b in unstables:
            if a["gamma"] > b["gamma"]:
                run(f"unstable({a['gamma']}) in unstable({b['gamma']})",
                    points(a), b["gamma"], "unstable")
    for c in centers:
        gi, gj = c["gamma"]
        run(f"center{(gi, gj)} in stable({gi})", points(c), gi, "stable")
        run(f"center{(gi, gj)} in unstable({gj})", points(c), gj, "unstable")

    # hyperbolic gaps: stable and unstable graphs at the same rate meet only at 0
    zero_only = True
    for a in stables:
        for b in unstables:
            if abs(a["gamma"] - b["gamma"]) < 1e-12:
                for u in points(a):
                    if system.norm(u) > tol and membership_test(
                            system, 0, u, b["gamma"], horizon, "unstable", ceiling):
                        zero_only = False
                for u in points(b):
                    if system.norm(u) > tol and membership_test(
                            system, 0, u, a["gamma"], horizon, "stable", ceiling):
                        zero_only = False
                checks.append({"check": f"intersection at {a['gamma']} is trivial",
                               "ok": zero_only})

    # the trivial fiber belongs to every bundle
    for e in entries:
        g = e["graph"]
        for v, w in zip(g.base_coeffs, g.values):
            if system.norm(v) == 0.0 and system.norm(w) > 10 * tol:
                checks.append({"check": "zero fiber", "ok": False})

    passed = all(c["ok"] for c in checks)
    return {"passed": passed, "checks": checks}
