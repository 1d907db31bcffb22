"""Time stepping, variational matrices and evolution operators.

`discretize` reduces a problem at level n to a CoefficientSystem: a
finite-dimensional map c -> A_t c + N_t(c) on the coefficient space of
the chosen Galerkin subspace, with the L^p norm transported from the
habitat.  The spectrum and bundle solvers work on that interface only,
so small hand-built systems can be analyzed the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .habitat import (
    GridFunction,
    Habitat1D,
    build_grid,
    eval_gridfunction,
    lp_norm,
)
from .operators import (
    ExponentConfig,
    GrowthSpec,
    KernelSpec,
    hammerstein_apply,
    kernel_matrix,
)
from .projection import ProjectionScheme, project

__all__ = [
    "IDEProblem",
    "Trajectory",
    "DiscreteOperator",
    "CoefficientSystem",
    "step",
    "solve",
    "discretize",
    "variational_matrix",
    "evolution_operator",
]


@dataclass
class IDEProblem:
    """A Hammerstein equation plus its discretization scheme."""

    kernel: KernelSpec
    growth: GrowthSpec
    habitat: Habitat1D
    exponents: Optional[ExponentConfig] = None
    scheme: Optional[ProjectionScheme] = None
    audit_report: Optional[dict] = None
    _systems: dict = field(default_factory=dict, repr=False)

    @property
    def period(self) -> int:
        kt, gt = self.kernel.time, self.growth.time
        if kt.kind == "window" or gt.kind == "window":
            return 0  # aperiodic window
        return math.lcm(kt.n_phases, gt.n_phases)

    @property
    def time_kind(self) -> str:
        kinds = {self.kernel.time.kind, self.growth.time.kind}
        if "window" in kinds:
            return "window"
        if "periodic" in kinds:
            return "periodic"
        return "autonomous"

    def window_bounds(self):
        tmins, tmaxs = [], []
        for td in (self.kernel.time, self.growth.time):
            if td.kind == "window":
                tmins.append(td.t_min)
                tmaxs.append(td.t_max)
        return (min(tmins), max(tmaxs)) if tmins else (0, 0)


@dataclass
class Trajectory:
    tau: int
    states: List[GridFunction]

    def state(self, t: int) -> GridFunction:
        return self.states[t - self.tau]

    def verify(self, problem: IDEProblem, n: int, tol: float = 1e-10) -> bool:
        for i in range(len(self.states) - 1):
            nxt = step(problem, self.tau + i, self.states[i], n)
            diff = np.max(np.abs(nxt.values - self.states[i + 1].values))
            if diff > tol:
                return False
        return True


@dataclass(frozen=True)
class DiscreteOperator:
    matrix: np.ndarray
    time: int
    level: int
    scheme_variant: str = "direct"

    def __post_init__(self):
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("non-finite operator entries")


def step(problem: IDEProblem, t: int, u: GridFunction, n: int) -> GridFunction:
    """One time step: Pi_n applied to the Hammerstein image of u."""
    w = hammerstein_apply(problem.kernel, problem.growth, t, u, u.grid)
    if n == 0 or problem.scheme is None:
        return w
    return project(problem.scheme, w, n)


def solve(problem: IDEProblem, tau: int, u_tau: GridFunction, t_end: int, n: int,
          ceiling: float = 1e8) -> Trajectory:
    """Iterate the equation forward from (tau, u_tau) up to t_end."""
    if t_end < tau:
        raise ValueError("need tau <= t_end")
    states = [u_tau]
    for t in range(tau, t_end):
        nxt = step(problem, t, states[-1], n)
        nrm = lp_norm(nxt, u_tau.p)
        if not np.isfinite(nrm) or nrm > ceiling:
            raise RuntimeError(
                f"trajectory blow-up at t = {t + 1}: ||u||_p = {nrm:.3e} exceeds {ceiling:.1e}")
        states.append(nxt)
    return Trajectory(tau=tau, states=states)


@dataclass
class CoefficientSystem:
    """Finite-dimensional nonautonomous system c_{t+1} = L_t c_t + N_t(c_t)."""

    dim: int
    matrix: Callable[[int], np.ndarray]
    nonlinearity: Callable[[int, np.ndarray], np.ndarray]
    norm: Callable[[np.ndarray], float]
    period: int = 1              # 0 = aperiodic finite window
    window: tuple = (0, 0)
    meta: dict = field(default_factory=dict)

    def step(self, t: int, c: np.ndarray) -> np.ndarray:
        return self.matrix(t) @ c + self.nonlinearity(t, c)


def _euclid(c):
    return float(np.linalg.norm(c))


def linear_system(mats, period: Optional[int] = None) -> CoefficientSystem:
    """CoefficientSystem from a matrix, a list of matrices, or a callable."""
    if callable(mats):
        m0 = np.asarray(mats(0))
        fn = lambda t: np.asarray(mats(t))
        per = period if period is not None else 0
    elif isinstance(mats, (list, tuple)):
        seq = [np.asarray(m) for m in mats]
        m0 = seq[0]
        fn = lambda t: seq[t % len(seq)]
        per = period if period is not None else len(seq)
    else:
        m0 = np.asarray(mats)
        fn = lambda t: m0
        per = 1
    dim = m0.shape[0]
    zero = lambda t, c: np.zeros(dim)
    return CoefficientSystem(dim=dim, matrix=fn, nonlinearity=zero,
                             norm=_euclid, period=per)


def discretize(problem: IDEProblem, n: int) -> CoefficientSystem:
    """Galerkin reduction of the problem at level n (cached per problem)."""
    if n in problem._systems:
        return problem._systems[n]
    scheme = problem.scheme
    if scheme is None:
        raise ValueError("problem carries no projection scheme")
    k, g = problem.kernel, problem.growth
    if scheme.variant == "spectral":
        grid = scheme.grid
        if n > len(scheme.basis):
            raise ValueError("level exceeds the spectral basis size")
        S = scheme.basis[:n].T                        # (npts, n)
        E = scheme.basis[:n] * grid.quad_weights[None, :]
    else:
        grid = build_grid(scheme.a, scheme.b, n, scheme.order)
        if scheme.variant == "piecewise_constant":
            idx = grid.cell_index(grid.quad_points)
            S = np.zeros((grid.npoints, n))
            S[np.arange(grid.npoints), idx] = 1.0
            E = (S * grid.quad_weights[:, None]).T / (grid.length / n)
        else:  # piecewise linear: coefficients are nodal values
            xn = np.linspace(scheme.a, scheme.b, n + 1)
            S = np.zeros((grid.npoints, n + 1))
            for j in range(n + 1):
                e = np.zeros(n + 1)
                e[j] = 1.0
                S[:, j] = np.interp(grid.quad_points, xn, e)
            E = None  # analysis evaluates at the nodes directly
    yq = grid.quad_points
    wq = grid.quad_weights
    n_ph = max(max(k.time.n_phases, g.time.n_phases), 1)
    reach = {}
    for ph in range(n_ph):
        if scheme.variant == "piecewise_linear":
            xn = np.linspace(scheme.a, scheme.b, n + 1)
            reach[ph] = kernel_matrix(k, ph, xn, yq) * wq[None, :]
        else:
            reach[ph] = E @ (kernel_matrix(k, ph, yq, yq) * wq[None, :])
    dim = S.shape[1]
    kin = problem.time_kind

    def phase(t):
        if kin == "autonomous":
            return 0
        if kin == "periodic":
            return t % n_ph
        lo, hi = problem.window_bounds()
        return int(np.clip(t, lo, hi)) - lo

    c0 = {ph: np.asarray(g.deriv(ph, yq, np.zeros_like(yq), 1)) * np.ones_like(yq)
          for ph in range(n_ph)}
    mats = {ph: reach[ph] @ (c0[ph][:, None] * S) for ph in range(n_ph)}

    def matrix(t):
        return mats[phase(t)]

    def nonlinearity(t, c):
        ph = phase(t)
        u = S @ c
        return reach[ph] @ (np.asarray(g.value(ph, yq, u)) - c0[ph] * u)

    p = problem.exponents.p if problem.exponents is not None else 2.0

    def norm(c):
        vals = np.abs(S @ c)
        if np.isinf(p):
            return float(np.max(vals))
        return float((wq @ vals ** p) ** (1.0 / p))

    def synthesize(c):
        vals = S @ c
        if scheme.variant == "piecewise_constant":
            nodes = np.linspace(scheme.a, scheme.b, n + 1)
            cc = np.asarray(c, dtype=float)
            ev = lambda x: cc[np.clip(np.searchsorted(nodes, np.atleast_1d(x),
                                                      side="right") - 1, 0, n - 1)]
        elif scheme.variant == "piecewise_linear":
            xn = np.linspace(scheme.a, scheme.b, n + 1)
            cc = np.asarray(c, dtype=float)
            ev = lambda x: np.interp(np.atleast_1d(x), xn, cc)
        else:
            ev = lambda x: np.interp(np.atleast_1d(x), yq, vals)
        return GridFunction(grid=grid, values=np.asarray(vals)[None, :], p=p, evaluator=ev)

    def coefficients(u: GridFunction):
        if scheme.variant == "piecewise_linear":
            xn = np.linspace(scheme.a, scheme.b, n + 1)
            return eval_gridfunction(u, xn)[0]
        uv = (u.values[0] if (u.grid.npoints == grid.npoints
                              and np.allclose(u.grid.quad_points, yq))
              else eval_gridfunction(u, yq)[0])
        return E @ uv

    sys = CoefficientSystem(dim=dim, matrix=matrix, nonlinearity=nonlinearity,
                            norm=norm, period=problem.period,
                            window=problem.window_bounds(),
                            meta={"level": n, "grid": grid, "scheme": scheme.variant,
                                  "synthesize": synthesize, "coefficients": coefficients})
    problem._systems[n] = sys
    return sys


def variational_matrix(problem: IDEProblem, t: int, n: int) -> DiscreteOperator:
    """Matrix of the projected linearization at the zero solution."""
    sys = discretize(problem, n)
    return DiscreteOperator(matrix=sys.matrix(t), time=t, level=n,
                            scheme_variant=problem.scheme.variant)


def evolution_operator(mats, tau: int, t: int) -> DiscreteOperator:
    """Ordered product Phi(t, tau) = L_{t-1} ... L_tau (identity for t = tau)."""
    if t < tau:
        raise ValueError("need tau <= t")
    matfn = _as_matfn(mats)
    M = np.eye(matfn(tau).shape[0])
    for s in range(tau, t):
        M = matfn(s) @ M
    return DiscreteOperator(matrix=M, time=t, level=-1)


def _as_matfn(mats):
    if isinstance(mats, CoefficientSystem):
        return lambda t: mats.matrix(t)
    if callable(mats):
        return lambda t: _unwrap(mats(t))
    if isinstance(mats, dict):
        return lambda t: _unwrap(mats[t])
    if isinstance(mats, (list, tuple)):
        seq = list(mats)
        return lambda t: _unwrap(seq[t % len(seq)])
    m = _unwrap(mats)
    return lambda t: m


def _unwrap(m):
    return m.matrix if isinstance(m, DiscreteOperator) else np.asarray(m)
