"""1-D habitats with per-cell Gauss quadrature and the norms built on them.

A habitat is an open interval (a, b) carrying a uniform partition and a
fixed Gauss-Legendre rule per cell.  Grid functions store their values at
the quadrature points; an optional analytic evaluator enables point
evaluation away from those points (needed by interpolatory projections).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "Habitat1D",
    "MeshFamily",
    "GridFunction",
    "SmoothingSpace",
    "build_grid",
    "gridfun",
    "eval_gridfunction",
    "eval_gridfunction_derivative",
    "lp_norm",
    "space_norm",
]


@dataclass(frozen=True)
class Habitat1D:
    """Interval (a, b) with a uniform partition and per-cell quadrature."""

    a: float
    b: float
    nodes: np.ndarray          # partition nodes, shape (ncells + 1,)
    quad_points: np.ndarray    # shape (ncells * order,)
    quad_weights: np.ndarray   # shape (ncells * order,)
    h: float                   # max cell width
    order: int                 # quadrature points per cell

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("habitat endpoints must be finite")
        if self.a >= self.b:
            raise ValueError("need a < b")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("partition nodes must be strictly increasing")
        total = float(np.sum(self.quad_weights))
        if abs(total - (self.b - self.a)) > 1e-12 * (self.b - self.a):
            raise ValueError("quadrature weights do not sum to the habitat length")

    @property
    def ncells(self) -> int:
        return len(self.nodes) - 1

    @property
    def npoints(self) -> int:
        return len(self.quad_points)

    @property
    def length(self) -> float:
        return self.b - self.a

    def cell_index(self, x) -> np.ndarray:
        """Index of the partition cell containing x (clipped to the habitat)."""
        idx = np.searchsorted(self.nodes, np.asarray(x, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.ncells - 1)


@dataclass(frozen=True)
class MeshFamily:
    """Family of uniform meshes with h_n <= C / n for every level n."""

    C: float
    levels: tuple = ()

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("mesh constant must be positive")
        if any(int(n) < 1 for n in self.levels):
            raise ValueError("levels must be positive integers")

    def check_level(self, a: float, b: float, n: int) -> None:
        if (b - a) / n > self.C / n + 1e-14:
            raise ValueError(f"level {n}: h_n = {(b - a) / n} exceeds C/n = {self.C / n}")


def build_grid(a: float, b: float, n: int, order: int = 4) -> Habitat1D:
    """Uniform n-cell partition of (a, b) with an `order`-point Gauss rule per cell."""
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("endpoints must be finite")
    if n < 1:
        raise ValueError("need at least one cell")
    nodes = np.linspace(a, b, n + 1)
    ref_x, ref_w = np.polynomial.legendre.leggauss(order)
    h = (b - a) / n
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    pts = (mids[:, None] + 0.5 * h * ref_x[None, :]).ravel()
    wts = np.tile(0.5 * h * ref_w, n)
    return Habitat1D(a=float(a), b=float(b), nodes=nodes, quad_points=pts,
                     quad_weights=wts, h=h, order=order)


@dataclass(frozen=True)
class SmoothingSpace:
    """Target space of a smoothing kernel: Lp, W1p, W2p or Hoelder(alpha)."""

    variant: str
    alpha: float = 1.0

    def __post_init__(self):
        if self.variant not in ("Lp", "W1p", "W2p", "Hoelder"):
            raise ValueError(f"unknown space variant {self.variant!r}")
        if self.variant == "Hoelder" and not (0 < self.alpha <= 1):
            raise ValueError("Hoelder exponent must lie in (0, 1]")


@dataclass
class GridFunction:
    """Vector-valued function sampled at the quadrature points of a habitat."""

    grid: Habitat1D
    values: np.ndarray                     # shape (d, npoints)
    p: float = 2.0
    evaluator: Optional[Callable] = None   # x -> value (component 0) or (d,) array
    derivative_values: Optional[np.ndarray] = None
    derivative_evaluator: Optional[Callable] = None

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values))
        if self.values.shape[1] != self.grid.npoints:
            raise ValueError("values shape does not match the quadrature grid")
        if self.evaluator is not None:
            probe = _eval_callable(self.evaluator, self.grid.quad_points, self.d)
            scale = max(1.0, float(np.max(np.abs(self.values))))
            if np.max(np.abs(probe - self.values)) > 1e-12 * scale:
                raise ValueError("evaluator disagrees with stored values")

    @property
    def d(self) -> int:
        return self.values.shape[0]


def _eval_callable(fn, x, d):
    x = np.asarray(x, dtype=float)
    out = np.asarray(fn(x))
    if out.ndim <= 1:
        out = np.broadcast_to(out, x.shape)[None, :]
    return np.broadcast_to(out, (d, x.size))


def gridfun(grid: Habitat1D, fn=None, values=None, p: float = 2.0,
            dfn=None) -> GridFunction:
    """Build a GridFunction from a callable and/or explicit values."""
    if values is None:
        if fn is None:
            raise ValueError("need a callable or explicit values")
        values = _eval_callable(fn, grid.quad_points, 1)
    values = np.atleast_2d(np.asarray(values))
    dvals = None
    if dfn is not None:
        dvals = _eval_callable(dfn, grid.quad_points, values.shape[0])
    return GridFunction(grid=grid, values=values, p=p, evaluator=fn,
                        derivative_values=dvals, derivative_evaluator=dfn)


def eval_gridfunction(u: GridFunction, x) -> np.ndarray:
    """Evaluate u at arbitrary points: analytic evaluator if present, else
    piecewise-linear reconstruction from the quadrature samples."""
    x = np.asarray(x, dtype=float)
    if u.evaluator is not None:
        return _eval_callable(u.evaluator, x, u.d)
    xp = u.grid.quad_points
    return np.stack([np.interp(x, xp, u.values[j].real) for j in range(u.d)])


def eval_gridfunction_derivative(u: GridFunction, x) -> np.ndarray:
    if u.derivative_evaluator is not None:
        return _eval_callable(u.derivative_evaluator, np.asarray(x, float), u.d)
    raise ValueError("grid function carries no derivative data")


def lp_norm(u: GridFunction, p: Optional[float] = None) -> float:
    """Quadrature L^p norm; p = inf gives the max over quadrature samples."""
    if p is None:
        p = u.p
    if p < 1:
        raise ValueError("need p >= 1")
    absvals = np.abs(u.values)
    if np.isinf(p):
        return float(np.max(absvals)) if absvals.size else 0.0
    w = u.grid.quad_weights
    return float(np.sum(w[None, :] * absvals ** p) ** (1.0 / p))


def _derivative_samples(u: GridFunction) -> np.ndarray:
    if u.derivative_values is not None:
        return np.atleast_2d(np.asarray(u.derivative_values))
    if u.derivative_evaluator is not None:
        return _eval_callable(u.derivative_evaluator, u.grid.quad_points, u.d)
    if u.evaluator is not None:
        # central differences of the analytic evaluator
        step = 1e-6 * max(1.0, u.grid.length)
        up = _eval_callable(u.evaluator, u.grid.quad_points + step, u.d)
        um = _eval_callable(u.evaluator, u.grid.quad_points - step, u.d)
        return (up - um) / (2 * step)
    raise ValueError("W^{1,p} norm requested for a function without derivative data")


def space_norm(u: GridFunction, space: SmoothingSpace, p: Optional[float] = None) -> float:
    """Norm of u in the given smoothing space.

    W1p/W2p combine the L^p norms of u and its derivatives; the Hoelder
    seminorm is the discrete sup over all sample pairs (a lower bound of
    the true seminorm).
    """
    if p is None:
        p = u.p
    if space.variant == "Lp":
        return lp_norm(u, p)
    if space.variant in ("W1p", "W2p"):
        du = _derivative_samples(u)
        d1 = GridFunction(grid=u.grid, values=du, p=p)
        total = lp_norm(u, p) ** p + lp_norm(d1, p) ** p
        if space.variant == "W2p":
            if u.derivative_evaluator is None:
                raise ValueError("W^{2,p} norm needs an analytic first derivative")
            step = 1e-5 * max(1.0, u.grid.length)
            xp = u.grid.quad_points
            d2 = (_eval_callable(u.derivative_evaluator, xp + step, u.d)
                  - _eval_callable(u.derivative_evaluator, xp - step, u.d)) / (2 * step)
            total += lp_norm(GridFunction(grid=u.grid, values=d2, p=p), p) ** p
        return float(total ** (1.0 / p))
    # Hoelder: evaluate at quadrature points plus partition nodes when possible
    if u.evaluator is not None:
        xs = np.unique(np.concatenate([u.grid.quad_points, u.grid.nodes]))
        vals = _eval_callable(u.evaluator, xs, u.d)
    else:
        xs = u.grid.quad_points
        vals = u.values
    sup = float(np.max(np.abs(vals)))
    dx = np.abs(xs[None, :] - xs[:, None])
    semi = 0.0
    for j in range(vals.shape[0]):
        dv = np.abs(vals[j][None, :] - vals[j][:, None])
        mask = dx > 0
        semi = max(semi, float(np.max(dv[mask] / dx[mask] ** space.alpha)))
    return sup + semi
