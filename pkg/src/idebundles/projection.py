"""Galerkin projection schemes: piecewise constant, piecewise linear, spectral.

Each scheme provides the projection onto its level-n subspace, the
discretization error in L^p, and the convergence-function bound
Gamma(1/n) that the error estimates are measured against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .habitat import (
    GridFunction,
    Habitat1D,
    MeshFamily,
    SmoothingSpace,
    build_grid,
    eval_gridfunction,
    lp_norm,
    space_norm,
)
from .operators import GrowthSpec, KernelSpec, kernel_matrix

__all__ = [
    "ProjectionScheme",
    "GammaModel",
    "project",
    "discretization_error",
    "gamma_bound",
    "verify_error_bound",
    "build_spectral_basis",
]


@dataclass(frozen=True)
class ProjectionScheme:
    """A family of projections Pi_n onto nested finite-dimensional subspaces."""

    variant: str                     # piecewise_constant | piecewise_linear | spectral
    mesh: MeshFamily
    a: float = 0.0
    b: float = 1.0
    order: int = 4
    # spectral data (values of the orthonormal basis at grid quadrature points)
    basis: Optional[np.ndarray] = None        # shape (n_max, npoints)
    eigenvalues: Optional[np.ndarray] = None
    grid: Optional[Habitat1D] = None

    def __post_init__(self):
        if self.variant not in ("piecewise_constant", "piecewise_linear", "spectral"):
            raise ValueError(f"unknown scheme variant {self.variant!r}")
        if self.variant == "spectral":
            if self.basis is None or self.grid is None:
                raise ValueError("spectral scheme needs a basis and its grid")
            w = self.grid.quad_weights
            gram = (self.basis * w[None, :]) @ self.basis.T
            if np.max(np.abs(gram - np.eye(len(self.basis)))) > 1e-10:
                raise ValueError("spectral basis is not orthonormal")

    @property
    def dim_offset(self) -> int:
        """State dimension of level n is n + dim_offset."""
        return 1 if self.variant == "piecewise_linear" else 0


def project(scheme: ProjectionScheme, u: GridFunction, n: int) -> GridFunction:
    """Apply Pi_n to u.  n = 0 is the identity (the full space)."""
    if n == 0:
        return u
    if u.d != 1:
        raise ValueError("projections act on scalar grid functions")
    if scheme.variant == "piecewise_constant":
        return _project_pc(scheme, u, n)
    if scheme.variant == "piecewise_linear":
        return _project_pl(scheme, u, n)
    return _project_spectral(scheme, u, n)


def _project_pc(scheme, u, n):
    nodes = np.linspace(scheme.a, scheme.b, n + 1)
    h = (scheme.b - scheme.a) / n
    idx = np.clip(np.searchsorted(nodes, u.grid.quad_points, side="right") - 1, 0, n - 1)
    sums = np.bincount(idx, weights=u.grid.quad_weights * u.values[0].real, minlength=n)
    covered = np.bincount(idx, weights=u.grid.quad_weights, minlength=n)
    means = np.divide(sums, covered, out=np.zeros(n), where=covered > 0)

    def evaluator(x):
        j = np.clip(np.searchsorted(nodes, np.atleast_1d(x), side="right") - 1, 0, n - 1)
        return means[j]

    return GridFunction(grid=u.grid, values=means[idx][None, :], p=u.p,
                        evaluator=evaluator)


def _project_pl(scheme, u, n):
    xn = np.linspace(scheme.a, scheme.b, n + 1)
    yn = eval_gridfunction(u, xn)[0]

    def evaluator(x):
        return np.interp(np.atleast_1d(x), xn, yn)

    vals = evaluator(u.grid.quad_points)
    return GridFunction(grid=u.grid, values=vals[None, :], p=u.p, evaluator=evaluator)


def _project_spectral(scheme, u, n):
    g = scheme.grid
    if u.grid.npoints == g.npoints and np.allclose(u.grid.quad_points, g.quad_points):
        uv = u.values[0]
    else:
        uv = eval_gridfunction(u, g.quad_points)[0]
    if n > len(scheme.basis):
        raise ValueError("spectral truncation index exceeds the basis size")
    coeffs = scheme.basis[:n] @ (g.quad_weights * uv)
    vals = coeffs @ scheme.basis[:n]
    xp = g.quad_points

    def evaluator(x):
        return np.interp(np.atleast_1d(x), xp, vals)

    return GridFunction(grid=g, values=vals[None, :], p=u.p, evaluator=evaluator)


def discretization_error(scheme: ProjectionScheme, u: GridFunction, n: int,
                         p: float) -> float:
    """||u - Pi_n u||_p by quadrature (p = inf: max over samples)."""
    pu = project(scheme, u, n)
    if pu.grid is not u.grid:
        uv = eval_gridfunction(u, pu.grid.quad_points)
        diff = uv - pu.values
        return lp_norm(GridFunction(grid=pu.grid, values=diff, p=p), p)
    diff = u.values - pu.values
    return lp_norm(GridFunction(grid=u.grid, values=diff, p=p), p)


@dataclass(frozen=True)
class GammaModel:
    """Convergence function Gamma for a scheme/space pairing.

    piecewise_constant:        Gamma(r) = C r            (W^{1,p} data)
    piecewise_linear, Sobolev: Gamma(r) = 2 C^l r^l      (l = 1 or 2)
    piecewise_linear, Hoelder: Gamma(r) = length^{1/p} d^{1/p} C^alpha r^alpha
    fitted:                    Gamma(r) = C r^order      (label: fitted, not closed form)
    """

    scheme_variant: str
    space: SmoothingSpace
    C: float = 1.0
    l: int = 1
    length: float = 1.0
    d: int = 1
    p: float = 2.0
    order: float = 1.0
    label: str = "closed-form"

    def gamma(self, rho: float) -> float:
        if rho <= 0:
            raise ValueError("Gamma is evaluated at positive arguments")
        if self.scheme_variant == "piecewise_constant":
            if self.space.variant == "Hoelder":
                raise ValueError("unsupported pairing: piecewise constant with Hoelder data")
            return self.C * rho
        if self.scheme_variant == "piecewise_linear":
            if self.space.variant == "Hoelder":
                return (self.length ** (1.0 / self.p) * self.d ** (1.0 / self.p)
                        * self.C ** self.space.alpha * rho ** self.space.alpha)
            return 2.0 * self.C ** self.l * rho ** self.l
        if self.scheme_variant == "fitted":
            return self.C * rho ** self.order
        raise ValueError(f"no Gamma model for scheme {self.scheme_variant!r}")


def gamma_bound(model: GammaModel, n: int) -> float:
    """Evaluate Gamma(1/n)."""
    if n < 1:
        raise ValueError("level must be positive")
    return model.gamma(1.0 / n)


def verify_error_bound(scheme: ProjectionScheme, model: GammaModel,
                       corpus: Sequence[GridFunction],
                       levels: Optional[Sequence[int]] = None) -> dict:
    """Check ||u - Pi_n u||_p <= Gamma(1/n) ||u||_X for each corpus member."""
    if levels is None:
        levels = scheme.mesh.levels
    norms = []
    for i, u in enumerate(corpus):
        try:
            norms.append(space_norm(u, model.space, model.p))
        except ValueError as exc:
            raise ValueError(f"corpus member {i} is outside {model.space.variant}: {exc}")
    rows = []
    passed = True
    for i, (u, snorm) in enumerate(zip(corpus, norms)):
        for n in levels:
            err = discretization_error(scheme, u, n, model.p)
            bound = gamma_bound(model, n) * snorm
            ok = err <= bound + 1e-12
            passed &= ok
            rows.append({"function": i, "n": int(n), "error": err,
                         "bound": bound, "margin": bound - err, "ok": ok})
    return {"passed": passed, "rows": rows}


def build_spectral_basis(k: KernelSpec, g: GrowthSpec, grid: Habitat1D,
                         n_max: int) -> ProjectionScheme:
    """Orthonormal eigenbasis of the (self-adjoint) weighted linearization."""
    y = grid.quad_points
    w = grid.quad_weights
    c0 = np.asarray(g.deriv(0, y, np.zeros_like(y), 1))
    sw = np.sqrt(w)
    M = sw[:, None] * kernel_matrix(k, 0, y, y) * (c0 * sw)[None, :]
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > 1e-8 * scale:
        raise ValueError("weighted linearization is not symmetric")
    evals, evecs = np.linalg.eigh(M)
    if np.max(np.abs(evals)) < 1e-12:
        raise ValueError("degenerate spectrum: linearization is numerically zero")
    # modulus-descending order, ties broken by lower index
    idx = np.argsort(-np.abs(evals), kind="stable")[:n_max]
    basis = (evecs[:, idx] / sw[:, None]).T
    return ProjectionScheme(variant="spectral",
                            mesh=MeshFamily(C=grid.length, levels=(n_max,)),
                            a=grid.a, b=grid.b, order=grid.order,
                            basis=basis, eigenvalues=evals[idx], grid=grid)
