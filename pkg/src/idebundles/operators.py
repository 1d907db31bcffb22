"""Kernels, growth functions and the integral-operator machinery.

Implements the Fredholm (linear integral) and Nemytskii (pointwise
substitution) operators whose composition drives the equation, together
with the quantitative bounds used by the invariant-bundle solver:
Hille-Tamarkin norms, smoothing constants, Lipschitz constants, the
smooth cut-off modification, and the hypothesis audit that gates bundle
computations.

All kernels are scalar valued (d = n = 1); see the repository notes for
the rationale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .habitat import (
    GridFunction,
    Habitat1D,
    SmoothingSpace,
    gridfun,
    lp_norm,
)

__all__ = [
    "ExponentConfig",
    "TimeDependence",
    "KernelSpec",
    "GrowthSpec",
    "LipschitzBudget",
    "kernel_matrix",
    "kernel_matrix_dx",
    "fredholm_apply",
    "hille_tamarkin_norm",
    "smoothing_constant",
    "nemytskii_apply",
    "nemytskii_derivative",
    "lipschitz_bound",
    "hammerstein_apply",
    "hammerstein_derivative",
    "cutoff_chi",
    "cutoff_chi_d1",
    "cutoff_modify",
    "delta_max_gap",
    "delta_max_stable",
    "delta_max_unstable",
    "hypothesis_audit",
]


@dataclass(frozen=True)
class ExponentConfig:
    """Exponent pair q < p with conjugate q' and smoothness order m (m q < p)."""

    p: float
    q: float
    m: int = 1

    def __post_init__(self):
        if not (self.q > 1 and self.p > self.q):
            raise ValueError("need 1 < q < p")
        if self.m * self.q >= self.p and self.m > 0:
            raise ValueError("need m*q < p")

    @property
    def q_conj(self) -> float:
        return self.q / (self.q - 1.0)


@dataclass(frozen=True)
class TimeDependence:
    """Autonomous, periodic, or finite-window time dependence.

    Window data is extended constantly outside [t_min, t_max].
    """

    kind: str = "autonomous"   # autonomous | periodic | window
    period: int = 1
    t_min: int = 0
    t_max: int = 0

    def __post_init__(self):
        if self.kind not in ("autonomous", "periodic", "window"):
            raise ValueError(f"unknown time dependence {self.kind!r}")
        if self.kind == "periodic" and self.period < 1:
            raise ValueError("period must be >= 1")

    def phase(self, t: int) -> int:
        if self.kind == "autonomous":
            return 0
        if self.kind == "periodic":
            return int(t) % self.period
        return int(np.clip(t, self.t_min, self.t_max)) - self.t_min

    @property
    def n_phases(self) -> int:
        if self.kind == "autonomous":
            return 1
        if self.kind == "periodic":
            return self.period
        return self.t_max - self.t_min + 1


def _phase_params(params, phase: int):
    if isinstance(params, (list, tuple)):
        return params[phase]
    return params


@dataclass(frozen=True)
class KernelSpec:
    """Declarative kernel description.

    variants and parameters:
      laplace    {delta}            (delta/2) exp(-delta |x-y|)
      root_exp   {delta, alpha}     (delta^2/2) exp(-delta |x-y|^alpha)
      gaussian   {sigma}            exp(-(x-y)^2 / (2 sigma^2)) / (sigma sqrt(2 pi))
      separable  {pairs}            sum_i w_i a_i(x) b_i(y)
      tabulated  {array, x, y}      bilinear interpolation of samples
    params may be a dict (all phases) or a list of dicts (one per phase).
    """

    variant: str
    params: Union[dict, Sequence[dict]]
    time: TimeDependence = TimeDependence()
    dims: tuple = (1, 1)

    def __post_init__(self):
        if self.variant not in ("laplace", "root_exp", "gaussian", "separable", "tabulated"):
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        if self.dims != (1, 1):
            raise ValueError("only scalar kernels (d = n = 1) are supported")
        for ph in range(self.time.n_phases):
            prm = self.at(0) if not isinstance(self.params, (list, tuple)) else self.params[ph]
            if self.variant == "laplace" and prm["delta"] <= 0:
                raise ValueError("laplace delta must be positive")
            if self.variant == "root_exp":
                if prm["delta"] <= 0 or not (0 < prm["alpha"] <= 1):
                    raise ValueError("root_exp needs delta > 0 and alpha in (0,1]")
            if self.variant == "tabulated" and not np.all(np.isfinite(prm["array"])):
                raise ValueError("tabulated kernel has non-finite entries")

    def at(self, t: int) -> dict:
        return _phase_params(self.params, self.time.phase(t))


def kernel_matrix(k: KernelSpec, t: int, x, y) -> np.ndarray:
    """Sample k_t on the tensor grid x (rows) times y (columns)."""
    x = np.asarray(x, dtype=float)[:, None]
    y = np.asarray(y, dtype=float)[None, :]
    prm = k.at(t)
    if k.variant == "laplace":
        d = prm["delta"]
        out = 0.5 * d * np.exp(-d * np.abs(x - y))
    elif k.variant == "root_exp":
        d, al = prm["delta"], prm["alpha"]
        out = 0.5 * d * d * np.exp(-d * np.abs(x - y) ** al)
    elif k.variant == "gaussian":
        s = prm["sigma"]
        out = np.exp(-((x - y) ** 2) / (2 * s * s)) / (s * math.sqrt(2 * math.pi))
    elif k.variant == "separable":
        out = np.zeros((x.size, y.size))
        for wt, af, bf in prm["pairs"]:
            out += wt * np.asarray(af(x.ravel()))[:, None] * np.asarray(bf(y.ravel()))[None, :]
    else:  # tabulated
        from scipy.interpolate import RegularGridInterpolator
        interp = RegularGridInterpolator(
            (prm["x"], prm["y"]), np.asarray(prm["array"], dtype=float),
            bounds_error=False, fill_value=None)
        xx, yy = np.broadcast_arrays(x, y)
        out = interp(np.stack([xx.ravel(), yy.ravel()], axis=-1)).reshape(xx.shape)
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite kernel sample")
    return out


def kernel_matrix_dx(k: KernelSpec, t: int, x, y) -> Optional[np.ndarray]:
    """Closed-form x-derivative of the kernel where available (else None)."""
    x = np.asarray(x, dtype=float)[:, None]
    y = np.asarray(y, dtype=float)[None, :]
    prm = k.at(t)
    if k.variant == "laplace":
        d = prm["delta"]
        return -d * np.sign(x - y) * 0.5 * d * np.exp(-d * np.abs(x - y))
    if k.variant == "gaussian":
        s = prm["sigma"]
        base = np.exp(-((x - y) ** 2) / (2 * s * s)) / (s * math.sqrt(2 * math.pi))
        return -(x - y) / (s * s) * base
    if k.variant == "separable":
        step = 1e-7
        xs = x.ravel()
        dfs = []
        for wt, af, bf in prm["pairs"]:
            da = (np.asarray(af(xs + step)) - np.asarray(af(xs - step))) / (2 * step)
            dfs.append(wt * da[:, None] * np.asarray(bf(y.ravel()))[None, :])
        return np.sum(dfs, axis=0)
    return None


def fredholm_apply(k: KernelSpec, t: int, v: GridFunction, grid: Habitat1D) -> GridFunction:
    """Apply the linear integral operator: (K_t v)(x) = int k_t(x, y) v(y) dy."""
    if v.d != 1:
        raise ValueError("scalar kernels act on scalar functions")
    w = grid.quad_weights
    y = grid.quad_points
    vals = v.values[0]
    wv = w * vals
    out = kernel_matrix(k, t, y, y) @ wv

    def evaluator(x):
        return kernel_matrix(k, t, np.atleast_1d(x), y) @ wv

    dmat = kernel_matrix_dx(k, t, y, y)
    dvals = dmat @ wv if dmat is not None else None

    def devaluator(x):
        m = kernel_matrix_dx(k, t, np.atleast_1d(x), y)
        return m @ wv

    return GridFunction(grid=grid, values=out[None, :], p=v.p, evaluator=evaluator,
                        derivative_values=None if dvals is None else dvals[None, :],
                        derivative_evaluator=devaluator if dmat is not None else None)


def hille_tamarkin_norm(k: KernelSpec, t: int, cfg: ExponentConfig, grid: Habitat1D) -> float:
    """Mixed (p, q') quadrature norm of the kernel; bounds the L^q -> L^p operator norm."""
    w = grid.quad_weights
    K = np.abs(kernel_matrix(k, t, grid.quad_points, grid.quad_points))
    qc = cfg.q_conj
    inner = (K ** qc) @ w
    val = float((w @ inner ** (cfg.p / qc)) ** (1.0 / cfg.p))
    if not np.isfinite(val):
        raise ValueError("Hille-Tamarkin norm overflow")
    return val


def smoothing_constant(k: KernelSpec, t: int, cfg: ExponentConfig,
                       grid: Optional[Habitat1D] = None):
    """Smoothing space and constant C_t with ||K_t u||_X <= C_t ||u||_q.

    Closed forms exist for the laplace and root_exp kernels and for
    separable kernels with smooth factors; other variants need a
    user-supplied constant.
    """
    prm = k.at(t)
    if k.variant == "laplace":
        if grid is None:
            raise ValueError("laplace smoothing constant needs the habitat length")
        l = grid.length
        d = prm["delta"]
        C = l ** (1.0 + 1.0 / cfg.p - 1.0 / (cfg.p * cfg.q)) * (d / 2.0) \
            * (1.0 + (d / 2.0) ** cfg.p) ** (1.0 / cfg.p)
        return SmoothingSpace("W1p"), float(C)
    if k.variant == "root_exp":
        if grid is None:
            raise ValueError("root_exp smoothing constant needs the habitat measure")
        d, al = prm["delta"], prm["alpha"]
        C = (d * d / 2.0) * grid.length ** (1.0 / cfg.q_conj) * max(1.0, d)
        return SmoothingSpace("Hoelder", alpha=al), float(C)
    if k.variant == "separable":
        if grid is None:
            raise ValueError("separable smoothing constant needs a quadrature grid")
        if len(prm["pairs"]) == 0:
            return SmoothingSpace("Lp"), 0.0
        # ||sum w a_i (b_i, v)||_{W^{1,p}} <= sum |w| ||a_i||_{W^{1,p}} ||b_i||_{q'}
        total = 0.0
        for wt, af, bf in prm["pairs"]:
            a = gridfun(grid, fn=af, p=cfg.p)
            bnorm = lp_norm(gridfun(grid, fn=bf), cfg.q_conj)
            from .habitat import space_norm
            total += abs(wt) * space_norm(a, SmoothingSpace("W1p"), cfg.p) * bnorm
        return SmoothingSpace("W1p"), float(total)
    if k.variant == "tabulated" and not np.any(k.at(t)["array"]):
        return SmoothingSpace("Lp"), 0.0
    raise ValueError(f"no closed-form smoothing constant for {k.variant!r}; supply one")


# ---------------------------------------------------------------------------
# growth functions


def _bump_psi(s):
    """Smooth ramp: 0 for s <= 0, 1 for s >= 1, C-infinity in between."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    out[s >= 1] = 1.0
    mid = (s > 0) & (s < 1)
    sm = s[mid]
    a = np.exp(-1.0 / sm)
    b = np.exp(-1.0 / (1.0 - sm))
    out[mid] = a / (a + b)
    return out


def _bump_psi_d1(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    mid = (s > 0) & (s < 1)
    sm = s[mid]
    a = np.exp(-1.0 / sm)
    b = np.exp(-1.0 / (1.0 - sm))
    da = a / sm ** 2
    db = -b / (1.0 - sm) ** 2
    out[mid] = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return out


def cutoff_chi(z, rho: float):
    """C-infinity cut-off: 1 on |z| <= rho, 0 on |z| >= 2 rho."""
    if rho <= 0:
        raise ValueError("cut-off radius must be positive")
    return _bump_psi(2.0 - np.abs(z) / rho)


def cutoff_chi_d1(z, rho: float):
    z = np.asarray(z, dtype=float)
    return _bump_psi_d1(2.0 - np.abs(z) / rho) * (-np.sign(z) / rho)


@dataclass(frozen=True)
class GrowthSpec:
    """Declarative growth function g_t(x, z) with closed-form z-derivatives.

    variants and parameters:
      linear               {c}                 c(x) z
      quadratic            {c1, a}             c1 z + a z^2
      localized_quadratic  {c1, a, rho}        c1 z + a chi_rho(z) z^2
      ricker               {r}                 z exp(r (1 - z))
      beverton_holt        {a, b}              a z / (1 + b z)
      cutoff               {inner, rho, phi}   chi-truncated perturbed motion
    All variants satisfy g_t(x, 0) = 0.  Order-2 derivatives of the
    cut-off variants are differenced numerically from the order-1 form.
    """

    variant: str
    params: Union[dict, Sequence[dict]] = field(default_factory=dict)
    time: TimeDependence = TimeDependence()
    max_order: int = 2

    def __post_init__(self):
        known = ("linear", "quadratic", "localized_quadratic", "ricker",
                 "beverton_holt", "cutoff")
        if self.variant not in known:
            raise ValueError(f"unknown growth variant {self.variant!r}")

    def at(self, t: int) -> dict:
        return _phase_params(self.params, self.time.phase(t))

    # -- evaluation -------------------------------------------------------
    def value(self, t: int, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z)
        prm = self.at(t)
        if self.variant == "linear":
            return _xcoef(prm["c"], x) * z
        if self.variant == "quadratic":
            return prm.get("c1", 1.0) * z + prm["a"] * z ** 2
        if self.variant == "localized_quadratic":
            return prm.get("c1", 1.0) * z + prm["a"] * cutoff_chi(z, prm["rho"]) * z ** 2
        if self.variant == "ricker":
            return z * np.exp(prm["r"] * (1.0 - z))
        if self.variant == "beverton_holt":
            return prm["a"] * z / (1.0 + prm["b"] * z)
        # cutoff
        inner, rho, phi = prm["inner"], prm["rho"], prm["phi"]
        zt = cutoff_chi(z, rho) * z
        ph = phi(t, x)
        return inner.value(t, x, zt + ph) - inner.value(t, x, ph)

    def deriv(self, t: int, x, z, order: int = 1):
        if order == 0:
            return self.value(t, x, z)
        if order > self.max_order:
            raise ValueError(f"derivative order {order} exceeds available smoothness")
        x = np.asarray(x, dtype=float)
        z = np.asarray(z)
        prm = self.at(t)
        if self.variant == "linear":
            return _xcoef(prm["c"], x) * np.ones_like(z) if order == 1 else np.zeros_like(z)
        if self.variant == "quadratic":
            if order == 1:
                return prm.get("c1", 1.0) + 2.0 * prm["a"] * z
            return 2.0 * prm["a"] * np.ones_like(z) if order == 2 else np.zeros_like(z)
        if self.variant == "ricker":
            e = np.exp(prm["r"] * (1.0 - z))
            if order == 1:
                return e * (1.0 - prm["r"] * z)
            if order == 2:
                return -prm["r"] * e * (2.0 - prm["r"] * z)
        if self.variant == "beverton_holt":
            if order == 1:
                return prm["a"] / (1.0 + prm["b"] * z) ** 2
            if order == 2:
                return -2.0 * prm["a"] * prm["b"] / (1.0 + prm["b"] * z) ** 3
        if self.variant == "localized_quadratic":
            if order == 1:
                chi = cutoff_chi(z, prm["rho"])
                dchi = cutoff_chi_d1(z, prm["rho"])
                return prm.get("c1", 1.0) + prm["a"] * (dchi * z ** 2 + 2.0 * chi * z)
        if self.variant == "cutoff" and order == 1:
            inner, rho, phi = prm["inner"], prm["rho"], prm["phi"]
            chi = cutoff_chi(z, rho)
            dchi = cutoff_chi_d1(z, rho)
            ph = phi(t, x)
            return inner.deriv(t, x, chi * z + ph, 1) * (dchi * z + chi)
        # cut-off variants, order >= 2: numerical difference of the order-1 form
        step = 1e-6 * max(1.0, float(np.max(np.abs(z))) if np.size(z) else 1.0)
        return (self.deriv(t, x, z + step, order - 1)
                - self.deriv(t, x, z - step, order - 1)) / (2 * step)

    # -- Lipschitz data ---------------------------------------------------
    def z_support(self, t: int) -> Optional[float]:
        """Radius beyond which D2 g equals its value at 0 (cut-off variants)."""
        prm = self.at(t)
        if self.variant in ("localized_quadratic", "cutoff"):
            return 2.0 * prm["rho"]
        if self.variant == "linear":
            return 0.0
        return None

    def lipschitz_lambda(self, t: int, x, zmax: Optional[float] = None, nsamples: int = 512):
        """lambda_t(x): sup_z |D2 g(x, z) - D2 g(x, 0)| (sampled over the support)."""
        sup = self.z_support(t)
        if sup == 0.0:
            return np.zeros_like(np.asarray(x, dtype=float))
        if sup is None and zmax is None:
            return np.full_like(np.asarray(x, dtype=float), np.inf)
        radius = sup if sup is not None else zmax
        zs = np.linspace(-radius, radius, nsamples)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d0 = self.deriv(t, x, np.zeros_like(x), 1)
        best = np.zeros_like(x)
        for z in zs:
            dv = self.deriv(t, x, np.full_like(x, z), 1)
            best = np.maximum(best, np.abs(dv - d0))
        return best

    def lipschitz_lambda_bar(self, t: int, x, zmax: Optional[float] = None,
                             nsamples: int = 512):
        """lambda-bar_t(x): sampled Lipschitz constant of z -> D2 g(x, z)."""
        sup = self.z_support(t)
        if sup == 0.0:
            return np.zeros_like(np.asarray(x, dtype=float))
        if sup is None and zmax is None:
            return np.full_like(np.asarray(x, dtype=float), np.inf)
        radius = sup if sup is not None else zmax
        zs = np.linspace(-radius, radius, nsamples)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        best = np.zeros_like(x)
        prev = self.deriv(t, x, np.full_like(x, zs[0]), 1)
        for z in zs[1:]:
            cur = self.deriv(t, x, np.full_like(x, z), 1)
            best = np.maximum(best, np.abs(cur - prev) / (zs[1] - zs[0]))
            prev = cur
        return best


def _xcoef(c, x):
    return np.asarray(c(x)) if callable(c) else c


def nemytskii_apply(g: GrowthSpec, t: int, u: GridFunction) -> GridFunction:
    """Pointwise substitution [G_t(u)](x) = g_t(x, u(x))."""
    x = u.grid.quad_points
    out = g.value(t, x, u.values[0])
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite growth output")
    ev = None
    if u.evaluator is not None:
        uev = u.evaluator
        ev = lambda xx: g.value(t, np.atleast_1d(xx), np.asarray(uev(np.atleast_1d(xx))))
    return GridFunction(grid=u.grid, values=out[None, :], p=u.p, evaluator=ev)


def nemytskii_derivative(g: GrowthSpec, t: int, u: GridFunction, order: int,
                         directions: Sequence[GridFunction]) -> GridFunction:
    """Multilinear action D2^l g(x, u(x)) v_1(x) ... v_l(x)."""
    if len(directions) != order:
        raise ValueError("need one direction per derivative order")
    x = u.grid.quad_points
    out = g.deriv(t, x, u.values[0], order)
    for v in directions:
        out = out * v.values[0]
    return GridFunction(grid=u.grid, values=np.atleast_1d(out)[None, :], p=u.p)


def lipschitz_bound(lam, cfg: ExponentConfig, grid: Habitat1D) -> float:
    """Lipschitz constant of the substitution operator from L^p to L^q:
    (int lam(y)^(p/(p-q)) dy)^((p-q)/p)."""
    if cfg.p == cfg.q:
        raise ValueError("exponent p/(p-q) degenerates for p = q")
    y = grid.quad_points
    vals = np.abs(np.asarray(lam(y)) if callable(lam) else np.full_like(y, float(lam)))
    ex = cfg.p / (cfg.p - cfg.q)
    return float((grid.quad_weights @ vals ** ex) ** (1.0 / ex))


def hammerstein_apply(k: KernelSpec, g: GrowthSpec, t: int, u: GridFunction,
                      grid: Habitat1D) -> GridFunction:
    return fredholm_apply(k, t, nemytskii_apply(g, t, u), grid)


def hammerstein_derivative(k: KernelSpec, g: GrowthSpec, t: int, u: GridFunction,
                           order: int, directions: Sequence[GridFunction],
                           grid: Habitat1D) -> GridFunction:
    return fredholm_apply(k, t, nemytskii_derivative(g, t, u, order, directions), grid)


def cutoff_modify(g_tilde: GrowthSpec, phi_ref, rho: float) -> GrowthSpec:
    """Equation of perturbed motion around phi_ref, cut off at radius rho.

    phi_ref: callable (t, x) -> reference value, or a dict t -> GridFunction.
    The result satisfies g(x, 0) = 0 and is globally Lipschitz.
    """
    if rho <= 0:
        raise ValueError("cut-off radius must be positive")
    if callable(phi_ref):
        phi = phi_ref
    else:
        from .habitat import eval_gridfunction
        traj = dict(phi_ref)
        tmin, tmax = min(traj), max(traj)

        def phi(t, x):
            tt = int(np.clip(t, tmin, tmax))
            return eval_gridfunction(traj[tt], np.atleast_1d(x))[0]

    return GrowthSpec(variant="cutoff",
                      params={"inner": g_tilde, "rho": rho, "phi": phi},
                      time=g_tilde.time, max_order=g_tilde.max_order)


# ---------------------------------------------------------------------------
# hypothesis audit


@dataclass(frozen=True)
class LipschitzBudget:
    L: float
    L_bar: float
    C_t: tuple

    def __post_init__(self):
        if self.L < 0 or self.L_bar < 0:
            raise ValueError("Lipschitz budget entries must be nonnegative")


def delta_max_gap(alpha: float, beta: float) -> float:
    return 0.5 * (beta - alpha)


def delta_max_stable(alpha: float, beta: float, m: int) -> float:
    return alpha * (((alpha + beta) / (alpha + alpha ** m)) ** (1.0 / m) - 1.0)


def delta_max_unstable(alpha: float, beta: float, m: int) -> float:
    return beta * (1.0 - ((alpha + beta) / (beta + beta ** m)) ** (1.0 / m))


def hypothesis_audit(k: KernelSpec, g: GrowthSpec, cfg: ExponentConfig,
                     grid: Habitat1D, splitting_constants: dict,
                     C_t: Optional[Sequence[float]] = None):
    """Check the smallness condition gating the bundle solver.

    splitting_constants: {"K": ..., "delta_max": ...} or
    {"K": ..., "alpha": ..., "beta": ...} (the gap variants are then
    evaluated with the smoothness order m and the minimum is used).
    Returns (LipschitzBudget, report dict); failure is reported, not raised.
    """
    n_ph = max(k.time.n_phases, g.time.n_phases)
    x = grid.quad_points
    ht, cts, lams, lbars = [], [], [], []
    for t in range(n_ph):
        ht.append(hille_tamarkin_norm(k, t, cfg, grid))
        if C_t is not None:
            cts.append(float(C_t[t % len(C_t)]))
        else:
            try:
                cts.append(smoothing_constant(k, t, cfg, grid)[1])
            except ValueError:
                cts.append(float("nan"))
        lams.append(lipschitz_bound(lambda y, t=t: g.lipschitz_lambda(t, y), cfg, grid))
        lbars.append(lipschitz_bound(lambda y, t=t: g.lipschitz_lambda_bar(t, y), cfg, grid))
    L = max(h * l for h, l in zip(ht, lams))
    L_bar = max((0.0 if l == 0 else c * l) for c, l in zip(cts, lbars))
    budget = LipschitzBudget(L=L, L_bar=L_bar, C_t=tuple(cts))

    K = float(splitting_constants["K"])
    if "delta_max" in splitting_constants:
        dmax = float(splitting_constants["delta_max"])
        variants = {"given": dmax}
    else:
        al, be = float(splitting_constants["alpha"]), float(splitting_constants["beta"])
        m = max(1, cfg.m)
        variants = {
            "gap": delta_max_gap(al, be),
            "stable": delta_max_stable(al, be, m),
            "unstable": delta_max_unstable(al, be, m),
        }
        dmax = min(variants.values())
    K_center = K * K + 2.0 * K
    report = {
        "L": L,
        "L_bar": L_bar,
        "C_t": tuple(cts),
        "hille_tamarkin": tuple(ht),
        "K": K,
        "delta_max": dmax,
        "delta_max_variants": variants,
        "smallness_lhs": 4.0 * K * L,
        "smallness_rhs": dmax,
        "passed": bool(np.isfinite(L) and 4.0 * K * L < dmax),
        "center_passed": bool(np.isfinite(L) and 2.0 * K_center * L < dmax),
        "inequality": "4*K*L < delta_max",
    }
    if k.variant == "laplace":
        # two readings of the displayed operator-norm bound for this kernel;
        # the weaker (larger) one is the checked inequality
        l = grid.length
        d = k.at(0)["delta"]
        literal = l ** (1.0 + cfg.p - 1.0 / cfg.q) * (d / 2.0) ** cfg.p
        rooted = literal ** (1.0 / cfg.p)
        report["laplace_bound_literal"] = literal
        report["laplace_bound_rooted"] = rooted
        report["laplace_bound_ok"] = bool(ht[0] <= max(literal, rooted) + 1e-10)
    return budget, report
