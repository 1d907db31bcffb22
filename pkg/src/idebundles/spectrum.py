"""Dichotomy spectra and spectral bundles of the linearized equation.

The spectrum of a nonautonomous linear difference equation is the set of
rates gamma for which the gamma-scaled equation admits no exponential
splitting.  Finite data cannot decide that exactly; admissibility is
declared when the singular values of long renormalized transition
products show a relative gap of at least 10 between contracting and
expanding directions.  For autonomous and periodic systems the
splittings themselves come from ordered Schur decompositions of the
period map, which is exact up to roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .dynamics import CoefficientSystem, IDEProblem, discretize, linear_system

__all__ = [
    "SpectrumEstimate",
    "DichotomyData",
    "SpectralBundle",
    "floquet_spectrum",
    "dichotomy_test",
    "dichotomy_spectrum",
    "spectral_splitting",
    "spectral_bundles",
]

_GAP_LOG = math.log(10.0)      # relative singular-value gap declaring a dichotomy
_CLUSTER_GAP = 1e-6            # moduli closer than this merge into one interval
_ZERO_TOL = 1e-12              # moduli below this count as zero (dropped)


def as_system(obj, n: Optional[int] = None) -> CoefficientSystem:
    """Coerce a problem, system, matrix, or matrix sequence to a system."""
    if isinstance(obj, CoefficientSystem):
        return obj
    if isinstance(obj, IDEProblem):
        if n is None:
            raise ValueError("a discretization level is required for problems")
        return discretize(obj, n)
    return linear_system(obj)


@dataclass
class SpectrumEstimate:
    intervals: List[Tuple[float, float]]          # descending, disjoint
    resolvent_samples: List[Tuple[float, bool]] = field(default_factory=list)
    accumulation: Optional[float] = None          # scan floor marker
    method: str = "Floquet"

    def point_values(self) -> List[float]:
        return [0.5 * (lo + hi) for lo, hi in self.intervals]


@dataclass
class DichotomyData:
    gamma: float
    K: float
    alpha: float
    beta: float
    rank: int                                   # stable rank (rank of P_t)
    period: int
    projectors: Dict[int, np.ndarray]
    stable_bases: Dict[int, np.ndarray]
    unstable_bases: Dict[int, np.ndarray]
    residuals: dict = field(default_factory=dict)

    def projector(self, t: int) -> np.ndarray:
        if self.period >= 1:
            return self.projectors[t % self.period]
        keys = sorted(self.projectors)
        return self.projectors[int(np.clip(t, keys[0], keys[-1]))]

    def stable_basis(self, t: int) -> np.ndarray:
        if self.period >= 1:
            return self.stable_bases[t % self.period]
        keys = sorted(self.stable_bases)
        return self.stable_bases[int(np.clip(t, keys[0], keys[-1]))]

    def unstable_basis(self, t: int) -> np.ndarray:
        if self.period >= 1:
            return self.unstable_bases[t % self.period]
        keys = sorted(self.unstable_bases)
        return self.unstable_bases[int(np.clip(t, keys[0], keys[-1]))]


@dataclass
class SpectralBundle:
    fibers: Dict[int, np.ndarray]    # t -> orthonormal basis (dim x r)
    dimension: int
    period: int = 1
    rates: tuple = ()

    def fiber(self, t: int) -> np.ndarray:
        if self.period >= 1:
            return self.fibers[t % self.period]
        keys = sorted(self.fibers)
        return self.fibers[int(np.clip(t, keys[0], keys[-1]))]


# ---------------------------------------------------------------------------
# Floquet spectrum


def _period_map(system: CoefficientSystem, start: int = 0) -> np.ndarray:
    theta = max(system.period, 1)
    M = np.eye(system.dim)
    for t in range(start, start + theta):
        M = system.matrix(t) @ M
    return M


def _cluster_intervals(moduli: np.ndarray) -> List[Tuple[float, float]]:
    vals = np.sort(moduli)[::-1]
    intervals = []
    for v in vals:
        if intervals and intervals[-1][0] - v <= _CLUSTER_GAP:
            intervals[-1][0] = min(intervals[-1][0], v)
        else:
            intervals.append([v, v])
    return [(lo, hi) for lo, hi in intervals]


def floquet_spectrum(obj, n: Optional[int] = None,
                     gamma_floor: float = 1e-4) -> SpectrumEstimate:
    """Spectrum of an autonomous/periodic system from its period map."""
    system = as_system(obj, n)
    if system.period < 1:
        raise ValueError("Floquet reduction needs an autonomous or periodic system")
    theta = system.period
    eigs = np.linalg.eigvals(_period_map(system))
    moduli = np.abs(eigs) ** (1.0 / theta)
    dropped = moduli < _ZERO_TOL
    kept = moduli[~dropped]
    est = SpectrumEstimate(intervals=_cluster_intervals(kept), method="Floquet")
    if np.any(dropped) or np.any(kept < gamma_floor):
        est.accumulation = gamma_floor
        est.intervals = [iv for iv in est.intervals if iv[1] >= gamma_floor]
    return est


# ---------------------------------------------------------------------------
# dichotomy testing


def _scaled_block(system: CoefficientSystem, gamma: float, t0: int,
                  nsteps: int):
    """Product of nsteps scaled matrices starting at t0, Frobenius-rescaled.

    Returns (matrix, log scale) or (None, -inf) if the product vanishes.
    """
    M = np.eye(system.dim)
    ls = 0.0
    for t in range(t0, t0 + nsteps):
        M = (system.matrix(t) / gamma) @ M
        s = np.linalg.norm(M)
        if s == 0.0:
            return None, -np.inf
        M /= s
        ls += math.log(s)
    return M, ls


def _scaled_log_singvals(system: CoefficientSystem, gamma: float,
                         min_steps: int) -> Tuple[np.ndarray, int]:
    """Per-direction log growth of the scaled transition products.

    Computed by the blockwise QR method: orthonormalize the propagated
    frame every few steps and accumulate the log of the triangular
    diagonal, so that contracting directions are not lost to underflow
    over long windows.  Entry i approximates log sigma_i of
    Phi(W, t0) / gamma^W with the directions sorted by the QR frame.
    """
    dim = system.dim
    if system.period >= 1:
        theta = system.period
        block = theta * max(1, -(-8 // theta))     # >= 8 steps per QR sweep
        B, ls = _scaled_block(system, gamma, 0, block)
        if B is None:
            return np.full(dim, -np.inf), block
        nblocks = max(1, -(-min_steps // block))
        Q = np.eye(dim)
        lsum = np.zeros(dim)
        with np.errstate(divide="ignore"):
            for _ in range(nblocks):
                Q, R = np.linalg.qr(B @ Q)
                lsum += np.log(np.abs(np.diag(R))) + ls
        return np.sort(lsum)[::-1], nblocks * block
    lo, hi = system.window
    steps = max(min_steps, 40)
    Q = np.eye(dim)
    lsum = np.zeros(dim)
    with np.errstate(divide="ignore"):
        for t in range(lo, lo + steps):
            Q, R = np.linalg.qr((system.matrix(t) / gamma) @ Q)
            lsum += np.log(np.abs(np.diag(R)))
    return np.sort(lsum)[::-1], steps


def dichotomy_test(mats, gamma: float, window: int = 4096,
                   n: Optional[int] = None):
    """Test the gamma-scaled equation for an exponential splitting.

    Returns (admissible, DichotomyData) on success, else (False, witness
    dict).  The window is the number of renormalized product steps; the
    discrimination radius around gamma is about gamma * ln(10) / window.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if window < 40:
        raise ValueError("window too short (need >= 40 steps)")
    system = as_system(mats, n)
    logs, steps = _scaled_log_singvals(system, gamma, window)
    expanding = logs >= _GAP_LOG
    contracting = logs <= -_GAP_LOG
    admissible = bool(np.all(expanding | contracting))
    if not admissible:
        witness = {
            "gamma": gamma,
            "marginal_rates": [float(gamma * math.exp(l / steps))
                               for l in logs if abs(l) < _GAP_LOG],
            "window": steps,
        }
        return False, witness
    data = _build_splitting(system, gamma, rank=int(np.sum(contracting)))
    return True, data


def _orth(cols: np.ndarray, dim: int) -> np.ndarray:
    if cols.size == 0:
        return np.zeros((dim, 0))
    q, _ = np.linalg.qr(cols)
    return q


def _build_splitting(system: CoefficientSystem, gamma: float,
                     rank: Optional[int] = None) -> DichotomyData:
    if system.period >= 1:
        return _eigen_splitting(system, gamma)
    return _window_splitting(system, gamma)


def _eigen_splitting(system: CoefficientSystem, gamma: float) -> DichotomyData:
    theta = system.period
    gth = gamma ** theta
    dim = system.dim
    projectors, sbases, ubases = {}, {}, {}
    alpha = 0.0
    beta = np.inf
    for t in range(theta):
        M = _period_map(system, start=t)
        Ts, Zs, sdim = scipy.linalg.schur(
            M, output="real", sort=lambda re, im: np.hypot(re, im) < gth)
        Tu, Zu, udim = scipy.linalg.schur(
            M, output="real", sort=lambda re, im: np.hypot(re, im) > gth)
        if sdim + udim != dim:
            raise ValueError(f"gamma = {gamma} lies in the spectrum (no strict splitting)")
        S = Zs[:, :sdim]
        U = Zu[:, :udim]
        X = np.hstack([S, U])
        Xi = np.linalg.inv(X)
        P = S @ Xi[:sdim, :] if sdim else np.zeros((dim, dim))
        projectors[t] = P
        sbases[t] = S
        ubases[t] = U
        mods = np.abs(np.linalg.eigvals(M)) ** (1.0 / theta)
        stab = mods[mods < gamma]
        unst = mods[mods > gamma]
        stab = stab[stab >= _ZERO_TOL]
        if stab.size:
            alpha = max(alpha, float(np.max(stab)))
        if unst.size:
            beta = min(beta, float(np.min(unst)))
    rank = int(round(np.trace(projectors[0])))
    K = _fit_K(system, projectors, ubases, alpha, beta, gamma)
    res = _splitting_residuals(system, projectors)
    return DichotomyData(gamma=gamma, K=K, alpha=alpha, beta=beta, rank=rank,
                         period=theta, projectors=projectors,
                         stable_bases=sbases, unstable_bases=ubases,
                         residuals=res)


def _window_splitting(system: CoefficientSystem, gamma: float) -> DichotomyData:
    """SVD-based splitting over the finite data window (aperiodic systems)."""
    lo, hi = system.window
    hi = max(hi, lo + 40)
    dim = system.dim
    # forward products from t to hi and backward from lo to t, renormalized
    G = {hi: np.eye(dim)}
    for t in range(hi - 1, lo - 1, -1):
        M = G[t + 1] @ (system.matrix(t) / gamma)
        s = np.linalg.norm(M)
        G[t] = M / s if s > 0 else M
    H = {lo: np.eye(dim)}
    for t in range(lo, hi):
        M = (system.matrix(t) / gamma) @ H[t]
        s = np.linalg.norm(M)
        H[t + 1] = M / s if s > 0 else M
    projectors, sbases, ubases = {}, {}, {}
    # stable rank from the midpoint split
    mid = (lo + hi) // 2
    svm = scipy.linalg.svdvals(G[mid])
    rank = int(np.sum(svm < 1e-8 * max(svm.max(), 1e-300)))
    for t in range(lo, hi + 1):
        _, _, Vt = np.linalg.svd(G[t])
        S = Vt[dim - rank:].T if rank else np.zeros((dim, 0))
        Uw, sw, _ = np.linalg.svd(H[t])
        U = Uw[:, :dim - rank]
        X = np.hstack([S, U])
        Xi = np.linalg.inv(X)
        P = S @ Xi[:rank, :] if rank else np.zeros((dim, dim))
        projectors[t] = P
        sbases[t] = S
        ubases[t] = U
    # crude rate fit from the full-window product
    logs, steps = _scaled_log_singvals(system, gamma, hi - lo)
    stab_logs = logs[logs < 0]
    unst_logs = logs[logs > 0]
    alpha = float(gamma * math.exp(np.max(stab_logs) / steps)) if stab_logs.size else 0.0
    beta = float(gamma * math.exp(np.min(unst_logs) / steps)) if unst_logs.size else np.inf
    K = max(1.0, max(np.linalg.norm(P, 2) for P in projectors.values()))
    res = _splitting_residuals(system, projectors, times=range(lo, hi))
    return DichotomyData(gamma=gamma, K=K, alpha=alpha, beta=beta, rank=rank,
                         period=0, projectors=projectors,
                         stable_bases=sbases, unstable_bases=ubases,
                         residuals=res)


def _splitting_residuals(system, projectors, times=None) -> dict:
    idem = 0.0
    invar = 0.0
    keys = sorted(projectors)
    times = list(times) if times is not None else keys
    for t in times:
        P = projectors[t % len(keys)] if system.period >= 1 else projectors[t]
        idem = max(idem, float(np.max(np.abs(P @ P - P))))
        L = system.matrix(t)
        if system.period >= 1:
            Pn = projectors[(t + 1) % len(keys)]
        else:
            Pn = projectors.get(t + 1)
            if Pn is None:
                continue
        invar = max(invar, float(np.max(np.abs(Pn @ L - L @ P))))
    return {"idempotency": idem, "invariance": invar}


def _fit_K(system, projectors, ubases, alpha, beta, gamma,
           max_steps: int = 24) -> float:
    theta = max(system.period, 1)
    K = 1.0
    for s in range(theta):
        P = projectors[s % theta]
        K = max(K, float(np.linalg.norm(P, 2)))
        # forward decay on the stable range
        Phi = np.eye(system.dim)
        for j in range(1, min(max_steps, 4 * theta) + 1):
            Phi = system.matrix(s + j - 1) @ Phi
            if alpha > 0:
                K = max(K, float(np.linalg.norm(Phi @ P, 2)) / alpha ** j)
        # backward decay on the unstable range
        if np.isfinite(beta) and ubases[s % theta].shape[1] > 0:
            U0 = ubases[s % theta]
            B = np.eye(U0.shape[1])
            for j in range(1, min(max_steps, 4 * theta) + 1):
                Uj = ubases[(s + j) % theta]
                Um = ubases[(s + j - 1) % theta]
                B = (Uj.T @ system.matrix(s + j - 1) @ Um) @ B
                Pj = projectors[(s + j) % theta]
                back = U0 @ np.linalg.solve(B, Uj.T @ (np.eye(system.dim) - Pj))
                K = max(K, float(np.linalg.norm(back, 2)) * beta ** j)
    return K


# ---------------------------------------------------------------------------
# spectrum scan


def _resolvent_state(system, gamma, tol):
    """Stable rank at gamma if the rate admits a dichotomy, else None.

    A direction with log growth inside (-GAP_LOG, GAP_LOG) over the test
    window means the scaled products neither contract nor expand at the
    resolution the window provides, so gamma is flagged as spectrum.
    """
    window = int(min(max(256, math.ceil(8.0 * _GAP_LOG * gamma / tol)), 1 << 22))
    logs, steps = _scaled_log_singvals(system, gamma, window)
    if not np.all((logs >= _GAP_LOG) | (logs <= -_GAP_LOG)):
        return None
    return int(np.sum(logs <= -_GAP_LOG))


def _admissible(system, gamma, tol):
    return _resolvent_state(system, gamma, tol) is not None


def dichotomy_spectrum(obj, n: Optional[int] = None,
                       gamma_grid: Optional[Sequence[float]] = None,
                       tol: float = 1e-3,
                       gamma_floor: float = 1e-4) -> SpectrumEstimate:
    """Scan a rate grid for dichotomies and bisect the interval endpoints.

    The scan stops at gamma_floor; possible spectrum below it (compact
    operators accumulate at 0) is recorded as the accumulation marker.
    """
    system = as_system(obj, n)
    if gamma_grid is None or len(gamma_grid) == 0:
        raise ValueError("need a nonempty rate grid")
    grid = sorted(g for g in gamma_grid if g >= gamma_floor)
    if not grid:
        raise ValueError("rate grid lies entirely below the scan floor")
    states = [_resolvent_state(system, g, tol) for g in grid]
    samples = [(g, s is not None) for g, s in zip(grid, states)]

    def edge_from_left(glo, ghi, state_lo):
        # largest rate still sharing the resolvent state of the left end
        while ghi - glo > 0.25 * tol:
            mid = 0.5 * (glo + ghi)
            if _resolvent_state(system, mid, tol) == state_lo:
                glo = mid
            else:
                ghi = mid
        return 0.5 * (glo + ghi)

    def edge_from_right(glo, ghi, state_hi):
        # smallest rate already sharing the resolvent state of the right end
        while ghi - glo > 0.25 * tol:
            mid = 0.5 * (glo + ghi)
            if _resolvent_state(system, mid, tol) == state_hi:
                ghi = mid
            else:
                glo = mid
        return 0.5 * (glo + ghi)

    intervals = []
    i = 0
    while i < len(grid):
        if states[i] is None:
            j = i
            while j + 1 < len(grid) and states[j + 1] is None:
                j += 1
            lo = (edge_from_left(grid[i - 1], grid[i], states[i - 1])
                  if i > 0 else grid[i])
            hi = (edge_from_right(grid[j], grid[j + 1], states[j + 1])
                  if j + 1 < len(grid) else grid[j])
            intervals.append((lo, hi))
            i = j + 1
        else:
            # a rank change between admissible rates means spectrum in between
            if i + 1 < len(grid) and states[i + 1] is not None \
                    and states[i + 1] != states[i]:
                lo = edge_from_left(grid[i], grid[i + 1], states[i])
                hi = edge_from_right(lo, grid[i + 1], states[i + 1])
                intervals.append((lo, hi))
            i += 1
    intervals.sort(key=lambda iv: -iv[1])
    return SpectrumEstimate(intervals=intervals, resolvent_samples=samples,
                            accumulation=gamma_floor, method="Scan")


def spectral_splitting(obj, n: Optional[int] = None, gamma: float = 1.0,
                       window: int = 4096) -> DichotomyData:
    """Projectors and constants for an admissible rate gamma."""
    ok, data = dichotomy_test(obj, gamma, window=window, n=n)
    if not ok:
        raise ValueError(f"gamma = {gamma} lies inside the spectrum: {data}")
    return data


def _intersect(A: np.ndarray, B: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of span(A) cap span(B) for orthonormal A, B."""
    dim = A.shape[0]
    if A.shape[1] == 0 or B.shape[1] == 0:
        return np.zeros((dim, 0))
    u, s, _ = np.linalg.svd(A.T @ B)
    r = int(np.sum(s >= 1.0 - tol))
    return _orth(A @ u[:, :r], dim) if r else np.zeros((dim, 0))


def spectral_bundles(obj, n: Optional[int] = None,
                     rates: Sequence[float] = (), window: int = 4096) -> List[SpectralBundle]:
    """Invariant bundles between consecutive resolvent rates.

    rates are sorted descending; the j-th bundle collects the dynamics
    with moduli between rates j and j-1 (the first bundle sits above the
    largest rate, the last below the smallest).  The Whitney sum of all
    fibers must recover the full space.
    """
    system = as_system(obj, n)
    if len(rates) == 0:
        raise ValueError("need at least one rate")
    rates = sorted(rates, reverse=True)
    splits = [spectral_splitting(system, gamma=g, window=window) for g in rates]
    theta = max(system.period, 1)
    bundles = []
    for j in range(len(rates) + 1):
        fibers = {}
        for t in range(theta):
            if j == 0:
                fib = splits[0].unstable_basis(t)
            elif j == len(rates):
                fib = splits[-1].stable_basis(t)
            else:
                fib = _intersect(splits[j - 1].stable_basis(t),
                                 splits[j].unstable_basis(t))
            fibers[t] = fib
        dims = {f.shape[1] for f in fibers.values()}
        if len(dims) != 1:
            raise ValueError("bundle dimension varies along the period")
        used = (rates[0],) if j == 0 else (rates[j - 1],) if j == len(rates) \
            else (rates[j - 1], rates[j])
        bundles.append(SpectralBundle(fibers=fibers, dimension=dims.pop(),
                                      period=theta, rates=used))
    # Whitney sum check
    for t in range(theta):
        stack = np.hstack([b.fiber(t) for b in bundles if b.dimension > 0])
        if stack.shape[1] != system.dim:
            raise ValueError("bundle dimensions do not add up to the state dimension")
        if np.linalg.matrix_rank(stack, tol=1e-8) != system.dim:
            raise ValueError("Whitney sum is numerically rank deficient")
    return bundles
