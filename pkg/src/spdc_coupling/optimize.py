"""Coupling-probability maximization over crystal length and waists.

Derivative-free simplex search (log-parameter space, four deterministic
starts spanning the bounds) maximizes the analytic or numeric probability
over (L, w) at fixed pump waist; linear fits of the resulting optima against
the pump waist reproduce the optimum-geometry lines; a 1-D search on top of
them locates the globally best pump waist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sciopt

from .model import SetupParams, optimal_h, total_probability
from .oracle import QuadratureSpec, probability_numeric

__all__ = [
    "Bounds",
    "CouplingObjective",
    "OptimizationResult",
    "LinearFit",
    "FitLinesResult",
    "optimize_Lw",
    "fit_optimum_lines",
    "find_global_wp",
]

OBJECTIVES = ("analytic", "numeric")


@dataclass(frozen=True)
class Bounds:
    """Search box; covers the figure ranges with margin."""

    L: tuple = (0.05e-3, 20e-3)
    w: tuple = (5e-6, 500e-6)
    w_P: tuple = (5e-6, 300e-6)


@dataclass(frozen=True)
class CouplingObjective:
    """Probability as a function of (L, w, w_P) for a fixed crystal/spectra.

    kind 'analytic' evaluates the closed form, 'numeric' the exact-sinc
    quadrature (requires the mismatch expansion).  The transverse offset is
    set to its optimum for every evaluation.
    """

    kind: str
    constants: object
    sigma_P: float
    sigma_F: float
    expansion: object = None
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        if self.kind not in OBJECTIVES:
            raise ValueError(f"objective kind must be one of {OBJECTIVES}")
        if self.kind == "numeric" and self.expansion is None:
            raise ValueError("numeric objective requires a mismatch expansion")

    def probability(self, L, w, w_P):
        setup = SetupParams(
            L=L, w=w, w_P=w_P, h=0.0, sigma_P=self.sigma_P, sigma_F=self.sigma_F
        )
        setup = setup.with_updates(h=optimal_h(setup, self.constants))
        if self.kind == "analytic":
            return total_probability(setup, self.constants, warn=False)
        return probability_numeric(
            setup, self.constants, self.expansion, self.quad
        )


@dataclass(frozen=True)
class OptimizationResult:
    params: dict
    p_max: float
    evaluations: int
    converged: bool
    message: str = ""


@dataclass(frozen=True)
class LinearFit:
    """Least-squares line y = intercept + slope * x (both in meters here)."""

    intercept: float
    slope: float
    residual_rms: float
    n_points: int


@dataclass(frozen=True)
class FitLinesResult:
    w_fit: LinearFit
    L_fit: LinearFit
    records: tuple  # (w_P, L_opt, w_opt, p_max) per grid point
    excluded: tuple  # w_P values whose inner optimization did not converge


_STARTS = ((0.3, 0.3), (0.3, 0.7), (0.7, 0.3), (0.7, 0.7))
_EDGE_MARGIN = 0.01  # fraction of the log-box width counting as "on boundary"


def _nelder_mead_log2d(fun, lo, hi, *, xtol_log=4.34e-4):
    """Maximize fun(x) over the 2-D log10 box [lo, hi]; four deterministic
    starts, explicit initial simplexes.  Returns (x_best, f_best, nfev)."""
    lo = np.asarray(lo)
    hi = np.asarray(hi)
    span = hi - lo
    evaluations = 0

    def negative(x):
        nonlocal evaluations
        if np.any(x < lo) or np.any(x > hi):
            return np.inf
        evaluations += 1
        return -fun(x)

    best_x, best_f = None, np.inf
    for frac in _STARTS:
        x0 = lo + span * np.asarray(frac)
        step = 0.08 * span
        simplex = np.array([x0, x0 + [step[0], 0.0], x0 + [0.0, step[1]]])
        res = sciopt.minimize(
            negative,
            x0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": xtol_log,
                "fatol": 1e-10,
                "maxfev": 2000,
            },
        )
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
    return best_x, -best_f, evaluations


def optimize_Lw(objective, w_P, bounds=None):
    """Maximize the probability over (L, w) at fixed pump waist.

    The search runs in log10(L), log10(w); an argmax within 1% (log-box
    fraction) of any bound is flagged non-converged.
    """
    bounds = bounds or Bounds()
    lo = np.log10([bounds.L[0], bounds.w[0]])
    hi = np.log10([bounds.L[1], bounds.w[1]])

    def prob(x):
        return objective.probability(10.0 ** x[0], 10.0 ** x[1], w_P)

    x, p_max, nfev = _nelder_mead_log2d(prob, lo, hi)
    margin = _EDGE_MARGIN * (hi - lo)
    interior = bool(np.all(x > lo + margin) and np.all(x < hi - margin))
    return OptimizationResult(
        params={"L": 10.0 ** x[0], "w": 10.0 ** x[1], "w_P": w_P},
        p_max=p_max,
        evaluations=nfev,
        converged=interior,
        message="" if interior else "argmax on a search-box boundary",
    )


def fit_optimum_lines(objective, w_P_grid=None, bounds=None):
    """Least-squares lines through (w_P, w_opt) and (w_P, L_opt).

    Non-converged inner optimizations are excluded from the fit and reported.
    The default grid spans 10-300 um uniformly (>= 8 points required).
    """
    if w_P_grid is None:
        w_P_grid = np.linspace(10e-6, 300e-6, 15)
    w_P_grid = np.asarray(w_P_grid, dtype=float)
    if len(w_P_grid) < 8:
        raise ValueError("fit needs at least 8 pump-waist points")

    records, excluded = [], []
    for w_P in w_P_grid:
        res = optimize_Lw(objective, w_P, bounds=bounds)
        if res.converged:
            records.append((w_P, res.params["L"], res.params["w"], res.p_max))
        else:
            excluded.append(w_P)
    if len(records) < 8:
        raise ValueError(
            f"only {len(records)} converged optima; cannot fit "
            f"(excluded: {[f'{w*1e6:.0f}um' for w in excluded]})"
        )

    pts = np.array(records)

    def fit(y):
        slope, intercept = np.polyfit(pts[:, 0], y, 1)
        rms = float(np.sqrt(np.mean((intercept + slope * pts[:, 0] - y) ** 2)))
        return LinearFit(float(intercept), float(slope), rms, len(y))

    return FitLinesResult(
        w_fit=fit(pts[:, 2]),
        L_fit=fit(pts[:, 1]),
        records=tuple(map(tuple, records)),
        excluded=tuple(excluded),
    )


def find_global_wp(objective, bounds=None, *, inner_objective=None):
    """Best pump waist with (L, w) set to their per-w_P optimum.

    The per-w_P geometry always comes from the fast closed-form inner
    optimization (matching how the optimum-geometry lines are used); the
    outer 1-D value being maximized uses the requested objective.
    """
    bounds = bounds or Bounds()
    inner = inner_objective or (
        objective
        if objective.kind == "analytic"
        else CouplingObjective(
            "analytic", objective.constants, objective.sigma_P, objective.sigma_F
        )
    )
    cache = {}
    evaluations = 0

    def geometry(w_P):
        if w_P not in cache:
            cache[w_P] = optimize_Lw(inner, w_P, bounds=bounds)
        return cache[w_P]

    def negative(w_P):
        nonlocal evaluations
        if not bounds.w_P[0] <= w_P <= bounds.w_P[1]:
            return np.inf
        geo = geometry(w_P)
        evaluations += 1
        return -objective.probability(geo.params["L"], geo.params["w"], w_P)

    res = sciopt.minimize_scalar(
        negative,
        bounds=bounds.w_P,
        method="bounded",
        options={"xatol": 1e-3 * bounds.w_P[0]},
    )
    w_P = float(res.x)
    geo = geometry(w_P)
    width = bounds.w_P[1] - bounds.w_P[0]
    interior = (
        bounds.w_P[0] + _EDGE_MARGIN * width < w_P < bounds.w_P[1] - _EDGE_MARGIN * width
    )
    converged = bool(res.success and interior and geo.converged)
    return OptimizationResult(
        params={"w_P": w_P, "L": geo.params["L"], "w": geo.params["w"]},
        p_max=-float(res.fun),
        evaluations=evaluations,
        converged=converged,
        message="" if interior else "pump-waist argmax on a bound",
    )
