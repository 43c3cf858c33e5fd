"""Central finite differences with Richardson step-halving verification.

Every derivative used to build expansion coefficients goes through these
helpers so that the observed convergence order can be checked: a second-order
stencil must either show order >= 2 under step halving or have its level
differences sitting at the roundoff floor (which happens when the stencil is
exact by symmetry, e.g. for odd-plus-even functions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import NumericalDerivativeError

__all__ = [
    "DiffResult",
    "central_first",
    "central_second",
    "central_mixed",
    "first_derivative",
    "second_derivative",
    "mixed_derivative",
]

_EPS = 2.220446049250313e-16


@dataclass(frozen=True)
class DiffResult:
    """A derivative estimate with its step-halving diagnostics.

    observed_order is +inf when the level differences are below the roundoff
    floor (converged as far as floating point allows).
    """

    value: float
    observed_order: float
    error_estimate: float
    steps: tuple = field(default=())
    estimates: tuple = field(default=())


def central_first(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def central_second(f, x, h):
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def central_mixed(f, x, y, hx, hy):
    return (
        f(x + hx, y + hy) - f(x + hx, y - hy) - f(x - hx, y + hy) + f(x - hx, y - hy)
    ) / (4.0 * hx * hy)


def _ladder(stencil, levels, noise_floor, what, min_order, order=2):
    """Run `stencil(t)` at t = 1, 1/2, ... 1/2^(levels-1) and extrapolate."""
    if levels < 3:
        raise ValueError("need at least 3 step levels to observe an order")
    ts = [0.5 ** k for k in range(levels)]
    est = [stencil(t) for t in ts]

    d1 = abs(est[-2] - est[-3])
    d2 = abs(est[-1] - est[-2])
    if d1 <= noise_floor and d2 <= noise_floor:
        observed = math.inf
    elif d2 <= noise_floor:
        observed = math.inf
    elif d1 <= noise_floor:
        observed = 0.0
    else:
        observed = math.log2(d1 / d2)

    fac = 2.0 ** order
    extrapolated = (fac * est[-1] - est[-2]) / (fac - 1.0)
    err = max(abs(extrapolated - est[-1]), noise_floor)

    if observed is not math.inf and observed < min_order:
        raise NumericalDerivativeError(
            f"{what}: observed convergence order {observed:.2f} < {min_order}",
            diagnostics={
                "levels": tuple(ts),
                "estimates": tuple(est),
                "observed_order": observed,
                "noise_floor": noise_floor,
            },
        )
    return DiffResult(extrapolated, observed, err, tuple(ts), tuple(est))


def first_derivative(f, x, h0, *, levels=3, min_order=1.7, what="d/dx", f_scale=None):
    """First derivative by central differences, Richardson-verified.

    f_scale overrides the magnitude used for the roundoff floor; pass it when
    f is a small difference of large terms (cancellation noise scales with
    the large terms, not with |f|).
    """
    fmag = max(abs(f(x + h0)), abs(f(x - h0)), f_scale or 0.0, 1e-300)
    h_finest = h0 * 0.5 ** (levels - 1)
    noise = 64.0 * _EPS * fmag / (2.0 * h_finest)
    return _ladder(lambda t: central_first(f, x, h0 * t), levels, noise, what, min_order)


def second_derivative(f, x, h0, *, levels=3, min_order=1.7, what="d2/dx2", f_scale=None):
    """Second derivative by the 3-point stencil, Richardson-verified."""
    fmag = max(abs(f(x)), abs(f(x + h0)), f_scale or 0.0, 1e-300)
    h_finest = h0 * 0.5 ** (levels - 1)
    noise = 64.0 * _EPS * fmag * 4.0 / h_finest ** 2
    return _ladder(lambda t: central_second(f, x, h0 * t), levels, noise, what, min_order)


def mixed_derivative(
    f, x, y, hx0, hy0, *, levels=3, min_order=1.7, what="d2/dxdy", f_scale=None
):
    """Mixed second derivative by the 4-point cross stencil, Richardson-verified.

    Both steps shrink together, keeping the stencil second order in the common
    halving factor.
    """
    fmag = max(abs(f(x + hx0, y + hy0)), abs(f(x - hx0, y - hy0)), f_scale or 0.0, 1e-300)
    h_finest2 = (hx0 * hy0) * (0.5 ** (levels - 1)) ** 2
    noise = 64.0 * _EPS * fmag / h_finest2
    return _ladder(
        lambda t: central_mixed(f, x, y, hx0 * t, hy0 * t), levels, noise, what, min_order
    )
