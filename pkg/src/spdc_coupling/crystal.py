"""Uniaxial crystal optics: Sellmeier indices, dispersion relations, phase matching.

All quantities are strict SI internally (m, rad/s, s/m).  Sellmeier
coefficients follow the common handbook form

    n^2(lambda) = A + B / (lambda^2 - C) - D * lambda^2,   lambda in micrometers,

for each polarization.  The longitudinal wave-vector components are

    kz_o(kX, kY, w) = sqrt((w n_o / c)^2 - kX^2 - kY^2)

for the ordinary wave and, for the extraordinary wave with the optic axis in
the XZ plane at angle alpha to the surface normal Z,

    kz_e(kX, kY, w) = [kX sin(a)cos(a) (1 - ne^2/no^2)
                       + sqrt((w^2 ne^2/c^2 - kY^2) D2 - kX^2 ne^2/no^2)] / D2,
    D2 = sin^2(a) + (ne^2/no^2) cos^2(a).

Degenerate phase matching balances the extraordinary pump at frequency 2*w0
against two ordinary photons emitted at the external half-angle theta0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import EvanescentWaveError, PhaseMatchingError, WavelengthRangeError
from . import numdiff

__all__ = [
    "C_LIGHT",
    "SellmeierCoefficients",
    "SellmeierSet",
    "CrystalCut",
    "OpticalConstants",
    "BBO",
    "load_constants_file",
    "dump_constants_file",
    "kz_ordinary",
    "kz_extraordinary",
    "solve_phase_matching",
    "solve_emission_angle",
    "derive_constants",
]

C_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class SellmeierCoefficients:
    """Coefficients of n^2 = A + B/(L^2 - C) - D L^2 with L in micrometers."""

    A: float
    B: float  # um^2
    C: float  # um^2
    D: float  # um^-2

    def n_squared(self, lambda_um):
        lam2 = np.asarray(lambda_um) ** 2
        return self.A + self.B / (lam2 - self.C) - self.D * lam2


@dataclass(frozen=True)
class SellmeierSet:
    """Ordinary and extraordinary dispersion of a uniaxial crystal."""

    name: str
    ordinary: SellmeierCoefficients
    extraordinary: SellmeierCoefficients
    validity_um: tuple[float, float]

    def _check_window(self, lambda_m):
        lam_um = np.asarray(lambda_m) * 1e6
        lo, hi = self.validity_um
        if np.any(lam_um < lo) or np.any(lam_um > hi):
            bad = float(np.min(lam_um)) if np.any(lam_um < lo) else float(np.max(lam_um))
            raise WavelengthRangeError(
                f"{self.name}: wavelength {bad:.4f} um outside validity window "
                f"[{lo:g}, {hi:g}] um"
            )

    def index(self, polarization, lambda_m):
        """Refractive index n_o or n_e at vacuum wavelength lambda_m (meters)."""
        self._check_window(lambda_m)
        coeff = self._coeff(polarization)
        n2 = coeff.n_squared(np.asarray(lambda_m) * 1e6)
        return np.sqrt(n2) if np.ndim(n2) else math.sqrt(n2)

    def index_at_omega(self, polarization, omega):
        """Index at angular frequency omega (rad/s)."""
        return self.index(polarization, 2.0 * math.pi * C_LIGHT / omega)

    def dn_dlambda(self, polarization, lambda_m):
        """Analytic d n / d lambda in 1/m."""
        self._check_window(lambda_m)
        coeff = self._coeff(polarization)
        lam_um = np.asarray(lambda_m) * 1e6
        lam2 = lam_um ** 2
        dn2 = -2.0 * lam_um * coeff.B / (lam2 - coeff.C) ** 2 - 2.0 * coeff.D * lam_um
        n = np.sqrt(coeff.n_squared(lam_um))
        return dn2 / (2.0 * n) * 1e6  # per um -> per m

    def group_index(self, polarization, lambda_m):
        """n_g = n - lambda dn/dlambda."""
        n = self.index(polarization, lambda_m)
        return n - lambda_m * self.dn_dlambda(polarization, lambda_m)

    def _coeff(self, polarization):
        if polarization in ("o", "ordinary"):
            return self.ordinary
        if polarization in ("e", "extraordinary"):
            return self.extraordinary
        raise ValueError(f"polarization must be 'o' or 'e', got {polarization!r}")


@dataclass(frozen=True)
class CrystalCut:
    """Orientation and length of the crystal.

    alpha: angle of the optic axis to the surface normal Z (rad).
    axis_plane_angle: angle of the plane containing the optic axis measured
        from the horizontal lab plane (rad).
    length: crystal thickness along Z (m).
    """

    alpha: float
    length: float
    axis_plane_angle: float = math.pi / 4.0

    def __post_init__(self):
        if not 0.0 < self.alpha < math.pi / 2.0:
            raise ValueError(f"alpha must lie in (0, pi/2), got {self.alpha}")
        if self.length <= 0.0:
            raise ValueError("crystal length must be positive")


@dataclass(frozen=True)
class OpticalConstants:
    """Derived scalars for a configured degenerate cut.

    omega0: degenerate angular frequency (rad/s).
    theta0: external degenerate emission half-angle (rad).
    theta0_int: internal propagation angle theta0 / n_o(omega0) (rad).
    gamma: pump walk-off angle (rad), positive for a negative uniaxial crystal.
    dbeta_minus_z / dbeta_plus_z: inverse-group-velocity combinations
        d kz_e(2 w0)/dw -/+ d kz_o(w0)/dw at normal incidence (s/m).
    n_o_deg: ordinary index at omega0.
    alpha: cut angle actually used (rad).
    """

    omega0: float
    theta0: float
    theta0_int: float
    gamma: float
    dbeta_minus_z: float
    dbeta_plus_z: float
    n_o_deg: float
    alpha: float

    def with_updates(self, **kw):
        """Copy with selected fields replaced (used by what-if tests/scans)."""
        return replace(self, **kw)


# Standard published handbook set for beta-BaB2O4 (BBO), lambda in um.
BBO = SellmeierSet(
    name="BBO",
    ordinary=SellmeierCoefficients(A=2.7359, B=0.01878, C=0.01822, D=0.01354),
    extraordinary=SellmeierCoefficients(A=2.3753, B=0.01224, C=0.01667, D=0.01516),
    validity_um=(0.20, 1.10),
)


# ---------------------------------------------------------------------------
# constants file (key/value text) i/o

_REQUIRED_KEYS = (
    ["crystal.name"]
    + [f"sellmeier.{p}.{c}" for p in "oe" for c in "ABCD"]
    + ["validity.min_um", "validity.max_um"]
)


def load_constants_file(path):
    """Read a crystal constants file (dotted key = value lines, # comments)."""
    entries = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    missing = [k for k in _REQUIRED_KEYS if k not in entries]
    if missing:
        raise ValueError(f"{path}: missing keys: {', '.join(missing)}")
    unknown = [k for k in entries if k not in _REQUIRED_KEYS]
    if unknown:
        raise ValueError(f"{path}: unknown keys: {', '.join(unknown)}")

    def coeff(pol):
        return SellmeierCoefficients(
            *(float(entries[f"sellmeier.{pol}.{c}"]) for c in "ABCD")
        )

    return SellmeierSet(
        name=entries["crystal.name"],
        ordinary=coeff("o"),
        extraordinary=coeff("e"),
        validity_um=(float(entries["validity.min_um"]), float(entries["validity.max_um"])),
    )


def dump_constants_file(sell, path):
    """Write a SellmeierSet in the constants-file format."""
    lines = [f"crystal.name = {sell.name}"]
    for pol, coeff in (("o", sell.ordinary), ("e", sell.extraordinary)):
        for c in "ABCD":
            lines.append(f"sellmeier.{pol}.{c} = {getattr(coeff, c)!r}")
    lines.append(f"validity.min_um = {sell.validity_um[0]!r}")
    lines.append(f"validity.max_um = {sell.validity_um[1]!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# dispersion relations (crystal frame: optic axis in the XZ plane)


def kz_ordinary(sell, kX, kY, omega):
    """Longitudinal component of an ordinary wave (rad/m)."""
    n = sell.index_at_omega("o", omega)
    k2 = (np.asarray(omega) * n / C_LIGHT) ** 2
    arg = k2 - np.asarray(kX) ** 2 - np.asarray(kY) ** 2
    if np.any(arg < 0.0):
        raise EvanescentWaveError(
            "ordinary wave is evanescent: kX^2 + kY^2 exceeds (omega n_o / c)^2"
        )
    out = np.sqrt(arg)
    return out if np.ndim(out) else float(out)


def kz_extraordinary(sell, kX, kY, omega, alpha):
    """Longitudinal component of an extraordinary wave (rad/m).

    kX is the transverse component in the plane containing the optic axis.
    """
    n_o = sell.index_at_omega("o", omega)
    n_e = sell.index_at_omega("e", omega)
    r = (n_e / n_o) ** 2
    sa, ca = math.sin(alpha), math.cos(alpha)
    d2 = sa * sa + r * ca * ca
    kX = np.asarray(kX, dtype=float)
    kY = np.asarray(kY, dtype=float)
    k_e2 = (np.asarray(omega) * n_e / C_LIGHT) ** 2
    root_arg = (k_e2 - kY ** 2) * d2 - kX ** 2 * r
    if np.any(root_arg < 0.0):
        raise EvanescentWaveError(
            "extraordinary wave is evanescent for the given transverse wave vector"
        )
    out = (kX * sa * ca * (1.0 - r) + np.sqrt(root_arg)) / d2
    return out if np.ndim(out) else float(out)


def _n_eff_e(sell, omega, alpha):
    """Effective extraordinary index at normal incidence: kz_e(0,0,w) c / w."""
    n_o = sell.index_at_omega("o", omega)
    n_e = sell.index_at_omega("e", omega)
    sa, ca = math.sin(alpha), math.cos(alpha)
    return 1.0 / math.sqrt((ca / n_o) ** 2 + (sa / n_e) ** 2)


# ---------------------------------------------------------------------------
# degenerate phase matching


def _pm_residual(sell, omega0, theta0, alpha):
    """kz_e(0,0,2w0) - 2 kz_o(theta0 w0/c, 0, w0); zero at phase matching."""
    kx0 = theta0 * omega0 / C_LIGHT
    return kz_extraordinary(sell, 0.0, 0.0, 2.0 * omega0, alpha) - 2.0 * kz_ordinary(
        sell, kx0, 0.0, omega0
    )


def solve_phase_matching(sell, lambda0, theta0, *, rel_tol=1e-12):
    """Cut angle alpha for degenerate emission at external half-angle theta0.

    Bisection over (0, pi/2) followed by secant refinement; the residual is
    driven below rel_tol * omega0 / c.
    """
    omega0 = 2.0 * math.pi * C_LIGHT / lambda0
    scale = omega0 / C_LIGHT
    f = lambda a: _pm_residual(sell, omega0, theta0, a)

    eps = 1e-9
    lo, hi = eps, math.pi / 2.0 - eps
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0.0:
        raise PhaseMatchingError(
            f"{sell.name}: no phase-matching angle in (0, pi/2) for "
            f"lambda0={lambda0 * 1e9:.1f} nm, theta0={math.degrees(theta0):.3f} deg"
        )
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if flo * fmid <= 0.0:
            hi, fhi = mid, fmid
        else:
            lo, flo = mid, fmid
        if abs(fmid) < rel_tol * scale:
            break
    # secant polish from the bracket endpoints
    a0, a1, f0, f1 = lo, hi, flo, fhi
    for _ in range(8):
        if f1 == f0:
            break
        a2 = a1 - f1 * (a1 - a0) / (f1 - f0)
        if not lo <= a2 <= hi:
            break
        a0, f0, a1, f1 = a1, f1, a2, f(a2)
        if abs(f1) < rel_tol * scale:
            break
    alpha = a1 if abs(f1) < abs(f0) else a0
    if abs(f(alpha)) >= rel_tol * scale:
        alpha = 0.5 * (lo + hi)
    if abs(f(alpha)) >= rel_tol * scale:
        raise PhaseMatchingError("phase matching solver failed to reach tolerance")
    return alpha


def solve_emission_angle(sell, lambda0, alpha):
    """External degenerate half-angle theta0 for a given cut angle (closed form)."""
    omega0 = 2.0 * math.pi * C_LIGHT / lambda0
    n_o = sell.index_at_omega("o", omega0)
    half_pump = 0.5 * kz_extraordinary(sell, 0.0, 0.0, 2.0 * omega0, alpha)
    k_o = omega0 * n_o / C_LIGHT
    if half_pump > k_o:
        raise PhaseMatchingError(
            f"{sell.name}: cut alpha={math.degrees(alpha):.3f} deg is not "
            f"phase-matchable at lambda0={lambda0 * 1e9:.1f} nm"
        )
    kx0 = math.sqrt(k_o ** 2 - half_pump ** 2)
    return kx0 * C_LIGHT / omega0


def _walkoff_analytic(sell, omega, alpha):
    """d kz_e / d kX at kX = kY = 0 (closed form)."""
    n_o = sell.index_at_omega("o", omega)
    n_e = sell.index_at_omega("e", omega)
    r = (n_e / n_o) ** 2
    sa, ca = math.sin(alpha), math.cos(alpha)
    d2 = sa * sa + r * ca * ca
    return sa * ca * (1.0 - r) / d2


def _dneff_dlambda(sell, lambda_m, alpha):
    """Analytic d n_eff / d lambda for the normal-incidence extraordinary wave."""
    n_o = sell.index("o", lambda_m)
    n_e = sell.index("e", lambda_m)
    sa, ca = math.sin(alpha), math.cos(alpha)
    n_eff = 1.0 / math.sqrt((ca / n_o) ** 2 + (sa / n_e) ** 2)
    return n_eff ** 3 * (
        ca * ca * sell.dn_dlambda("o", lambda_m) / n_o ** 3
        + sa * sa * sell.dn_dlambda("e", lambda_m) / n_e ** 3
    )


def derive_constants(sell, cut, lambda0):
    """Derived optical constants for a degenerate cut at vacuum wavelength lambda0.

    Frequency derivatives are evaluated analytically from the Sellmeier form;
    `verify_constants_fd` cross-checks them by central differences.
    """
    omega0 = 2.0 * math.pi * C_LIGHT / lambda0
    theta0 = solve_emission_angle(sell, lambda0, cut.alpha)
    n_o_deg = sell.index_at_omega("o", omega0)

    gamma = _walkoff_analytic(sell, 2.0 * omega0, cut.alpha)

    lambda_p = lambda0 / 2.0
    n_eff = _n_eff_e(sell, 2.0 * omega0, cut.alpha)
    group_eff = n_eff - lambda_p * _dneff_dlambda(sell, lambda_p, cut.alpha)
    beta_e = group_eff / C_LIGHT
    beta_o = sell.group_index("o", lambda0) / C_LIGHT

    return OpticalConstants(
        omega0=omega0,
        theta0=theta0,
        theta0_int=theta0 / n_o_deg,
        gamma=gamma,
        dbeta_minus_z=beta_e - beta_o,
        dbeta_plus_z=beta_e + beta_o,
        n_o_deg=n_o_deg,
        alpha=cut.alpha,
    )


def verify_constants_fd(sell, cut, lambda0, *, rel_step_k=1e-3, rel_step_w=1e-4):
    """Cross-check the analytic derivatives in `derive_constants` by central
    differences with Richardson step-halving verification.

    The ladder starts coarse enough that truncation error dominates roundoff,
    otherwise the observed order is unmeasurable for these nearly linear
    dispersion curves.  Returns a dict of DiffResult keyed by constant name.
    """
    omega0 = 2.0 * math.pi * C_LIGHT / lambda0
    out = {}
    k_char = omega0 * sell.index_at_omega("o", omega0) / C_LIGHT

    out["gamma"] = numdiff.first_derivative(
        lambda kx: kz_extraordinary(sell, kx, 0.0, 2.0 * omega0, cut.alpha),
        0.0,
        rel_step_k * k_char,
        what="d kz_e / d kX",
    )
    out["beta_e"] = numdiff.first_derivative(
        lambda w: kz_extraordinary(sell, 0.0, 0.0, w, cut.alpha),
        2.0 * omega0,
        rel_step_w * omega0,
        what="d kz_e / d omega",
    )
    out["beta_o"] = numdiff.first_derivative(
        lambda w: kz_ordinary(sell, 0.0, 0.0, w),
        omega0,
        rel_step_w * omega0,
        what="d kz_o / d omega",
    )
    return out
