"""Closed-form Gaussian model of the fiber-coupled pair amplitude.

The phase mismatch of the degenerate process, linearized around the
phase-matched directions, is characterized by four scalars (walk-off angle,
internal emission angle, and two inverse-group-velocity combinations).  With
Gaussian pump/filter spectra and Gaussian fiber modes focused on the crystal
faces, the joint spectral amplitude, its 2x2 spectrum matrix, the
separability condition, the optimal transverse offset of the coupled modes,
and the total pair-coupling probability all have closed forms, valid while
the Rayleigh ranges of all beams greatly exceed the crystal length.

Probabilities are in relative units (the overall interaction strength is not
modeled); analytic and numeric results share the same normalization and are
directly comparable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .crystal import C_LIGHT, kz_extraordinary, kz_ordinary
from .errors import DegenerateInputError

__all__ = [
    "ModeVector",
    "SetupParams",
    "EffectiveParams",
    "SpectrumMatrix",
    "MismatchGradient",
    "RayleighValidityWarning",
    "delta_pm",
    "delta_gradient",
    "effective_params",
    "jsa_analytic",
    "spectrum_matrix",
    "separability_ratio",
    "separability_residual",
    "optimal_h",
    "total_probability",
    "rayleigh_margin",
    "sigma_from_wavelength_width",
]


class RayleighValidityWarning(UserWarning):
    """Closed-form result used outside its long-Rayleigh-range regime."""


@dataclass(frozen=True)
class ModeVector:
    """Transverse wave vector (lab frame, rad/m) and angular frequency (rad/s)."""

    kx: float
    ky: float
    omega: float

    def __post_init__(self):
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")


@dataclass(frozen=True)
class SetupParams:
    """Geometry and spectra of one configuration.

    L: crystal length (m).
    w: fiber-mode waist at the crystal face (m).
    w_P: pump waist (m).
    h: transverse offset of the coupled beams at the output face (m).
    sigma_P: pump amplitude-spectrum width (rad/s).
    sigma_F: interference-filter amplitude width (rad/s).
    theta_s / theta_i: fiber angles (rad); None means +/- the degenerate
        emission angle of the constants in use.
    """

    L: float
    w: float
    w_P: float
    h: float
    sigma_P: float
    sigma_F: float
    theta_s: float | None = None
    theta_i: float | None = None

    def __post_init__(self):
        for name in ("L", "w", "w_P", "sigma_P", "sigma_F"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    def with_updates(self, **kw):
        return replace(self, **kw)

    def fiber_angles(self, constants):
        ts = self.theta_s if self.theta_s is not None else constants.theta0
        ti = self.theta_i if self.theta_i is not None else -constants.theta0
        return ts, ti


@dataclass(frozen=True)
class EffectiveParams:
    """Dimensionless walk-off and shift strengths, and the effective length (m)."""

    Gamma: float
    Theta: float
    Lcal: float


@dataclass(frozen=True)
class SpectrumMatrix:
    """Symmetric 2x2 quadratic form over (omega_s - omega0, omega_i - omega0), s^2."""

    Omega_ss: float
    Omega_ii: float
    Omega_si: float

    def as_array(self):
        return np.array(
            [[self.Omega_ss, self.Omega_si], [self.Omega_si, self.Omega_ii]]
        )

    def det(self):
        return self.Omega_ss * self.Omega_ii - self.Omega_si ** 2


@dataclass(frozen=True)
class MismatchGradient:
    """First derivatives of one mismatch branch at the degenerate directions."""

    ks_x: float
    ks_y: float
    ki_x: float
    ki_y: float
    omega_s: float
    omega_i: float

    def as_array(self):
        return np.array(
            [self.ks_x, self.ks_y, self.ki_x, self.ki_y, self.omega_s, self.omega_i]
        )


def sigma_from_wavelength_width(width_lambda, carrier_lambda):
    """Convert an amplitude 1/e half-width in wavelength to rad/s."""
    return 2.0 * math.pi * C_LIGHT * width_lambda / carrier_lambda ** 2


# ---------------------------------------------------------------------------
# exact phase mismatch


def _lab_to_crystal(kx, ky, axis_plane_angle):
    c, s = math.cos(axis_plane_angle), math.sin(axis_plane_angle)
    return kx * c + ky * s, -kx * s + ky * c


def delta_pm(s, i, sell, cut):
    """Exact mismatch pair (delta_minus, delta_plus) in rad/m.

    The sum vector is propagated as an extraordinary wave; the rotation into
    the crystal frame (optic-axis plane at cut.axis_plane_angle from the
    horizontal) is applied before its dispersion relation is evaluated.
    """
    kx = s.kx + i.kx
    ky = s.ky + i.ky
    omega = s.omega + i.omega
    kX, kY = _lab_to_crystal(kx, ky, cut.axis_plane_angle)
    kz_sum = kz_extraordinary(sell, kX, kY, omega, cut.alpha)
    kz_s = kz_ordinary(sell, s.kx, s.ky, s.omega)
    kz_i = kz_ordinary(sell, i.kx, i.ky, i.omega)
    return kz_sum - kz_s - kz_i, kz_sum + kz_s + kz_i


def delta_gradient(constants):
    """First-derivative table of both mismatch branches for the diagonal
    (45 degree) optic-axis plane, expressed through (gamma, theta0_int,
    dbeta_minus_z, dbeta_plus_z).

    Returns (minus: MismatchGradient, plus: MismatchGradient).
    """
    g = constants.gamma / math.sqrt(2.0)
    tp = constants.theta0_int
    minus = MismatchGradient(
        ks_x=g + tp,
        ks_y=g,
        ki_x=g - tp,
        ki_y=g,
        omega_s=constants.dbeta_minus_z,
        omega_i=constants.dbeta_minus_z,
    )
    plus = MismatchGradient(
        ks_x=g - tp,
        ks_y=g,
        ki_x=g + tp,
        ki_y=g,
        omega_s=constants.dbeta_plus_z,
        omega_i=constants.dbeta_plus_z,
    )
    return minus, plus


# ---------------------------------------------------------------------------
# effective parameters and closed forms


def effective_params(setup, constants):
    """Walk-off strength, shift strength, and effective interaction length."""
    wsum = math.sqrt(setup.w ** 2 + 2.0 * setup.w_P ** 2)
    Gamma = setup.L * constants.gamma / wsum
    Theta = setup.L * constants.theta0_int / setup.w
    Lcal = setup.L / math.sqrt(1.0 + Theta ** 2 / 2.0 + Gamma ** 2 / 2.0)
    return EffectiveParams(Gamma=Gamma, Theta=Theta, Lcal=Lcal)


def optimal_h(setup, constants):
    """Transverse offset of the coupled beams maximizing the pair amplitude."""
    G2 = effective_params(setup, constants).Gamma ** 2
    return (setup.L * constants.theta0_int / 2.0) * (1.0 + G2) / (1.0 + G2 / 2.0)


def spectrum_matrix(setup, constants, *, small_angle=False):
    """Quadratic form of the coupled spectrum over frequency detunings.

    The full form keeps the diagonal asymmetry produced by the diagonal
    optic-axis plane; it is undefined when the shift strength vanishes while
    theta0 != 0 (the walk-off/shift ratio diverges).  The small-angle form
    has identical diagonal elements and no such restriction.
    """
    eff = effective_params(setup, constants)
    w2sum = setup.w ** 2 + 2.0 * setup.w_P ** 2
    width_term = (
        setup.w ** 2
        * setup.w_P ** 2
        * constants.theta0 ** 2
        / (2.0 * C_LIGHT ** 2 * w2sum)
    )
    pump_term = 1.0 / setup.sigma_P ** 2
    filter_term = 1.0 / setup.sigma_F ** 2
    quarter = eff.Lcal ** 2 / 8.0

    if small_angle:
        base = quarter * constants.dbeta_minus_z ** 2
        return SpectrumMatrix(
            Omega_ss=base + width_term + pump_term + filter_term,
            Omega_ii=base + width_term + pump_term + filter_term,
            Omega_si=base - width_term + pump_term,
        )

    angle_term = constants.theta0 * constants.theta0_int / C_LIGHT
    if eff.Theta == 0.0:
        if constants.theta0 != 0.0:
            raise DegenerateInputError(
                "full spectrum matrix undefined at Theta = 0 with theta0 != 0; "
                "use small_angle=True"
            )
        cross = 0.0
    else:
        cross = (
            (angle_term / math.sqrt(2.0))
            * (setup.w * eff.Gamma / eff.Theta)
            / math.sqrt(w2sum)
        )
    centered = constants.dbeta_minus_z + angle_term
    return SpectrumMatrix(
        Omega_ss=quarter * (centered + cross) ** 2 + width_term + pump_term + filter_term,
        Omega_ii=quarter * (centered - cross) ** 2 + width_term + pump_term + filter_term,
        Omega_si=quarter * (centered ** 2 - cross ** 2)
        - width_term
        + pump_term,
    )


def jsa_analytic(omega_s, omega_i, setup, constants, *, small_angle=False):
    """Modulus of the coupled pair amplitude at (omega_s, omega_i).

    Valid for fibers at the degenerate angles (theta_s = +theta0,
    theta_i = -theta0); accepts scalars or broadcastable arrays.
    """
    ts, ti = setup.fiber_angles(constants)
    if not (
        math.isclose(ts, constants.theta0, rel_tol=0.0, abs_tol=1e-15)
        and math.isclose(ti, -constants.theta0, rel_tol=0.0, abs_tol=1e-15)
    ):
        raise ValueError(
            "closed-form amplitude holds only for fibers at +/- the degenerate angle"
        )
    eff = effective_params(setup, constants)
    om = spectrum_matrix(setup, constants, small_angle=small_angle)
    G2 = eff.Gamma ** 2
    nu_s = np.asarray(omega_s) - constants.omega0
    nu_i = np.asarray(omega_i) - constants.omega0

    quad = 0.5 * (
        om.Omega_ss * nu_s ** 2
        + 2.0 * om.Omega_si * nu_s * nu_i
        + om.Omega_ii * nu_i ** 2
    )
    prefactor = 8.0 * math.pi * setup.w_P * eff.Lcal / (setup.w ** 2 + 2.0 * setup.w_P ** 2)
    h_opt = optimal_h(setup, constants)
    h_coeff = (2.0 * (2.0 + G2) / setup.w ** 2) / (2.0 + eff.Theta ** 2 + G2)
    out = (
        prefactor
        * np.exp(-G2 / (2.0 + G2) - quad)
        * math.exp(-h_coeff * (setup.h - h_opt) ** 2)
    )
    return out if np.ndim(out) else float(out)


def separability_ratio(setup, constants):
    """|Omega_si| / Omega_ss of the small-angle spectrum matrix."""
    om = spectrum_matrix(setup, constants, small_angle=True)
    return abs(om.Omega_si) / om.Omega_ss


def separability_residual(setup, constants):
    """Signed residual that vanishes exactly when the spectrum factorizes.

    width_term - Lcal^2 dbeta_minus^2 / 8 - 1/sigma_P^2, in s^2; zero iff the
    small-angle off-diagonal element is zero.
    """
    eff = effective_params(setup, constants)
    w2sum = setup.w ** 2 + 2.0 * setup.w_P ** 2
    width_term = (
        setup.w ** 2
        * setup.w_P ** 2
        * constants.theta0 ** 2
        / (2.0 * C_LIGHT ** 2 * w2sum)
    )
    return (
        width_term
        - eff.Lcal ** 2 * constants.dbeta_minus_z ** 2 / 8.0
        - 1.0 / setup.sigma_P ** 2
    )


def rayleigh_margin(setup, constants):
    """(half k0 w^2) / L for the tighter of the two waists.

    k0 is the in-medium pump wave number 2 pi n_o / lambda_pump.  Values well
    above 10 mark the closed-form validity regime.
    """
    lambda_pump = math.pi * C_LIGHT / constants.omega0  # half the degenerate wavelength
    k0 = 2.0 * math.pi * constants.n_o_deg / lambda_pump
    w_min = min(setup.w, setup.w_P)
    return 0.5 * k0 * w_min ** 2 / setup.L


def total_probability(setup, constants, *, small_angle=False, warn=True):
    """Total pair-coupling probability (relative units) at the optimal offset.

    p = 64 pi^3 w_P^2 Lcal^2 / ((w^2 + 2 w_P^2)^2 sqrt(det Omega))
        * exp(-2 Gamma^2 / (2 + Gamma^2))

    The formula assumes h at its optimum; setup.h is ignored here.  A
    RayleighValidityWarning is emitted when the Rayleigh range of the most
    focused beam is below 10 crystal lengths.
    """
    if warn and rayleigh_margin(setup, constants) < 10.0:
        warnings.warn(
            "Rayleigh range below 10 crystal lengths; closed-form probability "
            "is outside its validity regime",
            RayleighValidityWarning,
            stacklevel=2,
        )
    eff = effective_params(setup, constants)
    om = spectrum_matrix(setup, constants, small_angle=small_angle)
    det = om.det()
    if det <= 0.0:
        raise DegenerateInputError("spectrum matrix is not positive definite")
    G2 = eff.Gamma ** 2
    w2sum = setup.w ** 2 + 2.0 * setup.w_P ** 2
    return (
        64.0
        * math.pi ** 3
        * setup.w_P ** 2
        * eff.Lcal ** 2
        / (w2sum ** 2 * math.sqrt(det))
        * math.exp(-2.0 * G2 / (2.0 + G2))
    )
