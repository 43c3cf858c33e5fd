"""Fiber coupling of pulsed type-I parametric down-conversion photon pairs.

Closed-form Gaussian model of the fiber-coupled joint spectral amplitude and
pair probability, an independent exact-sinc numerical oracle, geometry
optimization, and a scan/config CLI.
"""

from .crystal import (
    BBO,
    C_LIGHT,
    CrystalCut,
    OpticalConstants,
    SellmeierCoefficients,
    SellmeierSet,
    derive_constants,
    dump_constants_file,
    kz_extraordinary,
    kz_ordinary,
    load_constants_file,
    solve_emission_angle,
    solve_phase_matching,
)

__version__ = "0.1.0"
