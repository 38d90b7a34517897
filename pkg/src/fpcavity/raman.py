"""Stokes kinematics and linewidth bookkeeping.

Wavelengths in nm, linewidths in pm or GHz, Raman shifts in cm^-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import c as SPEED_OF_LIGHT

from .errors import InvalidArgument

DIAMOND_SHIFT = 1335.0  # cm^-1, measured value that reproduces 572.67 nm from 532 nm
DIAMOND_SHIFT_LITERATURE = 1332.0

UNITS = ("pm", "GHz", "Q")


def stokes_wavelength(pump_nm: float, shift_invcm: float = DIAMOND_SHIFT) -> float:
    """Wavelength (nm) of the photon red-shifted by ``shift_invcm`` from the pump.

    A negative shift gives the anti-Stokes side, so the map inverts itself.
    """
    if pump_nm <= 0:
        raise InvalidArgument("pump wavelength must be > 0")
    wavenumber = 1e7 / pump_nm - shift_invcm
    if wavenumber <= 0:
        raise InvalidArgument(f"shift {shift_invcm} cm^-1 exceeds pump wavenumber {1e7 / pump_nm:.1f} cm^-1")
    return 1e7 / wavenumber


@dataclass(frozen=True)
class Linewidth:
    value: float
    unit: str
    reference_nm: float

    def to(self, unit: str) -> "Linewidth":
        return Linewidth(linewidth_convert(self.value, self.unit, unit, self.reference_nm), unit, self.reference_nm)


def _to_pm(value, unit, ref):
    if unit == "pm":
        return value
    if unit == "GHz":
        return value * 1e9 * (ref * 1e-9) ** 2 / SPEED_OF_LIGHT * 1e12
    return ref * 1e3 / value  # Q


def linewidth_convert(value: float, from_unit: str, to_unit: str, reference_nm: float | None) -> float:
    """Convert a linewidth between pm, GHz and Q at ``reference_nm``.

    Uses the small-width relations dnu = c * dlambda / lambda**2 and
    Q = lambda / dlambda.
    """
    if from_unit not in UNITS or to_unit not in UNITS:
        raise InvalidArgument(f"units must be among {UNITS}")
    if value <= 0:
        raise InvalidArgument("linewidth must be > 0")
    if from_unit == to_unit:
        return float(value)
    if reference_nm is None or reference_nm <= 0:
        raise InvalidArgument("a positive reference wavelength is required")
    pm = _to_pm(value, from_unit, reference_nm)
    if to_unit == "pm":
        return pm
    if to_unit == "GHz":
        return SPEED_OF_LIGHT * pm * 1e-12 / (reference_nm * 1e-9) ** 2 / 1e9
    return reference_nm * 1e3 / pm


def deconvolve_lorentzian(total_ghz: float, component_ghz: float) -> float:
    """Width left after removing a Lorentzian component (widths add)."""
    if component_ghz < 0 or total_ghz <= component_ghz:
        raise InvalidArgument("need total > component >= 0")
    return total_ghz - component_ghz


def phonon_lifetime(fwhm_ghz: float) -> float:
    """Lifetime in ps of a phonon with Lorentzian FWHM ``fwhm_ghz``."""
    if fwhm_ghz <= 0:
        raise InvalidArgument("FWHM must be > 0")
    return 1.0 / (2 * math.pi * fwhm_ghz * 1e9) * 1e12
