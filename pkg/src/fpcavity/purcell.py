"""Vacuum-field normalization, mode volume, Purcell factor and the
cavity-versus-confocal enhancement budget.

Field profiles come from :mod:`fpcavity.tmm` with z in nm; the transverse
profile is a Gaussian of constant 1/e intensity radius w_I (um), so the
normalization reads 2*pi*(w_I**2/4) * integral eps0 n^2 |E|^2 dz = hbar*omega/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.constants import c as SPEED_OF_LIGHT, epsilon_0, hbar

from . import tmm
from .config import defaults
from .errors import InvalidArgument
from .stack import CavityAssembly, nominal_cavity


def photon_energy(wavelength_nm: float) -> float:
    """hbar * omega in J."""
    return hbar * 2 * math.pi * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)


@dataclass(frozen=True)
class QuantizedField:
    profile: tmm.FieldProfile  # E in V/m
    waist_I_um: float
    photon_energy: float  # J
    max_index: int  # layer whose maximum is reported
    max_field: float  # V/m

    def normalization(self) -> float:
        """Left-hand side of the normalization condition, J."""
        return _transverse_area(self.waist_I_um) * epsilon_0 * self.profile.energy_integral() * 1e-9


def _transverse_area(waist_I_um: float) -> float:
    return 2 * math.pi * (waist_I_um * 1e-6) ** 2 / 4


def quantize_field(
    profile: tmm.FieldProfile,
    waist_I_um: float,
    wavelength_nm: float | None = None,
    max_layer: int | None = None,
) -> QuantizedField:
    """Rescale ``profile`` to the single-photon vacuum amplitude.

    ``max_layer`` selects the layer whose peak |E| is reported; by default the
    peak over the whole profile.
    """
    if waist_I_um <= 0:
        raise InvalidArgument("waist must be > 0")
    wavelength_nm = profile.wavelength if wavelength_nm is None else wavelength_nm
    raw = profile.energy_integral()
    if not raw > 0:
        raise InvalidArgument("field profile is identically zero")
    energy = photon_energy(wavelength_nm)
    scale = math.sqrt(energy / 2 / (_transverse_area(waist_I_um) * epsilon_0 * raw * 1e-9))
    scaled = profile.scaled(scale)
    if max_layer is None:
        layers = range(len(scaled.thicknesses))
        max_layer = max(layers, key=scaled.layer_max_abs)
    return QuantizedField(scaled, waist_I_um, energy, max_layer, float(scaled.layer_max_abs(max_layer)))


def quantize_cavity(assembly: CavityAssembly, wavelength_nm: float, waist_I_um: float,
                    at_resonance: bool = True) -> QuantizedField:
    """Quantized field of the cavity mode, peak taken inside the membrane."""
    flat = assembly.flatten()
    if at_resonance:
        wavelength_nm = tmm.nearest_resonance(flat, wavelength_nm, 2.0)[0]
    prof = tmm.field_profile(flat, wavelength_nm, step=1.0)
    return quantize_field(prof, waist_I_um, wavelength_nm, max_layer=assembly.bottom_count)


@dataclass(frozen=True)
class ModeVolume:
    cubic_um: float
    cubic_wavelengths: float  # units of (lambda/n)^3
    n_host: float
    wavelength_nm: float


def mode_volume(qfield: QuantizedField, n_host: float, wavelength_nm: float | None = None) -> ModeVolume:
    """V_eff = (hbar omega / 2) / (eps0 n^2 |E_max|^2)."""
    wavelength_nm = qfield.profile.wavelength if wavelength_nm is None else wavelength_nm
    v = qfield.photon_energy / 2 / (epsilon_0 * n_host**2 * qfield.max_field**2)
    unit = (wavelength_nm * 1e-9 / n_host) ** 3
    return ModeVolume(float(v * 1e18), float(v / unit), n_host, wavelength_nm)


def purcell_factor(q: float, volume: float, averaging: float = 0.5) -> float:
    """F_P = 1 + 3/(4 pi^2) * Q / V * averaging, V in (lambda/n)^3."""
    if q < 0 or volume <= 0:
        raise InvalidArgument("need Q >= 0 and V > 0")
    if not 0 < averaging <= 1:
        raise InvalidArgument("averaging must lie in (0, 1]")
    return 1.0 + 3.0 / (4 * math.pi**2) * q / volume * averaging


def eta_objective(na: float, n_host: float) -> float:
    """Collection efficiency of an objective through a planar host of index n_host."""
    if not 0 <= na < n_host:
        raise InvalidArgument(f"need 0 <= NA < n_host, got NA = {na}, n = {n_host}")
    return 1.0 - math.sqrt(1.0 - (na / n_host) ** 2)


def beta_factor(purcell: float) -> float:
    return purcell / (purcell + 1.0)


def eta_cavity(kappa_top: float, kappa_bottom: float, purcell: float) -> float:
    if kappa_top < 0 or kappa_bottom < 0:
        raise InvalidArgument("loss rates must be >= 0")
    if kappa_top + kappa_bottom == 0:
        raise InvalidArgument("loss rates cannot both vanish")
    return kappa_top / (kappa_top + kappa_bottom) * beta_factor(purcell)


def mirror_loss_rates(assembly: CavityAssembly, wavelength_nm: float) -> tuple[float, float]:
    """(kappa_top, kappa_bottom) taken proportional to mirror power transmittance."""
    top = assembly.top_mirror.with_media(incident=assembly.gap_material)
    bottom = assembly.bottom_mirror.with_media(incident=assembly.membrane_material)
    return float(tmm.transmittance(top, wavelength_nm)), float(tmm.transmittance(bottom, wavelength_nm))


@dataclass(frozen=True)
class EnhancementBudget:
    purcell: float
    beta: float
    eta_objective: float
    eta_cavity: float
    q_stokes: float
    q_cavity: float
    kappa_top: float | None = None
    kappa_bottom: float | None = None
    sources: dict = field(default_factory=dict)

    @property
    def spectral_factor(self) -> float:
        return self.q_stokes / (self.q_stokes + self.q_cavity)

    @property
    def predicted(self) -> float:
        return self.purcell * self.spectral_factor * self.eta_cavity / self.eta_objective

    def rows(self, measured: float | None = None) -> list[tuple[str, float, str]]:
        src = self.sources
        out = [
            ("F_P", self.purcell, src.get("F_P", "supplied")),
            ("beta", self.beta, "computed"),
            ("Q_s", self.q_stokes, src.get("Q_s", "supplied")),
            ("Q_c", self.q_cavity, src.get("Q_c", "supplied")),
            ("spectral_factor", self.spectral_factor, "computed"),
            ("eta_o", self.eta_objective, src.get("eta_o", "supplied")),
            ("eta_c", self.eta_cavity, src.get("eta_c", "supplied")),
        ]
        if self.kappa_top is not None:
            out += [("kappa_t", self.kappa_top, src.get("kappa", "supplied")),
                    ("kappa_b", self.kappa_bottom, src.get("kappa", "supplied")),
                    ("kappa_ratio", self.kappa_top / (self.kappa_top + self.kappa_bottom), "computed")]
        out.append(("S_c/S_o", self.predicted, "computed"))
        if measured is not None:
            out.append(("S_c/S_o measured", measured, "supplied"))
        return out


def enhancement_budget(purcell, q_stokes, q_cavity, eta_c, eta_o, kappa_top=None, kappa_bottom=None,
                       sources=None) -> EnhancementBudget:
    for name, value in (("F_P", purcell), ("Q_s", q_stokes), ("eta_c", eta_c), ("eta_o", eta_o)):
        if not value > 0:
            raise InvalidArgument(f"{name} must be > 0")
    if q_cavity < 0:
        raise InvalidArgument("Q_c must be >= 0")
    return EnhancementBudget(purcell, beta_factor(purcell), eta_o, eta_c, q_stokes, q_cavity,
                             kappa_top, kappa_bottom, dict(sources or {}))


@dataclass(frozen=True)
class ChainResult:
    qfield: QuantizedField
    volume: ModeVolume
    purcell: float
    budget: EnhancementBudget


def default_chain(
    assembly: CavityAssembly | None = None,
    wavelength_nm: float | None = None,
    waist_I_um: float | None = None,
    q_cavity: float | None = None,
    stokes_fwhm_pm: float | None = None,
    averaging: float | None = None,
    na: float | None = None,
) -> ChainResult:
    """tmm field -> quantization -> volume -> Purcell -> budget with defaults filled in."""
    cfg = defaults()
    assembly = assembly or nominal_cavity()
    wavelength_nm = cfg["stokes_nm"] if wavelength_nm is None else wavelength_nm
    waist_I_um = cfg["representative_waist_um"] if waist_I_um is None else waist_I_um
    q_cavity = cfg["cavity_q"] if q_cavity is None else q_cavity
    stokes_fwhm_pm = cfg["stokes_fwhm_pm"] if stokes_fwhm_pm is None else stokes_fwhm_pm
    averaging = cfg["purcell_averaging"] if averaging is None else averaging
    na = cfg["na_cavity_objective"] if na is None else na
    n_host = assembly.membrane_material.n

    qf = quantize_cavity(assembly, wavelength_nm, waist_I_um)
    vol = mode_volume(qf, n_host)
    fp = purcell_factor(q_cavity, vol.cubic_wavelengths, averaging)
    kt, kb = mirror_loss_rates(assembly, wavelength_nm)
    q_s = wavelength_nm * 1e3 / stokes_fwhm_pm
    budget = enhancement_budget(
        fp, q_s, q_cavity, eta_cavity(kt, kb, fp), eta_objective(na, n_host), kt, kb,
        sources={"F_P": "computed", "Q_s": "computed", "Q_c": "supplied", "eta_o": "computed",
                 "eta_c": "computed", "kappa": "computed"},
    )
    return ChainResult(qf, vol, fp, budget)
