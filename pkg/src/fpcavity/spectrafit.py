"""Measured-spectrum ingestion and lineshape fits.

Lineshapes are peak-normalized Lorentzians
    L(x; x0, G) = (G/2)^2 / ((x - x0)^2 + (G/2)^2)
so ``amplitude`` is the peak height above the constant offset.
Wavelengths are nm, linewidths pm unless stated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError, InputFormatError, InvalidArgument

MIN_POINTS = 8
MAX_ITER = 500
META_KEYS = {"integration_time_s": float, "power_mW": float, "label": str}


@dataclass
class MeasuredSpectrum:
    wavelengths: np.ndarray
    counts: np.ndarray
    integration_time: float | None = None  # s
    power_mw: float | None = None
    label: str = ""

    def __post_init__(self):
        self.wavelengths = np.asarray(self.wavelengths, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if self.wavelengths.shape != self.counts.shape or self.wavelengths.ndim != 1:
            raise InvalidArgument("wavelengths and counts must be 1-D arrays of equal length")
        if np.any(np.diff(self.wavelengths) <= 0):
            raise InvalidArgument("wavelengths must be strictly increasing")
        if np.any(self.counts < 0):
            raise InvalidArgument("counts must be non-negative")

    def __len__(self):
        return len(self.wavelengths)

    def integrated(self) -> float:
        return float(np.trapezoid(self.counts, self.wavelengths))

    def rate_normalized(self) -> "MeasuredSpectrum":
        """Counts divided by integration time and pump power where given."""
        scale = 1.0
        if self.integration_time:
            scale *= self.integration_time
        if self.power_mw:
            scale *= self.power_mw
        return MeasuredSpectrum(self.wavelengths, self.counts / scale, None, None, self.label)


def read_spectrum(path) -> MeasuredSpectrum:
    """Two-column text (wavelength_nm, counts), '#' lines carry ``key: value`` metadata."""
    meta = {}
    rows = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            for sep in (":", "="):
                if sep in body:
                    key, value = (s.strip() for s in body.split(sep, 1))
                    if key in META_KEYS:
                        try:
                            meta[key] = META_KEYS[key](value)
                        except ValueError:
                            raise InputFormatError(f"{path}:{lineno}: bad value for {key}") from None
                    break
            continue
        parts = line.replace(",", " ").replace(";", " ").split()
        if len(parts) < 2:
            raise InputFormatError(f"{path}:{lineno}: expected two columns")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError:
            if not rows and parts[0].lower().startswith("wavelength"):
                continue  # column header
            raise InputFormatError(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        raise InputFormatError(f"{path}: no data rows")
    arr = np.array(rows)
    try:
        return MeasuredSpectrum(arr[:, 0], arr[:, 1], meta.get("integration_time_s"),
                                meta.get("power_mW"), meta.get("label", ""))
    except InvalidArgument as exc:
        raise InputFormatError(f"{path}: {exc}") from None


def write_spectrum(spectrum: MeasuredSpectrum, path) -> None:
    lines = []
    if spectrum.integration_time is not None:
        lines.append(f"# integration_time_s: {spectrum.integration_time!r}")
    if spectrum.power_mw is not None:
        lines.append(f"# power_mW: {spectrum.power_mw!r}")
    if spectrum.label:
        lines.append(f"# label: {spectrum.label}")
    lines.append("wavelength_nm,counts")
    lines += [f"{w:.6f},{c:.6g}" for w, c in zip(spectrum.wavelengths, spectrum.counts)]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# lineshapes


def lorentzian(x, center, fwhm, amplitude=1.0, offset=0.0):
    hw2 = (fwhm / 2) ** 2
    return amplitude * hw2 / ((np.asarray(x) - center) ** 2 + hw2) + offset


def _half_max_width(x, y):
    """FWHM estimate from the half-maximum crossings around the peak."""
    base = np.min(y)
    i = int(np.argmax(y))
    half = base + 0.5 * (y[i] - base)
    left = i
    while left > 0 and y[left] > half:
        left -= 1
    right = i
    while right < len(y) - 1 and y[right] > half:
        right += 1
    width = x[right] - x[left]
    return max(width, 2 * np.min(np.diff(x)))


def _check(spectrum):
    if len(spectrum) < MIN_POINTS:
        raise InvalidArgument(f"need at least {MIN_POINTS} points, got {len(spectrum)}")
    y = spectrum.counts
    if np.ptp(y) <= 1e-12 * max(1.0, np.max(np.abs(y))):
        raise FitError("flat spectrum: no peak to fit")


@dataclass(frozen=True)
class LorentzianFit:
    center: float  # nm
    fwhm: float  # pm
    amplitude: float
    offset: float
    uncertainties: dict
    residual_norm: float
    iterations: int

    @property
    def q(self) -> float:
        return self.center * 1e3 / self.fwhm

    def report(self) -> dict:
        return {"center_nm": self.center, "fwhm_pm": self.fwhm, "amplitude": self.amplitude,
                "offset": self.offset, "Q": self.q, "uncertainties": self.uncertainties,
                "residual_norm": self.residual_norm, "evaluations": self.iterations}


def _uncertainties(res, names):
    """1-sigma estimates from the Jacobian at the solution."""
    dof = max(len(res.fun) - len(res.x), 1)
    s2 = float(res.fun @ res.fun) / dof
    try:
        cov = np.linalg.pinv(res.jac.T @ res.jac) * s2
        sig = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        sig = np.full(len(names), np.nan)
    return {n: float(s) for n, s in zip(names, sig)}


def _solve(resid, p0, lower, upper, names):
    scale = np.maximum(np.abs(np.asarray(p0, dtype=float)), 1e-12)
    res = least_squares(resid, p0, bounds=(lower, upper), x_scale=scale, max_nfev=MAX_ITER,
                        xtol=1e-12, ftol=1e-12, gtol=1e-12)
    if res.status == 0:
        raise FitError(f"no convergence within {MAX_ITER} evaluations", best=dict(zip(names, res.x)))
    if not np.all(np.isfinite(res.x)):
        raise FitError("non-finite parameters", best=dict(zip(names, res.x)))
    return res


def fit_lorentzian(spectrum: MeasuredSpectrum) -> LorentzianFit:
    _check(spectrum)
    x, y = spectrum.wavelengths, spectrum.counts
    off0 = float(np.min(y))
    i = int(np.argmax(y))
    p0 = [x[i], _half_max_width(x, y), y[i] - off0, off0]
    span = x[-1] - x[0]
    lower = [x[0], 1e-9, 0.0, -np.inf]
    upper = [x[-1], 10 * span, np.inf, np.inf]

    def resid(p):
        return lorentzian(x, *p) - y

    names = ["center_nm", "fwhm_nm", "amplitude", "offset"]
    res = _solve(resid, p0, lower, upper, names)
    c, w, a, o = res.x
    if a <= 0 or w >= 5 * span:
        raise FitError("fit did not converge onto a resolved peak", best=dict(zip(names, res.x)))
    unc = _uncertainties(res, names)
    unc["fwhm_pm"] = unc.pop("fwhm_nm") * 1e3
    return LorentzianFit(float(c), float(w * 1e3), float(a), float(o), unc,
                         float(np.linalg.norm(res.fun)), int(res.nfev))


@dataclass(frozen=True)
class ProductFit:
    cavity_center: float  # nm
    cavity_fwhm: float  # pm
    stokes_center: float  # nm, held fixed
    stokes_fwhm: float  # pm, held fixed
    amplitude: float
    offset: float
    uncertainties: dict
    residual_norm: float
    fixed: tuple[str, ...] = ("stokes_center", "stokes_fwhm")

    @property
    def cavity_q(self) -> float:
        return self.cavity_center * 1e3 / self.cavity_fwhm

    def report(self) -> dict:
        return {"cavity_center_nm": self.cavity_center, "cavity_fwhm_pm": self.cavity_fwhm,
                "cavity_Q": self.cavity_q, "stokes_center_nm": self.stokes_center,
                "stokes_fwhm_pm": self.stokes_fwhm, "fixed": list(self.fixed),
                "amplitude": self.amplitude, "offset": self.offset,
                "uncertainties": self.uncertainties, "residual_norm": self.residual_norm}


def lorentzian_product(x, cavity_center, cavity_fwhm_nm, stokes_center, stokes_fwhm_nm, amplitude=1.0, offset=0.0):
    return amplitude * lorentzian(x, cavity_center, cavity_fwhm_nm) * lorentzian(x, stokes_center, stokes_fwhm_nm) + offset


def fit_lorentzian_product(spectrum: MeasuredSpectrum, stokes_center: float, stokes_fwhm_pm: float) -> ProductFit:
    """Cavity Lorentzian times a fixed Stokes Lorentzian, plus offset."""
    _check(spectrum)
    if stokes_fwhm_pm <= 0:
        raise InvalidArgument("Stokes linewidth must be > 0")
    x, y = spectrum.wavelengths, spectrum.counts
    gs = stokes_fwhm_pm * 1e-3
    # coarse grid over cavity center and width; amplitude and offset are linear
    span = x[-1] - x[0]
    design = np.column_stack([np.zeros_like(x), np.ones_like(x)])
    ls = lorentzian(x, stokes_center, gs)
    best = None
    for wc in gs * np.array([0.25, 0.5, 1.0, 2.0, 4.0]):
        for lc in np.linspace(x[0], x[-1], 81):
            design[:, 0] = lorentzian(x, lc, wc) * ls
            coef, *_ = np.linalg.lstsq(design, y, rcond=None)
            r = float(np.sum((design @ coef - y) ** 2))
            if coef[0] > 0 and (best is None or r < best[0]):
                best = (r, lc, wc, coef[0], coef[1])
    if best is None:
        raise FitError("no positive-amplitude starting point")
    _, lc0, wc0, a0, off0 = best

    def resid(p):
        return lorentzian_product(x, p[0], p[1], stokes_center, gs, p[2], p[3]) - y

    names = ["cavity_center_nm", "cavity_fwhm_nm", "amplitude", "offset"]
    res = _solve(resid, [lc0, wc0, a0, off0], [x[0] - span, 1e-9, 0.0, -np.inf],
                 [x[-1] + span, 10 * span, np.inf, np.inf], names)
    c, w, a, o = res.x
    unc = _uncertainties(res, names)
    unc["cavity_fwhm_pm"] = unc.pop("cavity_fwhm_nm") * 1e3
    return ProductFit(float(c), float(w * 1e3), stokes_center, stokes_fwhm_pm, float(a), float(o), unc,
                      float(np.linalg.norm(res.fun)))


# ---------------------------------------------------------------------------
# finesse, enhancement, linearity


@dataclass(frozen=True)
class FinesseFit:
    finesse: float
    fwhm_nm: float  # in gap width
    center_nm: float
    wavelength: float


def finesse_from_length_scan(gaps_nm, intensity, wavelength_nm: float) -> FinesseFit:
    """Finesse (lambda/2) / FWHM from a single resonance in a gap-length scan."""
    scan = MeasuredSpectrum(gaps_nm, intensity)
    try:
        fit = fit_lorentzian(scan)
    except FitError as exc:
        raise FitError(f"unresolved resonance in length scan: {exc}", best=exc.best) from None
    width = fit.fwhm * 1e-3
    if width < 2 * np.min(np.diff(scan.wavelengths)) * 0.5:
        raise FitError("resonance narrower than the scan step")
    return FinesseFit(wavelength_nm / 2 / width, width, fit.center, wavelength_nm)


def design_finesse(r1: float, r2: float) -> float:
    """Finesse of two mirrors with power reflectances r1, r2."""
    if not (0 < r1 < 1 and 0 < r2 < 1):
        raise InvalidArgument("reflectances must lie in (0, 1)")
    rr = math.sqrt(r1 * r2)
    return math.pi * math.sqrt(rr) / (1 - rr)


def enhancement_ratio(on_cavity: MeasuredSpectrum, off_cavity: MeasuredSpectrum) -> float:
    """Ratio of wavelength-integrated, rate-normalized signals."""
    num = on_cavity.rate_normalized().integrated()
    den = off_cavity.rate_normalized().integrated()
    if den == 0:
        raise InvalidArgument("off-cavity signal integrates to zero")
    return num / den


@dataclass(frozen=True)
class Linearity:
    exponent: float
    exponent_error: float
    slope: float  # signal per mW from a linear fit through the origin
    verdict: str  # "linear", "super-linear" or "sub-linear"


def power_linearity(powers: Sequence[float], signals: Sequence[float], band=(0.9, 1.1)) -> Linearity:
    p = np.asarray(powers, dtype=float)
    s = np.asarray(signals, dtype=float)
    if len(p) < 3 or len(p) != len(s):
        raise InvalidArgument("need at least 3 (power, signal) pairs")
    if np.any(p <= 0) or np.any(s <= 0):
        raise InvalidArgument("powers and signals must be positive")
    if len(p) > 3:
        coef, cov = np.polyfit(np.log(p), np.log(s), 1, cov=True)
        err = float(np.sqrt(cov[0, 0]))
    else:
        coef, err = np.polyfit(np.log(p), np.log(s), 1), float("nan")
    exponent = float(coef[0])
    slope = float(p @ s / (p @ p))
    if exponent > band[1]:
        verdict = "super-linear"
    elif exponent < band[0]:
        verdict = "sub-linear"
    else:
        verdict = "linear"
    return Linearity(exponent, err, slope, verdict)


def synthetic_spectrum(wavelengths, center, fwhm_pm, amplitude=1.0, offset=0.0, noise=0.0, seed=0,
                       label="synthetic") -> MeasuredSpectrum:
    """Lorentzian test spectrum with optional additive Gaussian noise (fraction of amplitude)."""
    x = np.asarray(wavelengths, dtype=float)
    y = lorentzian(x, center, fwhm_pm * 1e-3, amplitude, offset)
    if noise:
        y = y + np.random.default_rng(seed).normal(0, noise * amplitude, len(x))
    return MeasuredSpectrum(x, np.clip(y, 0, None), label=label)
