"""Gaussian-optics model of a plano-concave cavity.

Lengths: cavity lengths and waists in um, wavelengths in nm.  The intensity
waist w_I is the 1/e radius of the transverse intensity, i.e. the field
(1/e^2 intensity) waist divided by sqrt(2).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit, least_squares

from .errors import FitError, InvalidArgument, UnstableGeometry


@dataclass(frozen=True, order=True)
class ModeIndex:
    q: int
    n: int = 0
    m: int = 0

    def __post_init__(self):
        if self.q < 1 or self.n < 0 or self.m < 0:
            raise InvalidArgument(f"invalid mode index {self}")

    @property
    def transverse_order(self) -> int:
        return self.n + self.m


def confocal_parameter(length_um: float, radius_um: float) -> float:
    if math.isinf(radius_um):
        return 1.0
    return 1.0 - length_um / radius_um


def gouy_term(mode: ModeIndex, g: float) -> float:
    return (mode.n + mode.m + 1) / math.pi * math.acos(math.sqrt(g))


def dispersion_residual(length_um: float, mode: ModeIndex, wavelength_nm: float, radius_um: float) -> float:
    """Relative mismatch of ``length_um`` against the mode-length relation."""
    g = confocal_parameter(length_um, radius_um)
    rhs = (mode.q + gouy_term(mode, g)) * wavelength_nm * 1e-3 / 2
    return (length_um - rhs) / length_um


def effective_length(
    mode: ModeIndex,
    wavelength_nm: float,
    radius_um: float,
    rtol: float = 1e-12,
    max_iter: int = 100,
) -> float:
    """Self-consistent effective cavity length (um) of ``mode``.

    Plain fixed-point iteration of L = [q + (n+m+1)/pi * acos(sqrt(g))] * lambda/2
    with g = 1 - L/R, started from the planar value q*lambda/2.
    """
    half = wavelength_nm * 1e-3 / 2
    length = mode.q * half
    if math.isinf(radius_um):
        return length
    for _ in range(max_iter):
        g = confocal_parameter(length, radius_um)
        if not 0.0 <= g <= 1.0:
            raise UnstableGeometry(f"g = {g:.4f} outside [0, 1] for {mode} at R = {radius_um} um")
        new = (mode.q + gouy_term(mode, g)) * half
        if abs(new - length) <= rtol * new:
            return new
        length = new
    raise UnstableGeometry(f"fixed-point iteration for {mode} did not converge in {max_iter} steps")


def transverse_splitting(q: int, wavelength_nm: float, radius_um: float, order: int = 1) -> float:
    """Length difference (um) between (q, n+m=order) and (q, 0, 0)."""
    base = effective_length(ModeIndex(q), wavelength_nm, radius_um)
    other = effective_length(ModeIndex(q, order, 0), wavelength_nm, radius_um)
    return other - base


@dataclass(frozen=True)
class ModeResonance:
    length_um: float
    mode: ModeIndex

    def delta_nm(self, reference_um: float) -> float:
        return (self.length_um - reference_um) * 1e3


def mode_set(max_q: int, max_order: int = 2, min_q: int = 1) -> list[ModeIndex]:
    return [
        ModeIndex(q, n, order - n)
        for q in range(min_q, max_q + 1)
        for order in range(max_order + 1)
        for n in range(order + 1)
    ]


def mode_dispersion_map(
    wavelength_nm: float,
    radius_um: float,
    length_range_um: tuple[float, float],
    modes: Iterable[ModeIndex] | None = None,
    max_order: int = 2,
) -> list[ModeResonance]:
    """Resonant lengths in the given range at a fixed probe wavelength.

    Unstable modes (g outside [0, 1]) are skipped.  With ``modes`` omitted,
    every (q, n, m) with n + m <= ``max_order`` that can fall in range is tried.
    """
    lo, hi = length_range_um
    if not 0 < lo < hi:
        raise InvalidArgument("length range must be positive and increasing")
    if modes is None:
        qmax = int(hi / (wavelength_nm * 1e-3 / 2)) + 1
        modes = mode_set(qmax, max_order)
    out = []
    for mode in modes:
        try:
            length = effective_length(mode, wavelength_nm, radius_um)
        except UnstableGeometry:
            continue
        if lo <= length <= hi:
            out.append(ModeResonance(length, mode))
    out.sort(key=lambda r: (r.length_um, r.mode))
    return out


def fit_radius(
    resonances: Sequence[ModeResonance],
    wavelength_nm: float,
    initial_um: float = 20.0,
    bounds_um: tuple[float, float] = (1.0, 1000.0),
) -> float:
    """Mirror radius (um) best explaining resonance positions.

    Only position differences relative to the lowest fundamental are used,
    so an unknown absolute length offset drops out.
    """
    if len(resonances) < 2:
        raise InvalidArgument("need at least two resonances")
    ref = min((r for r in resonances if r.mode.transverse_order == 0), key=lambda r: r.length_um, default=None)
    if ref is None:
        raise InvalidArgument("need at least one fundamental (q,0,0) resonance")
    others = [r for r in resonances if r is not ref]
    measured = np.array([r.length_um - ref.length_um for r in others])

    def resid(p):
        radius = p[0]
        try:
            base = effective_length(ref.mode, wavelength_nm, radius)
            model = np.array([effective_length(r.mode, wavelength_nm, radius) - base for r in others])
        except UnstableGeometry:
            return np.full(len(others), 1e3)
        return model - measured

    res = least_squares(resid, [initial_um], bounds=([bounds_um[0]], [bounds_um[1]]), xtol=1e-12, ftol=1e-14)
    return float(res.x[0])


@dataclass(frozen=True)
class BeamWaists:
    rayleigh_range: float  # um
    w0_field: float
    w_mirror_field: float
    w0_I: float
    w_mirror_I: float

    @property
    def representative_I(self) -> float:
        """Mean of the intensity waists at the focus and at the curved mirror."""
        return 0.5 * (self.w0_I + self.w_mirror_I)


def beam_waists(length_um: float, radius_um: float, wavelength_nm: float) -> BeamWaists:
    if not 0 < length_um < radius_um:
        raise UnstableGeometry(f"need 0 < L < R, got L = {length_um}, R = {radius_um}")
    lam = wavelength_nm * 1e-3
    zr = math.sqrt(length_um * (radius_um - length_um))
    w0 = math.sqrt(lam * zr / math.pi)
    wm = w0 * math.sqrt(1 + (length_um / zr) ** 2)
    s = math.sqrt(2.0)
    return BeamWaists(zr, w0, wm, w0 / s, wm / s)


# ---------------------------------------------------------------------------
# mode images


def hermite(order: int, x: np.ndarray) -> np.ndarray:
    """Physicists' Hermite polynomial by the three-term recurrence."""
    h_prev, h = np.ones_like(x), 2 * x
    if order == 0:
        return h_prev
    for k in range(1, order):
        h_prev, h = h, 2 * x * h - 2 * k * h_prev
    return h


@dataclass(frozen=True)
class ModeImage:
    intensity: np.ndarray  # (rows=y, cols=x), unit peak
    pitch_um: float
    waist_I_um: float
    n: int = 0
    m: int = 0

    def axis(self, size: int) -> np.ndarray:
        return (np.arange(size) - (size - 1) / 2) * self.pitch_um

    @property
    def x(self) -> np.ndarray:
        return self.axis(self.intensity.shape[1])

    @property
    def y(self) -> np.ndarray:
        return self.axis(self.intensity.shape[0])

    def metadata(self) -> dict:
        return {"n": self.n, "m": self.m, "pitch_um": self.pitch_um, "waist_I_um": self.waist_I_um,
                "shape": list(self.intensity.shape)}


def hermite_gaussian_image(n: int, m: int, waist_I_um: float, pitch_um: float, size: int) -> ModeImage:
    if waist_I_um <= 0 or pitch_um <= 0:
        raise InvalidArgument("waist and pitch must be > 0")
    if size < 16:
        raise InvalidArgument("image size must be at least 16 px")
    w = math.sqrt(2.0) * waist_I_um  # field waist
    c = (np.arange(size) - (size - 1) / 2) * pitch_um
    x, y = np.meshgrid(c, c)
    u = math.sqrt(2.0) / w
    img = (hermite(n, u * x) * hermite(m, u * y)) ** 2 * np.exp(-2 * (x**2 + y**2) / w**2)
    img = img / img.max()
    return ModeImage(img, pitch_um, waist_I_um, n, m)


def _gauss(x, amp, x0, w, off):
    return amp * np.exp(-((x - x0) ** 2) / w**2) + off


def fit_linecut_waist(image: ModeImage, axis: str = "x") -> float:
    """1/e intensity radius (um) from a Gaussian fit of the central linecut."""
    data = image.intensity
    if axis == "x":
        cut, coord = data[data.shape[0] // 2, :], image.x
    elif axis == "y":
        cut, coord = data[:, data.shape[1] // 2], image.y
    else:
        raise InvalidArgument("axis must be 'x' or 'y'")
    cut = np.asarray(cut, dtype=float)
    peak = cut.max()
    if not peak > 0:
        raise FitError("empty linecut")
    above = coord[cut >= peak / math.e]
    guess_w = max(0.5 * (above.max() - above.min()), image.pitch_um)
    p0 = [peak - cut.min(), coord[int(np.argmax(cut))], guess_w, cut.min()]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)  # covariance unused
            popt, _ = curve_fit(_gauss, coord, cut, p0=p0, maxfev=5000)
    except RuntimeError as exc:
        raise FitError(f"Gaussian linecut fit diverged: {exc}") from None
    w = abs(popt[2])
    if not np.isfinite(w) or w > np.ptp(coord):
        raise FitError("Gaussian linecut fit diverged", best=popt)
    return float(w)
