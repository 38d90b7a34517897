"""Normal-incidence transfer-matrix engine.

Fields are tangential (E, H) pairs with H expressed in units of the free
space admittance, so a medium of index n has optical admittance n.  The
characteristic matrix of a layer maps the fields at its exit-side boundary
onto its incident-side boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import InvalidArgument, NotFound
from .stack import Layer, LayerStack

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _matrices(n, d, wavelengths):
    """Stacked characteristic matrices, shape wavelengths.shape + (2, 2)."""
    delta = 2.0 * np.pi * n * d / wavelengths
    c, s = np.cos(delta), np.sin(delta)
    m = np.empty(np.shape(delta) + (2, 2), dtype=complex)
    m[..., 0, 0] = c
    m[..., 1, 1] = c
    m[..., 0, 1] = 1j * s / n
    m[..., 1, 0] = 1j * n * s
    return m


def characteristic_matrix(layer: Layer, wavelength):
    """2x2 characteristic matrix of ``layer`` (batched over ``wavelength``)."""
    wl = np.asarray(wavelength, dtype=float)
    if np.any(wl <= 0):
        raise InvalidArgument("wavelength must be > 0")
    return _matrices(layer.material.n, layer.thickness, wl)


def system_matrix(layers: Sequence[Layer], wavelengths) -> np.ndarray:
    wl = np.asarray(wavelengths, dtype=float)
    total = np.broadcast_to(np.eye(2, dtype=complex), wl.shape + (2, 2)).copy()
    for layer in layers:
        total = total @ _matrices(layer.material.n, layer.thickness, wl)
    return total


def _bc(stack: LayerStack, wl):
    m = system_matrix(stack.layers, wl)
    ns = stack.exit.n
    b = m[..., 0, 0] + m[..., 0, 1] * ns
    c = m[..., 1, 0] + m[..., 1, 1] * ns
    return b, c


def reflection_coefficient(stack: LayerStack, wavelengths):
    """Complex amplitude reflection coefficient seen from ``stack.incident``."""
    wl = np.asarray(wavelengths, dtype=float)
    n0 = stack.incident.n
    b, c = _bc(stack, wl)
    return (n0 * b - c) / (n0 * b + c)


@dataclass(frozen=True)
class ComplexSpectrum:
    wavelengths: np.ndarray  # nm
    R: np.ndarray
    T: np.ndarray
    r: np.ndarray  # complex amplitude reflection
    t: np.ndarray  # complex amplitude transmission

    def rows(self):
        return zip(self.wavelengths, self.R, self.T)


def spectrum(stack: LayerStack, wavelengths) -> ComplexSpectrum:
    wl = np.atleast_1d(np.asarray(wavelengths, dtype=float))
    if wl.size == 0:
        raise InvalidArgument("empty wavelength grid")
    if np.any(wl <= 0) or not np.all(np.isfinite(wl)):
        raise InvalidArgument("wavelengths must be finite and > 0")
    n0, ns = stack.incident.n, stack.exit.n
    b, c = _bc(stack, wl)
    denom = n0 * b + c
    r = (n0 * b - c) / denom
    t = 2.0 * n0 / denom
    T = 4.0 * n0 * ns / np.abs(denom) ** 2
    return ComplexSpectrum(wl, np.abs(r) ** 2, T, r, t)


def transmittance(stack: LayerStack, wavelength) -> float | np.ndarray:
    n0, ns = stack.incident.n, stack.exit.n
    b, c = _bc(stack, np.asarray(wavelength, dtype=float))
    return 4.0 * n0 * ns / np.abs(n0 * b + c) ** 2


def quarter_wave_peak_reflectance(n0: float, ns: float, nh: float, nl: float, pairs: int) -> float:
    """Closed-form reflectance of an (HL)^N quarter-wave stack at its center."""
    y = (ns / n0) * (nh / nl) ** (2 * pairs)
    return ((1.0 - y) / (1.0 + y)) ** 2


# ---------------------------------------------------------------------------
# stopband


@dataclass(frozen=True)
class Stopband:
    center: float
    low_edge: float
    high_edge: float
    threshold: float

    @property
    def width(self) -> float:
        return self.high_edge - self.low_edge

    def contains(self, wavelength: float) -> bool:
        return self.low_edge <= wavelength <= self.high_edge


def _crossing(x0, y0, x1, y1, level):
    if y1 == y0:
        return x0
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def stopband(spec: ComplexSpectrum, threshold: float = 0.99) -> Stopband:
    """High-reflectance window around the reflectance maximum.

    Edges are the outermost points of the contiguous run with R >= threshold,
    linearly interpolated to the threshold crossing.
    """
    if not 0.0 < threshold < 1.0:
        raise InvalidArgument("threshold must lie in (0, 1)")
    wl, R = np.asarray(spec.wavelengths), np.asarray(spec.R)
    k = int(np.argmax(R))
    if R[k] < threshold:
        raise NotFound(f"no point reaches R >= {threshold} (max {R[k]:.4f})")
    lo = k
    while lo > 0 and R[lo - 1] >= threshold:
        lo -= 1
    hi = k
    while hi < len(R) - 1 and R[hi + 1] >= threshold:
        hi += 1
    low_edge = wl[lo] if lo == 0 else _crossing(wl[lo - 1], R[lo - 1], wl[lo], R[lo], threshold)
    high_edge = wl[hi] if hi == len(R) - 1 else _crossing(wl[hi], R[hi], wl[hi + 1], R[hi + 1], threshold)
    return Stopband(0.5 * (low_edge + high_edge), float(low_edge), float(high_edge), threshold)


# ---------------------------------------------------------------------------
# resonances


def golden_section_max(f, a: float, b: float, tol: float = 1e-4, max_iter: int = 200) -> float:
    """Argmax of a unimodal ``f`` on [a, b] to absolute tolerance ``tol``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def find_resonances(
    stack: LayerStack,
    lo: float,
    hi: float,
    samples: int = 2001,
    min_transmittance: float = 1e-3,
    tol: float = 1e-4,
) -> list[tuple[float, float]]:
    """Transmittance maxima in [lo, hi] as ``(wavelength_nm, T)`` pairs.

    Grid maxima are polished by golden-section search to ``tol`` nm
    (default 0.1 pm).
    """
    if not 0 < lo < hi:
        raise InvalidArgument("need 0 < lo < hi")
    wl = np.linspace(lo, hi, samples)
    T = transmittance(stack, wl)
    out = []
    idx = np.flatnonzero((T[1:-1] > T[:-2]) & (T[1:-1] >= T[2:])) + 1
    for i in idx:
        if T[i] < min_transmittance:
            continue
        peak = golden_section_max(lambda x: float(transmittance(stack, x)), wl[i - 1], wl[i + 1], tol)
        out.append((peak, float(transmittance(stack, peak))))
    return out


def nearest_resonance(stack: LayerStack, wavelength: float, half_window: float = 2.0, samples: int = 801):
    peaks = find_resonances(stack, wavelength - half_window, wavelength + half_window, samples)
    if not peaks:
        raise NotFound(f"no resonance within {half_window} nm of {wavelength} nm")
    return min(peaks, key=lambda p: abs(p[0] - wavelength))


# ---------------------------------------------------------------------------
# field profile


@dataclass(frozen=True)
class FieldProfile:
    """Standing-wave field through a stack, z = 0 at the first interface.

    ``exit_fields[i]`` holds the complex (E, H) at the exit-side boundary of
    layer ``i``; together with ``indices`` and ``thicknesses`` this defines
    the field analytically, which the exact integrals below rely on.
    """

    z: np.ndarray  # nm
    n: np.ndarray
    E: np.ndarray  # complex, arbitrary units
    wavelength: float
    indices: np.ndarray
    thicknesses: np.ndarray
    exit_fields: np.ndarray  # (layers, 2) complex
    names: tuple[str, ...] = field(default=())

    @property
    def abs_E(self) -> np.ndarray:
        return np.abs(self.E)

    @property
    def boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.thicknesses)])

    def scaled(self, factor: float) -> "FieldProfile":
        return FieldProfile(
            self.z, self.n, self.E * factor, self.wavelength, self.indices,
            self.thicknesses, self.exit_fields * factor, self.names,
        )

    def _coeffs(self, i):
        e1, h1 = self.exit_fields[i]
        n = self.indices[i]
        a, b = e1, 1j * h1 / n
        return a, b, 2.0 * np.pi * n / self.wavelength

    def layer_intensity_integral(self, i: int) -> float:
        """Exact integral of |E|^2 over layer ``i`` (nm * units^2)."""
        a, b, k = self._coeffs(i)
        d = self.thicknesses[i]
        aa, bb, ab = abs(a) ** 2, abs(b) ** 2, (a * np.conj(b)).real
        return float(
            0.5 * (aa + bb) * d
            + (aa - bb) / (4 * k) * np.sin(2 * k * d)
            + ab / (2 * k) * (1 - np.cos(2 * k * d))
        )

    def energy_integral(self) -> float:
        """Exact integral of n^2 |E|^2 dz over all layers (nm * units^2)."""
        return sum(self.indices[i] ** 2 * self.layer_intensity_integral(i) for i in range(len(self.indices)))

    def layer_max_abs(self, i: int) -> float:
        """Exact maximum of |E| inside layer ``i``."""
        a, b, k = self._coeffs(i)
        d = self.thicknesses[i]
        aa, bb = abs(a) ** 2, abs(b) ** 2
        mean, cb, cs = 0.5 * (aa + bb), 0.5 * (aa - bb), (a * np.conj(b)).real

        def val(s):
            return mean + cb * np.cos(2 * k * s) + cs * np.sin(2 * k * s)

        cands = [0.0, d]
        phi = np.arctan2(cs, cb)  # maximum where 2ks = phi (mod 2 pi)
        period = np.pi / k
        s0 = (phi / (2 * k)) % period
        while s0 <= d:
            cands.append(s0)
            s0 += period
        return float(np.sqrt(max(val(s) for s in cands)))

    def field_at(self, z: float) -> complex:
        """Complex E at position ``z`` (nm), evaluated analytically."""
        edges = self.boundaries
        i = int(np.clip(np.searchsorted(edges, z, side="right") - 1, 0, len(self.indices) - 1))
        a, b, k = self._coeffs(i)
        s = edges[i + 1] - z
        return complex(a * np.cos(k * s) + b * np.sin(k * s))

    def layer_index_at(self, z: float) -> int:
        edges = self.boundaries
        return int(np.clip(np.searchsorted(edges, z, side="right") - 1, 0, len(self.indices) - 1))


def field_profile(stack: LayerStack, wavelength: float, step: float = 1.0) -> FieldProfile:
    """Sampled |E(z)| for light entering from ``stack.incident``.

    The transmitted wave is normalised to unit amplitude; propagation runs
    backwards from the exit medium so the field is exact at every boundary.
    """
    if not step > 0:
        raise InvalidArgument("step must be > 0")
    if not stack.layers:
        raise InvalidArgument("field profile needs at least one layer")
    wl = float(wavelength)
    ns = stack.exit.n
    eh = np.array([1.0 + 0j, ns + 0j])
    nl = len(stack.layers)
    exit_fields = np.empty((nl, 2), dtype=complex)
    indices = np.array([l.material.n for l in stack.layers])
    thick = np.array([l.thickness for l in stack.layers])
    edges = np.concatenate([[0.0], np.cumsum(thick)])
    zs, es, nn = [], [], []
    for i in range(nl - 1, -1, -1):
        exit_fields[i] = eh
        n, d = indices[i], thick[i]
        k = 2 * np.pi * n / wl
        s = np.arange(0.0, d, step)
        e = eh[0] * np.cos(k * s) + 1j * eh[1] / n * np.sin(k * s)
        zs.append(edges[i + 1] - s)
        es.append(e)
        nn.append(np.full(s.shape, n))
        m = _matrices(n, d, wl)
        eh = m @ eh
    # add the incident-side boundary point explicitly
    zs.append(np.array([0.0]))
    es.append(np.array([eh[0]]))
    nn.append(np.array([indices[0]]))
    z = np.concatenate(zs)
    order = np.argsort(z, kind="stable")
    return FieldProfile(
        z[order],
        np.concatenate(nn)[order],
        np.concatenate(es)[order],
        wl,
        indices,
        thick,
        exit_fields,
        tuple(l.material.name for l in stack.layers),
    )


def standing_wave_profile(length: float, n: float, wavelength: float, step: float = 1.0) -> FieldProfile:
    """Ideal-mirror cavity of one medium: E(z) = sin(2 pi n z / wavelength)."""
    k = 2 * np.pi * n / wavelength
    # exit-side values chosen so that E(z) = sin(kz) inside the layer
    e1 = np.sin(k * length)
    h1 = 1j * n * np.cos(k * length)
    z = np.arange(0.0, length + 0.5 * step, step)
    z = z[z <= length]
    return FieldProfile(
        z, np.full(z.shape, n), np.sin(k * z) + 0j, wavelength,
        np.array([n]), np.array([length]), np.array([[e1, h1]]), ("medium",),
    )


# ---------------------------------------------------------------------------
# refinement


@dataclass
class Refinement:
    stack: LayerStack
    multipliers: np.ndarray
    residual: float  # RMS mismatch
    initial_residual: float
    converged: bool
    evaluations: int
    message: str = ""


def refine_stack(
    stack: LayerStack,
    measured,
    thickness_tolerance: float = 0.03,
    quantity: str = "T",
    max_evaluations: int = 10_000,
) -> Refinement:
    """Fit per-layer thickness multipliers in [1 - tol, 1 + tol].

    ``measured`` is a spectrum object with ``wavelengths``/``counts`` (values
    normalised to [0, 1]) or a ``(wavelengths, values)`` pair.  A scan of a
    common multiplier seeds a bounded trust-region fit over all layers.
    """
    if thickness_tolerance < 0:
        raise InvalidArgument("tolerance must be >= 0")
    if quantity not in ("T", "R"):
        raise InvalidArgument("quantity must be 'T' or 'R'")
    if hasattr(measured, "wavelengths"):
        wl, target = measured.wavelengths, measured.counts
    else:
        wl, target = measured
    wl = np.asarray(wl, dtype=float)
    target = np.asarray(target, dtype=float)
    if wl.shape != target.shape:
        raise InvalidArgument("wavelength grid and measured data differ in length")
    nl = len(stack.layers)

    def model(mult):
        s = spectrum(stack.scaled(mult), wl)
        return s.T if quantity == "T" else s.R

    def rms(mult):
        return float(np.sqrt(np.mean((model(mult) - target) ** 2)))

    ones = np.ones(nl)
    r0 = rms(ones)
    if thickness_tolerance == 0 or nl == 0:
        return Refinement(stack, ones, r0, r0, True, 1, "degenerate bounds")

    lo, hi = 1.0 - thickness_tolerance, 1.0 + thickness_tolerance
    grid = np.linspace(lo, hi, 61)
    scan = [rms(np.full(nl, g)) for g in grid]
    x0 = np.full(nl, grid[int(np.argmin(scan))])
    if min(scan) > r0:
        x0 = ones
    res = least_squares(
        lambda m: model(m) - target,
        x0,
        bounds=(np.full(nl, lo), np.full(nl, hi)),
        method="trf",
        x_scale=np.full(nl, thickness_tolerance),
        xtol=1e-12,
        ftol=1e-14,
        gtol=1e-12,
        max_nfev=max_evaluations,
    )
    mult = np.clip(res.x, lo, hi)
    r = rms(mult)
    if r > r0:
        mult, r = ones, r0
    return Refinement(stack.scaled(mult), mult, r, r0, bool(res.success), int(res.nfev), res.message)
