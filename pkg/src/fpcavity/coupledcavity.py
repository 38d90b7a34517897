"""Membrane + air-gap coupled cavity: mode maps, slopes and geometry fits.

Resonances are transmittance maxima of the flattened stack.  At a fixed
wavelength the mirror reflection coefficients seen from inside the air gap
are constants, so the transmittance maxima versus gap width sit exactly on
the round-trip phase condition

    arg(r_low * r_top) - 4 pi n_gap t_a / lambda = -2 pi p

which gives resonant gaps in closed form and an implicit-derivative slope
used for fast scans.  Reported slopes come from finite differences of
located transmittance maxima.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import tmm
from .errors import InvalidArgument, NotFound
from .stack import CavityAssembly, LayerStack, Material, assemble_cavity, material

SLOPE_STEP_NM = 1.0
INV_SQRT2 = 1.0 / math.sqrt(2.0)


# ---------------------------------------------------------------------------
# resonance geometry


def _lower_reflection(assembly: CavityAssembly, wavelengths, membrane_thickness=None, mirror_matrix=None):
    """r seen from the gap looking at membrane + bottom mirror.

    ``membrane_thickness`` may be an array; the result broadcasts over it
    (rows) and over ``wavelengths`` (columns).
    """
    wl = np.atleast_1d(np.asarray(wavelengths, dtype=float))
    td = assembly.membrane_thickness if membrane_thickness is None else membrane_thickness
    td = np.asarray(td, dtype=float)[..., None]
    mb = tmm.system_matrix(assembly.bottom_mirror.layers, wl) if mirror_matrix is None else mirror_matrix
    nd = assembly.membrane_material.n
    mm = tmm._matrices(nd, td, wl)
    m = mm @ mb
    ns = assembly.bottom_mirror.exit.n
    n0 = assembly.gap_material.n
    b = m[..., 0, 0] + m[..., 0, 1] * ns
    c = m[..., 1, 0] + m[..., 1, 1] * ns
    return (n0 * b - c) / (n0 * b + c)


def _top_reflection(assembly: CavityAssembly, wavelengths):
    return tmm.reflection_coefficient(assembly.top_mirror.with_media(incident=assembly.gap_material), wavelengths)


def _round_trip_phase(assembly, wavelength, h=1e-4, membrane_thickness=None, cache=None):
    """Mirror round-trip phase and its wavelength derivative (rad, rad/nm).

    ``cache`` (a dict) keeps the fixed mirror quantities between calls that
    share assembly mirrors and wavelength.
    """
    wl = np.array([wavelength - h, wavelength, wavelength + h])
    if cache is None:
        cache = {}
    if "mb" not in cache:
        cache["mb"] = tmm.system_matrix(assembly.bottom_mirror.layers, wl)
        cache["rt"] = _top_reflection(assembly, wl)
    rr = _lower_reflection(assembly, wl, membrane_thickness, cache["mb"]) * cache["rt"]
    phase = np.angle(rr[..., 1])
    dphase = np.angle(rr[..., 2] / rr[..., 0]) / (2 * h)
    return phase, dphase


def resonant_gaps(
    assembly: CavityAssembly,
    wavelength: float,
    gap_range: tuple[float, float],
) -> list[float]:
    """Air-gap widths (nm) in ``gap_range`` resonant at ``wavelength``."""
    lo, hi = gap_range
    ng = assembly.gap_material.n
    phase, _ = _round_trip_phase(assembly, wavelength)
    half = wavelength / (2 * ng)
    base = float(phase) * wavelength / (4 * math.pi * ng)
    p0 = math.ceil((lo - base) / half)
    out = []
    t = base + p0 * half
    while t <= hi:
        if t >= lo and t >= 0:
            out.append(t)
        t += half
    return out


def phase_slope(assembly: CavityAssembly, wavelength: float) -> float:
    """d(lambda_c)/d(t_a) in pm/nm from the phase condition at the current gap."""
    ng = assembly.gap_material.n
    _, dphase = _round_trip_phase(assembly, wavelength)
    k = 4 * math.pi * ng / wavelength
    return float(k / (dphase + k * assembly.air_gap / wavelength)) * 1e3


def resonance_near(assembly: CavityAssembly, wavelength: float, half_window: float = 1.0) -> float:
    return tmm.nearest_resonance(assembly.flatten(), wavelength, half_window)[0]


def slope_at(assembly: CavityAssembly, wavelength: float, step: float = SLOPE_STEP_NM) -> float:
    """Central-difference slope (pm/nm) of the resonance near ``wavelength``."""
    if assembly.air_gap - step < 0:
        raise InvalidArgument("air gap too small for the difference step")
    guess = phase_slope(assembly, wavelength) * 1e-3 * step
    hi = tmm.nearest_resonance(assembly.with_geometry(air_gap=assembly.air_gap + step).flatten(),
                               wavelength + guess, 0.5)[0]
    lo = tmm.nearest_resonance(assembly.with_geometry(air_gap=assembly.air_gap - step).flatten(),
                               wavelength - guess, 0.5)[0]
    return (hi - lo) / (2 * step) * 1e3


# ---------------------------------------------------------------------------
# mode maps


@dataclass
class ModeMap:
    assembly: CavityAssembly
    gaps: np.ndarray  # nm
    window: tuple[float, float]
    # one row per located resonance: t_a, lambda, weight, branch
    points: list[tuple[float, float, float, int]] = field(default_factory=list)

    def branch(self, branch_id: int) -> tuple[np.ndarray, np.ndarray]:
        pts = [(t, l) for t, l, _, b in self.points if b == branch_id]
        if not pts:
            raise NotFound(f"no branch {branch_id}")
        arr = np.array(pts)
        return arr[:, 0], arr[:, 1]

    @property
    def branch_ids(self) -> list[int]:
        return sorted({b for *_, b in self.points})

    def at_gap(self, index: int) -> list[tuple[float, float]]:
        t = self.gaps[index]
        return [(l, w) for tt, l, w, _ in self.points if tt == t]

    def crossing(self, branch_id: int, wavelength: float) -> float:
        """Gap width (nm) where ``branch_id`` passes ``wavelength`` (interpolated)."""
        t, l = self.branch(branch_id)
        s = np.flatnonzero((l[:-1] - wavelength) * (l[1:] - wavelength) <= 0)
        if len(s) == 0:
            raise NotFound(f"branch {branch_id} does not cross {wavelength} nm")
        i = s[0]
        if l[i + 1] == l[i]:
            return float(t[i])
        return float(t[i] + (wavelength - l[i]) * (t[i + 1] - t[i]) / (l[i + 1] - l[i]))


def _peaks_at(job):
    assembly, t, lo, hi, samples, min_weight = job
    return tmm.find_resonances(assembly.with_geometry(air_gap=t).flatten(), lo, hi, samples, min_weight)


def mode_map(
    assembly: CavityAssembly,
    gaps: Sequence[float],
    window: tuple[float, float],
    samples: int = 3001,
    min_weight: float = 1e-3,
    workers: int = 1,
) -> ModeMap:
    """Resonances versus air gap, tracked into continuous branches.

    Peak search runs over ``workers`` processes; branches are then linked
    by nearest-wavelength continuation between neighbouring gap values.
    """
    gaps = np.asarray(gaps, dtype=float)
    lo, hi = window
    if len(gaps) == 0 or np.any(gaps < 0) or np.any(np.diff(gaps) <= 0):
        raise InvalidArgument("gaps must be non-negative and strictly increasing")
    if not 0 < lo < hi:
        raise InvalidArgument("wavelength window must be positive and increasing")
    out = ModeMap(assembly, gaps, (lo, hi))
    prev: list[tuple[float, int]] = []
    next_id = 0
    max_jump = None
    jobs = [(assembly, float(t), lo, hi, samples, min_weight) for t in gaps]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            all_peaks = list(pool.map(_peaks_at, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        all_peaks = [_peaks_at(j) for j in jobs]
    for t, peaks in zip(gaps, all_peaks):
        current = []
        used = set()
        for lam, weight in peaks:
            bid = None
            if prev:
                j = min(range(len(prev)), key=lambda k: abs(prev[k][0] - lam))
                jump = abs(prev[j][0] - lam)
                if j not in used and (max_jump is None or jump < max_jump):
                    bid = prev[j][1]
                    used.add(j)
            if bid is None:
                bid = next_id
                next_id += 1
            current.append((lam, bid))
            out.points.append((float(t), float(lam), float(weight), bid))
        if len(peaks) > 1:
            spacing = float(np.min(np.diff([p[0] for p in peaks])))
            max_jump = 0.5 * spacing
        prev = current
    return out


def dispersion_slope(mode_map: ModeMap, branch_id: int, wavelength: float, step: float = SLOPE_STEP_NM) -> float:
    """Slope (pm/nm) of branch ``branch_id`` where it crosses ``wavelength``."""
    t_cross = mode_map.crossing(branch_id, wavelength)
    assembly = mode_map.assembly
    # snap to the exact resonant gap near the interpolated crossing
    exact = resonant_gaps(assembly, wavelength, (t_cross - 5.0, t_cross + 5.0))
    if exact:
        t_cross = min(exact, key=lambda g: abs(g - t_cross))
    return slope_at(assembly.with_geometry(air_gap=t_cross), wavelength, step)


def effective_mode_number(slope_pm_per_nm: float) -> tuple[int, float]:
    """(rounded, raw) effective mode number 2/m for a slope in pm/nm."""
    m = slope_pm_per_nm * 1e-3
    if not 0 < m <= 2:
        raise InvalidArgument(f"slope must lie in (0, 2000] pm/nm, got {slope_pm_per_nm}")
    raw = 2.0 / m
    return int(round(raw)), raw


# ---------------------------------------------------------------------------
# geometry inversion


@dataclass(frozen=True)
class GeometryCandidate:
    membrane_thickness: float
    air_gap: float  # gap of the first (steeper) branch
    second_gap: float
    slopes: tuple[float, float]  # pm/nm from the phase model
    chi2: float


@dataclass
class GeometryFit:
    membrane_thickness: float
    air_gap: float
    second_gap: float
    residual: float  # sum of squared slope mismatches, (pm/nm)^2
    slopes: tuple[float, float]  # located-resonance slopes at the solution
    mode_numbers: tuple[int, int]
    on_boundary: bool
    candidates: list[GeometryCandidate]
    equivalent: int  # candidates within one unit of chi2 of the best
    bounds: dict = field(default_factory=dict)

    def report(self) -> dict:
        return {
            "t_d_nm": self.membrane_thickness,
            "t_a_nm": self.air_gap,
            "t_a_second_branch_nm": self.second_gap,
            "residual_pm2_per_nm2": self.residual,
            "model_slopes_pm_per_nm": list(self.slopes),
            "q_assignment": list(self.mode_numbers),
            "on_boundary": self.on_boundary,
            "equivalent_solutions": self.equivalent,
            "bounds": self.bounds,
            "candidates": [
                {"t_d_nm": c.membrane_thickness, "t_a_nm": c.air_gap, "chi2": c.chi2,
                 "slopes_pm_per_nm": list(c.slopes)}
                for c in self.candidates[:20]
            ],
        }


def _pair_slopes(assembly, wavelength, td, order, cache=None):
    """Phase-model slopes of gap orders ``order`` and ``order + 1`` (pm/nm)."""
    ng = assembly.gap_material.n
    phase, dphase = _round_trip_phase(assembly, wavelength, membrane_thickness=td, cache=cache)
    half = wavelength / (2 * ng)
    gap1 = phase * wavelength / (4 * math.pi * ng) + order * half
    k = 4 * math.pi * ng / wavelength
    m1 = k / (dphase + k * gap1 / wavelength) * 1e3
    m2 = k / (dphase + k * (gap1 + half) / wavelength) * 1e3
    return gap1, gap1 + half, m1, m2


def fit_geometry(
    slopes_pm_per_nm: tuple[float, float],
    bottom: LayerStack,
    top: LayerStack,
    wavelength: float,
    membrane_material: Material | None = None,
    t_d_bounds: tuple[float, float] = (300.0, 1500.0),
    t_a_bounds: tuple[float, float] = (500.0, 6000.0),
    slope_sigma: float = 0.5,
    start: tuple[float, float] | None = None,
    grid_step: float = 1.0,
) -> GeometryFit:
    """Membrane thickness and air gap reproducing two adjacent branch slopes.

    A grid over t_d (with every resonant gap order) is followed by bounded
    refinement of each local minimum.  Two adjacent fundamental slopes carry
    a single independent number in this model (1/m2 = 1/m1 + 1/2 for a lossless
    stack), so many (t_d, t_a) pairs fit equally well; ``equivalent`` counts
    them.  With ``start`` given, the equivalent candidate closest to that
    nominal geometry is returned, otherwise the lowest chi-square one.
    """
    m_meas = np.asarray(slopes_pm_per_nm, dtype=float)
    if m_meas.shape != (2,) or np.any(m_meas <= 0):
        raise InvalidArgument("need two positive slopes")
    membrane_material = membrane_material or material("diamond")
    td_lo, td_hi = t_d_bounds
    ta_lo, ta_hi = t_a_bounds
    if td_lo < 0 or td_hi < td_lo or ta_lo < 0 or ta_hi <= ta_lo:
        raise InvalidArgument("invalid bounds")
    seed = td_lo if td_lo > 0 else 1.0
    assembly, _ = assemble_cavity(bottom, seed, ta_lo, top, membrane_material)
    ng = assembly.gap_material.n
    half = wavelength / (2 * ng)

    def chi2(m1, m2):
        return ((m1 - m_meas[0]) / slope_sigma) ** 2 + ((m2 - m_meas[1]) / slope_sigma) ** 2

    if td_hi == td_lo:
        tds = np.array([td_lo])
    else:
        tds = np.arange(td_lo, td_hi + 0.5 * grid_step, grid_step)
        tds = tds[tds <= td_hi]
    cache: dict = {}
    phase, _ = _round_trip_phase(assembly, wavelength, membrane_thickness=tds, cache=cache)
    base = phase * wavelength / (4 * math.pi * ng)
    p_lo = int(math.floor((ta_lo - base.max()) / half)) - 1
    p_hi = int(math.ceil((ta_hi - base.min()) / half)) + 1

    candidates: list[GeometryCandidate] = []
    for p in range(p_lo, p_hi + 1):
        g1, g2, m1, m2 = _pair_slopes(assembly, wavelength, tds, p, cache)
        valid = (g1 >= ta_lo) & (g1 <= ta_hi) & (m1 > 0) & (m2 > 0)
        if not np.any(valid):
            continue
        c = np.where(valid, chi2(m1, m2), np.inf)
        if len(tds) == 1:
            idx = [0] if np.isfinite(c[0]) else []
        else:
            left = np.concatenate([[np.inf], c[:-1]])
            right = np.concatenate([c[1:], [np.inf]])
            idx = np.flatnonzero(np.isfinite(c) & (c <= left) & (c <= right))
        for i in idx:
            if len(tds) == 1:
                td = float(tds[0])
            else:
                a = tds[max(i - 1, 0)]
                b = tds[min(i + 1, len(tds) - 1)]

                def obj(x, p=p):
                    gg1, _, mm1, mm2 = _pair_slopes(assembly, wavelength, np.array([x]), p, cache)
                    if not ta_lo <= gg1[0] <= ta_hi:
                        return 1e12
                    return float(chi2(mm1[0], mm2[0]))

                td = float(minimize_scalar(obj, bounds=(a, b), method="bounded",
                                           options={"xatol": 1e-7}).x)
            gg1, gg2, mm1, mm2 = _pair_slopes(assembly, wavelength, np.array([td]), p, cache)
            if not ta_lo <= gg1[0] <= ta_hi:
                continue
            candidates.append(GeometryCandidate(td, float(gg1[0]), float(gg2[0]),
                                                (float(mm1[0]), float(mm2[0])), float(chi2(mm1[0], mm2[0]))))
    if not candidates:
        raise NotFound("no resonant geometry inside the bounds")
    candidates.sort(key=lambda c: c.chi2)
    best_chi2 = candidates[0].chi2
    equivalent = [c for c in candidates if c.chi2 <= best_chi2 + 1.0]
    if start is not None:
        td0, ta0 = start
        scale_d = wavelength / (2 * membrane_material.n)
        chosen = min(equivalent, key=lambda c: ((c.membrane_thickness - td0) / scale_d) ** 2
                     + ((c.air_gap - ta0) / half) ** 2)
    else:
        chosen = candidates[0]

    solved = assembly.with_geometry(membrane_thickness=chosen.membrane_thickness, air_gap=chosen.air_gap)
    s1 = slope_at(solved, wavelength)
    s2 = slope_at(solved.with_geometry(air_gap=chosen.second_gap), wavelength)
    edge_tol = 2 * grid_step
    on_boundary = (
        chosen.membrane_thickness - td_lo < edge_tol and td_lo > 0
        or td_hi - chosen.membrane_thickness < edge_tol and td_hi > td_lo
        or chosen.air_gap - ta_lo < edge_tol
        or ta_hi - chosen.air_gap < edge_tol
    )
    return GeometryFit(
        chosen.membrane_thickness,
        chosen.air_gap,
        chosen.second_gap,
        float((s1 - m_meas[0]) ** 2 + (s2 - m_meas[1]) ** 2),
        (s1, s2),
        (effective_mode_number(s1)[0], effective_mode_number(s2)[0]),
        bool(on_boundary),
        candidates,
        len(equivalent),
        {"t_d_nm": list(t_d_bounds), "t_a_nm": list(t_a_bounds)},
    )


def forward_slopes(assembly: CavityAssembly, wavelength: float) -> tuple[float, float]:
    """Located-resonance slopes of the branch at the current gap and the next one."""
    half = wavelength / (2 * assembly.gap_material.n)
    return (slope_at(assembly, wavelength),
            slope_at(assembly.with_geometry(air_gap=assembly.air_gap + half), wavelength))


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Configuration:
    label: str  # "diamond-like" or "air-like"
    interface_ratio: float  # |E| at membrane/gap interface over max |E| in the membrane
    membrane_energy_fraction: float
    gap_energy_fraction: float
    membrane_energy_density: float  # mean n^2|E|^2 per nm, relative units
    gap_energy_density: float
    wavelength: float


def classify_configuration(
    assembly: CavityAssembly,
    wavelength: float,
    threshold: float = INV_SQRT2,
    at_resonance: bool = True,
) -> Configuration:
    """Antinode-proximity classification of the membrane/air interface."""
    if assembly.membrane_thickness <= 0:
        return Configuration("air-like", 0.0, 0.0, 1.0, 0.0, 1.0, wavelength)
    flat = assembly.flatten()
    if at_resonance:
        wavelength = tmm.nearest_resonance(flat, wavelength, 2.0)[0]
    prof = tmm.field_profile(flat, wavelength, step=1.0)
    i_mem = assembly.bottom_count
    e_iface = abs(prof.exit_fields[i_mem][0])
    ratio = e_iface / prof.layer_max_abs(i_mem)
    total = prof.energy_integral()
    n_mem = prof.indices[i_mem]
    e_mem = n_mem**2 * prof.layer_intensity_integral(i_mem)
    if assembly.air_gap > 0:
        i_gap = i_mem + 1
        e_gap = prof.indices[i_gap] ** 2 * prof.layer_intensity_integral(i_gap)
        gap_density = e_gap / assembly.air_gap
    else:
        e_gap, gap_density = 0.0, 0.0
    label = "diamond-like" if ratio > threshold else "air-like"
    return Configuration(
        label,
        float(ratio),
        float(e_mem / total),
        float(e_gap / total),
        float(e_mem / assembly.membrane_thickness),
        float(gap_density),
        float(wavelength),
    )


# ---------------------------------------------------------------------------
# mirror loss split


def mirror_transmittances(assembly: CavityAssembly, wavelength: float) -> tuple[float, float]:
    """(top, bottom) power transmittance seen from the adjacent cavity medium."""
    top = assembly.top_mirror.with_media(incident=assembly.gap_material)
    bottom = assembly.bottom_mirror.with_media(incident=assembly.membrane_material)
    return float(tmm.transmittance(top, wavelength)), float(tmm.transmittance(bottom, wavelength))
