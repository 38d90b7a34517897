"""Command-line front end.

Every subcommand writes a JSON report and at least one delimited data file
into ``--out-dir`` and prints the report to stdout.  ``--plot`` adds PNG
renderings of the data.  Errors print one line

    fpcavity: error code=<exit> kind=<name> message=<json string>

and exit 2 (usage), 3 (input format) or 4 (numeric failure).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import coupledcavity as cc
from . import gaussmodes as gm
from . import io, purcell, raman, spectrafit, tmm
from .config import defaults
from .errors import CavityError, InputFormatError, InvalidArgument
from .stack import (
    LayerStack,
    load_stack,
    material,
    nominal_cavity,
    nominal_mirrors,
    stack_to_document,
)

EXIT_USAGE, EXIT_FORMAT, EXIT_NUMERIC = 2, 3, 4


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit_error(code: int, kind: str, message: str) -> int:
    print(f"fpcavity: error code={code} kind={kind} message={json.dumps(message)}", file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# shared helpers


class Run:
    """Output directory, file prefix and optional plotting for one command."""

    def __init__(self, args):
        self.dir = Path(args.out_dir)
        self.prefix = args.prefix or args.command
        self.plot = args.plot
        self.files: list[str] = []

    def path(self, suffix: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / f"{self.prefix}{suffix}"
        self.files.append(p.name)
        return p

    def table(self, suffix, header, rows, comments=()):
        return io.write_table(self.path(suffix), header, rows, comments)

    def figure(self, fn, suffix, *a, **kw):
        if self.plot:
            from . import plotting

            getattr(plotting, fn)(self.path(suffix), *a, **kw)

    def finish(self, report: dict) -> int:
        report = {"command": self.prefix, **report}
        report["artifacts"] = sorted(self.files + [f"{self.prefix}_report.json"])
        io.write_report(self.dir / f"{self.prefix}_report.json", report)
        sys.stdout.write(io.dumps_report(report))
        return 0


def _summary_rows(report: dict):
    for k, v in report.items():
        if isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool):
            yield (k, v)


def _stack_from_args(args) -> LayerStack:
    if args.stack:
        return load_stack(args.stack)
    bottom, top = nominal_mirrors()
    if args.preset == "bottom":
        return bottom
    if args.preset == "top":
        return top
    if args.preset == "cavity":
        return nominal_cavity().flatten()
    return LayerStack(material("air"))  # empty


def _cavity_from_args(args):
    cfg = defaults()
    t_d = cfg["membrane"]["thickness_nm"] if args.t_d_nm is None else args.t_d_nm
    t_a = cfg["air_gap_nm"] if args.t_a_nm is None else args.t_a_nm
    return nominal_cavity(t_d, t_a)


def _spectrum(stack: LayerStack, wl) -> tmm.ComplexSpectrum:
    """Like tmm.spectrum but also accepts a stack without layers (a bare interface)."""
    if stack.layers:
        return tmm.spectrum(stack, wl)
    n0, ns = stack.incident.n, stack.exit.n
    r = (n0 - ns) / (n0 + ns)
    t = 2 * n0 / (n0 + ns)
    ones = np.ones(len(wl))
    return tmm.ComplexSpectrum(np.asarray(wl, float), r**2 * ones, 4 * n0 * ns / (n0 + ns) ** 2 * ones,
                               r * ones + 0j, t * ones + 0j)


def _grid(start, stop, points):
    if not stop > start or points < 2:
        raise InvalidArgument("need stop > start and at least 2 points")
    return np.linspace(start, stop, points)


# ---------------------------------------------------------------------------
# commands


def cmd_stack_spectrum(args, run: Run) -> int:
    stack = _stack_from_args(args)
    wl = _grid(args.start_nm, args.stop_nm, args.points)
    spec = _spectrum(stack, wl)
    run.table(".csv", ["wavelength_nm", "R", "T"], zip(spec.wavelengths, spec.R, spec.T))
    run.figure("lines", ".png", wl, {"R": spec.R, "T": spec.T}, "wavelength (nm)", "power fraction")
    report = {"layers": len(stack.layers), "total_thickness_nm": stack.total_thickness,
              "R_min": float(spec.R.min()), "R_max": float(spec.R.max()),
              "max_abs_R_plus_T_minus_1": float(np.max(np.abs(spec.R + spec.T - 1)))}
    if args.profile_nm is not None:
        if not stack.layers:
            raise InvalidArgument("field profile needs at least one layer")
        prof = tmm.field_profile(stack, args.profile_nm, args.step_nm)
        run.table("_profile.csv", ["z_nm", "n", "abs_E"], zip(prof.z, prof.n, prof.abs_E))
        run.figure("lines", "_profile.png", prof.z, {"|E|": prof.abs_E}, "z (nm)", "|E| (rel.)")
        report["profile_wavelength_nm"] = args.profile_nm
    return run.finish(report)


def cmd_stopband(args, run: Run) -> int:
    stack = _stack_from_args(args)
    if not stack.layers:
        raise InvalidArgument("stopband needs a non-empty stack")
    wl = _grid(args.start_nm, args.stop_nm, args.points)
    spec = tmm.spectrum(stack, wl)
    sb = tmm.stopband(spec, args.threshold)
    run.table(".csv", ["wavelength_nm", "R", "T"], zip(spec.wavelengths, spec.R, spec.T))
    run.figure("lines", ".png", wl, {"R": spec.R}, "wavelength (nm)", "R")
    probes = {f"{p:g}": sb.contains(p) for p in args.probe_nm}
    return run.finish({"center_nm": sb.center, "low_edge_nm": sb.low_edge, "high_edge_nm": sb.high_edge,
                       "width_nm": sb.width, "threshold": sb.threshold, "inside": probes})


def cmd_refine(args, run: Run) -> int:
    stack = load_stack(args.stack)
    data = io.read_table(args.measured, 2)
    result = tmm.refine_stack(stack, (data[:, 0], data[:, 1]), args.tolerance, args.quantity)
    doc = stack_to_document(result.stack)
    p = run.path("_stack.json")
    io.write_report(p, doc)
    model = tmm.spectrum(result.stack, data[:, 0])
    vals = model.T if args.quantity == "T" else model.R
    run.table(".csv", ["wavelength_nm", "measured", "model"], zip(data[:, 0], data[:, 1], vals))
    run.figure("lines", ".png", data[:, 0], {"measured": data[:, 1], "model": vals}, "wavelength (nm)",
               args.quantity)
    return run.finish({"multipliers": list(result.multipliers), "residual_rms": result.residual,
                       "initial_residual_rms": result.initial_residual, "converged": result.converged,
                       "evaluations": result.evaluations, "message": result.message,
                       "tolerance": args.tolerance})


def cmd_mode_map(args, run: Run) -> int:
    cav = _cavity_from_args(args)
    gaps = np.arange(args.t_a_start_nm, args.t_a_stop_nm + 0.5 * args.t_a_step_nm, args.t_a_step_nm)
    mm = cc.mode_map(cav, gaps, (args.window_start_nm, args.window_stop_nm), args.samples,
                     workers=args.workers)
    run.table(".csv", ["t_a_nm", "lambda_nm", "weight", "branch_id"], mm.points)
    if mm.points:
        arr = np.array(mm.points)
        run.figure("points", ".png", arr[:, 0], arr[:, 1], arr[:, 2], "t_a (nm)", "wavelength (nm)")
    slopes = {}
    if args.slope_at_nm is not None:
        for b in mm.branch_ids:
            try:
                s = cc.dispersion_slope(mm, b, args.slope_at_nm)
            except CavityError:
                continue
            q, raw = cc.effective_mode_number(s)
            slopes[str(b)] = {"slope_pm_per_nm": s, "q": q, "q_raw": raw}
    return run.finish({"t_d_nm": cav.membrane_thickness, "gaps": len(gaps), "branches": len(mm.branch_ids),
                       "resonances": len(mm.points), "slopes": slopes})


def cmd_fit_geometry(args, run: Run) -> int:
    bottom, top = nominal_mirrors()
    start = None
    if args.start_t_d_nm is not None or args.start_t_a_nm is not None:
        if args.start_t_d_nm is None or args.start_t_a_nm is None:
            raise InvalidArgument("give both --start-t-d-nm and --start-t-a-nm")
        start = (args.start_t_d_nm, args.start_t_a_nm)
    fit = cc.fit_geometry(tuple(args.slopes_pm_per_nm), bottom, top, args.wavelength_nm,
                          t_d_bounds=(args.t_d_min_nm, args.t_d_max_nm),
                          t_a_bounds=(args.t_a_min_nm, args.t_a_max_nm),
                          slope_sigma=args.slope_sigma_pm_per_nm, start=start)
    run.table("_candidates.csv", ["t_d_nm", "t_a_nm", "slope1_pm_per_nm", "slope2_pm_per_nm", "chi2"],
              ((c.membrane_thickness, c.air_gap, *c.slopes, c.chi2) for c in fit.candidates))
    report = fit.report()
    report["candidates"] = report["candidates"][:5]
    report["inputs"] = {"slopes_pm_per_nm": list(args.slopes_pm_per_nm), "wavelength_nm": args.wavelength_nm,
                        "start": list(start) if start else None}
    return run.finish(report)


def cmd_gauss_modes(args, run: Run) -> int:
    res = gm.mode_dispersion_map(args.wavelength_nm, args.radius_um, (args.length_start_um, args.length_stop_um),
                                 max_order=args.max_order)
    if not res:
        raise InvalidArgument("no stable mode in the length range")
    ref = args.reference_length_um
    if ref is None:
        ref = min(r.length_um for r in res if r.mode.transverse_order == 0) if any(
            r.mode.transverse_order == 0 for r in res) else res[0].length_um
    run.table(".csv", ["delta_L_nm", "q", "n", "m"], ((r.delta_nm(ref), r.mode.q, r.mode.n, r.mode.m) for r in res))
    run.figure("stems", ".png", [r.delta_nm(ref) for r in res],
               [f"{r.mode.q},{r.mode.n},{r.mode.m}" for r in res], "delta L (nm)")
    report = {"modes": len(res), "reference_length_um": ref}
    if args.length_um is not None:
        w = gm.beam_waists(args.length_um, args.radius_um, args.wavelength_nm)
        report["waists_um"] = {"rayleigh_range": w.rayleigh_range, "w0_I": w.w0_I, "w_mirror_I": w.w_mirror_I,
                               "representative_I": w.representative_I}
    return run.finish(report)


def cmd_render_mode(args, run: Run) -> int:
    img = gm.hermite_gaussian_image(args.n, args.m, args.waist_i_um, args.pitch_um, args.size)
    io.write_pgm(run.path(".pgm"), img.intensity, img.metadata())
    run.files.append(f"{run.prefix}.json")
    ext = [img.x[0], img.x[-1], img.y[0], img.y[-1]]
    run.figure("image", ".png", img.intensity, ext)
    mid = img.intensity.shape[0] // 2
    run.table("_linecut.csv", ["x_um", "intensity"], zip(img.x, img.intensity[mid]))
    report = img.metadata()
    if args.n == 0 and args.m == 0:
        report["fitted_waist_I_um"] = gm.fit_linecut_waist(img, "x")
    return run.finish(report)


def _quantized(args):
    cav = _cavity_from_args(args)
    qf = purcell.quantize_cavity(cav, args.wavelength_nm, args.waist_i_um)
    vol = purcell.mode_volume(qf, cav.membrane_material.n)
    return cav, qf, vol


def cmd_quantize(args, run: Run) -> int:
    cav, qf, vol = _quantized(args)
    prof = qf.profile
    run.table(".csv", ["z_nm", "n", "abs_E"], zip(prof.z, prof.n, prof.abs_E),
              comments=["abs_E in V/m"])
    run.figure("lines", ".png", prof.z, {"|E_vac|": prof.abs_E / 1e3}, "z (nm)", "|E_vac| (kV/m)")
    return run.finish({"t_d_nm": cav.membrane_thickness, "t_a_nm": cav.air_gap,
                       "resonance_nm": prof.wavelength, "waist_I_um": args.waist_i_um,
                       "max_E_membrane_V_per_m": qf.max_field,
                       "normalization_ratio": qf.normalization() / (qf.photon_energy / 2),
                       "V_eff_lambda_over_n_cubed": vol.cubic_wavelengths, "V_eff_um3": vol.cubic_um})


def cmd_purcell(args, run: Run) -> int:
    cfg = defaults()
    averaging = cfg["purcell_averaging"] if args.averaging is None else args.averaging
    if args.volume_lambda3 is None:
        _, _, vol = _quantized(args)
        volume, source = vol.cubic_wavelengths, "computed"
    else:
        volume, source = args.volume_lambda3, "supplied"
    fp = purcell.purcell_factor(args.q, volume, averaging)
    report = {"Q": args.q, "V_eff_lambda_over_n_cubed": volume, "V_source": source, "averaging": averaging,
              "F_P": fp, "beta": purcell.beta_factor(fp)}
    run.table(".csv", ["quantity", "value"], _summary_rows(report))
    return run.finish(report)


def cmd_budget(args, run: Run) -> int:
    cfg = defaults()
    cav = _cavity_from_args(args)
    chain = purcell.default_chain(cav, args.wavelength_nm, args.waist_i_um, args.q_cavity,
                                  args.stokes_fwhm_pm, args.averaging, args.na)
    rows = chain.budget.rows(cfg["measured_enhancement"])
    run.table(".csv", ["factor", "value", "source"], rows)
    report = {name: value for name, value, _ in rows}
    report["sources"] = {name: src for name, _, src in rows}
    report["max_E_membrane_V_per_m"] = chain.qfield.max_field
    report["V_eff_lambda_over_n_cubed"] = chain.volume.cubic_wavelengths
    report["resonance_nm"] = chain.qfield.profile.wavelength
    return run.finish(report)


def cmd_fit_spectrum(args, run: Run) -> int:
    spec = spectrafit.read_spectrum(args.input)
    x = spec.wavelengths
    if args.model == "lorentzian":
        fit = spectrafit.fit_lorentzian(spec)
        model = spectrafit.lorentzian(x, fit.center, fit.fwhm * 1e-3, fit.amplitude, fit.offset)
    else:
        cfg = defaults()
        ls = cfg["stokes_nm"] if args.stokes_nm is None else args.stokes_nm
        ws = cfg["stokes_fwhm_pm"] if args.stokes_fwhm_pm is None else args.stokes_fwhm_pm
        fit = spectrafit.fit_lorentzian_product(spec, ls, ws)
        model = spectrafit.lorentzian_product(x, fit.cavity_center, fit.cavity_fwhm * 1e-3, ls, ws * 1e-3,
                                              fit.amplitude, fit.offset)
    run.table(".csv", ["wavelength_nm", "counts", "model"], zip(x, spec.counts, model))
    run.figure("lines", ".png", x, {"data": spec.counts, "fit": model}, "wavelength (nm)", "counts")
    report = fit.report()
    report.update({"model": args.model, "label": spec.label, "points": len(spec)})
    return run.finish(report)


def cmd_finesse(args, run: Run) -> int:
    report = {"wavelength_nm": args.wavelength_nm}
    if args.input:
        data = io.read_table(args.input, 2)
        f = spectrafit.finesse_from_length_scan(data[:, 0], data[:, 1], args.wavelength_nm)
        model = spectrafit.fit_lorentzian(spectrafit.MeasuredSpectrum(data[:, 0], data[:, 1]))
        fitted = spectrafit.lorentzian(data[:, 0], model.center, model.fwhm * 1e-3, model.amplitude, model.offset)
        run.table(".csv", ["t_a_nm", "intensity", "model"], zip(data[:, 0], data[:, 1], fitted))
        run.figure("lines", ".png", data[:, 0], {"data": data[:, 1], "fit": fitted}, "t_a (nm)", "intensity")
        report.update({"finesse": f.finesse, "fwhm_t_a_nm": f.fwhm_nm, "center_t_a_nm": f.center_nm})
    cav = _cavity_from_args(args)
    top = cav.top_mirror.with_media(incident=cav.gap_material)
    bottom = cav.bottom_mirror.with_media(incident=cav.membrane_material)
    r1 = 1 - float(tmm.transmittance(top, args.wavelength_nm))
    r2 = 1 - float(tmm.transmittance(bottom, args.wavelength_nm))
    report.update({"R_top": r1, "R_bottom": r2, "design_finesse": spectrafit.design_finesse(r1, r2)})
    if not args.input:
        run.table(".csv", ["quantity", "value"], _summary_rows(report))
    return run.finish(report)


def cmd_enhancement(args, run: Run) -> int:
    on = spectrafit.read_spectrum(args.on)
    off = spectrafit.read_spectrum(args.off)
    ratio = spectrafit.enhancement_ratio(on, off)
    report = {"ratio": ratio, "on_integrated_rate": on.rate_normalized().integrated(),
              "off_integrated_rate": off.rate_normalized().integrated(),
              "on_integration_time_s": on.integration_time, "off_integration_time_s": off.integration_time,
              "measured_target": defaults()["measured_enhancement"]}
    run.table(".csv", ["quantity", "value"], _summary_rows(report))
    return run.finish(report)


def cmd_raman_convert(args, run: Run) -> int:
    ls = raman.stokes_wavelength(args.pump_nm, args.shift_invcm)
    report = {"pump_nm": args.pump_nm, "shift_invcm": args.shift_invcm, "stokes_nm": ls}
    if args.linewidth is not None:
        ref = ls if args.reference_nm is None else args.reference_nm
        report["linewidth"] = {"value": args.linewidth, "from": args.from_unit, "to": args.to_unit,
                               "reference_nm": ref,
                               "result": raman.linewidth_convert(args.linewidth, args.from_unit, args.to_unit, ref)}
    if args.total_ghz is not None:
        report["deconvolved_ghz"] = raman.deconvolve_lorentzian(args.total_ghz, args.laser_ghz)
    if args.lifetime_ghz is not None:
        report["lifetime_ps"] = raman.phonon_lifetime(args.lifetime_ghz)
    rows = list(_summary_rows(report))
    if "linewidth" in report:
        rows.append((f"linewidth_{args.to_unit}", report["linewidth"]["result"]))
    run.table(".csv", ["quantity", "value"], rows)
    return run.finish(report)


def cmd_linearity(args, run: Run) -> int:
    data = io.read_table(args.input, 2)
    lin = spectrafit.power_linearity(data[:, 0], data[:, 1])
    fit = lin.slope * data[:, 0]
    run.table(".csv", ["power_mW", "signal", "linear_model"], zip(data[:, 0], data[:, 1], fit))
    run.figure("lines", ".png", data[:, 0], {"signal": data[:, 1], "linear": fit}, "power (mW)", "signal")
    return run.finish({"exponent": lin.exponent, "exponent_error": lin.exponent_error,
                       "slope_per_mW": lin.slope, "verdict": lin.verdict, "points": len(data)})


# ---------------------------------------------------------------------------
# self tests: the trivially checkable cases of each module


def _close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


def _selftests() -> dict:
    def stack_cases():
        air = material("air")
        spec = _spectrum(LayerStack(air), np.linspace(500, 600, 5))
        bottom, _ = nominal_mirrors()
        r = tmm.spectrum(bottom, np.linspace(500, 700, 11))
        return [("empty air stack has R = 0", bool(np.all(spec.R == 0))),
                ("lossless R + T = 1", bool(np.all(np.abs(r.R + r.T - 1) < 1e-9)))]

    def stopband_cases():
        bottom, _ = nominal_mirrors()
        sb = tmm.stopband(tmm.spectrum(bottom, np.linspace(450, 850, 2001)))
        return [("stopband edges ordered", sb.low_edge < sb.center < sb.high_edge)]

    def refine_cases():
        bottom, _ = nominal_mirrors()
        wl = np.linspace(560, 700, 50)
        res = tmm.refine_stack(bottom, (wl, tmm.transmittance(bottom, wl)), 0.0)
        return [("zero tolerance returns the input stack", res.stack == bottom)]

    def mode_map_cases():
        q, raw = cc.effective_mode_number(200.0)
        return [("slope 200 pm/nm is mode number 10", q == 10 and _close(raw, 10.0))]

    def fit_geometry_cases():
        bottom, top = nominal_mirrors()
        fit = cc.fit_geometry((100.0, 95.0), bottom, top, 600.0, t_d_bounds=(0.0, 0.0), t_a_bounds=(500, 3000))
        gaps = sorted(c.air_gap for c in fit.candidates)
        return [("bare cavity gaps spaced by lambda/2", bool(np.allclose(np.diff(gaps), 300.0)))]

    def gauss_cases():
        planar = gm.effective_length(gm.ModeIndex(7), 600.0, math.inf)
        a = gm.effective_length(gm.ModeIndex(5, 1, 0), 600.0, 10.0)
        b = gm.effective_length(gm.ModeIndex(5, 0, 1), 600.0, 10.0)
        return [("planar comb L = q lambda / 2", _close(planar, 7 * 0.3)),
                ("equal n+m degenerate", a == b)]

    def render_cases():
        img = gm.hermite_gaussian_image(0, 0, 1.0, 0.1, 64)
        return [("unit peak", _close(img.intensity.max(), 1.0))]

    def quantize_cases():
        prof = tmm.standing_wave_profile(1000.0, 1.0, 500.0)
        a = purcell.quantize_field(prof, 1.0)
        b = purcell.quantize_field(prof.scaled(7.0), 1.0)
        c = purcell.quantize_field(prof, 2.0)
        return [("gauge invariance", _close(a.max_field, b.max_field)),
                ("max field scales as 1/w_I", _close(c.max_field, a.max_field / 2))]

    def purcell_cases():
        return [("Q = 0 gives F_P = 1", purcell.purcell_factor(0.0, 10.0) == 1.0),
                ("NA = 0 gives eta_o = 0", purcell.eta_objective(0.0, 2.0) == 0.0),
                ("one-sided cavity eta_c = beta", _close(purcell.eta_cavity(1.0, 0.0, 3.0), 0.75))]

    def budget_cases():
        b = purcell.enhancement_budget(4.0, 1000.0, 1e-12, 0.5, 0.01)
        return [("Q_c -> 0 spectral factor -> 1", _close(b.spectral_factor, 1.0, 1e-12)),
                ("budget identity", _close(b.predicted, b.purcell * b.spectral_factor * b.eta_cavity
                                           / b.eta_objective))]

    def fit_spectrum_cases():
        x = np.linspace(572.2, 573.1, 201)
        flat = spectrafit.MeasuredSpectrum(x, np.ones_like(x))
        try:
            spectrafit.fit_lorentzian(flat)
            flat_ok = False
        except CavityError:
            flat_ok = True
        return [("flat spectrum refuses to fit", flat_ok)]

    def finesse_cases():
        g = np.linspace(-5, 5, 401)
        f1 = spectrafit.finesse_from_length_scan(g, spectrafit.lorentzian(g, 0, 0.8), 600.0).finesse
        f2 = spectrafit.finesse_from_length_scan(g, spectrafit.lorentzian(g, 0, 1.6), 600.0).finesse
        return [("doubling the width halves the finesse", _close(f1, 2 * f2, 1e-6))]

    def enhancement_cases():
        s = spectrafit.synthetic_spectrum(np.linspace(572, 573, 101), 572.5, 70)
        return [("identical spectra give 1", _close(spectrafit.enhancement_ratio(s, s), 1.0))]

    def raman_cases():
        return [("zero shift is identity", _close(raman.stokes_wavelength(600.0, 0.0), 600.0)),
                ("deconvolving zero is identity", raman.deconvolve_lorentzian(50.0, 0.0) == 50.0)]

    def linearity_cases():
        lin = spectrafit.power_linearity([1, 2, 3, 4], [3, 6, 9, 12])
        quad = spectrafit.power_linearity([1, 2, 3, 4], [1, 4, 9, 16])
        return [("linear series exponent 1", _close(lin.exponent, 1.0, 1e-9) and lin.verdict == "linear"),
                ("quadratic series super-linear", quad.verdict == "super-linear")]

    return {
        "stack-spectrum": stack_cases, "stopband": stopband_cases, "refine": refine_cases,
        "mode-map": mode_map_cases, "fit-geometry": fit_geometry_cases, "gauss-modes": gauss_cases,
        "render-mode": render_cases, "quantize": quantize_cases, "purcell": purcell_cases,
        "budget": budget_cases, "fit-spectrum": fit_spectrum_cases, "finesse": finesse_cases,
        "enhancement": enhancement_cases, "raman-convert": raman_cases, "linearity": linearity_cases,
    }


def run_selftest(command: str) -> int:
    ok = True
    for name, passed in _selftests()[command]():
        print(f"{'PASS' if passed else 'FAIL'} {command}: {name}")
        ok &= bool(passed)
    return 0 if ok else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# parser


def build_parser() -> Parser:
    cfg = defaults()
    p = Parser(prog="fpcavity", description="Coupled membrane microcavity modelling and spectrum analysis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    def add(name, func, help_):
        s = sub.add_parser(name, help=help_, description=help_)
        s.set_defaults(func=func)
        s.add_argument("--out-dir", default="fpcavity_out", help="directory for artifacts")
        s.add_argument("--prefix", default=None, help="artifact file prefix (default: command name)")
        s.add_argument("--plot", action="store_true", help="also render PNG figures")
        s.add_argument("--selftest", action="store_true", help="run built-in checks and exit")
        return s

    def stack_args(s):
        g = s.add_mutually_exclusive_group()
        g.add_argument("--stack", help="stack-definition JSON document")
        g.add_argument("--preset", choices=["bottom", "top", "cavity", "empty"], default="bottom")
        s.add_argument("--start-nm", type=float, default=450.0)
        s.add_argument("--stop-nm", type=float, default=850.0)
        s.add_argument("--points", type=int, default=2001)

    def cavity_args(s):
        s.add_argument("--t-d-nm", type=float, default=None, help="membrane thickness")
        s.add_argument("--t-a-nm", type=float, default=None, help="air gap")

    s = add("stack-spectrum", cmd_stack_spectrum, "R and T spectrum of a layer stack")
    stack_args(s)
    s.add_argument("--profile-nm", type=float, default=None, help="also export |E(z)| at this wavelength")
    s.add_argument("--step-nm", type=float, default=1.0)

    s = add("stopband", cmd_stopband, "stopband center and edges")
    stack_args(s)
    s.add_argument("--threshold", type=float, default=cfg["stopband_threshold"])
    s.add_argument("--probe-nm", type=float, nargs="*", default=[cfg["pump_nm"], cfg["stokes_nm"]])

    s = add("refine", cmd_refine, "fit layer thicknesses to a measured spectrum")
    s.add_argument("--stack", required=True)
    s.add_argument("--measured", required=True, help="two columns: wavelength_nm, value")
    s.add_argument("--tolerance", type=float, default=cfg["refine_tolerance"], help="relative thickness bound")
    s.add_argument("--quantity", choices=["T", "R"], default="T")

    s = add("mode-map", cmd_mode_map, "resonances versus air gap")
    cavity_args(s)
    s.add_argument("--t-a-start-nm", type=float, default=2400.0)
    s.add_argument("--t-a-stop-nm", type=float, default=2800.0)
    s.add_argument("--t-a-step-nm", type=float, default=2.0)
    s.add_argument("--window-start-nm", type=float, default=555.0)
    s.add_argument("--window-stop-nm", type=float, default=590.0)
    s.add_argument("--samples", type=int, default=1501)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--slope-at-nm", type=float, default=None)

    s = add("fit-geometry", cmd_fit_geometry, "membrane thickness and air gap from two branch slopes")
    s.add_argument("--slopes-pm-per-nm", type=float, nargs=2, default=cfg["measured_slopes_pm_per_nm"])
    s.add_argument("--wavelength-nm", type=float, default=cfg["stokes_nm"])
    s.add_argument("--t-d-min-nm", type=float, default=300.0)
    s.add_argument("--t-d-max-nm", type=float, default=1500.0)
    s.add_argument("--t-a-min-nm", type=float, default=500.0)
    s.add_argument("--t-a-max-nm", type=float, default=6000.0)
    s.add_argument("--slope-sigma-pm-per-nm", type=float, default=0.5)
    s.add_argument("--start-t-d-nm", type=float, default=None)
    s.add_argument("--start-t-a-nm", type=float, default=None)

    s = add("gauss-modes", cmd_gauss_modes, "Hermite-Gaussian resonant lengths")
    s.add_argument("--wavelength-nm", type=float, default=cfg["stokes_nm"])
    s.add_argument("--radius-um", type=float, default=cfg["radius_of_curvature_um"])
    s.add_argument("--length-start-um", type=float, default=2.0)
    s.add_argument("--length-stop-um", type=float, default=6.0)
    s.add_argument("--max-order", type=int, default=2)
    s.add_argument("--reference-length-um", type=float, default=None)
    s.add_argument("--length-um", type=float, default=cfg["effective_length_um"], help="length for beam waists")

    s = add("render-mode", cmd_render_mode, "transverse mode image as a graymap")
    s.add_argument("--n", type=int, default=0)
    s.add_argument("--m", type=int, default=0)
    s.add_argument("--waist-i-um", type=float, default=cfg["representative_waist_um"])
    s.add_argument("--pitch-um", type=float, default=0.05)
    s.add_argument("--size", type=int, default=128)

    for name, func, help_ in (("quantize", cmd_quantize, "vacuum field amplitude of the cavity mode"),):
        s = add(name, func, help_)
        cavity_args(s)
        s.add_argument("--wavelength-nm", type=float, default=cfg["stokes_nm"])
        s.add_argument("--waist-i-um", type=float, default=cfg["representative_waist_um"])

    s = add("purcell", cmd_purcell, "Purcell factor")
    cavity_args(s)
    s.add_argument("--q", type=float, default=cfg["cavity_q"])
    s.add_argument("--volume-lambda3", type=float, default=None, help="V_eff in (lambda/n)^3; computed if omitted")
    s.add_argument("--averaging", type=float, default=None)
    s.add_argument("--wavelength-nm", type=float, default=cfg["stokes_nm"])
    s.add_argument("--waist-i-um", type=float, default=cfg["representative_waist_um"])

    s = add("budget", cmd_budget, "predicted cavity-to-confocal enhancement")
    cavity_args(s)
    s.add_argument("--wavelength-nm", type=float, default=None)
    s.add_argument("--waist-i-um", type=float, default=None)
    s.add_argument("--q-cavity", type=float, default=None)
    s.add_argument("--stokes-fwhm-pm", type=float, default=None)
    s.add_argument("--averaging", type=float, default=None)
    s.add_argument("--na", type=float, default=None, help="objective numerical aperture")

    s = add("fit-spectrum", cmd_fit_spectrum, "Lorentzian or Lorentzian-product fit")
    s.add_argument("--input", required=True)
    s.add_argument("--model", choices=["lorentzian", "product"], default="lorentzian")
    s.add_argument("--stokes-nm", type=float, default=None)
    s.add_argument("--stokes-fwhm-pm", type=float, default=None)

    s = add("finesse", cmd_finesse, "finesse from a length scan and from the mirror design")
    cavity_args(s)
    s.add_argument("--input", default=None, help="two columns: t_a_nm, intensity")
    s.add_argument("--wavelength-nm", type=float, default=cfg["stokes_nm"])

    s = add("enhancement", cmd_enhancement, "integrated on/off cavity signal ratio")
    s.add_argument("--on", required=True)
    s.add_argument("--off", required=True)

    s = add("raman-convert", cmd_raman_convert, "Stokes wavelength and linewidth conversions")
    s.add_argument("--pump-nm", type=float, default=cfg["pump_nm"])
    s.add_argument("--shift-invcm", type=float, default=cfg["raman_shift_invcm"])
    s.add_argument("--linewidth", type=float, default=None, help="value in --from-unit")
    s.add_argument("--from-unit", choices=raman.UNITS, default="pm")
    s.add_argument("--to-unit", choices=raman.UNITS, default="GHz")
    s.add_argument("--reference-nm", type=float, default=None, help="defaults to the Stokes wavelength")
    s.add_argument("--total-ghz", type=float, default=None, help="measured width to deconvolve")
    s.add_argument("--laser-ghz", type=float, default=0.0)
    s.add_argument("--lifetime-ghz", type=float, default=None, help="phonon linewidth for the lifetime")

    s = add("linearity", cmd_linearity, "power-law exponent of signal versus pump power")
    s.add_argument("--input", required=True, help="two columns: power_mW, signal")
    return p


def _has_selftest(argv):
    return "--selftest" in argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if _has_selftest(argv) and argv and argv[0] in _selftests():
            return run_selftest(argv[0])
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _emit_error(EXIT_USAGE, "usage", str(exc))
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args, Run(args))
    except InputFormatError as exc:
        return _emit_error(EXIT_FORMAT, type(exc).__name__, str(exc))
    except InvalidArgument as exc:
        return _emit_error(EXIT_USAGE, type(exc).__name__, str(exc))
    except CavityError as exc:
        return _emit_error(EXIT_NUMERIC, type(exc).__name__, str(exc))
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        return _emit_error(EXIT_FORMAT, type(exc).__name__, str(exc))
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _emit_error(EXIT_NUMERIC, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
