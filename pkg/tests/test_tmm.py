import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fpcavity import tmm
from fpcavity.errors import InvalidArgument, NotFound
from fpcavity.stack import Layer, LayerStack, Material, build_quarter_wave_dbr, material

indices = st.floats(1.0, 4.0)
thick = st.floats(1.0, 500.0)


@st.composite
def stacks(draw):
    n = draw(st.integers(0, 12))
    layers = tuple(Layer(Material(f"m{i}", draw(indices)), draw(thick)) for i in range(n))
    return LayerStack(Material("in", draw(indices)), layers, Material("out", draw(indices)))


@settings(max_examples=200, deadline=None)
@given(stacks(), st.floats(300.0, 1500.0))
def test_energy_conservation(stack, wl):
    s = tmm.spectrum(stack, np.array([wl]))
    assert abs(s.R[0] + s.T[0] - 1) < 1e-9


@settings(max_examples=100, deadline=None)
@given(stacks(), st.floats(300.0, 1500.0))
def test_reciprocity_of_transmittance(stack, wl):
    assert tmm.transmittance(stack, wl) == pytest.approx(tmm.transmittance(stack.reversed(), wl), abs=1e-10)


def test_fresnel_air_diamond():
    s = LayerStack(material("air"), (), material("diamond"))
    r = tmm.spectrum(s, np.array([600.0])).R[0]
    assert r == pytest.approx(((2.41 - 1) / 3.41) ** 2, abs=1e-12)


def test_half_wave_layer_is_absent():
    n = 2.0
    s = LayerStack(material("air"), (Layer(Material("x", n), 600 / (2 * n)),), material("SiO2"))
    bare = LayerStack(material("air"), (), material("SiO2"))
    assert tmm.spectrum(s, [600.0]).R[0] == pytest.approx(tmm.spectrum(bare, [600.0]).R[0], abs=1e-12)


@pytest.mark.parametrize("pairs", [1, 5, 14, 20])
def test_quarter_wave_closed_form(pairs):
    hi, lo, sub, air = material("Ta2O5"), material("SiO2"), material("SiO2"), material("air")
    m = build_quarter_wave_dbr(600, pairs, hi, lo, sub, air)
    r = tmm.spectrum(m, [600.0]).R[0]
    assert r == pytest.approx(tmm.quarter_wave_peak_reflectance(1.0, 1.46, 2.11, 1.46, pairs), abs=1e-9)


def test_empty_grid_rejected(mirrors):
    with pytest.raises(InvalidArgument):
        tmm.spectrum(mirrors[0], [])


def test_stopband(mirrors):
    bottom, top = mirrors
    for m, c in ((bottom, 625), (top, 629)):
        sb = tmm.stopband(tmm.spectrum(m, np.linspace(450, 850, 4001)))
        assert abs(sb.center - c) < 10
        assert sb.contains(573) and not sb.contains(532)
        assert sb.width > 0


def test_stopband_absent():
    s = LayerStack(material("air"), (Layer(material("SiO2"), 100.0),), material("air"))
    with pytest.raises(NotFound):
        tmm.stopband(tmm.spectrum(s, np.linspace(400, 800, 100)))


def test_golden_section():
    x = tmm.golden_section_max(lambda t: -(t - 1.234) ** 2, 0, 3, tol=1e-9)
    assert x == pytest.approx(1.234, abs=1e-8)


def test_resonance_found(cavity):
    lam, t = tmm.nearest_resonance(cavity.flatten(), 572.67, 2.0)
    assert abs(lam - 572.67) < 1.0 and t > 0.5


def test_field_profile_continuity(cavity):
    prof = tmm.field_profile(cavity.flatten(), 572.1, step=0.5)
    # at every interior boundary the exit field of one layer equals the start of the next
    z = prof.boundaries[1:-1]
    for k, zb in enumerate(z):
        left = prof.exit_fields[k][0]
        right = prof.field_at(zb + 1e-9)
        assert abs(left - right) < 1e-6 * max(1.0, abs(left))


def test_exact_integrals_match_quadrature(cavity):
    prof = tmm.field_profile(cavity.flatten(), 572.1, step=0.05)
    i = cavity.bottom_count
    a, b = prof.boundaries[i], prof.boundaries[i + 1]
    mask = (prof.z >= a) & (prof.z <= b)
    z, e = prof.z[mask], np.abs(prof.E[mask]) ** 2
    assert prof.layer_intensity_integral(i) == pytest.approx(np.trapezoid(e, z), rel=1e-3)
    assert prof.layer_max_abs(i) == pytest.approx(np.sqrt(e.max()), rel=1e-5)
    assert prof.layer_max_abs(i) >= np.sqrt(e.max()) - 1e-12


def test_standing_wave_profile():
    prof = tmm.standing_wave_profile(1000.0, 1.5, 600.0)
    assert prof.energy_integral() == pytest.approx(1.5**2 * 1000.0 / 2 - 1.5**2 * math.sin(
        2 * 2 * math.pi * 1.5 * 1000 / 600) / (4 * 2 * math.pi * 1.5 / 600), rel=1e-12)


def test_refinement_recovers_perturbation(mirrors):
    bottom = mirrors[0]
    true = bottom.scaled(np.full(len(bottom), 1.02))
    wl = np.linspace(520, 760, 241)
    res = tmm.refine_stack(bottom, (wl, tmm.transmittance(true, wl)), 0.03)
    assert res.residual < 1e-6
    assert np.all(np.abs(res.multipliers - 1.02) < 0.005)


def test_refinement_zero_tolerance(mirrors):
    wl = np.linspace(520, 760, 21)
    res = tmm.refine_stack(mirrors[0], (wl, tmm.transmittance(mirrors[0], wl)), 0.0)
    assert res.stack == mirrors[0]


def test_refinement_bad_quantity(mirrors):
    with pytest.raises(InvalidArgument):
        tmm.refine_stack(mirrors[0], ([600.0], [0.1]), 0.03, quantity="A")
