import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fpcavity import gaussmodes as gm
from fpcavity.errors import FitError, InvalidArgument, UnstableGeometry


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.integers(0, 3), st.integers(0, 3), st.floats(500, 700), st.floats(20, 200))
def test_fixed_point_residual(q, n, m, lam, radius):
    mode = gm.ModeIndex(q, n, m)
    length = gm.effective_length(mode, lam, radius)
    assert abs(gm.dispersion_residual(length, mode, lam, radius)) < 1e-9


@pytest.mark.parametrize("q", [1, 5, 23])
def test_planar_comb(q):
    assert gm.effective_length(gm.ModeIndex(q), 572.67, math.inf) == q * 0.57267 / 2


def test_transverse_degeneracy():
    a = gm.effective_length(gm.ModeIndex(14, 2, 0), 572.67, 10.0)
    b = gm.effective_length(gm.ModeIndex(14, 1, 1), 572.67, 10.0)
    c = gm.effective_length(gm.ModeIndex(14, 0, 2), 572.67, 10.0)
    assert a == b == c


def test_higher_order_is_longer():
    assert gm.transverse_splitting(14, 572.67, 10.0) > 0


def test_unstable_geometry():
    with pytest.raises(UnstableGeometry):
        gm.effective_length(gm.ModeIndex(80), 572.67, 10.0)


def test_mode_index_validation():
    with pytest.raises(InvalidArgument):
        gm.ModeIndex(0)


def test_dispersion_map_sorted_and_in_range():
    res = gm.mode_dispersion_map(572.67, 10.0, (2.0, 6.0))
    lengths = [r.length_um for r in res]
    assert lengths == sorted(lengths)
    assert all(2.0 <= x <= 6.0 for x in lengths)
    assert {r.mode.q for r in res if r.mode.transverse_order == 0} == set(range(7, 21))


def test_fit_radius_roundtrip():
    res = gm.mode_dispersion_map(572.67, 37.0, (3.0, 6.0))
    assert gm.fit_radius(res, 572.67) == pytest.approx(37.0, rel=1e-6)


def test_beam_waists_values():
    w = gm.beam_waists(4.07, 10.0, 572.67)
    assert w.w_mirror_I == pytest.approx(0.869, abs=0.001)
    assert w.representative_I == pytest.approx(0.769, abs=0.001)
    assert w.w0_field == pytest.approx(math.sqrt(2) * w.w0_I)


def test_beam_waists_unstable():
    with pytest.raises(UnstableGeometry):
        gm.beam_waists(12.0, 10.0, 572.67)


def test_hermite_polynomials():
    x = np.linspace(-2, 2, 7)
    assert np.allclose(gm.hermite(2, x), 4 * x**2 - 2)
    assert np.allclose(gm.hermite(3, x), 8 * x**3 - 12 * x)


def test_image_and_linecut_fit():
    img = gm.hermite_gaussian_image(0, 0, 0.77, 0.02, 201)
    assert img.intensity.max() == pytest.approx(1.0)
    assert gm.fit_linecut_waist(img, "x") == pytest.approx(0.77, rel=1e-6)
    assert gm.fit_linecut_waist(img, "y") == pytest.approx(0.77, rel=1e-6)


def test_higher_order_image_has_node():
    img = gm.hermite_gaussian_image(1, 0, 0.77, 0.02, 201)
    assert img.intensity[100, 100] == pytest.approx(0.0, abs=1e-12)


def test_image_validation():
    with pytest.raises(InvalidArgument):
        gm.hermite_gaussian_image(0, 0, 0.77, 0.02, 8)
    with pytest.raises(InvalidArgument):
        gm.fit_linecut_waist(gm.hermite_gaussian_image(0, 0, 0.77, 0.02, 32), "z")


def test_linecut_fit_on_empty_image():
    img = gm.ModeImage(np.zeros((32, 32)), 0.1, 1.0)
    with pytest.raises(FitError):
        gm.fit_linecut_waist(img)
