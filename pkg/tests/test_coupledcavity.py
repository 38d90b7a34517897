import numpy as np
import pytest

from fpcavity import coupledcavity as cc
from fpcavity import tmm
from fpcavity.errors import InvalidArgument, NotFound

LAM = 572.67


@pytest.fixture(scope="module")
def tuned(cavity):
    g = cc.resonant_gaps(cavity, LAM, (2400, 2800))[0]
    return cavity.with_geometry(air_gap=g)


def test_phase_condition_gaps_are_transmission_peaks(cavity):
    for g in cc.resonant_gaps(cavity, LAM, (2000, 3200)):
        lam, _ = tmm.nearest_resonance(cavity.with_geometry(air_gap=g).flatten(), LAM, 0.5)
        assert lam == pytest.approx(LAM, abs=1e-3)


def test_gaps_spaced_by_half_wavelength(cavity):
    gaps = cc.resonant_gaps(cavity, LAM, (1000, 4000))
    assert np.allclose(np.diff(gaps), LAM / 2)


def test_phase_and_peak_slopes_agree(tuned):
    assert cc.phase_slope(tuned, LAM) == pytest.approx(cc.slope_at(tuned, LAM), abs=0.05)


def test_slope_positive_and_bounded(tuned):
    s1, s2 = cc.forward_slopes(tuned, LAM)
    assert 0 < s2 < s1 < 2000


def test_lossless_slope_pair_relation(tuned):
    # adjacent branches differ by exactly one in 2/m
    s1, s2 = cc.forward_slopes(tuned, LAM)
    assert 2e3 / s2 - 2e3 / s1 == pytest.approx(1.0, abs=2e-3)


def test_effective_mode_number():
    assert cc.effective_mode_number(87) == (23, pytest.approx(22.99, abs=0.01))
    assert cc.effective_mode_number(83)[0] == 24
    with pytest.raises(InvalidArgument):
        cc.effective_mode_number(0)
    with pytest.raises(InvalidArgument):
        cc.effective_mode_number(2500)


def test_mode_map_branches(cavity):
    mm = cc.mode_map(cavity, np.arange(2560, 2640, 2.0), (560, 585), samples=1201)
    assert mm.points and mm.branch_ids
    t, lam = mm.branch(mm.branch_ids[0])
    assert np.all(np.diff(lam) > 0)  # wavelength rises with gap on every branch
    crossing = [b for b in mm.branch_ids if _crosses(mm, b)]
    s = cc.dispersion_slope(mm, crossing[0], LAM)
    assert s == pytest.approx(cc.phase_slope(cavity.with_geometry(air_gap=mm.crossing(crossing[0], LAM)), LAM),
                              abs=0.5)
    with pytest.raises(NotFound):
        mm.branch(999)


def _crosses(mm, b):
    try:
        mm.crossing(b, LAM)
        return True
    except NotFound:
        return False


def test_mode_map_parallel_identical(cavity):
    gaps = np.arange(2580, 2600, 2.0)
    a = cc.mode_map(cavity, gaps, (565, 580), samples=601)
    b = cc.mode_map(cavity, gaps, (565, 580), samples=601, workers=2)
    assert a.points == b.points


def test_mode_map_validation(cavity):
    with pytest.raises(InvalidArgument):
        cc.mode_map(cavity, [3.0, 2.0], (560, 580))
    with pytest.raises(InvalidArgument):
        cc.mode_map(cavity, [2.0, 3.0], (580, 560))


def test_fit_geometry_reproduces_slopes(mirrors, tuned):
    s = cc.forward_slopes(tuned, LAM)
    fit = cc.fit_geometry(s, *mirrors, LAM, start=(tuned.membrane_thickness, tuned.air_gap))
    assert fit.membrane_thickness == pytest.approx(tuned.membrane_thickness, abs=0.5)
    assert fit.air_gap == pytest.approx(tuned.air_gap, abs=1.0)
    assert fit.residual < 1e-3
    assert fit.equivalent > 1  # the slope pair does not pin down the geometry alone


def test_fit_geometry_candidates_all_fit(mirrors):
    fit = cc.fit_geometry((87, 83), *mirrors, LAM)
    best = fit.candidates[0]
    assert fit.candidates[fit.equivalent - 1].chi2 <= best.chi2 + 1.0
    assert fit.mode_numbers == (23, 24)
    assert not fit.on_boundary
    assert fit.report()["bounds"] == {"t_d_nm": [300.0, 1500.0], "t_a_nm": [500.0, 6000.0]}


def test_fit_geometry_bare_cavity(mirrors):
    fit = cc.fit_geometry((100, 95), *mirrors, LAM, t_d_bounds=(0.0, 0.0), t_a_bounds=(500, 4000))
    assert fit.membrane_thickness == 0.0
    gaps = sorted(c.air_gap for c in fit.candidates)
    assert np.allclose(np.diff(gaps), LAM / 2)


def test_fit_geometry_validation(mirrors):
    with pytest.raises(InvalidArgument):
        cc.fit_geometry((87,), *mirrors, LAM)
    with pytest.raises(InvalidArgument):
        cc.fit_geometry((87, 83), *mirrors, LAM, t_d_bounds=(800, 700))


def test_classification_flips(cavity):
    labels = set()
    for td in (700.0, 750.0, 810.0):
        c = cavity.with_geometry(membrane_thickness=td)
        g = min(cc.resonant_gaps(c, LAM, (2300, 2900)), key=lambda x: abs(x - 2600))
        conf = cc.classify_configuration(c.with_geometry(air_gap=g), LAM)
        labels.add(conf.label)
        assert 0 <= conf.interface_ratio <= 1 + 1e-9
        assert 0 < conf.membrane_energy_fraction + conf.gap_energy_fraction < 1
    assert labels == {"diamond-like", "air-like"}


def test_classification_energy_share_peaks_when_diamond_like(cavity):
    def conf(td):
        c = cavity.with_geometry(membrane_thickness=td)
        g = min(cc.resonant_gaps(c, LAM, (2300, 2900)), key=lambda x: abs(x - 2600))
        return cc.classify_configuration(c.with_geometry(air_gap=g), LAM)

    dl, al = conf(750.0), conf(810.0)
    assert dl.label == "diamond-like" and al.label == "air-like"
    assert dl.membrane_energy_fraction > al.membrane_energy_fraction


def test_classification_without_membrane(cavity):
    assert cc.classify_configuration(cavity.with_geometry(membrane_thickness=0.0), LAM).label == "air-like"
