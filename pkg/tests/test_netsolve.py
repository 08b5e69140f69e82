import math

import numpy as np
import pytest

from uwb_chainlab import netsolve as ns
from uwb_chainlab.errors import ConfigError, DomainError, RangeError, SingularityError
from uwb_chainlab.rfcore import FrequencyGrid, gamma_db, reflection_coefficient

SPEC = ns.MatchingNetworkSpec()
T = ns.derived_transistor(SPEC)
LOAD = ns.LnaLoadSpec()
BAND = FrequencyGrid(2e9, 6e9, 4001)


def test_derived_transistor():
    assert T.gm == pytest.approx(0.079, rel=1e-12)
    assert T.Cin == pytest.approx(1.58e-12)


def test_zin_real_part_is_rs_and_flat():
    f = np.linspace(1e9, 10e9, 1001)
    z = ns.zin_degenerated(T, 1e-9, 0.2e-9, f)
    np.testing.assert_allclose(z.real, 50.0, rtol=1e-12)
    assert np.ptp(z.real) <= 1e-12 * 50.0


def test_zin_series_resonance():
    f0 = ns.series_resonance(T, 1e-9, 0.2e-9)
    assert f0 == pytest.approx(3.655e9, rel=1e-3)
    assert abs(ns.zin_degenerated(T, 1e-9, 0.2e-9, f0).imag) < 1e-9


def test_zin_without_gm_is_reactive():
    t = ns.TransistorSmallSignal(0.0, 0.2e-12, 1.38e-12)
    assert ns.zin_degenerated(t, 1e-9, 0.2e-9, 3e9).real == 0.0


def test_zin_singular():
    with pytest.raises(SingularityError):
        ns.zin_degenerated(ns.TransistorSmallSignal(0.05, 0.0, 0.0), 1e-9, 0.2e-9, 1e9)


def test_transistor_rejects_negative():
    with pytest.raises(ConfigError) as exc:
        ns.TransistorSmallSignal(-1.0, 1e-12, 1e-12)
    assert exc.value.key == "gm"


def test_abcd_single_elements():
    z = ns.R(25.0)
    m = ns.ladder_abcd(ns.LadderNetwork((ns.LadderElement("series", z),)), 1e9)
    np.testing.assert_allclose(m, [[1, 25], [0, 1]])
    m = ns.ladder_abcd(ns.LadderNetwork((ns.LadderElement("shunt", z),)), 1e9)
    np.testing.assert_allclose(m, [[1, 0], [1 / 25, 1]])
    m = ns.ladder_abcd(ns.LadderNetwork((ns.LadderElement("series", ns.L(1e-9)),)), 1e9)
    assert m[0, 1] == pytest.approx(6.2832j, abs=1e-4)


def test_empty_ladder_rejected():
    with pytest.raises(ConfigError):
        ns.LadderNetwork(())


def test_lc_ladder_reciprocal():
    rng = np.random.default_rng(7)
    f = np.geomspace(1e8, 2e10, 200)
    for _ in range(50):
        parts = []
        for _ in range(rng.integers(1, 6)):
            branch = rng.choice(["L", "C", "LC", "L|C"])
            lv, cv = rng.uniform(0.1e-9, 10e-9), rng.uniform(0.05e-12, 5e-12)
            b = {"L": ns.L(lv), "C": ns.C(cv), "LC": ns.SeriesCombo(ns.L(lv), ns.C(cv)),
                 "L|C": ns.ParallelCombo(ns.L(lv), ns.C(cv))}[branch]
            parts.append(ns.LadderElement(rng.choice(["series", "shunt"]), b))
        net = ns.LadderNetwork(tuple(parts))
        assert net.is_lossless
        det = np.linalg.det(ns.ladder_abcd(net, f))
        np.testing.assert_allclose(det, 1.0, atol=1e-9)


def test_closed_form_matches_ladder_oracle():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        t = ns.TransistorSmallSignal(rng.uniform(1e-3, 0.2), rng.uniform(0.05e-12, 2e-12),
                                     rng.uniform(0, 2e-12))
        ls, lg, f = rng.uniform(0.1e-9, 3e-9), rng.uniform(0, 3e-9), rng.uniform(0.5e9, 10e9)
        closed = ns.zin_degenerated(t, ls, lg, f)
        ladder = ns.terminated_impedance(ns.ladder_abcd(ns.degenerated_ladder(t, ls, lg), f), 0.0)
        assert abs(ladder - closed) <= 1e-9 * abs(closed)


def test_chebyshev_ripple():
    assert ns.chebyshev_ripple_to_gamma(1.0) == 0.0
    assert ns.chebyshev_ripple_to_gamma(2.0) == pytest.approx(0.7071, abs=1e-4)
    g = ns.chebyshev_ripple_to_gamma(1.2589)
    assert g == pytest.approx(0.4535, abs=1e-4)
    assert gamma_db(g) == pytest.approx(-6.87, abs=5e-3)
    with pytest.raises(DomainError):
        ns.chebyshev_ripple_to_gamma(0.99)
    for rho in np.linspace(1.0, 50.0, 97):
        assert ns.gamma_to_chebyshev_ripple(ns.chebyshev_ripple_to_gamma(rho)) == pytest.approx(rho, rel=1e-12)


def test_match_has_local_minimum_with_positive_curvature():
    s11 = ns.input_match_sweep(SPEC, T, BAND)
    i = int(np.argmin(s11))
    assert 0 < i < s11.size - 1
    assert s11[i - 1] - 2 * s11[i] + s11[i + 1] > 0


def test_match_minimum_reaches_minus_20_db():
    s11 = ns.input_match_sweep(SPEC, T, BAND)
    assert s11.min() <= -20.0


def test_match_below_minus_10_db_from_2p5_to_6_ghz():
    s11 = ns.input_match_sweep(SPEC, T, FrequencyGrid(2.5e9, 6e9, 3501))
    assert s11.max() < -10.0


def test_filter_transfer_power_balance():
    # lossless ladder into a resistive-real device: transmitted + reflected = 1
    f = BAND.values()
    w = ns.filter_transfer(SPEC, T, f)
    gamma = reflection_coefficient(ns.input_impedance(SPEC, T, f), SPEC.Rs)
    np.testing.assert_allclose(np.abs(w) ** 2, 1 - np.abs(gamma) ** 2, atol=1e-12)


def test_gain_zero_without_gm():
    t = ns.TransistorSmallSignal(0.0, T.Cgs, T.Cp)
    assert np.all(ns.lna_gain(SPEC, t, LOAD, BAND.values()) == 0)


def test_load_spur_out_of_band():
    assert LOAD.spur_resonance == pytest.approx(6.945e9, rel=1e-3)
    assert LOAD.spur_resonance > 6e9


def test_gain_window():
    g = 20 * np.log10(np.abs(ns.lna_gain(SPEC, T, LOAD, BAND.values())))
    assert g.min() >= 6.0 and g.max() <= 12.0


def test_nf_profile():
    assert ns.nf_spot(2.1e9) == pytest.approx(2.5)
    assert ns.nf_spot(6.7e9) == pytest.approx(5.0)
    mid = ns.nf_spot(math.sqrt(2.1e9 * 6.7e9))
    assert mid == pytest.approx(3.75)
    with pytest.raises(RangeError):
        ns.nf_spot(2.0e9)


def test_sweep_nf_nan_outside_domain():
    sw = ns.lna_sweep(SPEC, T, LOAD, BAND)
    assert np.isnan(sw.nf_db[sw.f < 2.1e9]).all()
    assert not np.isnan(sw.nf_db[sw.f >= 2.1e9]).any()
    np.testing.assert_allclose(sw.s11_db, ns.input_match_sweep(SPEC, T, BAND))
