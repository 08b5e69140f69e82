import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwb_chainlab.errors import ConfigError, DomainError, SingularityError
from uwb_chainlab.rfcore import (
    ComplexImmittance,
    FrequencyGrid,
    Spectrum,
    TimeSeries,
    db_from_ratio,
    gamma_db,
    grid_values,
    ratio_from_db,
    reflection_coefficient,
)


def test_db_examples():
    assert db_from_ratio(1.0) == 0.0
    assert db_from_ratio(0.5) == pytest.approx(-3.0103, abs=1e-4)
    assert db_from_ratio(0.4535, "amplitude") == pytest.approx(-6.87, abs=5e-3)
    assert db_from_ratio(10.0, "amplitude") == pytest.approx(20.0)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_db_rejects_nonpositive(bad):
    with pytest.raises(DomainError):
        db_from_ratio(bad)


@given(st.floats(min_value=1e-30, max_value=1e30))
def test_db_round_trip(x):
    for kind in ("power", "amplitude"):
        assert ratio_from_db(db_from_ratio(x, kind), kind) == pytest.approx(x, rel=1e-12)


def test_reflection_examples():
    assert reflection_coefficient(50.0, 50.0) == 0
    assert gamma_db(reflection_coefficient(50.0, 50.0)) == -120.0
    assert reflection_coefficient(ComplexImmittance.impedance(0), 50.0) == -1
    g = reflection_coefficient(100.0, 50.0)
    assert g == pytest.approx(1 / 3)
    assert gamma_db(g) == pytest.approx(-9.542, abs=1e-3)


def test_reflection_errors():
    with pytest.raises(SingularityError):
        reflection_coefficient(-50.0, 50.0)
    with pytest.raises(DomainError):
        reflection_coefficient(ComplexImmittance.admittance(0.02), 50.0)


def test_gamma_passivity_random():
    rng = np.random.default_rng(1)
    z = rng.uniform(0, 1e4, 10_000) + 1j * rng.uniform(-1e4, 1e4, 10_000)
    assert np.all(np.abs(reflection_coefficient(z, 50.0)) <= 1 + 1e-12)


@given(st.complex_numbers(min_magnitude=1e-6, max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_immittance_involution(v):
    z = ComplexImmittance.impedance(v)
    back = z.to_admittance().to_impedance()
    assert back.kind == "impedance"
    assert abs(back.value - v) <= 1e-12 * abs(v)


def test_immittance_zero_inversion():
    with pytest.raises(SingularityError):
        ComplexImmittance.impedance(0).inverted()


def test_grid_examples():
    np.testing.assert_allclose(grid_values(FrequencyGrid(2e9, 6e9, 5)), [2e9, 3e9, 4e9, 5e9, 6e9])
    np.testing.assert_allclose(grid_values(FrequencyGrid(1, 100, 3, "logarithmic")), [1, 10, 100])
    f = grid_values(FrequencyGrid(2.1e9, 6.7e9, 4601))
    np.testing.assert_allclose(np.diff(f), 1e6, rtol=1e-6)
    assert f[0] == 2.1e9 and f[-1] == 6.7e9


@pytest.mark.parametrize("args,key", [
    ((0, 1e9, 3), "start"),
    ((2e9, 1e9, 3), "stop"),
    ((1e9, 2e9, 1), "points"),
    ((1e9, 2e9, 3, "cubic"), "spacing"),
])
def test_grid_invariants(args, key):
    with pytest.raises(ConfigError) as exc:
        FrequencyGrid(*args)
    assert exc.value.key == key


def test_timeseries():
    x = TimeSeries(10.0, [0.0, 1.0, 2.0, 3.0])
    assert x.duration == 0.4
    np.testing.assert_allclose(x.times, [0, 0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        x.samples[0] = 5
    with pytest.raises(ConfigError):
        TimeSeries(10.0, [1.0])
    with pytest.raises(ConfigError):
        TimeSeries(0.0, [1.0, 2.0])


def test_spectrum_peak_relative_invariant():
    Spectrum([1.0, 2.0], [0.0, -3.0])
    with pytest.raises(ConfigError):
        Spectrum([1.0, 2.0], [-1.0, -3.0])
    with pytest.raises(ConfigError):
        Spectrum([2.0, 1.0], [0.0, -3.0])
    s = Spectrum([1.0, 2.0], [-10.0, -3.0], "absolute")
    assert s.shifted(3.0).power[1] == 0.0
    assert math.isclose(s.bin_width, 1.0)
