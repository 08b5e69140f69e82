"""Behavioural transmitter blocks: pulse shaper and double-balanced mixer."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import brentq
from scipy.signal import lfilter

from .errors import ConfigError
from .rfcore import TimeSeries

TWO_PI = 2.0 * math.pi

#: Cubic IF coefficient giving 23 dB in-band SFDR for a unit-amplitude 300 MHz
#: IF on a 6 GHz LO. Regenerate with scripts/calibrate_mixer_a3.py.
CALIBRATED_A3 = 0.3595384281036862


@dataclass(frozen=True)
class PulseShaperConfig:
    pulse_width: float = 5e-9
    stage_corner: float = 400e6
    stages: int = 3
    amplitude: float = 0.2

    def __post_init__(self):
        if not (math.isfinite(self.pulse_width) and self.pulse_width > 0):
            raise ConfigError(f"must be > 0, got {self.pulse_width!r}", key="pulse_width")
        if not self.stage_corner > 0:
            raise ConfigError(f"must be > 0, got {self.stage_corner!r}", key="stage_corner")
        if int(self.stages) != self.stages or self.stages < 1:
            raise ConfigError(f"must be an integer >= 1, got {self.stages!r}", key="stages")
        if not math.isfinite(self.amplitude):
            raise ConfigError(f"must be finite, got {self.amplitude!r}", key="amplitude")


@dataclass(frozen=True)
class GilbertMixerConfig:
    conversion_gain_db: float = 1.2
    lo_model: Literal["ideal_sine", "hard_switching"] = "hard_switching"
    a3: float = CALIBRATED_A3
    nf_db: float = 11.2

    def __post_init__(self):
        for name in ("conversion_gain_db", "a3", "nf_db"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError("must be finite", key=name)
        if self.a3 < 0:
            raise ConfigError(f"must be >= 0, got {self.a3!r}", key="a3")
        if self.lo_model not in ("ideal_sine", "hard_switching"):
            raise ConfigError(f"unknown LO model {self.lo_model!r}", key="lo_model")


def rect_pulse(width: float, amplitude: float, sample_rate: float, length: int | None = None,
               delay: float | None = None) -> TimeSeries:
    """Rectangular pulse, zero padded.

    The pulse starts after ``delay`` (default one width) and the record is at
    least eight widths long, rounded up to a power of two unless ``length``
    is given.
    """
    n_on = int(round(width * sample_rate))
    if n_on < 16:
        raise ConfigError(f"pulse width covers only {n_on} samples; need >= 16")
    n_delay = n_on if delay is None else int(round(delay * sample_rate))
    n_min = max(8 * n_on, n_delay + n_on + 1)
    if length is None:
        length = 1 << (n_min - 1).bit_length()
    elif length < n_min:
        raise ConfigError(f"record of {length} samples is shorter than the {n_min} needed")
    x = np.zeros(int(length))
    x[n_delay:n_delay + n_on] = amplitude
    return TimeSeries(sample_rate, x)


def single_pole_coefficients(corner: float, sample_rate: float):
    """Bilinear-transform one-pole low-pass, pre-warped at the corner."""
    k = math.tan(math.pi * corner / sample_rate)
    b0 = k / (1.0 + k)
    a1 = (k - 1.0) / (1.0 + k)
    return np.array([b0, b0]), np.array([1.0, a1])


def shape_pulse(cfg: PulseShaperConfig, x: TimeSeries) -> TimeSeries:
    """Cascade of ``stages`` identical real-pole low-pass sections."""
    if math.isinf(cfg.stage_corner):
        return x
    if x.sample_rate < 20.0 * cfg.stage_corner:
        raise ConfigError(f"sample rate {x.sample_rate:g} Hz is below 20x the stage corner "
                          f"({cfg.stage_corner:g} Hz)", key="stage_corner")
    b, a = single_pole_coefficients(cfg.stage_corner, x.sample_rate)
    y = np.asarray(x.samples)
    for _ in range(int(cfg.stages)):
        y = lfilter(b, a, y)
    return TimeSeries(x.sample_rate, y)


def rise_time(x: TimeSeries, lo: float = 0.1, hi: float = 0.9) -> float:
    """First lo-to-hi crossing time of a rising edge, linearly interpolated."""
    y = x.samples
    top = y.max()

    def crossing(level):
        i = int(np.argmax(y >= level * top))
        y0, y1 = y[i - 1], y[i]
        return (i - 1 + (level * top - y0) / (y1 - y0)) / x.sample_rate

    return crossing(hi) - crossing(lo)


def occupied_bandwidth(x: TimeSeries, fraction: float = 0.99) -> float:
    """Frequency below which ``fraction`` of the one-sided energy lies."""
    spec = np.abs(np.fft.rfft(x.samples)) ** 2
    total = spec.sum()
    if total == 0:
        return 0.0
    cum = np.cumsum(spec) / total
    f = np.fft.rfftfreq(x.samples.size, 1.0 / x.sample_rate)
    return float(f[min(np.searchsorted(cum, fraction), f.size - 1)])


def lo_waveform(lo_model: str, lo_freq: float, sample_rate: float, n: int) -> np.ndarray:
    """LO drive with unit-amplitude fundamental.

    Hard switching is the odd-harmonic series of a +/-1 square wave scaled by
    pi/4, truncated at Nyquist so no harmonic aliases back.
    """
    t = np.arange(n) / sample_rate
    if lo_model == "ideal_sine":
        return np.sin(TWO_PI * lo_freq * t)
    out = np.zeros(n)
    m = 1
    while m * lo_freq < sample_rate / 2.0:
        out += np.sin(TWO_PI * m * lo_freq * t) / m
        m += 2
    return out


def upconvert(cfg: GilbertMixerConfig, if_signal: TimeSeries, lo_freq: float,
              if_max_freq: float | None = None, lo: np.ndarray | None = None) -> TimeSeries:
    """Double-balanced up-conversion of ``if_signal`` onto ``lo_freq``.

    The IF path passes through y = x + a3 x^3, then multiplies the LO. Output
    is scaled so each linear LO +/- IF sideband has amplitude
    IF amplitude * 10^(conversion_gain_db/20). ``lo`` overrides the internal
    LO with an external waveform whose fundamental has unit amplitude.
    """
    fs = if_signal.sample_rate
    if if_max_freq is None:
        if_max_freq = occupied_bandwidth(if_signal)
    if not fs > 2.0 * (3.0 * lo_freq + 3.0 * if_max_freq):
        raise ConfigError(f"sample rate {fs:g} Hz cannot carry 3*LO + 3*IF "
                          f"({3 * lo_freq + 3 * if_max_freq:g} Hz)")
    x = np.asarray(if_signal.samples)
    x = x + cfg.a3 * x ** 3
    if lo is None:
        lo = lo_waveform(cfg.lo_model, lo_freq, fs, x.size)
    elif len(lo) != x.size:
        raise ConfigError("external LO length does not match the IF record")
    # product-to-sum puts half the unit LO fundamental in each sideband
    scale = 2.0 * 10.0 ** (cfg.conversion_gain_db / 20.0)
    return TimeSeries(fs, scale * x * lo)


def if_harmonic_amplitudes(a3: float, if_amplitude: float) -> dict:
    """Tone amplitudes at IF and 3*IF after the cubic: A + 3a3A^3/4 and a3A^3/4."""
    A = if_amplitude
    out = {1: A + 0.75 * a3 * A ** 3}
    if a3 > 0:
        out[3] = 0.25 * a3 * A ** 3
    return out


@dataclass(frozen=True)
class MixerTone:
    frequency: float
    level_dbc: float
    lo_order: int
    if_order: int
    sign: int  # +1 for m*LO + n*IF, -1 for m*LO - n*IF


def mixer_tone_table(cfg: GilbertMixerConfig, if_freq: float, lo_freq: float, max_order: int = 3,
                     if_amplitude: float = 1.0) -> list[MixerTone]:
    """Predicted m*LO +/- n*IF products (m, n odd) relative to the LO +/- IF tone.

    Sorted by descending level, then frequency.
    """
    if max_order < 1 or max_order % 2 == 0:
        raise ConfigError(f"max_order must be odd and >= 1, got {max_order!r}")
    ifh = if_harmonic_amplitudes(cfg.a3, if_amplitude)
    lo_orders = [1] if cfg.lo_model == "ideal_sine" else list(range(1, max_order + 1, 2))
    ref = ifh[1]
    tones = []
    for m in lo_orders:
        for n, amp in ifh.items():
            if n > max_order:
                continue
            level = 20.0 * math.log10(amp / (m * ref))
            for sign in (-1, 1):
                tones.append(MixerTone(abs(m * lo_freq + sign * n * if_freq), level, m, n, sign))
    tones.sort(key=lambda t: (-round(t.level_dbc, 9), t.frequency))
    return tones


def in_band_sfdr_prediction(a3: float, if_amplitude: float = 1.0) -> float:
    """LO +/- IF over LO +/- 3IF level, dB, for the cubic IF model."""
    h = if_harmonic_amplitudes(a3, if_amplitude)
    if 3 not in h:
        return math.inf
    return 20.0 * math.log10(h[1] / h[3])


def calibrate_a3(target_sfdr_db: float = 23.0, if_freq: float = 300e6, lo_freq: float = 6e9,
                 if_amplitude: float = 1.0, measure=None) -> float:
    """Solve for a3 giving ``target_sfdr_db`` in-band SFDR.

    ``measure(a3) -> sfdr_db`` defaults to the analytic tone table; pass a
    spectrum-based measurement to calibrate against :func:`upconvert`.
    """
    if measure is None:
        def measure(a3):
            return in_band_sfdr_prediction(a3, if_amplitude)

    return brentq(lambda a3: measure(a3) - target_sfdr_db, 1e-6, 1e3, xtol=1e-15)


#: Default simulation rate; 1.5625 MHz bins at 2^16 points keep the standard
#: IF/LO test pairs (500 MHz/2 GHz, 300 MHz/6 GHz, ...) bin-centred.
TONE_TEST_SAMPLE_RATE = 102.4e9


def if_tone(if_freq: float, if_amplitude: float, sample_rate: float, n: int) -> TimeSeries:
    t = np.arange(n) / sample_rate
    return TimeSeries(sample_rate, if_amplitude * np.cos(TWO_PI * if_freq * t))


def mixer_tone_test(cfg: GilbertMixerConfig, if_freq: float, lo_freq: float, if_amplitude: float = 1.0,
                    sample_rate: float = TONE_TEST_SAMPLE_RATE, n: int = 4 * 2 ** 16) -> TimeSeries:
    """Up-convert a single cosine IF tone, as in a two-tone-free spur test."""
    return upconvert(cfg, if_tone(if_freq, if_amplitude, sample_rate, n), lo_freq, if_max_freq=if_freq)
