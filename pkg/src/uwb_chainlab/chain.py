"""Transmit-chain composition and receive noise/power budgets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import dco, specan, txblocks
from .errors import ConfigError
from .netsolve import NoiseFigureProfile, nf_spot
from .rfcore import Spectrum, TimeSeries, db_from_ratio, ratio_from_db

#: TX simulation defaults: 1.5625 MHz-aligned rate and a 2^20-sample record.
TX_SAMPLE_RATE = 102.4e9
TX_SAMPLES = 2 ** 20


def _tx_mixer_default():
    # the chain LO is the DCO sine itself, so the mixer multiplies rather than switches
    return txblocks.GilbertMixerConfig(lo_model="ideal_sine")


@dataclass(frozen=True)
class TxChainConfig:
    pulse: txblocks.PulseShaperConfig = field(default_factory=txblocks.PulseShaperConfig)
    mixer: txblocks.GilbertMixerConfig = field(default_factory=_tx_mixer_default)
    dco_code: int = 2
    vfine: float = 0.5
    sample_rate: float = TX_SAMPLE_RATE
    samples: int = TX_SAMPLES
    tank: dco.TankConfig = field(default_factory=dco.design_tank)
    hd2_dbc: float = -60.0
    hd3_dbc: float = -38.0

    def __post_init__(self):
        if not (0 <= self.vfine <= 1):
            raise ConfigError(f"must be in [0, 1], got {self.vfine!r}", key="vfine")
        if not (isinstance(self.dco_code, (int, np.integer)) and 0 <= self.dco_code < len(self.tank.bank)):
            raise ConfigError(f"code outside 0..{len(self.tank.bank) - 1}", key="dco_code")
        if int(self.samples) != self.samples or self.samples < 256 or self.samples & (self.samples - 1):
            raise ConfigError(f"must be a power of two >= 256, got {self.samples!r}", key="samples")
        f_lo = dco.tune(self.tank, self.dco_code, self.vfine)
        if not self.sample_rate > 2.0 * 3.0 * f_lo:
            raise ConfigError(f"sample rate must exceed 6x the LO ({f_lo:g} Hz)", key="sample_rate")


@dataclass(frozen=True, eq=False)
class TxChainResult:
    waveform: TimeSeries
    spectrum: Spectrum | None  # None when the output is identically zero
    baseband: TimeSeries
    lo_freq: float
    pulse_start: float


def tx_psd_config(cfg: TxChainConfig) -> specan.PsdConfig:
    # one transient pulse: a single rectangular-window segment over the whole record
    return specan.PsdConfig(window="rectangular", fft_size=int(cfg.samples), averaging=1)


def run_tx_chain(cfg: TxChainConfig = TxChainConfig()) -> TxChainResult:
    """Pulse -> shaper -> mixer driven at the tuned DCO frequency."""
    p = cfg.pulse
    rect = txblocks.rect_pulse(p.pulse_width, p.amplitude, cfg.sample_rate, length=int(cfg.samples))
    shaped = txblocks.shape_pulse(p, rect)
    lo_freq = dco.tune(cfg.tank, cfg.dco_code, cfg.vfine)
    lo = None
    if cfg.mixer.lo_model == "ideal_sine":
        amp = dco.tank_amplitude(cfg.tank, lo_freq)
        out = dco.DcoOutputSpec(amp, lo_freq, cfg.hd2_dbc, cfg.hd3_dbc)
        lo = dco.synthesize(out, cfg.sample_rate, cfg.samples / cfg.sample_rate).samples / amp
    # a shaped pulse has no hard band edge; its 3-pole skirt is judged at 99.9 % energy
    if_max = txblocks.occupied_bandwidth(shaped, 0.999)
    rf = txblocks.upconvert(cfg.mixer, shaped, lo_freq, if_max_freq=if_max, lo=lo)
    spectrum = None
    if np.any(rf.samples != 0):
        spectrum = specan.psd(rf, tx_psd_config(cfg))
    start = int(round(p.pulse_width * cfg.sample_rate)) / cfg.sample_rate
    return TxChainResult(rf, spectrum, shaped, lo_freq, start)


def smoothed_envelope(rf: TimeSeries, corner: float) -> np.ndarray:
    """Full-wave rectification followed by a single-pole low-pass at ``corner``."""
    b, a = txblocks.single_pole_coefficients(corner, rf.sample_rate)
    return lfilter(b, a, np.abs(rf.samples))


def analytic_envelope(rf: TimeSeries, lo_freq: float) -> np.ndarray:
    """|analytic signal| of the LO-fundamental zone (0, 2*LO) of ``rf``."""
    n = rf.samples.size
    spec = np.fft.fft(rf.samples)
    f = np.fft.fftfreq(n, 1.0 / rf.sample_rate)
    keep = (f > 0) & (f < 2.0 * lo_freq)
    analytic = np.fft.ifft(np.where(keep, 2.0 * spec, 0.0))
    return np.abs(analytic)


def buildup_is_monotone(env: np.ndarray, sample_rate: float, lo_freq: float,
                        lo_frac: float = 0.1, hi_frac: float = 0.9) -> bool:
    """Whether the envelope rises without dips between its 10 % and 90 % points.

    The envelope is first averaged over one-LO-period blocks to remove the
    rectifier ripple.
    """
    block = max(1, int(round(sample_rate / lo_freq)))
    n = env.size // block
    e = env[:n * block].reshape(n, block).mean(axis=1)
    top = e.max()
    i_lo = int(np.argmax(e >= lo_frac * top))
    i_hi = int(np.argmax(e >= hi_frac * top))
    if i_hi <= i_lo:
        return False
    return bool(np.all(np.diff(e[i_lo:i_hi + 1]) >= 0))


def spectral_peak_frequency(s: Spectrum) -> float:
    return float(s.bin_frequencies[int(np.argmax(s.power))])


@dataclass(frozen=True, eq=False)
class PulseComparison:
    rect: TimeSeries
    shaped: TimeSeries
    rect_spectrum: Spectrum
    shaped_spectrum: Spectrum
    rect_band_db: float  # band power relative to each spectrum's own peak
    shaped_band_db: float

    @property
    def suppression_db(self) -> float:
        return self.rect_band_db - self.shaped_band_db


def pulse_comparison(cfg: txblocks.PulseShaperConfig, sample_rate: float = TX_SAMPLE_RATE,
                     fft_size: int = 2 ** 16, band=(0.9e9, 1.1e9)) -> PulseComparison:
    """Rectangular vs shaped pulse spectra and their power in ``band``."""
    rect = txblocks.rect_pulse(cfg.pulse_width, cfg.amplitude, sample_rate, length=fft_size)
    shaped = txblocks.shape_pulse(cfg, rect)
    psd_cfg = specan.PsdConfig(window="rectangular", fft_size=fft_size, averaging=1)
    sr, ss = specan.psd(rect, psd_cfg), specan.psd(shaped, psd_cfg)
    return PulseComparison(rect, shaped, sr, ss, specan.band_power(sr, *band), specan.band_power(ss, *band))


# -- receive budget ------------------------------------------------------------

@dataclass(frozen=True)
class StageNoiseSpec:
    name: str
    gain_db: float
    nf_db: float

    def __post_init__(self):
        if not (math.isfinite(self.gain_db) and math.isfinite(self.nf_db)):
            raise ConfigError(f"stage {self.name!r} needs finite gain and NF")


@dataclass(frozen=True)
class StageContribution:
    name: str
    added_noise_factor: float
    cumulative_nf_db: float
    cumulative_gain_db: float


@dataclass(frozen=True)
class CascadeResult:
    total_nf_db: float
    total_gain_db: float
    stages: tuple


def friis_cascade(stages) -> CascadeResult:
    """F = F1 + sum_k (F_k - 1) / prod_{j<k} G_j, all linear."""
    stages = list(stages)
    if not stages:
        raise ConfigError("cascade needs at least one stage")
    f_total = 0.0
    g_before = 1.0
    gain_db = 0.0
    rows = []
    for i, st in enumerate(stages):
        f_k = ratio_from_db(st.nf_db)
        added = f_k if i == 0 else (f_k - 1.0) / g_before
        f_total += added
        g_before *= ratio_from_db(st.gain_db)
        gain_db += st.gain_db
        rows.append(StageContribution(st.name, added, db_from_ratio(f_total), gain_db))
    return CascadeResult(db_from_ratio(f_total), gain_db, tuple(rows))


@dataclass(frozen=True)
class LnaProfile:
    """Behavioural LNA for budgets: NF table and power-gain table on the same frequencies."""

    nf: NoiseFigureProfile = field(default_factory=NoiseFigureProfile)
    gain_db: tuple = (9.0, 9.0)

    def __post_init__(self):
        g = tuple(float(v) for v in self.gain_db)
        if len(g) != len(self.nf.frequencies):
            raise ConfigError("LNA gain table must match the NF table frequencies", key="gain_db")
        object.__setattr__(self, "gain_db", g)

    def gain_at(self, f: float) -> float:
        # same domain rule and log-frequency interpolation as the NF table
        return nf_spot(f, NoiseFigureProfile(self.nf.frequencies, self.gain_db))


def rx_budget(lna_profile: LnaProfile, mixer_cfg: txblocks.GilbertMixerConfig, f: float,
              gain_override_db: float | None = None) -> CascadeResult:
    lna_nf = nf_spot(f, lna_profile.nf)
    lna_gain = lna_profile.gain_at(f) if gain_override_db is None else gain_override_db
    return friis_cascade([
        StageNoiseSpec("LNA", lna_gain, lna_nf),
        StageNoiseSpec("mixer", mixer_cfg.conversion_gain_db, mixer_cfg.nf_db),
    ])


# -- power bookkeeping ---------------------------------------------------------

DEFAULT_BLOCK_POWER_MW = {"DCO": 6.0, "mixer": 12.0, "LNA": 11.0}
DEFAULT_TOTAL_POWER_MW = 50.0
UNATTRIBUTED = "unattributed (pulse shaper, bias, buffers)"


@dataclass(frozen=True)
class PowerSummary:
    rows: tuple  # (block, mW) pairs, unattributed remainder last
    listed_total: float
    total: float


def power_summary(blocks: dict | None = None, declared_total: float | None = None) -> PowerSummary:
    """Echo configured block powers and, given a declared total, the remainder."""
    blocks = dict(blocks or {})
    rows = [(name, float(mw)) for name, mw in blocks.items()]
    listed = sum(mw for _, mw in rows)
    total = listed
    if declared_total is not None and declared_total > listed:
        rows.append((UNATTRIBUTED, declared_total - listed))
        total = float(declared_total)
    return PowerSummary(tuple(rows), listed, total)
