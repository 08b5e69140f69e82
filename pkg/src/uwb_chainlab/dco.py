"""LC digitally controlled oscillator: tank tuning, amplitude, phase noise, waveform."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import k as BOLTZMANN
from scipy.optimize import brentq

from .errors import ConfigError, DomainError, RangeError, SingularityError
from .rfcore import TimeSeries

TWO_PI = 2.0 * math.pi

#: Target frequencies of the shipped coarse-tuning codes.
DEFAULT_CODE_FREQUENCIES = (2e9, 4e9, 6e9)


@dataclass(frozen=True)
class ParasiticQuad:
    """Gate-drain and gate-source capacitances of the four core devices."""

    Cgd: tuple = (10e-15,) * 4
    Cgs: tuple = (20e-15,) * 4

    def __post_init__(self):
        cgd = tuple(float(v) for v in self.Cgd)
        cgs = tuple(float(v) for v in self.Cgs)
        if len(cgd) != 4 or len(cgs) != 4:
            raise ConfigError("need exactly four Cgd and four Cgs values")
        if any(not (v >= 0) for v in cgd + cgs):
            raise ConfigError("parasitic capacitances must be nonnegative")
        object.__setattr__(self, "Cgd", cgd)
        object.__setattr__(self, "Cgs", cgs)


def parasitic_capacitance(p: ParasiticQuad) -> float:
    """Total parasitic capacitance across the tank inductor.

    Devices 3/4 and 1/2 each contribute a series combination of their
    (2*Cgd + Cgs) branches.
    """
    b = [2.0 * gd + gs for gd, gs in zip(p.Cgd, p.Cgs)]
    den_hi = b[3] + b[2]
    den_lo = b[1] + b[0]
    if den_hi == 0 or den_lo == 0:
        raise SingularityError("parasitic branch pair with zero total capacitance")
    return b[3] * b[2] / den_hi + b[1] * b[0] / den_lo


def oscillation_frequency(L, C, Cpar=0.0):
    """1 / (2 pi sqrt(L (C + Cpar))) in Hz; accepts arrays."""
    Lx = np.asarray(L, dtype=float)
    Ct = np.asarray(C, dtype=float) + np.asarray(Cpar, dtype=float)
    if np.any(~(Lx > 0)) or np.any(~(Ct > 0)):
        raise DomainError("oscillation frequency needs L > 0 and C + Cpar > 0")
    f = 1.0 / (TWO_PI * np.sqrt(Lx * Ct))
    return float(f) if f.ndim == 0 else f


def capacitance_for_frequency(L: float, f: float) -> float:
    """Total tank capacitance resonating with ``L`` at ``f``."""
    if not (L > 0 and f > 0):
        raise DomainError("need L > 0 and f > 0")
    return 1.0 / ((TWO_PI * f) ** 2 * L)


def parallel_resistance(f, L, Q):
    """Tank loss as a parallel resistor, Rp = w L Q."""
    return TWO_PI * np.asarray(f, dtype=float) * L * Q


def amplitude(Idc, Rp):
    """Differential swing 4 Idc Rp / pi of the complementary cross-coupled core."""
    a = 4.0 * np.asarray(Idc, dtype=float) * np.asarray(Rp, dtype=float) / math.pi
    return float(a) if a.ndim == 0 else a


def bias_for_amplitude(A: float, Rp: float) -> float:
    return A * math.pi / (4.0 * Rp)


def startup_check(gm_pair: float, Rp: float, margin: float = 1.0) -> bool:
    """True when the negative resistance overcomes the tank loss by ``margin``."""
    if gm_pair <= 0 or Rp <= 0 or margin < 1:
        raise DomainError("need gm > 0, Rp > 0 and margin >= 1")
    return gm_pair >= margin / Rp


@dataclass(frozen=True)
class Varactor:
    Cmin: float
    Cmax: float

    def capacitance(self, vfine):
        # capacitance falls with control so frequency rises with it
        return self.Cmax - np.asarray(vfine, dtype=float) * (self.Cmax - self.Cmin)


@dataclass(frozen=True)
class TankConfig:
    L: float
    Q: float
    bank: tuple
    varactor: Varactor
    Idc: float
    parasitics: ParasiticQuad = field(default_factory=ParasiticQuad)

    def __post_init__(self):
        if not self.L > 0:
            raise ConfigError(f"must be > 0, got {self.L!r}", key="L")
        if not self.Q > 0:
            raise ConfigError(f"must be > 0, got {self.Q!r}", key="Q")
        bank = tuple(float(c) for c in self.bank)
        if not bank:
            raise ConfigError("capacitor bank is empty", key="bank")
        if any(not (c >= 0) for c in bank) or any(b >= a for a, b in zip(bank, bank[1:])):
            raise ConfigError("bank capacitances must be nonnegative and strictly decreasing with code",
                              key="bank")
        object.__setattr__(self, "bank", bank)
        v = self.varactor
        if not (0 <= v.Cmin <= v.Cmax):
            raise ConfigError(f"need 0 <= Cmin <= Cmax, got {v.Cmin!r}, {v.Cmax!r}", key="varactor")
        if not self.Idc > 0:
            raise ConfigError(f"must be > 0, got {self.Idc!r}", key="Idc")


def total_capacitance(cfg: TankConfig, code: int, vfine) -> float:
    if not (isinstance(code, (int, np.integer)) and 0 <= code < len(cfg.bank)):
        raise RangeError(f"code {code!r} outside 0..{len(cfg.bank) - 1}")
    v = np.asarray(vfine, dtype=float)
    if np.any((v < 0) | (v > 1)) or np.any(np.isnan(v)):
        raise RangeError(f"vfine must lie in [0, 1], got {vfine!r}")
    return cfg.bank[code] + cfg.varactor.capacitance(v) + parasitic_capacitance(cfg.parasitics)


def tune(cfg: TankConfig, code: int, vfine=0.5):
    """Oscillation frequency for a bank code and fine-tune setting."""
    return oscillation_frequency(cfg.L, total_capacitance(cfg, code, vfine))


def design_tank(targets=DEFAULT_CODE_FREQUENCIES, L=2e-9, Q=10.0, varactor=Varactor(20e-15, 60e-15),
                parasitics=ParasiticQuad(), amplitude_target=1.1, vfine=0.5) -> TankConfig:
    """Solve bank capacitances so each code hits its target at mid varactor.

    Idc is back-solved so the swing equals ``amplitude_target`` at the
    highest target frequency.
    """
    fixed = float(varactor.capacitance(vfine)) + parasitic_capacitance(parasitics)
    bank = []
    for f in targets:
        c = capacitance_for_frequency(L, f) - fixed
        if c < 0:
            raise ConfigError(f"target {f:g} Hz unreachable: parasitics and varactor exceed tank C")
        bank.append(c)
    rp = float(parallel_resistance(max(targets), L, Q))
    return TankConfig(L=L, Q=Q, bank=tuple(bank), varactor=varactor,
                      Idc=bias_for_amplitude(amplitude_target, rp), parasitics=parasitics)


def tank_amplitude(cfg: TankConfig, f) -> float:
    return amplitude(cfg.Idc, parallel_resistance(f, cfg.L, cfg.Q))


@dataclass(frozen=True)
class PhaseNoiseModel:
    """Leeson-form single-sideband phase noise parameters."""

    noise_factor_F: float
    corner_fc: float = 10e3
    Q: float = 10.0
    Psig: float = 3e-3
    temperature: float = 290.0

    def __post_init__(self):
        for name in ("noise_factor_F", "corner_fc", "Q", "Psig", "temperature"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"must be positive, got {v!r}", key=name)


def phase_noise(m: PhaseNoiseModel, f0, df):
    """L(df) in dBc/Hz.

    10 log10( 2FkT/Psig * (1 + (f0/(2 Q df))^2) * (1 + fc/df) )
    """
    df = np.asarray(df, dtype=float)
    if np.any(~(df > 0)):
        raise DomainError("offset frequency must be > 0")
    f0 = np.asarray(f0, dtype=float)
    floor = 2.0 * m.noise_factor_F * BOLTZMANN * m.temperature / m.Psig
    val = floor * (1.0 + (f0 / (2.0 * m.Q * df)) ** 2) * (1.0 + m.corner_fc / df)
    out = 10.0 * np.log10(val)
    return float(out) if out.ndim == 0 else out


def calibrate_noise_factor(target_dbc: float = -128.0, f0: float = 6e9, df: float = 1e6,
                           Q: float = 10.0, Psig: float = 3e-3, corner_fc: float = 10e3,
                           temperature: float = 290.0) -> PhaseNoiseModel:
    """Find the noise factor that puts L(df) at ``target_dbc``.

    The search runs over log10(F); with the default Q and Psig the solution
    is below unity, which the model accepts as an effective fitting factor.
    """
    def resid(logF):
        m = PhaseNoiseModel(10.0 ** logF, corner_fc, Q, Psig, temperature)
        return phase_noise(m, f0, df) - target_dbc

    logF = brentq(resid, -6.0, 6.0, xtol=1e-14)
    return PhaseNoiseModel(10.0 ** logF, corner_fc, Q, Psig, temperature)


@dataclass(frozen=True)
class DcoOutputSpec:
    amplitude: float
    f0: float
    hd2_dbc: float = -60.0
    hd3_dbc: float = -38.0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ConfigError(f"must be > 0, got {self.amplitude!r}", key="amplitude")
        if not self.f0 > 0:
            raise ConfigError(f"must be > 0, got {self.f0!r}", key="f0")
        for name in ("hd2_dbc", "hd3_dbc"):
            v = getattr(self, name)
            if not v <= 0:
                raise ConfigError(f"harmonic level must be <= 0 dBc, got {v!r}", key=name)


def synthesize(out: DcoOutputSpec, sample_rate: float, duration: float) -> TimeSeries:
    """Sine at f0 plus second and third harmonics at the configured dBc levels."""
    if not sample_rate > 2.0 * 3.0 * out.f0:
        raise ConfigError(f"sample rate {sample_rate:g} Hz puts the third harmonic of "
                          f"{out.f0:g} Hz above Nyquist")
    n = int(round(duration * sample_rate))
    if n < 2:
        raise ConfigError("duration too short for the sample rate")
    t = np.arange(n) / sample_rate
    w = TWO_PI * out.f0
    x = np.sin(w * t)
    for order, level in ((2, out.hd2_dbc), (3, out.hd3_dbc)):
        if math.isfinite(level):
            x = x + 10.0 ** (level / 20.0) * np.sin(order * w * t)
    return TimeSeries(sample_rate, out.amplitude * x)


def coherent_sample_rate(f0: float, fft_size: int, oversample: int = 8) -> float:
    """Sample rate placing ``f0`` on an FFT bin with an odd cycle count.

    The cycle count is the largest odd integer <= fft_size/oversample, so the
    tone and its low harmonics land on distinct bins of every segment.
    """
    cycles = fft_size // oversample
    if cycles % 2 == 0:
        cycles -= 1
    if cycles < 1:
        raise ConfigError("fft_size too small for the requested oversampling")
    return fft_size * f0 / cycles


def output_spectrum(out: DcoOutputSpec, fft_size: int = 2 ** 16, averaging: int = 4, window: str = "hann"):
    """Coherently sampled spectrum of the synthesized output and its SFDR."""
    from . import specan

    fs = coherent_sample_rate(out.f0, fft_size)
    x = synthesize(out, fs, fft_size * averaging / fs)
    s = specan.psd(x, specan.PsdConfig(window=window, fft_size=fft_size, averaging=averaging))
    # spurs are searched up to Nyquist; the exclusion spans the window main lobe
    res = specan.sfdr(s, out.f0, exclusion_bw=8 * fs / fft_size)
    return s, res
