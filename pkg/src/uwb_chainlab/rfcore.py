"""Shared RF quantities: frequency grids, immittances, dB math, sampled signals.

Everything is in SI base units (Hz, ohm, F, H, V, A). Conversion to GHz/nH/pF
happens only in report formatting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import ConfigError, DomainError, SingularityError

#: Floor used when a reflection coefficient is exactly zero.
GAMMA_DB_FLOOR = -120.0


@dataclass(frozen=True)
class FrequencyGrid:
    start: float
    stop: float
    points: int
    spacing: Literal["linear", "logarithmic"] = "linear"

    def __post_init__(self):
        if not (math.isfinite(self.start) and self.start > 0):
            raise ConfigError(f"start must be > 0, got {self.start!r}", key="start")
        if not (math.isfinite(self.stop) and self.stop > self.start):
            raise ConfigError(f"stop must exceed start ({self.start!r}), got {self.stop!r}", key="stop")
        if int(self.points) != self.points or self.points < 2:
            raise ConfigError(f"points must be an integer >= 2, got {self.points!r}", key="points")
        if self.spacing not in ("linear", "logarithmic"):
            raise ConfigError(f"unknown spacing {self.spacing!r}", key="spacing")

    def values(self) -> np.ndarray:
        return grid_values(self)


def grid_values(g: FrequencyGrid) -> np.ndarray:
    """Grid frequencies with the end points pinned exactly to start/stop."""
    if g.spacing == "linear":
        f = np.linspace(g.start, g.stop, int(g.points))
    else:
        f = np.geomspace(g.start, g.stop, int(g.points))
    f[0], f[-1] = g.start, g.stop
    return f


@dataclass(frozen=True)
class ComplexImmittance:
    """An impedance (ohm) or admittance (S) at one frequency."""

    re: float
    im: float
    kind: Literal["impedance", "admittance"] = "impedance"

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise DomainError(f"immittance must be finite, got {self.re!r}{self.im:+}j")
        if self.kind not in ("impedance", "admittance"):
            raise DomainError(f"unknown immittance kind {self.kind!r}")

    @classmethod
    def impedance(cls, z: complex) -> "ComplexImmittance":
        z = complex(z)
        return cls(z.real, z.imag, "impedance")

    @classmethod
    def admittance(cls, y: complex) -> "ComplexImmittance":
        y = complex(y)
        return cls(y.real, y.imag, "admittance")

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def inverted(self) -> "ComplexImmittance":
        v = self.value
        if v == 0:
            raise SingularityError("cannot invert a zero immittance")
        other = "admittance" if self.kind == "impedance" else "impedance"
        inv = 1.0 / v
        return ComplexImmittance(inv.real, inv.imag, other)

    def to_impedance(self) -> "ComplexImmittance":
        return self if self.kind == "impedance" else self.inverted()

    def to_admittance(self) -> "ComplexImmittance":
        return self if self.kind == "admittance" else self.inverted()


def db_from_ratio(ratio, kind: Literal["power", "amplitude"] = "power"):
    """Ratio to decibels: 10*log10 for power, 20*log10 for amplitude."""
    r = np.asarray(ratio, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("decibel conversion needs a strictly positive ratio")
    scale = _db_scale(kind)
    out = scale * np.log10(r)
    return float(out) if out.ndim == 0 else out


def ratio_from_db(db, kind: Literal["power", "amplitude"] = "power"):
    scale = _db_scale(kind)
    out = np.power(10.0, np.asarray(db, dtype=float) / scale)
    return float(out) if out.ndim == 0 else out


def _db_scale(kind):
    if kind == "power":
        return 10.0
    if kind == "amplitude":
        return 20.0
    raise DomainError(f"unknown ratio kind {kind!r}")


def reflection_coefficient(z, z0: float = 50.0):
    """Gamma = (Z - Z0) / (Z + Z0) for a scalar, array or ComplexImmittance."""
    if isinstance(z, ComplexImmittance):
        if z.kind != "impedance":
            raise DomainError("reflection coefficient needs an impedance, got an admittance")
        z = z.value
    if not z0 > 0:
        raise DomainError(f"reference impedance must be > 0, got {z0!r}")
    zz = np.asarray(z, dtype=complex)
    den = zz + z0
    if np.any(den == 0):
        raise SingularityError("Z + Z0 = 0")
    g = (zz - z0) / den
    return complex(g) if g.ndim == 0 else g


def gamma_db(gamma, floor: float = GAMMA_DB_FLOOR):
    """20*log10|Gamma| clamped at ``floor`` so a perfect match stays finite."""
    mag = np.abs(np.asarray(gamma, dtype=complex))
    with np.errstate(divide="ignore"):
        out = 20.0 * np.log10(mag)
    out = np.maximum(out, floor)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class TimeSeries:
    sample_rate: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise ConfigError(f"sample_rate must be > 0, got {self.sample_rate!r}")
        x = np.array(self.samples, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ConfigError("a time series needs at least two samples")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    def scaled(self, k: float) -> "TimeSeries":
        return TimeSeries(self.sample_rate, self.samples * k)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Sampled power spectrum in dB.

    ``enbw_bins`` is the equivalent noise bandwidth of the analysis window in
    bins; band integration divides by it so a bin-centred tone integrates to
    its peak level.
    """

    bin_frequencies: np.ndarray = field(repr=False)
    power: np.ndarray = field(repr=False)
    reference: Literal["peak_relative", "absolute"] = "peak_relative"
    enbw_bins: float = 1.0

    def __post_init__(self):
        f = np.array(self.bin_frequencies, dtype=float)
        p = np.array(self.power, dtype=float)
        if f.ndim != 1 or f.shape != p.shape or f.size < 1:
            raise ConfigError("spectrum needs one power value per bin")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise ConfigError("spectrum bin frequencies must be strictly increasing")
        if self.reference not in ("peak_relative", "absolute"):
            raise ConfigError(f"unknown spectrum reference {self.reference!r}")
        if self.reference == "peak_relative" and p.max() != 0.0:
            raise ConfigError("peak-relative spectrum must peak at exactly 0 dBr")
        f.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "bin_frequencies", f)
        object.__setattr__(self, "power", p)

    @property
    def bin_width(self) -> float:
        f = self.bin_frequencies
        return float(f[1] - f[0]) if f.size > 1 else 0.0

    def shifted(self, db: float) -> "Spectrum":
        """Same spectrum offset by ``db``; only meaningful in absolute mode."""
        if self.reference == "peak_relative" and db != 0:
            raise ConfigError("cannot shift a peak-relative spectrum")
        return Spectrum(self.bin_frequencies, self.power + db, self.reference, self.enbw_bins)
