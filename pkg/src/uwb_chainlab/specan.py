"""Spectral estimation, spur measurement and spectral-mask compliance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, NamedTuple

import numpy as np
from scipy.signal import get_window

from .errors import AnalysisError, ConfigError, RangeError
from .rfcore import Spectrum, TimeSeries

#: Spectra are clipped this far below their peak so dB values stay finite.
DYNAMIC_RANGE_DB = 300.0
#: Spurs further than this below the fundamental are float64 FFT round-off.
NUMERICAL_FLOOR_DB = 200.0


@dataclass(frozen=True)
class PsdConfig:
    window: Literal["rectangular", "hann", "blackman"] = "hann"
    fft_size: int = 2 ** 16
    averaging: int = 4
    reference: Literal["peak_relative", "absolute"] = "peak_relative"
    # absolute mode only: dBm per resolution bandwidth across a source resistance
    source_resistance: float | None = None
    rbw: float | None = None

    def __post_init__(self):
        if self.window not in ("rectangular", "hann", "blackman"):
            raise ConfigError(f"unknown window {self.window!r}", key="window")
        n = self.fft_size
        if int(n) != n or n < 256 or (int(n) & (int(n) - 1)):
            raise ConfigError(f"must be a power of two >= 256, got {n!r}", key="fft_size")
        if int(self.averaging) != self.averaging or self.averaging < 1:
            raise ConfigError(f"must be an integer >= 1, got {self.averaging!r}", key="averaging")
        if self.reference not in ("peak_relative", "absolute"):
            raise ConfigError(f"unknown reference {self.reference!r}", key="reference")
        if (self.source_resistance is None) != (self.rbw is None):
            raise ConfigError("dBm/RBW mode needs both source_resistance and rbw", key="rbw")
        if self.source_resistance is not None and self.reference != "absolute":
            raise ConfigError("source_resistance/rbw only apply to absolute spectra", key="reference")


def _window(name, n):
    if name == "rectangular":
        return np.ones(n)
    return get_window(name, n, fftbins=True)


def psd_linear(x: TimeSeries, cfg: PsdConfig):
    """One-sided Welch PSD in V^2/Hz plus window ENBW (bins).

    Segments are spread evenly over the record; with one segment only the
    first ``fft_size`` samples are used.
    """
    n = cfg.fft_size
    data = x.samples
    if data.size < n:
        raise ConfigError(f"need at least fft_size={n} samples, got {data.size}", key="fft_size")
    k = cfg.averaging
    if k == 1:
        starts = [0]
    else:
        step = (data.size - n) / (k - 1)
        starts = [int(round(i * step)) for i in range(k)]
    win = _window(cfg.window, n)
    wpow = np.sum(win ** 2)
    acc = np.zeros(n // 2 + 1)
    for s0 in starts:  # fixed order keeps the average bit-reproducible
        seg = data[s0:s0 + n] * win
        acc += np.abs(np.fft.rfft(seg)) ** 2
    p = acc / (k * x.sample_rate * wpow)
    p[1:-1] *= 2.0  # fold negative frequencies; DC and Nyquist are unpaired
    f = np.fft.rfftfreq(n, 1.0 / x.sample_rate)
    enbw = n * wpow / np.sum(win) ** 2
    return f, p, enbw


def psd(x: TimeSeries, cfg: PsdConfig = PsdConfig()) -> Spectrum:
    f, p, enbw = psd_linear(x, cfg)
    pmax = p.max()
    if not pmax > 0:
        raise AnalysisError("signal has no power; spectrum is empty")
    p = np.maximum(p, pmax * 10.0 ** (-DYNAMIC_RANGE_DB / 10.0))
    if cfg.reference == "peak_relative":
        db = 10.0 * np.log10(p / pmax)
        db[np.argmax(p)] = 0.0
    elif cfg.source_resistance is not None:
        watts_per_hz = p / cfg.source_resistance
        db = 10.0 * np.log10(watts_per_hz * cfg.rbw / 1e-3)
    else:
        db = 10.0 * np.log10(p)
    return Spectrum(f, db, cfg.reference, enbw)


class SfdrResult(NamedTuple):
    db: float
    fundamental_frequency: float
    spur_frequency: float
    floor_limited: bool

    def __float__(self):
        return self.db


def sfdr(s: Spectrum, fundamental_hint: float, exclusion_bw: float,
         search_band: tuple | None = None, also_exclude=(), floor_margin_db: float = 20.0) -> SfdrResult:
    """Fundamental peak minus the largest bin outside +/- exclusion_bw of it.

    ``search_band`` limits where spurs are looked for and ``also_exclude``
    lists further wanted tones (e.g. the other mixer sideband) that get the
    same exclusion zone. The result is flagged
    floor-limited when the largest remaining bin is not a local peak at least
    ``floor_margin_db`` above the median floor, or sits at round-off level.
    """
    f, p = s.bin_frequencies, s.power
    near = np.abs(f - fundamental_hint) <= exclusion_bw
    if not near.any():
        raise AnalysisError(f"no bins within {exclusion_bw:g} Hz of {fundamental_hint:g} Hz")
    idx_near = np.flatnonzero(near)
    i_fund = idx_near[np.argmax(p[idx_near])]
    edge = i_fund in (idx_near[0], idx_near[-1]) and idx_near.size > 2
    if edge or p[i_fund] <= np.median(p) + floor_margin_db:
        raise AnalysisError(f"no fundamental peak near {fundamental_hint:g} Hz")
    cand = np.abs(f - f[i_fund]) > exclusion_bw
    for fx in also_exclude:
        cand &= np.abs(f - fx) > exclusion_bw
    if search_band is not None:
        cand &= (f >= search_band[0]) & (f <= search_band[1])
    if not cand.any():
        raise AnalysisError("no bins left outside the fundamental exclusion zone")
    idx = np.flatnonzero(cand)
    i_spur = idx[np.argmax(p[idx])]
    left = p[i_spur - 1] if i_spur > 0 else -np.inf
    right = p[i_spur + 1] if i_spur + 1 < p.size else -np.inf
    is_peak = p[i_spur] >= left and p[i_spur] >= right
    floor_limited = (not (is_peak and p[i_spur] > np.median(p) + floor_margin_db)
                     or p[i_fund] - p[i_spur] > NUMERICAL_FLOOR_DB)
    return SfdrResult(float(p[i_fund] - p[i_spur]), float(f[i_fund]), float(f[i_spur]), floor_limited)


def band_power(s: Spectrum, f_lo: float, f_hi: float) -> float:
    """Integrated power of bins in [f_lo, f_hi] in the spectrum's dB reference."""
    f = s.bin_frequencies
    if f_lo < f[0] or f_hi > f[-1] or not f_lo <= f_hi:
        raise RangeError(f"band [{f_lo:g}, {f_hi:g}] Hz outside spectrum span")
    sel = (f >= f_lo) & (f <= f_hi)
    if not sel.any():
        raise RangeError(f"no bins in band [{f_lo:g}, {f_hi:g}] Hz")
    total = np.sum(10.0 ** (s.power[sel] / 10.0)) / s.enbw_bins
    return float(10.0 * np.log10(total))


def spectral_centroid(s: Spectrum, f_lo: float, f_hi: float) -> float:
    f = s.bin_frequencies
    sel = (f >= f_lo) & (f <= f_hi)
    if not sel.any():
        raise RangeError(f"no bins in band [{f_lo:g}, {f_hi:g}] Hz")
    w = 10.0 ** (s.power[sel] / 10.0)
    return float(np.sum(f[sel] * w) / np.sum(w))


# -- masks -------------------------------------------------------------------

@dataclass(frozen=True)
class MaskSegment:
    f_lo: float
    f_hi: float
    limit: float

    def __post_init__(self):
        if not (math.isfinite(self.f_lo) and math.isfinite(self.f_hi) and self.f_lo < self.f_hi):
            raise ConfigError(f"segment needs f_lo < f_hi, got {self.f_lo!r}, {self.f_hi!r}")
        if not math.isfinite(self.limit):
            raise ConfigError(f"segment limit must be finite, got {self.limit!r}")


@dataclass(frozen=True)
class SpectralMask:
    name: str
    segments: tuple
    reference: Literal["peak_relative", "absolute"] = "peak_relative"

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ConfigError("mask has no segments")
        for a, b in zip(segs, segs[1:]):
            if b.f_lo < a.f_hi:
                raise ConfigError("mask segments must be ordered and non-overlapping")
        if self.reference not in ("peak_relative", "absolute"):
            raise ConfigError(f"unknown mask reference {self.reference!r}")
        object.__setattr__(self, "segments", segs)

    @property
    def domain(self):
        return self.segments[0].f_lo, self.segments[-1].f_hi

    def raised(self, d: float) -> "SpectralMask":
        return SpectralMask(self.name, tuple(MaskSegment(g.f_lo, g.f_hi, g.limit + d)
                                             for g in self.segments), self.reference)


@dataclass(frozen=True)
class SegmentMargin:
    f_lo: float
    f_hi: float
    limit: float
    margin: float | None  # None when no bin falls in the segment
    worst_frequency: float | None


@dataclass(frozen=True)
class MaskReport:
    mask_name: str
    verdict: Literal["pass", "fail"]
    worst_margin: float
    worst_frequency: float
    segments: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def as_dict(self) -> dict:
        return {
            "mask": self.mask_name,
            "verdict": self.verdict,
            "worst_margin_db": self.worst_margin,
            "worst_frequency_hz": self.worst_frequency,
            "segments": [
                {"f_lo_hz": g.f_lo, "f_hi_hz": g.f_hi, "limit_db": g.limit,
                 "margin_db": g.margin, "worst_frequency_hz": g.worst_frequency}
                for g in self.segments
            ],
        }


def mask_check(s: Spectrum, m: SpectralMask) -> MaskReport:
    """Compare every bin inside the mask domain with its segment limit.

    A bin sitting on a shared segment edge is held to the stricter limit.
    """
    if s.reference != m.reference:
        raise ConfigError(f"spectrum reference {s.reference!r} does not match mask {m.reference!r}")
    f, p = s.bin_frequencies, s.power
    lo, hi = m.domain
    if lo < f[0] or hi > f[-1]:
        raise ConfigError(f"mask domain [{lo:g}, {hi:g}] Hz exceeds spectrum span")
    limit = np.full(f.shape, np.inf)
    for g in m.segments:
        sel = (f >= g.f_lo) & (f <= g.f_hi)
        limit[sel] = np.minimum(limit[sel], g.limit)
    covered = np.isfinite(limit)
    if not covered.any():
        raise AnalysisError("no spectrum bins fall inside the mask")
    margin = np.where(covered, limit - p, np.inf)
    i = int(np.argmin(margin))
    per_seg = []
    for g in m.segments:
        sel = np.flatnonzero((f >= g.f_lo) & (f <= g.f_hi))
        if sel.size:
            j = sel[np.argmin(margin[sel])]
            per_seg.append(SegmentMargin(g.f_lo, g.f_hi, g.limit, float(margin[j]), float(f[j])))
        else:
            per_seg.append(SegmentMargin(g.f_lo, g.f_hi, g.limit, None, None))
    worst = float(margin[i])
    return MaskReport(m.name, "pass" if worst >= 0 else "fail", worst, float(f[i]), tuple(per_seg))


def dumps_mask(m: SpectralMask) -> str:
    lines = [f"name = {m.name}", f"reference = {m.reference}", "# f_lo_Hz, f_hi_Hz, limit_dB"]
    lines += [f"{g.f_lo!r}, {g.f_hi!r}, {g.limit!r}" for g in m.segments]
    return "\n".join(lines) + "\n"


def loads_mask(text: str) -> SpectralMask:
    """Parse the mask text format written by :func:`dumps_mask`."""
    header = {}
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            key, _, value = line.partition("=")
            header[key.strip()] = value.strip()
            continue
        parts = [v.strip() for v in line.split(",")]
        if len(parts) != 3:
            raise ConfigError(f"line {lineno}: expected 'f_lo_Hz, f_hi_Hz, limit_dB'")
        try:
            rows.append(MaskSegment(*(float(v) for v in parts)))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    if "name" not in header:
        raise ConfigError("mask file has no 'name' line")
    return SpectralMask(header["name"], tuple(rows), header.get("reference", "peak_relative"))


def load_mask(path) -> SpectralMask:
    return loads_mask(Path(path).read_text(encoding="utf-8"))


def save_mask(m: SpectralMask, path) -> None:
    from .reports import atomic_write_text

    atomic_write_text(path, dumps_mask(m))


def default_mask_path(name: str = "fcc_uwb_illustrative") -> Path:
    return Path(__file__).with_name("data") / f"{name}.mask"


def default_mask(name: str = "fcc_uwb_illustrative") -> SpectralMask:
    return load_mask(default_mask_path(name))
