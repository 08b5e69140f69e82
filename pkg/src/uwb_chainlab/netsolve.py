"""Small-signal analysis of the LNA input network and gain path.

The input network is a three-section bandpass ladder: a series L1-C1
resonator, a shunt L2||C2 resonator, then the gate inductor Lg feeding the
inductively degenerated transistor, whose input is the third (series RLC)
section. Sweeps are evaluated with chain (ABCD) matrices.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

from .errors import DomainError, RangeError, SingularityError, ConfigError
from .rfcore import FrequencyGrid, gamma_db, grid_values, reflection_coefficient

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TransistorSmallSignal:
    gm: float
    Cgs: float
    Cp: float
    Cgd: float = 0.0
    ro: float = math.inf

    def __post_init__(self):
        for name in ("gm", "Cgs", "Cp", "Cgd", "ro"):
            v = getattr(self, name)
            if math.isnan(v) or v < 0:
                raise ConfigError(f"must be nonnegative, got {v!r}", key=name)

    @property
    def Cin(self) -> float:
        return self.Cgs + self.Cp


@dataclass(frozen=True)
class MatchingNetworkSpec:
    """Input network element values; defaults are the published design."""

    L1: float = 1.375e-9
    C1: float = 1.08e-12
    L2: float = 3e-9
    C2: float = 0.1e-12
    Lg: float = 0.2e-9
    Ls: float = 1e-9
    Ld: float = 1.75e-9
    Rd: float = 40.0
    Rs: float = 50.0

    def __post_init__(self):
        for name in ("L1", "C1", "L2", "C2", "Lg", "Ls", "Ld", "Rd", "Rs"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"must be positive and finite, got {v!r}", key=name)


@dataclass(frozen=True)
class LnaLoadSpec:
    Ld: float = 1.75e-9
    Rd: float = 40.0
    Cout: float = 0.3e-12

    def __post_init__(self):
        for name in ("Ld", "Rd", "Cout"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"must be positive and finite, got {v!r}", key=name)

    @property
    def spur_resonance(self) -> float:
        """Self-resonance of the drain load, Hz."""
        return 1.0 / (TWO_PI * math.sqrt(self.Ld * self.Cout))


def derived_transistor(spec: MatchingNetworkSpec = MatchingNetworkSpec(), Cgs: float = 0.2e-12,
                       Cp: float = 1.38e-12) -> TransistorSmallSignal:
    """Transistor whose degeneration resistance gm*Ls/(Cgs+Cp) equals Rs."""
    gm = spec.Rs * (Cgs + Cp) / spec.Ls
    return TransistorSmallSignal(gm=gm, Cgs=Cgs, Cp=Cp)


# -- one-port branches --------------------------------------------------------

@dataclass(frozen=True)
class R:
    value: float

    def impedance(self, s):
        return np.full_like(s, self.value, dtype=complex)


@dataclass(frozen=True)
class L:
    value: float

    def impedance(self, s):
        return s * self.value


@dataclass(frozen=True)
class C:
    value: float

    def impedance(self, s):
        return 1.0 / (s * self.value)


@dataclass(frozen=True)
class SeriesCombo:
    parts: tuple

    def __init__(self, *parts):
        object.__setattr__(self, "parts", tuple(parts))

    def impedance(self, s):
        return sum(p.impedance(s) for p in self.parts)


@dataclass(frozen=True)
class ParallelCombo:
    parts: tuple

    def __init__(self, *parts):
        object.__setattr__(self, "parts", tuple(parts))

    def impedance(self, s):
        y = sum(1.0 / p.impedance(s) for p in self.parts)
        return 1.0 / y


Branch = Union[R, L, C, SeriesCombo, ParallelCombo]


def _leaves(branch):
    if isinstance(branch, (SeriesCombo, ParallelCombo)):
        for p in branch.parts:
            yield from _leaves(p)
    else:
        yield branch


@dataclass(frozen=True)
class LadderElement:
    placement: Literal["series", "shunt"]
    branch: Branch


@dataclass(frozen=True)
class LadderNetwork:
    elements: tuple = field(default_factory=tuple)

    def __post_init__(self):
        els = tuple(self.elements)
        if not els:
            raise ConfigError("a ladder needs at least one element")
        for el in els:
            if el.placement not in ("series", "shunt"):
                raise ConfigError(f"unknown placement {el.placement!r}")
            for leaf in _leaves(el.branch):
                if not (math.isfinite(leaf.value) and leaf.value > 0):
                    raise ConfigError(f"element values must be positive and finite, got {leaf!r}")
        object.__setattr__(self, "elements", els)

    @property
    def is_lossless(self) -> bool:
        return all(not isinstance(leaf, R) for el in self.elements for leaf in _leaves(el.branch))


def _s(f):
    f = np.asarray(f, dtype=float)
    if np.any(~(f > 0)):
        raise DomainError("frequency must be > 0")
    return 1j * TWO_PI * f


def ladder_abcd(net: LadderNetwork, f) -> np.ndarray:
    """Chain matrix of the ladder, shape (2, 2) or (n, 2, 2) for an array of f."""
    s = _s(f)
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    out = np.zeros((s.size, 2, 2), dtype=complex)
    out[:, 0, 0] = out[:, 1, 1] = 1.0
    for el in net.elements:
        z = el.branch.impedance(s)
        m = np.zeros_like(out)
        m[:, 0, 0] = m[:, 1, 1] = 1.0
        if el.placement == "series":
            m[:, 0, 1] = z
        else:
            m[:, 1, 0] = 1.0 / z
        out = out @ m
    return out[0] if scalar else out


def terminated_impedance(abcd: np.ndarray, z_load):
    """Input impedance of a two-port terminated in ``z_load``."""
    a, b, c, d = abcd[..., 0, 0], abcd[..., 0, 1], abcd[..., 1, 0], abcd[..., 1, 1]
    return (a * z_load + b) / (c * z_load + d)


# -- closed forms -------------------------------------------------------------

def zin_degenerated(t: TransistorSmallSignal, Ls: float, Lg: float, f):
    """Input impedance of the source-degenerated device seen through Lg.

    Zin = 1/(jw(Cgs+Cp)) + jw(Ls+Lg) + gm*Ls/(Cgs+Cp). The real part does not
    depend on frequency.
    """
    cin = t.Cin
    if cin == 0:
        raise SingularityError("Cgs + Cp = 0")
    w = TWO_PI * np.asarray(f, dtype=float)
    if np.any(~(w > 0)):
        raise DomainError("frequency must be > 0")
    r = t.gm * Ls / cin
    x = w * (Ls + Lg) - 1.0 / (w * cin)
    z = np.asarray(r + 1j * x)
    return complex(z) if z.ndim == 0 else z


def series_resonance(t: TransistorSmallSignal, Ls: float, Lg: float) -> float:
    return 1.0 / (TWO_PI * math.sqrt((Ls + Lg) * t.Cin))


def degenerated_ladder(t: TransistorSmallSignal, Ls: float, Lg: float) -> LadderNetwork:
    """The degenerated input as three series ladder terms (use with a short)."""
    return LadderNetwork((
        LadderElement("series", L(Ls + Lg)),
        LadderElement("series", C(t.Cin)),
        LadderElement("series", R(t.gm * Ls / t.Cin)),
    ))


def input_network(spec: MatchingNetworkSpec) -> LadderNetwork:
    """Source-side ladder up to (and including) Lg."""
    return LadderNetwork((
        LadderElement("series", SeriesCombo(L(spec.L1), C(spec.C1))),
        LadderElement("shunt", ParallelCombo(L(spec.L2), C(spec.C2))),
        LadderElement("series", L(spec.Lg)),
    ))


def input_impedance(spec: MatchingNetworkSpec, t: TransistorSmallSignal, f):
    """Impedance looking into the full matched input from the source."""
    zt = zin_degenerated(t, spec.Ls, 0.0, f)
    return terminated_impedance(ladder_abcd(input_network(spec), f), zt)


def input_match_sweep(spec: MatchingNetworkSpec, t: TransistorSmallSignal, g) -> np.ndarray:
    """|S11| in dB over a grid (FrequencyGrid or array), floored at -120 dB."""
    f = grid_values(g) if isinstance(g, FrequencyGrid) else np.asarray(g, dtype=float)
    zin = input_impedance(spec, t, f)
    return gamma_db(reflection_coefficient(zin, spec.Rs))


def chebyshev_ripple_to_gamma(rho_p: float) -> float:
    """|Gamma| from the in-band ripple factor: Gamma^2 = 1 - 1/rho_p."""
    if not rho_p >= 1:
        raise DomainError(f"ripple factor must be >= 1, got {rho_p!r}")
    return math.sqrt(1.0 - 1.0 / rho_p)


def gamma_to_chebyshev_ripple(gamma: float) -> float:
    if not 0 <= gamma < 1:
        raise DomainError(f"|Gamma| must be in [0, 1), got {gamma!r}")
    return 1.0 / (1.0 - gamma * gamma)


def filter_transfer(spec: MatchingNetworkSpec, t: TransistorSmallSignal, f):
    """Doubly terminated transfer W = 2*Rs*I_gate/V_source of the input ladder.

    Normalised so |W|^2 = 1 - |Gamma|^2 for a lossless ladder when the device
    resistance equals Rs.
    """
    abcd = ladder_abcd(input_network(spec), f)
    zt = zin_degenerated(t, spec.Ls, 0.0, f)
    a, b, c, d = abcd[..., 0, 0], abcd[..., 0, 1], abcd[..., 1, 0], abcd[..., 1, 1]
    i_gate = 1.0 / (a * zt + b + spec.Rs * (c * zt + d))
    return 2.0 * spec.Rs * i_gate


def load_impedance(load: LnaLoadSpec, f):
    s = _s(f)
    den = 1.0 + s * load.Rd * load.Cout + s * s * load.Ld * load.Cout
    return load.Rd * (1.0 + s * load.Ld / load.Rd), den


def lna_gain(spec: MatchingNetworkSpec, t: TransistorSmallSignal, load: LnaLoadSpec, f):
    """Complex voltage gain v_out / v_in of the cascode LNA.

    -gm W(s) / (s (Cgs+Cp) Rs) * Rd (1 + s Ld/Rd) / (1 + s Rd Cout + s^2 Ld Cout),
    with W from :func:`filter_transfer`. An undamped load pole landing exactly
    on a sweep point yields NaN with a warning instead of raising.
    """
    s = _s(f)
    cin = t.Cin
    if cin == 0:
        raise SingularityError("Cgs + Cp = 0")
    w = filter_transfer(spec, t, f)
    num, den = load_impedance(load, f)
    with np.errstate(divide="ignore", invalid="ignore"):
        zl = np.where(den == 0, np.nan + 0j, num / np.where(den == 0, 1.0, den))
    if np.any(den == 0):
        warnings.warn("LNA load resonance falls exactly on a sweep point", RuntimeWarning)
    gain = -t.gm * w / (s * cin * spec.Rs) * zl
    return complex(gain) if np.ndim(gain) == 0 else gain


@dataclass(frozen=True)
class NoiseFigureProfile:
    """Piecewise NF table, interpolated linearly in (log f, NF dB)."""

    frequencies: tuple = (2.1e9, 6.7e9)
    nf_db: tuple = (2.5, 5.0)

    def __post_init__(self):
        f = tuple(float(v) for v in self.frequencies)
        nf = tuple(float(v) for v in self.nf_db)
        if len(f) < 2 or len(f) != len(nf):
            raise ConfigError("NF profile needs >= 2 matching frequency/NF entries")
        if any(v <= 0 for v in f) or any(b <= a for a, b in zip(f, f[1:])):
            raise ConfigError("NF profile frequencies must be positive and increasing")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "nf_db", nf)

    @property
    def domain(self):
        return self.frequencies[0], self.frequencies[-1]


def nf_spot(f, nf_profile: NoiseFigureProfile = NoiseFigureProfile()):
    ff = np.asarray(f, dtype=float)
    lo, hi = nf_profile.domain
    if np.any((ff < lo) | (ff > hi)):
        raise RangeError(f"frequency outside NF profile domain [{lo:g}, {hi:g}] Hz")
    out = np.interp(np.log(ff), np.log(nf_profile.frequencies), nf_profile.nf_db)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LnaSweep:
    f: np.ndarray
    zin: np.ndarray
    s11_db: np.ndarray
    gain_db: np.ndarray
    nf_db: np.ndarray  # NaN outside the NF profile domain


def lna_sweep(spec: MatchingNetworkSpec, t: TransistorSmallSignal, load: LnaLoadSpec, g,
              nf_profile: NoiseFigureProfile = NoiseFigureProfile()) -> LnaSweep:
    f = grid_values(g) if isinstance(g, FrequencyGrid) else np.asarray(g, dtype=float)
    zin = input_impedance(spec, t, f)
    s11 = gamma_db(reflection_coefficient(zin, spec.Rs))
    gain = 20.0 * np.log10(np.abs(lna_gain(spec, t, load, f)))
    lo, hi = nf_profile.domain
    inside = (f >= lo) & (f <= hi)
    nf = np.full(f.shape, np.nan)
    if inside.any():
        nf[inside] = nf_spot(f[inside], nf_profile)
    return LnaSweep(f, zin, s11, gain, nf)
