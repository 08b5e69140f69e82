"""Run configuration: dotted ``key = value`` text, named profiles, validation.

Every key has a schema entry; unknown keys, duplicate keys and values that
violate a block's invariants are reported as :class:`ConfigError` carrying
the dotted key path.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from . import chain, dco, netsolve, specan, txblocks
from .errors import ChainLabError, ConfigError
from .rfcore import FrequencyGrid

PROFILE_ENV = "UWB_CHAINLAB_PROFILE"


def _float(text):
    return float(text)


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


def _floats(text):
    return tuple(float(p) for p in str(text).split(",") if p.strip())


def _str(text):
    return str(text).strip()


def _float_or_derived(text):
    t = str(text).strip()
    return t if t == "derived" else float(t)


# key -> (parser, default)
SCHEMA = {
    "run.seed": (_int, 0),

    "grid.start": (_float, 2e9),
    "grid.stop": (_float, 6e9),
    "grid.points": (_int, 4001),
    "grid.spacing": (_str, "linear"),

    "lna.L1": (_float, 1.375e-9),
    "lna.C1": (_float, 1.08e-12),
    "lna.L2": (_float, 3e-9),
    "lna.C2": (_float, 0.1e-12),
    "lna.Lg": (_float, 0.2e-9),
    "lna.Ls": (_float, 1e-9),
    "lna.Rs": (_float, 50.0),
    "lna.Ld": (_float, 1.75e-9),
    "lna.Rd": (_float, 40.0),
    "lna.Cout": (_float, 0.3e-12),
    "lna.Cgs": (_float, 0.2e-12),
    "lna.Cp": (_float, 1.38e-12),
    "lna.gm": (_float_or_derived, "derived"),
    "lna.nf_frequencies": (_floats, (2.1e9, 6.7e9)),
    "lna.nf_db": (_floats, (2.5, 5.0)),
    "lna.budget_gain_db": (_floats, (9.0, 9.0)),

    "dco.L": (_float, 2e-9),
    "dco.Q": (_float, 10.0),
    "dco.targets": (_floats, dco.DEFAULT_CODE_FREQUENCIES),
    "dco.varactor_Cmin": (_float, 20e-15),
    "dco.varactor_Cmax": (_float, 60e-15),
    "dco.amplitude": (_float, 1.1),
    "dco.Cgd": (_floats, (10e-15,) * 4),
    "dco.Cgs": (_floats, (20e-15,) * 4),
    "dco.hd2_dbc": (_float, -60.0),
    "dco.hd3_dbc": (_float, -38.0),
    "dco.code": (_int, 2),
    "dco.vfine_points": (_int, 11),
    "dco.pn_target_dbc": (_float, -128.0),
    "dco.pn_offset": (_float, 1e6),
    "dco.corner_fc": (_float, 10e3),
    "dco.Psig": (_float, 3e-3),
    "dco.temperature": (_float, 290.0),
    "dco.pn_start": (_float, 1e3),
    "dco.pn_stop": (_float, 100e6),
    "dco.pn_points": (_int, 51),
    "dco.fft_size": (_int, 2 ** 16),
    "dco.averaging": (_int, 4),
    "dco.window": (_str, "hann"),

    "pulse.width": (_float, 5e-9),
    "pulse.corner": (_float, 400e6),
    "pulse.stages": (_int, 3),
    "pulse.amplitude": (_float, 0.2),
    "pulse.sample_rate": (_float, 102.4e9),
    "pulse.fft_size": (_int, 2 ** 16),
    "pulse.band_lo": (_float, 0.9e9),
    "pulse.band_hi": (_float, 1.1e9),
    "pulse.mask": (_str, "pulse_baseband_illustrative"),

    "mixer.conversion_gain_db": (_float, 1.2),
    "mixer.lo_model": (_str, "hard_switching"),
    "mixer.a3": (_float, txblocks.CALIBRATED_A3),
    "mixer.nf_db": (_float, 11.2),
    "mixer.if_freq": (_float, 500e6),
    "mixer.lo_freq": (_float, 2e9),
    "mixer.if_amplitude": (_float, 1.0),
    "mixer.max_order": (_int, 3),
    "mixer.sample_rate": (_float, txblocks.TONE_TEST_SAMPLE_RATE),
    "mixer.fft_size": (_int, 2 ** 16),
    "mixer.averaging": (_int, 4),

    "tx.code": (_int, 2),
    "tx.vfine": (_float, 0.5),
    "tx.sample_rate": (_float, chain.TX_SAMPLE_RATE),
    "tx.samples": (_int, chain.TX_SAMPLES),
    "tx.lo_model": (_str, "ideal_sine"),
    "tx.mask": (_str, "fcc_uwb_illustrative"),

    "rx.f": (_float, 2.1e9),

    "power.DCO": (_float, 6.0),
    "power.mixer": (_float, 12.0),
    "power.LNA": (_float, 11.0),
    "power.total": (_float, 50.0),
}

PROFILES = {
    "default": {},
    # square-wave LO in the transmitter; its 3*LO image violates the RF mask
    "tx-hard-switching": {"tx.lo_model": "hard_switching"},
}


@dataclass(frozen=True)
class RunConfig:
    profile: str
    values: dict
    out_dir: Path | None = None
    sources: tuple = field(default=())

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self) -> int:
        return self.values["run.seed"]

    def canonical_text(self) -> str:
        """Sorted, fully resolved ``key = value`` listing; hashed into manifests."""
        lines = [f"profile = {self.profile}"]
        for key in sorted(self.values):
            lines.append(f"{key} = {_render(self.values[key])}")
        return "\n".join(lines) + "\n"


def _render(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(repr(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def parse_text(text: str, origin: str = "<config>") -> dict:
    """Parse ``key = value`` lines; values stay raw strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw!r}")
        if key in out:
            raise ConfigError(f"{origin}:{lineno}: duplicate key", key=key)
        out[key] = value.strip()
    return out


def _coerce(key, raw):
    if key not in SCHEMA:
        raise ConfigError("unknown configuration key", key=key)
    parser, _ = SCHEMA[key]
    if not isinstance(raw, str):
        return raw
    try:
        return parser(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {raw!r}: {exc}", key=key) from None


def load(path=None, overrides: dict | None = None, profile: str | None = None,
         out_dir=None, text: str | None = None) -> RunConfig:
    """Resolve defaults <- profile <- config file <- overrides, then validate."""
    file_vals = {}
    sources = []
    if path is not None:
        text = Path(path).read_text()
        sources.append(str(path))
    if text is not None:
        file_vals = parse_text(text, str(path) if path else "<config>")
    name = file_vals.pop("profile", None) or profile or os.environ.get(PROFILE_ENV) or "default"
    if name not in PROFILES:
        raise ConfigError(f"unknown profile {name!r}; choose from {', '.join(PROFILES)}", key="profile")
    values = {k: default for k, (_, default) in SCHEMA.items()}
    for layer in (PROFILES[name], file_vals, overrides or {}):
        for key, raw in layer.items():
            values[key] = _coerce(key, raw)
    rc = RunConfig(name, values, Path(out_dir) if out_dir else None, tuple(sources))
    validate(rc)
    return rc


def parse_overrides(items) -> dict:
    """``["a.b=1", ...]`` from the command line into a dict."""
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        out[key.strip()] = value.strip()
    return out


@contextmanager
def _keyed(prefix: str, aliases: dict | None = None):
    """Re-raise block validation errors under the dotted config key."""
    aliases = aliases or {}
    try:
        yield
    except ConfigError as exc:
        if exc.key is not None and "." in str(exc.key):
            raise
        key = aliases.get(exc.key, f"{prefix}.{exc.key}") if exc.key else prefix
        raise ConfigError(exc.detail, key=key) from None
    except ChainLabError as exc:
        raise ConfigError(str(exc), key=prefix) from None


# -- builders: config values -> validated block objects ------------------------

def grid(rc: RunConfig) -> FrequencyGrid:
    with _keyed("grid"):
        return FrequencyGrid(rc["grid.start"], rc["grid.stop"], rc["grid.points"], rc["grid.spacing"])


def matching_spec(rc: RunConfig) -> netsolve.MatchingNetworkSpec:
    names = ("L1", "C1", "L2", "C2", "Lg", "Ls", "Ld", "Rd", "Rs")
    with _keyed("lna"):
        return netsolve.MatchingNetworkSpec(**{n: rc[f"lna.{n}"] for n in names})


def transistor(rc: RunConfig) -> netsolve.TransistorSmallSignal:
    spec = matching_spec(rc)
    with _keyed("lna"):
        if rc["lna.gm"] == "derived":
            return netsolve.derived_transistor(spec, rc["lna.Cgs"], rc["lna.Cp"])
        return netsolve.TransistorSmallSignal(rc["lna.gm"], rc["lna.Cgs"], rc["lna.Cp"])


def lna_load(rc: RunConfig) -> netsolve.LnaLoadSpec:
    with _keyed("lna"):
        return netsolve.LnaLoadSpec(rc["lna.Ld"], rc["lna.Rd"], rc["lna.Cout"])


def nf_profile(rc: RunConfig) -> netsolve.NoiseFigureProfile:
    with _keyed("lna.nf_frequencies"):
        return netsolve.NoiseFigureProfile(rc["lna.nf_frequencies"], rc["lna.nf_db"])


def lna_profile(rc: RunConfig) -> chain.LnaProfile:
    prof = nf_profile(rc)
    with _keyed("lna", {"gain_db": "lna.budget_gain_db"}):
        return chain.LnaProfile(prof, rc["lna.budget_gain_db"])


def parasitics(rc: RunConfig) -> dco.ParasiticQuad:
    with _keyed("dco.Cgd"):
        return dco.ParasiticQuad(rc["dco.Cgd"], rc["dco.Cgs"])


def tank(rc: RunConfig) -> dco.TankConfig:
    par = parasitics(rc)
    with _keyed("dco", {"bank": "dco.targets", "varactor": "dco.varactor_Cmin", "Idc": "dco.amplitude"}):
        if not rc["dco.amplitude"] > 0:
            raise ConfigError("must be > 0", key="amplitude")
        var = dco.Varactor(rc["dco.varactor_Cmin"], rc["dco.varactor_Cmax"])
        try:
            return dco.design_tank(rc["dco.targets"], rc["dco.L"], rc["dco.Q"], var, par, rc["dco.amplitude"])
        except ConfigError as exc:
            if exc.key is None:
                raise ConfigError(exc.detail, key="targets") from None
            raise


def phase_noise_model(rc: RunConfig) -> dco.PhaseNoiseModel:
    t = tank(rc)
    with _keyed("dco", {"noise_factor_F": "dco.pn_target_dbc"}):
        if not rc["dco.pn_offset"] > 0:
            raise ConfigError("must be > 0", key="pn_offset")
        return dco.calibrate_noise_factor(rc["dco.pn_target_dbc"], max(rc["dco.targets"]), rc["dco.pn_offset"],
                                          t.Q, rc["dco.Psig"], rc["dco.corner_fc"], rc["dco.temperature"])


def pn_grid(rc: RunConfig) -> FrequencyGrid:
    with _keyed("dco", {"start": "dco.pn_start", "stop": "dco.pn_stop", "points": "dco.pn_points"}):
        return FrequencyGrid(rc["dco.pn_start"], rc["dco.pn_stop"], rc["dco.pn_points"], "logarithmic")


def dco_output(rc: RunConfig) -> dco.DcoOutputSpec:
    t = tank(rc)
    with _keyed("dco", {"f0": "dco.code"}):
        code = rc["dco.code"]
        if not 0 <= code < len(t.bank):
            raise ConfigError(f"code outside 0..{len(t.bank) - 1}", key="code")
        f0 = dco.tune(t, code, 0.5)
        return dco.DcoOutputSpec(dco.tank_amplitude(t, f0), f0, rc["dco.hd2_dbc"], rc["dco.hd3_dbc"])


def dco_psd(rc: RunConfig) -> specan.PsdConfig:
    with _keyed("dco"):
        return specan.PsdConfig(rc["dco.window"], rc["dco.fft_size"], rc["dco.averaging"])


def pulse_config(rc: RunConfig) -> txblocks.PulseShaperConfig:
    aliases = {"pulse_width": "pulse.width", "stage_corner": "pulse.corner"}
    with _keyed("pulse", aliases):
        return txblocks.PulseShaperConfig(rc["pulse.width"], rc["pulse.corner"], rc["pulse.stages"],
                                          rc["pulse.amplitude"])


def mixer_config(rc: RunConfig, lo_model: str | None = None) -> txblocks.GilbertMixerConfig:
    key = "mixer.lo_model" if lo_model is None else "tx.lo_model"
    with _keyed("mixer", {"lo_model": key}):
        return txblocks.GilbertMixerConfig(rc["mixer.conversion_gain_db"], lo_model or rc["mixer.lo_model"],
                                           rc["mixer.a3"], rc["mixer.nf_db"])


def tx_config(rc: RunConfig) -> chain.TxChainConfig:
    pulse = pulse_config(rc)
    mixer = mixer_config(rc, rc["tx.lo_model"])
    t = tank(rc)
    aliases = {"dco_code": "tx.code", "hd2_dbc": "dco.hd2_dbc", "hd3_dbc": "dco.hd3_dbc"}
    with _keyed("tx", aliases):
        return chain.TxChainConfig(pulse, mixer, rc["tx.code"], rc["tx.vfine"], rc["tx.sample_rate"],
                                   rc["tx.samples"], t, rc["dco.hd2_dbc"], rc["dco.hd3_dbc"])


def resolve_mask(name_or_path: str, key: str) -> specan.SpectralMask:
    with _keyed(key):
        p = Path(name_or_path)
        if p.suffix == ".mask" or p.exists():
            if not p.exists():
                raise ConfigError(f"mask file {name_or_path!r} not found")
            return specan.load_mask(p)
        if not specan.default_mask_path(name_or_path).exists():
            raise ConfigError(f"no shipped mask named {name_or_path!r}")
        return specan.default_mask(name_or_path)


def power_blocks(rc: RunConfig) -> dict:
    blocks = {name: rc[f"power.{name}"] for name in ("DCO", "mixer", "LNA")}
    for name, mw in blocks.items():
        if not mw >= 0:
            raise ConfigError("block power must be >= 0", key=f"power.{name}")
    return blocks


def validate(rc: RunConfig) -> None:
    """Build every block once so invariant violations surface at load time."""
    grid(rc)
    transistor(rc)
    lna_load(rc)
    lna_profile(rc)
    dco_output(rc)
    pn_grid(rc)
    dco_psd(rc)
    pulse_config(rc)
    mixer_config(rc)
    tx_config(rc)
    resolve_mask(rc["tx.mask"], "tx.mask")
    resolve_mask(rc["pulse.mask"], "pulse.mask")
    power_blocks(rc)
    if not rc["power.total"] >= 0:
        raise ConfigError("must be >= 0", key="power.total")
    for section, n_key in (("pulse", "pulse.fft_size"), ("tx", "tx.samples")):
        fs = rc[f"{section}.sample_rate"]
        n_on = int(round(rc["pulse.width"] * fs))
        if n_on < 16:
            raise ConfigError(f"pulse spans {n_on} samples, need >= 16", key=f"{section}.sample_rate")
        if not fs >= 20.0 * rc["pulse.corner"]:
            raise ConfigError("must be >= 20x pulse.corner", key=f"{section}.sample_rate")
        if rc[n_key] < 8 * n_on:
            raise ConfigError(f"record must hold 8 pulse widths ({8 * n_on} samples)", key=n_key)
    if not rc["pulse.band_hi"] > rc["pulse.band_lo"] >= 0:
        raise ConfigError("need 0 <= band_lo < band_hi", key="pulse.band_hi")
    with _keyed("mixer", {"if_max_freq": "mixer.if_freq"}):
        if not (rc["mixer.if_freq"] > 0 and rc["mixer.lo_freq"] > rc["mixer.if_freq"]):
            raise ConfigError("need 0 < if_freq < lo_freq", key="if_freq")
        if rc["mixer.max_order"] < 1 or rc["mixer.max_order"] % 2 == 0:
            raise ConfigError("must be odd and >= 1", key="max_order")
        if not rc["mixer.sample_rate"] > 2.0 * 3.0 * (rc["mixer.lo_freq"] + rc["mixer.if_freq"]):
            raise ConfigError("sample rate cannot carry 3*LO + 3*IF", key="sample_rate")
        specan.PsdConfig("hann", rc["mixer.fft_size"], rc["mixer.averaging"])
