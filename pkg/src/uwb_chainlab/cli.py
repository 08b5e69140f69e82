"""uwb-chainlab command line: one sub-command per analysis, CSV/JSON reports out."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import chain, config, dco, netsolve, reports, specan, txblocks
from .errors import AnalysisError, ChainLabError, ConfigError, DomainError, RangeError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPLIANCE = 3
EXIT_ANALYSIS = 4


class _Outputs:
    """Collects emitted files so the manifest can list them."""

    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.items = []

    def csv(self, name, columns, rows, meta=None, kind="table"):
        self.items.append((reports.write_csv(self.dir / name, columns, rows, meta), kind))

    def spectrum(self, name, s, meta=None):
        self.items.append((reports.write_spectrum_csv(self.dir / name, s, meta), "spectrum"))

    def json(self, name, doc, kind="report"):
        self.items.append((reports.write_json(self.dir / name, doc), kind))


def cmd_lna(rc, out: _Outputs, args) -> int:
    spec = config.matching_spec(rc)
    t = config.transistor(rc)
    load = config.lna_load(rc)
    sw = netsolve.lna_sweep(spec, t, load, config.grid(rc), config.nf_profile(rc))
    i_min = int(np.argmin(sw.s11_db))
    out.csv("s11.csv", ("f_Hz", "s11_dB"), zip(sw.f, sw.s11_db),
            {"s11_min_dB": float(sw.s11_db[i_min]), "s11_min_f_Hz": float(sw.f[i_min]),
             "s11_max_dB": float(sw.s11_db.max())})
    out.csv("gain.csv", ("f_Hz", "gain_dB"), zip(sw.f, sw.gain_db),
            {"load_resonance_Hz": load.spur_resonance})
    inside = ~np.isnan(sw.nf_db)
    lo, hi = config.nf_profile(rc).domain
    out.csv("nf.csv", ("f_Hz", "nf_dB"), zip(sw.f[inside], sw.nf_db[inside]),
            {"domain_lo_Hz": lo, "domain_hi_Hz": hi})
    out.csv("sweep.csv", ("f_Hz", "Re_Zin", "Im_Zin", "S11_dB", "Gain_dB", "NF_dB"),
            zip(sw.f, sw.zin.real, sw.zin.imag, sw.s11_db, sw.gain_db, sw.nf_db),
            {"gm_S": t.gm, "Cgs_F": t.Cgs, "Cp_F": t.Cp})
    print(f"S11 min {sw.s11_db[i_min]:.2f} dB at {sw.f[i_min] / 1e9:.4f} GHz, "
          f"gain {sw.gain_db.min():.2f}..{sw.gain_db.max():.2f} dB")
    return EXIT_OK


def cmd_dco(rc, out: _Outputs, args) -> int:
    tank = config.tank(rc)
    model = config.phase_noise_model(rc)
    f0 = max(rc["dco.targets"])
    rows = []
    for code in range(len(tank.bank)):
        for v in np.linspace(0.0, 1.0, rc["dco.vfine_points"]):
            f = dco.tune(tank, code, float(v))
            rows.append((code, float(v), f, dco.tank_amplitude(tank, f), dco.phase_noise(model, f, 1e6),
                         dco.total_capacitance(tank, code, float(v))))
    out.csv("tuning.csv", ("code", "vfine", "f_Hz", "A_V", "PN_1MHz_dBc", "C_total_F"), rows,
            {"L_H": tank.L, "Q": tank.Q, "Idc_A": tank.Idc,
             "C_parasitic_F": dco.parasitic_capacitance(tank.parasitics)})

    offsets = config.pn_grid(rc).values()
    out.csv("phase_noise.csv", ("offset_Hz", "L_dBc_Hz"), zip(offsets, dco.phase_noise(model, f0, offsets)),
            {"f0_Hz": f0, "noise_factor": model.noise_factor_F, "corner_Hz": model.corner_fc,
             "L_at_target_offset_dBc_Hz": dco.phase_noise(model, f0, rc["dco.pn_offset"])})

    spec_out = config.dco_output(rc)
    psd_cfg = config.dco_psd(rc)
    s, res = dco.output_spectrum(spec_out, psd_cfg.fft_size, psd_cfg.averaging, psd_cfg.window)
    out.spectrum("spectrum.csv", s, {"f0_Hz": spec_out.f0, "amplitude_V": spec_out.amplitude,
                                     "sfdr_dB": res.db, "spur_f_Hz": res.spur_frequency})
    print(f"DCO {spec_out.f0 / 1e9:.3f} GHz, {spec_out.amplitude:.3f} V, SFDR {res.db:.2f} dB, "
          f"L({rc['dco.pn_offset']:g} Hz) = {dco.phase_noise(model, f0, rc['dco.pn_offset']):.2f} dBc/Hz")
    return EXIT_OK


def cmd_pulse(rc, out: _Outputs, args) -> int:
    p = config.pulse_config(rc)
    band = (rc["pulse.band_lo"], rc["pulse.band_hi"])
    cmp_ = chain.pulse_comparison(p, rc["pulse.sample_rate"], rc["pulse.fft_size"], band)
    n_keep = int(round(8 * p.pulse_width * rc["pulse.sample_rate"]))
    t = cmp_.rect.times[:n_keep]
    out.csv("waveform.csv", ("t_s", "rect_V", "shaped_V"),
            zip(t, cmp_.rect.samples[:n_keep], cmp_.shaped.samples[:n_keep]))
    f = cmp_.rect_spectrum.bin_frequencies
    keep = f <= 10e9
    out.csv("spectrum.csv", ("f_Hz", "rect_dB", "shaped_dB"),
            zip(f[keep], cmp_.rect_spectrum.power[keep], cmp_.shaped_spectrum.power[keep]),
            {"reference": "peak_relative"})
    rise = (txblocks.rise_time(cmp_.rect), txblocks.rise_time(cmp_.shaped))
    obw = (txblocks.occupied_bandwidth(cmp_.rect), txblocks.occupied_bandwidth(cmp_.shaped))
    out.csv("summary.csv", ("metric", "rect", "shaped", "delta"), [
        ("band_power_dBr", cmp_.rect_band_db, cmp_.shaped_band_db, cmp_.suppression_db),
        ("rise_time_s", rise[0], rise[1], rise[1] - rise[0]),
        ("occupied_bw_99_Hz", obw[0], obw[1], obw[1] - obw[0]),
    ], {"band_lo_Hz": band[0], "band_hi_Hz": band[1]})
    mask = config.resolve_mask(rc["pulse.mask"], "pulse.mask")
    rep = specan.mask_check(cmp_.shaped_spectrum, mask)
    out.json("mask_report.json", rep.as_dict())
    print(f"band [{band[0] / 1e9:g}, {band[1] / 1e9:g}] GHz: rect {cmp_.rect_band_db:.2f} dBr, "
          f"shaped {cmp_.shaped_band_db:.2f} dBr, suppression {cmp_.suppression_db:.2f} dB; "
          f"mask {rep.verdict}")
    return _verdict(rep, args)


def cmd_mixer(rc, out: _Outputs, args) -> int:
    cfg = config.mixer_config(rc)
    if_f, lo_f = rc["mixer.if_freq"], rc["mixer.lo_freq"]
    n = rc["mixer.fft_size"] * rc["mixer.averaging"]
    rf = txblocks.mixer_tone_test(cfg, if_f, lo_f, rc["mixer.if_amplitude"], rc["mixer.sample_rate"], n)
    s = specan.psd(rf, specan.PsdConfig("hann", rc["mixer.fft_size"], rc["mixer.averaging"]))
    table = txblocks.mixer_tone_table(cfg, if_f, lo_f, rc["mixer.max_order"], rc["mixer.if_amplitude"])

    def level(freq):
        return float(s.power[int(np.argmin(np.abs(s.bin_frequencies - freq)))])

    ref = level(lo_f + if_f)
    rows = [(i + 1, tone.frequency, tone.level_dbc, level(tone.frequency) - ref,
             tone.lo_order, tone.if_order, tone.sign) for i, tone in enumerate(table)]
    res = specan.sfdr(s, lo_f + if_f, 2.0 * if_f / 3.0, search_band=(0.0, 2.0 * lo_f),
                      also_exclude=[lo_f - if_f])
    out.csv("tones.csv", ("rank", "f_Hz", "predicted_dBc", "measured_dBc", "lo_order", "if_order", "sign"),
            rows, {"if_Hz": if_f, "lo_Hz": lo_f, "lo_model": cfg.lo_model, "a3": cfg.a3})
    out.spectrum("spectrum.csv", s, {"in_band_sfdr_dB": res.db, "spur_f_Hz": res.spur_frequency})
    head = ", ".join(f"{t.frequency / 1e9:g} GHz" for t in table[:2])
    print(f"dominant tones: {head}; in-band SFDR {res.db:.2f} dB")
    return EXIT_OK


def cmd_tx(rc, out: _Outputs, args) -> int:
    cfg = config.tx_config(rc)
    mask = config.resolve_mask(args.mask or rc["tx.mask"], "tx.mask")
    res = chain.run_tx_chain(cfg)
    if res.spectrum is None:
        print("error: transmit output is identically zero; there is no spectrum to analyse",
              file=sys.stderr)
        return EXIT_CONFIG
    env = chain.smoothed_envelope(res.waveform, 1.0 / (4.0 * cfg.pulse.pulse_width))
    monotone = chain.buildup_is_monotone(env, cfg.sample_rate, res.lo_freq)
    peak_f = chain.spectral_peak_frequency(res.spectrum)
    fs = cfg.sample_rate
    n_keep = int(round((res.pulse_start + 3.0 * cfg.pulse.pulse_width) * fs))
    out.csv("waveform.csv", ("t_s", "v_V"), zip(res.waveform.times[:n_keep], res.waveform.samples[:n_keep]),
            {"lo_Hz": res.lo_freq, "envelope_monotone": monotone})
    out.spectrum("spectrum.csv", res.spectrum, {"lo_Hz": res.lo_freq, "peak_f_Hz": peak_f})
    rep = specan.mask_check(res.spectrum, mask)
    out.json("mask_report.json", rep.as_dict())
    print(f"LO {res.lo_freq / 1e9:.4f} GHz, spectral peak {peak_f / 1e9:.4f} GHz, "
          f"monotone build-up {'yes' if monotone else 'no'}, mask {rep.mask_name}: {rep.verdict} "
          f"(worst margin {rep.worst_margin:.2f} dB at {rep.worst_frequency / 1e9:.3f} GHz)")
    return _verdict(rep, args)


def cmd_rx(rc, out: _Outputs, args) -> int:
    f = rc["rx.f"]
    casc = chain.rx_budget(config.lna_profile(rc), config.mixer_config(rc), f)
    out.csv("cascade.csv", ("stage", "added_noise_factor", "cumulative_nf_dB", "cumulative_gain_dB"),
            [(st.name, st.added_noise_factor, st.cumulative_nf_db, st.cumulative_gain_db) for st in casc.stages],
            {"f_Hz": f, "total_nf_dB": casc.total_nf_db, "total_gain_dB": casc.total_gain_db})
    ps = chain.power_summary(config.power_blocks(rc), rc["power.total"])
    out.csv("power.csv", ("block", "power_mW"), list(ps.rows) + [("total", ps.total)])
    print(f"total NF {casc.total_nf_db:.2f} dB, gain {casc.total_gain_db:.2f} dB at {f / 1e9:g} GHz; "
          f"power {ps.total:g} mW")
    return EXIT_OK


def cmd_mask_check(rc, out: _Outputs, args) -> int:
    meta, cols, rows = reports.read_csv(args.spectrum)
    if cols is None or cols[:2] != ["f_Hz", "p_dB"]:
        raise ConfigError(f"{args.spectrum}: expected columns f_Hz,p_dB")
    data = np.array([[float(r[0]), float(r[1])] for r in rows])
    s = specan.Spectrum(data[:, 0], data[:, 1], meta.get("reference", "peak_relative"),
                        float(meta.get("enbw_bins", 1.0)))
    mask = config.resolve_mask(args.mask or rc["tx.mask"], "mask")
    rep = specan.mask_check(s, mask)
    out.json("mask_report.json", rep.as_dict())
    print(f"mask {rep.mask_name}: {rep.verdict} (worst margin {rep.worst_margin:.2f} dB "
          f"at {rep.worst_frequency / 1e9:.3f} GHz)")
    return EXIT_OK if rep.passed else EXIT_COMPLIANCE


def _verdict(rep: specan.MaskReport, args) -> int:
    if args.enforce_mask and not rep.passed:
        print(f"mask {rep.mask_name} violated; failing as requested", file=sys.stderr)
        return EXIT_COMPLIANCE
    return EXIT_OK


COMMANDS = {
    "lna": (cmd_lna, "input match, gain and NF sweeps"),
    "dco": (cmd_dco, "tuning table, phase noise and output spectrum"),
    "pulse": (cmd_pulse, "rectangular vs shaped baseband pulse"),
    "mixer": (cmd_mixer, "single-tone spur table and spectrum"),
    "tx": (cmd_tx, "full transmit chain with mask verdict"),
    "rx": (cmd_rx, "receive noise cascade and power summary"),
    "mask-check": (cmd_mask_check, "check a spectrum CSV against a mask"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--out", type=Path, default=Path("uwb_out"), help="output directory")
    common.add_argument("--points", type=int, help="frequency grid points (overrides grid.points)")
    common.add_argument("--enforce-mask", action="store_true", help="exit 3 when a mask check fails")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key; repeatable")
    common.add_argument("--mask", help="shipped mask name or path to a .mask file")

    p = argparse.ArgumentParser(prog="uwb-chainlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_)
        if name == "mask-check":
            sp.add_argument("spectrum", type=Path, help="spectrum CSV with f_Hz,p_dB columns")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        overrides = config.parse_overrides(args.overrides)
        if args.points is not None:
            overrides["grid.points"] = str(args.points)
        rc = config.load(args.config, overrides, out_dir=args.out)
        out = _Outputs(args.out / args.command)
        fn = COMMANDS[args.command][0]
        code = fn(rc, out, args)
        if out.items:
            reports.write_manifest(out.dir, args.command, rc.canonical_text(), out.items)
        return code
    except (ConfigError, DomainError, RangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AnalysisError, ChainLabError) as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
