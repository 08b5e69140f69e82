"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest, or directly with ``python tests/test_acceptance.py`` for
the summary table alone.
"""

import contextlib
import io
import math
import sys
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest

from uwb_chainlab import chain, dco, netsolve as ns, specan, txblocks as tx
from uwb_chainlab.cli import main
from uwb_chainlab.rfcore import FrequencyGrid, TimeSeries

mpmath.mp.dps = 40


def _line(n, ok, detail):
    return f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def _rel(a, b):
    return abs(a - b) / abs(b)


# 1: closed forms against arbitrary-precision evaluators
def _cpar_mp(cgd, cgs):
    b = [2 * mpmath.mpf(d) + mpmath.mpf(s) for d, s in zip(cgd, cgs)]
    return 1 / (1 / b[3] + 1 / b[2]) + 1 / (1 / b[1] + 1 / b[0])


def check_1():
    rng = np.random.default_rng(2024)
    n = 10_000
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n):
        cgd, cgs = rng.uniform(0.1e-15, 100e-15, 4), rng.uniform(0.1e-15, 100e-15, 4)
        L, C, I, R = rng.uniform(0.1e-9, 20e-9), rng.uniform(10e-15, 10e-12), rng.uniform(1e-4, 0.05), \
            rng.uniform(10, 5000)
        cpar = dco.parasitic_capacitance(dco.ParasiticQuad(tuple(cgd), tuple(cgs)))
        worst = max(worst,
                    _rel(cpar, _cpar_mp(cgd, cgs)),
                    _rel(dco.oscillation_frequency(L, C, cpar),
                         1 / (2 * mpmath.pi * mpmath.sqrt(mpmath.mpf(L) * (mpmath.mpf(C) + mpmath.mpf(cpar))))),
                    _rel(dco.amplitude(I, R), 4 * mpmath.mpf(I) * mpmath.mpf(R) / mpmath.pi))
    # includes the oracle's own time, so this bounds the library from above
    elapsed = time.perf_counter() - t0
    ok = float(worst) <= 1e-9 and elapsed < 5.0
    return ok, f"worst rel err {float(worst):.2e} over {n} draws (<= 1e-9), {elapsed:.2f} s (< 5 s)"


# 2: default tuning and monotonicity
def check_2():
    tank = dco.design_tank()
    errs = [_rel(dco.tune(tank, c, 0.5), f) for c, f in enumerate((2e9, 4e9, 6e9))]
    rng = np.random.default_rng(7)
    v = np.linspace(0, 1, 21)
    bad = 0
    for _ in range(1000):
        k = int(rng.integers(2, 7))
        bank = tuple(sorted(rng.choice(np.arange(0, 5000), k, replace=False) * 1e-15, reverse=True))
        cmin = rng.uniform(1e-15, 100e-15)
        t = dco.TankConfig(rng.uniform(0.5e-9, 5e-9), 10.0, bank, dco.Varactor(cmin, cmin + rng.uniform(1e-15, 200e-15)),
                           1e-3)
        in_v = all(np.all(np.diff(dco.tune(t, c, v)) > 0) for c in range(k))
        vf = float(rng.uniform())
        in_code = np.all(np.diff([dco.tune(t, c, vf) for c in range(k)]) > 0)
        bad += not (in_v and in_code)
    ok = max(errs) <= 0.01 and bad == 0
    return ok, f"max tuning error {max(errs) * 100:.3f}% (<= 1%), {bad}/1000 non-monotone configs"


# 3: DCO output reproduction
def check_3():
    t0 = time.perf_counter()
    _, res = dco.output_spectrum(dco.DcoOutputSpec(1.1, 6e9))
    pn = dco.phase_noise(dco.calibrate_noise_factor(), 6e9, 1e6)
    tank = dco.design_tank()
    amp = dco.amplitude(tank.Idc, dco.parallel_resistance(6e9, tank.L, tank.Q))
    elapsed = time.perf_counter() - t0
    ok = abs(res.db - 38) <= 0.5 and abs(pn + 128) <= 0.5 and _rel(amp, 1.1) <= 0.01 and elapsed < 10
    return ok, (f"SFDR {res.db:.3f} dB (38 +/- 0.5), L(1 MHz) {pn:.3f} dBc/Hz (-128 +/- 0.5), "
                f"A {amp:.4f} V at Idc {tank.Idc * 1e3:.4f} mA (1.1 +/- 1%), {elapsed:.2f} s (< 10 s)")


# 4: LNA input match
def check_4():
    t0 = time.perf_counter()
    spec = ns.MatchingNetworkSpec()
    t = ns.derived_transistor(spec)
    wide = ns.input_match_sweep(spec, t, FrequencyGrid(2e9, 6e9, 4001))
    core = ns.input_match_sweep(spec, t, FrequencyGrid(2.5e9, 6e9, 3501))
    f = np.random.default_rng(4).uniform(2e9, 6e9, 1000)
    closed = ns.zin_degenerated(t, spec.Ls, spec.Lg, f)
    ladder = ns.terminated_impedance(ns.ladder_abcd(ns.degenerated_ladder(t, spec.Ls, spec.Lg), f), 0.0)
    oracle = float(np.max(np.abs(ladder - closed) / np.abs(closed)))
    elapsed = time.perf_counter() - t0
    ok = core.max() < -10 and wide.min() <= -20 and oracle <= 1e-9 and elapsed < 5
    return ok, (f"S11 max over [2.5, 6] GHz {core.max():.2f} dB (< -10), min {wide.min():.2f} dB (<= -20), "
                f"Zin oracle rel err {oracle:.1e} (<= 1e-9), {elapsed:.2f} s (< 5 s)")


# 5: LNA gain window and load spur
def check_5():
    spec, load = ns.MatchingNetworkSpec(), ns.LnaLoadSpec()
    g = 20 * np.log10(np.abs(ns.lna_gain(spec, ns.derived_transistor(spec), load,
                                         FrequencyGrid(2e9, 6e9, 4001).values())))
    ok = g.min() >= 6 and g.max() <= 12 and load.spur_resonance > 6e9
    return ok, (f"gain {g.min():.2f}..{g.max():.2f} dB (within [6, 12]), "
                f"load spur {load.spur_resonance / 1e9:.3f} GHz (> 6 GHz)")


# 6: pulse shaping suppression
def check_6():
    t0 = time.perf_counter()
    cmp_ = chain.pulse_comparison(tx.PulseShaperConfig(pulse_width=5e-9), 102.4e9, 2 ** 16, (0.9e9, 1.1e9))
    elapsed = time.perf_counter() - t0
    ok = cmp_.suppression_db >= 10 and elapsed < 5
    return ok, (f"[0.9, 1.1] GHz: rect {cmp_.rect_band_db:.2f} dBr, shaped {cmp_.shaped_band_db:.2f} dBr, "
                f"gap {cmp_.suppression_db:.2f} dB (>= 10), {elapsed:.2f} s (< 5 s)")


def _lvl(rf, freqs):
    spec = np.abs(np.fft.rfft(rf.samples)) * 2 / rf.samples.size
    f = np.fft.rfftfreq(rf.samples.size, 1 / rf.sample_rate)
    return [spec[int(np.argmin(np.abs(f - x)))] for x in freqs]


# 7: mixer spurs
def check_7():
    rf = tx.mixer_tone_test(tx.GilbertMixerConfig(a3=0.0), 300e6, 6e9, n=2 ** 16)
    main_, lo, hi = _lvl(rf, [6.3e9, 17.7e9, 18.3e9])
    spur = [20 * math.log10(lo / main_), 20 * math.log10(hi / main_)]
    cfg = tx.GilbertMixerConfig()
    s = specan.psd(tx.mixer_tone_test(cfg, 300e6, 6e9), specan.PsdConfig())
    sfdr = specan.sfdr(s, 6.3e9, 200e6, search_band=(0, 12e9), also_exclude=[5.7e9]).db
    zero = tx.upconvert(cfg, TimeSeries(tx.TONE_TEST_SAMPLE_RATE, np.zeros(2 ** 16)), 6e9, if_max_freq=0.0)
    leak = float(np.max(np.abs(zero.samples)))
    leak_dbc = 20 * math.log10(leak / main_) if leak > 0 else -math.inf
    ok = all(abs(x + 9.54) <= 0.2 for x in spur) and abs(sfdr - 23) <= 1 and leak_dbc < -100
    return ok, (f"3LO-/+IF {spur[0]:.3f}/{spur[1]:.3f} dBc (-9.54 +/- 0.2), in-band SFDR {sfdr:.2f} dB "
                f"(23 +/- 1), zero-IF output {leak_dbc:.1f} dBc (< -100)")


# 8: receive cascade
def check_8():
    nf = chain.friis_cascade([chain.StageNoiseSpec("LNA", 9.0, 2.5),
                              chain.StageNoiseSpec("mixer", 1.2, 11.2)]).total_nf_db
    oracle = 10 * math.log10(10 ** 0.25 + (10 ** 1.12 - 1) / 10 ** 0.9)
    ok = abs(nf - 5.20) <= 0.05 and abs(nf - oracle) < 1e-12
    return ok, f"total NF {nf:.4f} dB (5.20 +/- 0.05), hand oracle {oracle:.4f} dB"


# 9: transmit chain
def check_9():
    t0 = time.perf_counter()
    cfg = chain.TxChainConfig()
    r = chain.run_tx_chain(cfg)
    elapsed = time.perf_counter() - t0
    peak = chain.spectral_peak_frequency(r.spectrum)
    env = chain.smoothed_envelope(r.waveform, 1 / (4 * cfg.pulse.pulse_width))
    mono = chain.buildup_is_monotone(env, cfg.sample_rate, r.lo_freq)
    rep = specan.mask_check(r.spectrum, specan.default_mask())
    bin_w = r.spectrum.bin_width
    ok = abs(peak - 6e9) <= bin_w and mono and rep.passed and elapsed < 30 and cfg.samples == 2 ** 20
    return ok, (f"peak {peak / 1e9:.5f} GHz (within {bin_w / 1e3:.2f} kHz of 6 GHz), monotone {mono}, "
                f"mask {rep.verdict} (worst margin {rep.worst_margin:.2f} dB), {elapsed:.2f} s at "
                f"2^{int(math.log2(cfg.samples))} samples (< 30 s)")


# 10: byte-identical reruns
def check_10(tmp):
    tmp = Path(tmp)
    cmds = [["lna"], ["dco"], ["pulse"], ["mixer"], ["tx"], ["rx"]]
    diffs, codes = [], []
    with contextlib.redirect_stdout(io.StringIO()):
        for run in ("a", "b"):
            for c in cmds:
                codes.append(main([*c, "--out", str(tmp / run)]))
            codes.append(main(["mask-check", str(tmp / "a" / "tx" / "spectrum.csv"), "--out", str(tmp / run)]))
    files = sorted(p.relative_to(tmp / "a") for p in (tmp / "a").rglob("*") if p.is_file())
    for rel in files:
        if (tmp / "a" / rel).read_bytes() != (tmp / "b" / rel).read_bytes():
            diffs.append(str(rel))
    ok = not diffs and set(codes) == {0} and len(files) > 0
    return ok, f"{len(files)} files over {len(cmds) + 1} sub-commands, {len(diffs)} differ, exit codes {sorted(set(codes))}"


CHECKS = {n: globals()[f"check_{n}"] for n in range(1, 11)}


@pytest.mark.parametrize("n", sorted(CHECKS))
def test_criterion(n, tmp_path, capsys):
    ok, detail = CHECKS[n](tmp_path) if n == 10 else CHECKS[n]()
    with capsys.disabled():
        print("\n" + _line(n, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    import tempfile

    failed = 0
    for n, fn in CHECKS.items():
        if n == 10:
            with tempfile.TemporaryDirectory() as d:
                ok, detail = fn(d)
        else:
            ok, detail = fn()
        failed += not ok
        print(_line(n, ok, detail))
    sys.exit(1 if failed else 0)
