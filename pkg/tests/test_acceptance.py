"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines as they
complete.  Criterion 9 processes a full-size link and dominates the runtime.
"""

import time

import numpy as np
import pytest

from fr3scan import (AngularGrid, AntennaElevationGainTable, CalibrationTrace,
                     DistanceWeighting, FrequencyGrid, FrequencyScanTensor,
                     NOMINAL_ANGLES, NOMINAL_GRID, PdpOptions, SubBand,
                     angular_spread, apply_gate_threshold, build_omni, calibrate,
                     compute_pdp, fit_power_law, friis_pl_db)
from fr3scan.directional import DirectionalPdpSet
from fr3scan.engine import process_link_band
from fr3scan.model import CAMPAIGN_LINKS, DEFAULT_GAIN_TABLE
from fr3scan.pdp import PowerDelayProfile
from fr3scan.pipeline import condense_link
from fr3scan.synth import ModelParams, generate_measurement_set

DISTANCES = [l.distance_m for l in CAMPAIGN_LINKS]


def report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {num:>2}] {status}  {name}  {detail}")
    assert ok, f"criterion {num} failed: {name} {detail}"


def test_criterion_1_friis_anchors():
    anchors = [(65.1, 6.5e9, 84.97), (65.1, 13.5e9, 91.32),
               (143.6, 6.5e9, 91.85), (143.6, 13.5e9, 98.20)]
    worst = max(abs(friis_pl_db(d, f) - expect) for d, f, expect in anchors)
    report(1, "Friis anchors within 0.02 dB", worst <= 0.02, f"worst={worst:.4f} dB")


def test_criterion_2_single_path_end_to_end():
    grid = FrequencyGrid(6e9, 7e9, 201)
    angles = AngularGrid((-20.0, 0.0, 20.0), (0.0, 90.0, 180.0, 270.0),
                         (-10.0, 0.0, 10.0))
    link = CAMPAIGN_LINKS[0]
    params = ModelParams(sigma_shadow_db=0.0, as_tx_az=0.0, as_rx_az=0.0,
                         as_rx_el=0.0, seed=12)
    mset, truth = generate_measurement_set(params, grid, angles, [link], n_mpcs=1)
    calibrated = calibrate(mset.tensors[link.rx_id], mset.ota)  # identity reference
    opts = PdpOptions(window="hann", oversample_factor=10)
    br = process_link_band(calibrated.values, grid, SubBand(6e9, 7e9), angles,
                           opts, AntennaElevationGainTable.flat(0.0), "single")
    pl_configured = params.alpha_db + 10 * params.beta * np.log10(link.distance_m)
    pl_err = abs(br.pl_omni_db - pl_configured)
    tap = truth["links"][0]["mpcs"][0]["delay_s"]
    peak_delay = br.maxdir_display.delays_s[int(np.argmax(br.maxdir_display.powers))]
    bin_s = 1.0 / (grid.n_points * opts.oversample_factor * grid.spacing_hz)
    delay_err_bins = abs(peak_delay - tap) / bin_s
    report(2, "single-path delay within one oversampled bin and PL within 0.01 dB",
           pl_err <= 0.01 and delay_err_bins <= 1.0,
           f"pl_err={pl_err:.2e} dB, delay_err={delay_err_bins:.3f} bins")


def test_criterion_3_rmsds_closed_forms():
    from fr3scan import rmsds
    band = SubBand(6e9, 7e9)
    equal = PowerDelayProfile(np.array([0.0, 100e-9]), np.array([1.0, 1.0]), band)
    weighted = PowerDelayProfile(np.array([0.0, 100e-9]), np.array([1.0, 0.5]), band)
    err1 = abs(rmsds(equal) - 50e-9) / 50e-9
    err2 = abs(rmsds(weighted) - 47.14e-9) / 47.14e-9
    report(3, "two-tap RMSDS closed forms within 0.1%",
           err1 <= 1e-3 and err2 <= 1e-3, f"errs={err1:.2e}, {err2:.2e}")


def test_criterion_4_fleury_identities():
    rng = np.random.default_rng(100)
    worst_identity = 0.0
    worst_rotation = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 48))
        aps = rng.exponential(1.0, n)
        angles = rng.uniform(0.0, 360.0, n)
        r = angular_spread(aps, angles)
        worst_identity = max(worst_identity,
                             abs(r.sigma - np.sqrt(max(1 - abs(r.mu_phi) ** 2, 0.0))))
        r2 = angular_spread(aps, angles + 77.7)
        worst_rotation = max(worst_rotation, abs(r.sigma - r2.sigma))
    uniform = angular_spread(np.ones(36), np.arange(0.0, 360.0, 10.0))
    uniform_err = abs(uniform.sigma - 1.0)
    ok = worst_identity <= 1e-10 and uniform_err <= 1e-12 and worst_rotation <= 1e-12
    report(4, "Fleury identity/uniform/rotation", ok,
           f"identity={worst_identity:.1e}, uniform={uniform_err:.1e}, "
           f"rotation={worst_rotation:.1e}")


def test_criterion_5_parseval():
    rng = np.random.default_rng(101)
    grid = FrequencyGrid(6e9, 6e9 + 63e6, 64)
    worst = 0.0
    for _ in range(1000):
        h = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        ref = np.mean(np.abs(h) ** 2)
        for os_f in (1, 2, 10):
            opts = PdpOptions(window="rect", oversample_factor=os_f)
            total = compute_pdp(h, grid, opts).powers.sum()
            worst = max(worst, abs(total - ref) / ref)
    report(5, "Parseval, rectangular window, oversample {1,2,10}",
           worst <= 1e-10, f"worst rel err={worst:.1e}")


def test_criterion_6_regression_recovery_and_coverage():
    alpha_t, beta_t, sigma_t = 21.76, 4.14, 3.22
    weighting = DistanceWeighting("logbins", 0.1)
    d = np.array(DISTANCES)
    noiseless = list(zip(d, alpha_t + 10 * beta_t * np.log10(d)))
    fit = fit_power_law(noiseless, weighting)
    exact = max(abs(fit.alpha_db - alpha_t), abs(fit.beta - beta_t))
    rng = np.random.default_rng(102)
    covered = 0
    trials = 200
    for _ in range(trials):
        y = alpha_t + 10 * beta_t * np.log10(d) + sigma_t * rng.standard_normal(d.size)
        f = fit_power_law(list(zip(d, y)), weighting)
        if f.alpha_lo <= alpha_t <= f.alpha_hi and f.beta_lo <= beta_t <= f.beta_hi:
            covered += 1
    coverage = covered / trials
    report(6, "power-law recovery 1e-9 and CI coverage >= 90%",
           exact <= 1e-9 and coverage >= 0.90,
           f"recovery={exact:.1e}, coverage={coverage:.3f}")


def test_criterion_7_omni_construction():
    p = 0.731
    n_delay = 5
    powers = np.full(NOMINAL_ANGLES.shape + (n_delay,), p)
    delays = np.arange(n_delay) * 1e-9
    pdp_set = DirectionalPdpSet(NOMINAL_ANGLES, SubBand(6e9, 7e9), delays, powers,
                                np.ones(powers.shape, bool), True, PdpOptions())
    omni = build_omni(pdp_set, DEFAULT_GAIN_TABLE)
    expect = 5 * p / 10 ** 0.37
    exact_err = np.max(np.abs(omni.pdp.powers - expect)) / expect

    rng = np.random.default_rng(103)
    zero = AntennaElevationGainTable.flat(0.0)
    invariants_ok = True
    for _ in range(100):
        pw = rng.exponential(1.0, (3, 4, 2, 8))
        kept = rng.random(pw.shape) < 0.8
        angles = AngularGrid((0.0, 10.0, 20.0), (0.0, 10.0, 20.0, 30.0), (0.0, 10.0))
        s = DirectionalPdpSet(angles, SubBand(6e9, 7e9), np.arange(8) * 1e-9,
                              pw, kept, True, PdpOptions())
        om = build_omni(s, zero)
        elevsum = s.masked_powers.sum(axis=2)
        invariants_ok &= bool(np.all(om.pdp.powers[None, None, :] >= elevsum - 1e-15))
        c = float(rng.uniform(0.5, 4.0))
        s2 = DirectionalPdpSet(angles, SubBand(6e9, 7e9), np.arange(8) * 1e-9,
                               pw * c, kept, True, PdpOptions())
        om2 = build_omni(s2, zero)
        invariants_ok &= bool(np.allclose(om2.pdp.powers, om.pdp.powers * c, rtol=1e-13))
    report(7, "omni all-equal-beams 5p/10^0.37 exact, dominance/scaling on 100 sets",
           exact_err <= 1e-12 and invariants_ok, f"exact rel err={exact_err:.1e}")


def test_criterion_8_gating_properties():
    rng = np.random.default_rng(104)
    ok = True
    band = SubBand(6e9, 7e9)
    for _ in range(1000):
        n = int(rng.integers(3, 40))
        delays = np.sort(rng.uniform(0.0, 1.2e-6, n))
        powers = rng.exponential(1.0, n)
        pdp = PowerDelayProfile(delays, powers, band)
        thr = float(rng.uniform(3.0, 30.0))
        gate = float(rng.uniform(0.2e-6, 1.2e-6))
        o1 = PdpOptions(threshold_below_peak_db=thr, gate_delay_s=gate)
        g1 = apply_gate_threshold(pdp, o1)
        g11 = apply_gate_threshold(g1, o1)
        ok &= bool(np.array_equal(g1.kept_mask, g11.kept_mask))
        g_wider = apply_gate_threshold(pdp, PdpOptions(threshold_below_peak_db=thr + 4,
                                                       gate_delay_s=gate))
        ok &= bool(np.all(g1.kept_mask <= g_wider.kept_mask))
        g_shorter = apply_gate_threshold(pdp, PdpOptions(threshold_below_peak_db=thr,
                                                         gate_delay_s=gate * 0.7))
        ok &= bool(np.all(g_shorter.kept_mask <= g1.kept_mask))
    report(8, "gating monotonicity and idempotence on 1000 random PDPs", ok)


@pytest.fixture(scope="module")
def nominal_link_tensor():
    rng = np.random.default_rng(105)
    shape = NOMINAL_ANGLES.shape + (NOMINAL_GRID.n_points,)
    # broadband noise floor plus a few strong structured taps
    vals = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * 1e-3
    f = NOMINAL_GRID.frequencies_hz()
    for tau, amp in ((220e-9, 1.0), (300e-9, 0.4), (450e-9, 0.1)):
        beam = tuple(rng.integers(0, s) for s in NOMINAL_ANGLES.shape)
        vals[beam] += amp * np.exp(-2j * np.pi * f * tau)
    return FrequencyScanTensor(NOMINAL_GRID, NOMINAL_ANGLES, vals)


def test_criterion_9_throughput(nominal_link_tensor):
    ota = CalibrationTrace.identity(NOMINAL_GRID)
    from fr3scan.model import nominal_subbands
    bands = nominal_subbands(NOMINAL_GRID)
    assert len(bands) == 9
    t0 = time.perf_counter()
    calibrated = calibrate(nominal_link_tensor, ota)
    results = condense_link(calibrated.values, NOMINAL_GRID, NOMINAL_ANGLES,
                            bands, PdpOptions(), DEFAULT_GAIN_TABLE, "single")
    elapsed = time.perf_counter() - t0
    ok = elapsed < 60.0 and len(results) == 9
    report(9, "full nominal link, 9 bands, under 60 s", ok, f"elapsed={elapsed:.1f} s")


def test_criterion_10_determinism(tmp_path):
    import hashlib
    from fr3scan.cli import main

    set_dir = tmp_path / "set"
    assert main(["synth", "--grid", "small", "--seed", "33", "--n-mpcs", "4",
                 "--output", str(set_dir)]) == 0
    gain = tmp_path / "gain.csv"
    gain.write_text("freq_hz,correction_db\n1.0,0.0\n1e15,0.0\n")
    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["process", "--input", str(set_dir), "--output", str(out),
                     "--gain-table", str(gain)]) == 0
        tree = {str(p.relative_to(out)): hashlib.sha256(p.read_bytes()).hexdigest()
                for p in sorted(out.rglob("*")) if p.is_file()}
        digests.append(tree)
    report(10, "byte-identical outputs on rerun (hash check)",
           digests[0] == digests[1], f"{len(digests[0])} files compared")
