import numpy as np
import pytest

from fr3scan import (AngularGrid, FrequencyGrid, HornPatternModel, LinkGeometry,
                     ModelParams, PdpOptions, SynthesisError,
                     apply_gate_threshold, compute_pdp, friis_pl_db,
                     render_tensor, sample_link)
from fr3scan.directional import compute_directional_pdps
from fr3scan.metrics import compute_ddaps
from fr3scan.synth import (delay_moments, expected_pipeline_values, link_rng,
                           mpc_angular_spread, mpc_delay_spread,
                           mpc_path_loss_db, mpc_total_power)

GRID = FrequencyGrid(6e9, 7e9, 101)
ANGLES = AngularGrid((-20.0, 0.0, 20.0), (0.0, 90.0, 180.0, 270.0), (-10.0, 0.0, 10.0))
LINK = LinkGeometry("RxT", 100.0, "OLoS")


# -------------------------------------------------------------------- friis

def test_friis_anchors():
    assert friis_pl_db(65.1, 6.5e9) == pytest.approx(84.97, abs=0.02)
    assert friis_pl_db(65.1, 13.5e9) == pytest.approx(91.32, abs=0.02)
    assert friis_pl_db(143.6, 6.5e9) == pytest.approx(91.85, abs=0.02)
    assert friis_pl_db(143.6, 13.5e9) == pytest.approx(98.20, abs=0.02)


def test_friis_distance_doubling():
    base = friis_pl_db(50.0, 10e9)
    assert friis_pl_db(100.0, 10e9) - base == pytest.approx(20 * np.log10(2), abs=1e-12)


# ------------------------------------------------------------------- render

def mpc(delay_ns, power, tx, rx, el, phase=0.0):
    from fr3scan.synth import SyntheticMpc
    return SyntheticMpc(delay_ns * 1e-9, power, tx, rx, el, phase)


def test_render_ideal_pattern_single_beam():
    m = mpc(40.0, 2.0, 0.0, 90.0, 10.0)
    t = render_tensor([m], GRID, ANGLES, pattern=None)
    nz = np.argwhere(np.abs(t.values).sum(axis=-1) > 0)
    assert nz.tolist() == [[1, 1, 2]]
    # the pipeline recovers a single tap at the configured delay and power
    opts = PdpOptions(window="rect", oversample_factor=1)
    quantum = 1.0 / (GRID.n_points * GRID.spacing_hz)
    m_on = mpc(round(40e-9 / quantum) * quantum * 1e9, 2.0, 0.0, 90.0, 10.0)
    t = render_tensor([m_on], GRID, ANGLES, pattern=None)
    pdp = apply_gate_threshold(compute_pdp(t.values[1, 1, 2], GRID, opts), opts)
    k = int(np.argmax(pdp.powers))
    assert pdp.delays_s[k] == pytest.approx(m_on.delay_s, rel=1e-9)
    assert pdp.masked_powers.sum() == pytest.approx(2.0, rel=1e-12)


def test_render_superposition_linearity():
    rng = np.random.default_rng(40)
    m1 = [mpc(10.0, 1.0, 0.0, 0.0, 0.0, 0.3), mpc(30.0, 0.5, 20.0, 90.0, 10.0, 1.2)]
    m2 = [mpc(55.0, 0.25, -20.0, 180.0, -10.0, 2.1)]
    pat = HornPatternModel(30.0, 30.0)
    both = render_tensor(m1 + m2, GRID, ANGLES, pat)
    parts = render_tensor(m1, GRID, ANGLES, pat).values \
        + render_tensor(m2, GRID, ANGLES, pat).values
    assert np.allclose(both.values, parts, rtol=1e-13, atol=1e-15)


def test_render_two_mpcs_ddaps_end_to_end():
    quantum = 1.0 / (GRID.n_points * GRID.spacing_hz)
    p1, p2 = 1.5, 0.25
    mpcs = [mpc(20 * quantum * 1e9, p1, 0.0, 0.0, 0.0),
            mpc(45 * quantum * 1e9, p2, 20.0, 180.0, 10.0)]
    t = render_tensor(mpcs, GRID, ANGLES, pattern=None)
    pdp_set = compute_directional_pdps(t, PdpOptions(window="rect", oversample_factor=1))
    d = compute_ddaps(pdp_set)
    nz = np.argwhere(d.values_full > 0)
    assert sorted(nz.tolist()) == [[1, 0, 1], [2, 2, 2]]
    assert d.values_full[1, 0, 1] == pytest.approx(p1, rel=1e-12)
    assert d.values_full[2, 2, 2] == pytest.approx(p2, rel=1e-12)


def test_gaussian_pattern_shape():
    pat = HornPatternModel(hpbw_az_deg=30.0, hpbw_el_deg=20.0)
    assert pat.amplitude(0.0) == pytest.approx(1.0)
    # power is -3 dB at half the HPBW off boresight
    assert 20 * np.log10(pat.amplitude(15.0)) == pytest.approx(-3.0, abs=1e-12)
    assert 20 * np.log10(pat.amplitude(0.0, 10.0)) == pytest.approx(-3.0, abs=1e-12)
    # azimuth wraps on the circle
    assert pat.amplitude(350.0) == pytest.approx(pat.amplitude(-10.0))


# -------------------------------------------------------------- sample_link

PARAMS = ModelParams(seed=5)


def test_sample_deterministic():
    a = sample_link(PARAMS, LINK, 6, link_index=3, angles=ANGLES)
    b = sample_link(PARAMS, LINK, 6, link_index=3, angles=ANGLES)
    assert a == b
    c = sample_link(PARAMS, LINK, 6, link_index=4, angles=ANGLES)
    assert a != c


def test_single_mpc_noiseless_path_gain():
    params = ModelParams(sigma_shadow_db=0.0, seed=1)
    mpcs = sample_link(params, LINK, 1, angles=ANGLES)
    expect = params.alpha_db + 10 * params.beta * np.log10(LINK.distance_m)
    assert mpc_path_loss_db(mpcs) == pytest.approx(expect, abs=1e-12)


def test_tap_moments_match_requested_spread():
    """With a degenerate draw the requested tap spread is known exactly; the
    generated taps must realize it to well under 0.1%, with and without delay
    quantization."""
    q = 1.0 / (GRID.n_points * GRID.spacing_hz)
    for mu_dbs in (-80.0, -77.0, -75.0):
        target = 10 ** (mu_dbs / 10.0)
        for n_taps in (2, 5, 9):
            params = ModelParams(rmsds_mu_dbs=mu_dbs, rmsds_sigma_dbs=0.0, seed=4)
            mpcs = sample_link(params, LINK, n_taps, angles=ANGLES)
            assert mpc_delay_spread(mpcs) == pytest.approx(target, rel=1e-12)
            mpcs_q = sample_link(params, LINK, n_taps, angles=ANGLES,
                                 delay_quantum_s=q)
            assert mpc_delay_spread(mpcs_q) == pytest.approx(target, rel=1e-6)
            for d in sorted({m.delay_s for m in mpcs_q}):
                assert abs(d / q - round(d / q)) < 1e-6


def test_delay_moments_helper():
    mean, spread = delay_moments(np.array([0.0, 100e-9]), np.array([1.0, 1.0]))
    assert mean == pytest.approx(50e-9)
    assert spread == pytest.approx(50e-9)


def test_angular_targets_exact():
    params = ModelParams(seed=2)
    mpcs = sample_link(params, LINK, 5, angles=ANGLES)
    assert mpc_angular_spread(mpcs, "tx_az") == pytest.approx(params.as_tx_az, abs=1e-12)
    assert mpc_angular_spread(mpcs, "rx_az") == pytest.approx(params.as_rx_az, abs=1e-12)
    assert mpc_angular_spread(mpcs, "rx_el") == pytest.approx(params.as_rx_el, abs=1e-12)


def test_total_power_matches_shadowed_draw():
    params = ModelParams(seed=3)
    mpcs = sample_link(params, LINK, 6, link_index=1, angles=ANGLES)
    rng = link_rng(params.seed, 1)
    eps = params.sigma_shadow_db * rng.standard_normal()
    expect_pl = params.alpha_db + 10 * params.beta * np.log10(LINK.distance_m) + eps
    assert mpc_path_loss_db(mpcs) == pytest.approx(expect_pl, abs=1e-10)


def test_unrealizable_targets_raise():
    params = ModelParams(as_rx_el=0.8, seed=0)  # beyond sin(20 deg) on the grid
    with pytest.raises(SynthesisError, match="rx_coel"):
        sample_link(params, LINK, 3, angles=ANGLES)
    huge = ModelParams(rmsds_mu_dbs=-55.0, rmsds_sigma_dbs=0.0, seed=0)  # ~3.2 us
    with pytest.raises(SynthesisError, match="attempts"):
        sample_link(huge, LINK, 4, angles=ANGLES)


def test_expected_pipeline_values_consistency():
    params = ModelParams(seed=6)
    mpcs = sample_link(params, LINK, 4, angles=ANGLES)
    exp = expected_pipeline_values(mpcs)
    assert exp["pl_total_db"] == pytest.approx(mpc_path_loss_db(mpcs))
    assert exp["pl_omni_db"] >= exp["pl_total_db"] - 1e-12
    assert exp["pl_maxdir_db"] >= exp["pl_omni_db"] - 1e-12
    assert exp["rmsds_taps_s"] == pytest.approx(mpc_delay_spread(mpcs))
    assert mpc_total_power(mpcs) == pytest.approx(10 ** (-exp["pl_total_db"] / 10))
