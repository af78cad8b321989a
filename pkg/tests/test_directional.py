import numpy as np
import pytest

from fr3scan import (AngularGrid, AntennaElevationGainTable, NOMINAL_ANGLES,
                     OutageError, PdpOptions, SubBand, ValidationError,
                     build_omni, select_max_dir)
from fr3scan.directional import DirectionalPdpSet
from fr3scan.model import DEFAULT_GAIN_TABLE

BAND = SubBand(6e9, 7e9)
OPTS = PdpOptions()


def make_set(powers, angles=None, band=BAND, kept=None):
    powers = np.asarray(powers, float)
    if angles is None:
        nt, nr, ne, _ = powers.shape
        angles = AngularGrid(tuple(10.0 * np.arange(nt)),
                             tuple(10.0 * np.arange(nr)),
                             tuple(10.0 * np.arange(ne)))
    n_delay = powers.shape[-1]
    delays = np.arange(n_delay) * 1e-9
    kept = np.ones(powers.shape, bool) if kept is None else kept
    return DirectionalPdpSet(angles, band, delays, powers, kept, True, OPTS)


def test_max_dir_single_nonzero_beam():
    powers = np.zeros((2, 3, 2, 4))
    powers[1, 2, 0] = [0.0, 1.0, 0.5, 0.0]
    idx, pdp = select_max_dir(make_set(powers))
    assert idx == (1, 2, 0)
    assert pdp.masked_powers.sum() == pytest.approx(1.5)


def test_max_dir_tie_breaks_lexicographically():
    powers = np.zeros((2, 3, 2, 4))
    powers[1, 0, 1] = [1.0, 0, 0, 0]
    powers[0, 2, 1] = [1.0, 0, 0, 0]  # same total, smaller tx index
    idx, _ = select_max_dir(make_set(powers))
    assert idx == (0, 2, 1)


def test_max_dir_brute_force_oracle():
    rng = np.random.default_rng(10)
    for _ in range(20):
        powers = rng.exponential(1.0, (3, 4, 2, 8))
        kept = rng.random((3, 4, 2, 8)) < 0.7
        s = make_set(powers, kept=kept)
        idx, _ = select_max_dir(s)
        best, best_idx = -1.0, None
        for i in range(3):
            for j in range(4):
                for k in range(2):
                    tot = s.pdp_at(i, j, k).masked_powers.sum()
                    if tot > best:
                        best, best_idx = tot, (i, j, k)
        assert idx == best_idx


def test_max_dir_all_gated_raises():
    powers = np.zeros((1, 1, 1, 4))
    with pytest.raises(OutageError):
        select_max_dir(make_set(powers))


def test_omni_single_beam_zero_correction():
    powers = np.zeros((2, 3, 2, 4))
    powers[0, 1, 1] = [0.2, 0.8, 0.0, 0.1]
    omni = build_omni(make_set(powers), AntennaElevationGainTable.flat(0.0))
    assert omni.correction_db == 0.0
    assert np.allclose(omni.pdp.powers, powers[0, 1, 1])


def test_omni_all_equal_beams_measured_correction():
    """2340 identical beams with power p per bin: elevation sum gives 5p, the
    pair maximum keeps 5p, and the 3.7 dB correction divides by 10^0.37."""
    p = 0.37
    powers = np.full(NOMINAL_ANGLES.shape + (6,), p)
    s = make_set(powers, angles=NOMINAL_ANGLES, band=SubBand(6e9, 7e9))
    omni = build_omni(s, DEFAULT_GAIN_TABLE)  # band center 6.5 GHz -> 3.7 dB
    assert omni.correction_db == pytest.approx(3.7, abs=1e-12)
    expect = 5 * p / 10 ** 0.37
    assert np.max(np.abs(omni.pdp.powers - expect)) < 1e-12 * expect


def test_omni_13_14_band_correction():
    powers = np.ones((1, 1, 1, 3))
    s = make_set(powers, band=SubBand(13e9, 14e9))
    omni = build_omni(s, DEFAULT_GAIN_TABLE)  # center 13.5 GHz
    assert omni.correction_db == pytest.approx(1.57, abs=1e-12)


def test_omni_refuses_extrapolation():
    powers = np.ones((1, 1, 1, 3))
    s = make_set(powers, band=SubBand(6e9, 6.5e9))  # center 6.25 GHz < 6.5 GHz
    with pytest.raises(ValidationError, match="extrapolation"):
        build_omni(s, DEFAULT_GAIN_TABLE)


def test_omni_dominance_and_scaling():
    rng = np.random.default_rng(11)
    gains = AntennaElevationGainTable.flat(0.0)
    for _ in range(30):
        powers = rng.exponential(1.0, (3, 4, 2, 10))
        kept = rng.random(powers.shape) < 0.8
        s = make_set(powers, kept=kept)
        omni = build_omni(s, gains)
        elevsum = s.masked_powers.sum(axis=2)
        # per-bin dominance over every pair and every single beam
        assert np.all(omni.pdp.powers[None, None, :] >= elevsum - 1e-15)
        assert np.all(omni.pdp.powers[None, None, None, :] >= s.masked_powers - 1e-15)
        # common scaling propagates exactly
        c = 3.7
        s2 = make_set(powers * c, kept=kept)
        omni2 = build_omni(s2, gains)
        assert np.allclose(omni2.pdp.powers, omni.pdp.powers * c, rtol=1e-14)
        idx1, pdp1 = select_max_dir(s)
        idx2, pdp2 = select_max_dir(s2)
        assert idx1 == idx2
        assert pdp2.masked_powers.sum() == pytest.approx(c * pdp1.masked_powers.sum())


def test_omni_invariant_to_azimuth_permutation():
    rng = np.random.default_rng(12)
    powers = rng.exponential(1.0, (3, 4, 2, 6))
    s = make_set(powers)
    omni = build_omni(s, AntennaElevationGainTable.flat(0.0))
    perm = rng.permutation(4)
    s2 = make_set(powers[:, perm])
    omni2 = build_omni(s2, AntennaElevationGainTable.flat(0.0))
    assert np.allclose(omni.pdp.powers, omni2.pdp.powers)
    _, pdp1 = select_max_dir(s)
    _, pdp2 = select_max_dir(s2)
    assert pdp1.masked_powers.sum() == pytest.approx(pdp2.masked_powers.sum())
