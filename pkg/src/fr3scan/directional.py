"""Strongest-beam selection and omni-directional PDP reconstruction.

The omni profile is built by summing each azimuth pair's PDPs over the Rx
co-elevations, taking the per-delay-bin maximum over all (Tx az, Rx az)
pairs, and subtracting the elevation-summed pattern's gain excess (in dB,
interpolated at the sub-band center frequency).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import OutageError, ValidationError
from .model import AngularGrid, AntennaElevationGainTable, FrequencyScanTensor, SubBand
from .pdp import PdpOptions, PowerDelayProfile, gate_mask, spectral_window


@dataclass(frozen=True)
class DirectionalPdpSet:
    """All per-beam PDPs of one link and one sub-band on a shared delay grid."""

    angles: AngularGrid
    band: SubBand
    delays_s: np.ndarray = field(repr=False)
    powers: np.ndarray = field(repr=False)      # (n_tx, n_rx, n_coel, n_delay)
    kept_mask: np.ndarray = field(repr=False)   # same shape, bool
    gated: bool = True
    opts: PdpOptions = PdpOptions()

    def __post_init__(self):
        delays = np.asarray(self.delays_s, dtype=np.float64)
        powers = np.asarray(self.powers, dtype=np.float64)
        kept = np.asarray(self.kept_mask, dtype=bool)
        shape = self.angles.shape + (delays.size,)
        if powers.shape != shape or kept.shape != shape:
            raise ValidationError(f"directional PDP arrays must have shape {shape}")
        for name, arr in (("delays_s", delays), ("powers", powers), ("kept_mask", kept)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def masked_powers(self) -> np.ndarray:
        return np.where(self.kept_mask, self.powers, 0.0)

    def pdp_at(self, i: int, j: int, k: int) -> PowerDelayProfile:
        return PowerDelayProfile(self.delays_s, self.powers[i, j, k], self.band,
                                 beam=(i, j, k), gated=self.gated,
                                 kept_mask=self.kept_mask[i, j, k])


def compute_directional_pdps(tensor: FrequencyScanTensor, opts: PdpOptions,
                             band: SubBand | None = None) -> DirectionalPdpSet:
    """PDPs for every beam of a (calibrated, already band-sliced) tensor,
    thresholded and delay-gated per beam."""
    grid = tensor.grid
    band = band if band is not None else SubBand(grid.f_start_hz, grid.f_stop_hz)
    n = grid.n_points
    m = n * opts.oversample_factor
    delays = np.arange(m) / (m * grid.spacing_hz)
    w = spectral_window(opts.window, n)
    flat = tensor.values.reshape(-1, n) * w
    ht = sfft.ifft(flat, n=m, axis=-1)
    powers = opts.oversample_factor * (ht.real**2 + ht.imag**2)
    kept = gate_mask(delays, powers, opts)
    shape = tensor.angles.shape + (m,)
    return DirectionalPdpSet(tensor.angles, band, delays,
                             powers.reshape(shape), kept.reshape(shape), True, opts)


def select_max_dir(pdp_set: DirectionalPdpSet) -> tuple[tuple[int, int, int], PowerDelayProfile]:
    """Beam (i, j, k) maximizing the gated total power, with ties broken by the
    lexicographically smallest index triple."""
    totals = pdp_set.masked_powers.sum(axis=-1)
    flat_idx = int(np.argmax(totals))  # first occurrence in C order == lexicographic min
    if totals.flat[flat_idx] <= 0.0:
        raise OutageError("all beams empty after gating; no Max-Dir beam exists")
    idx = np.unravel_index(flat_idx, totals.shape)
    idx = (int(idx[0]), int(idx[1]), int(idx[2]))
    return idx, pdp_set.pdp_at(*idx)


@dataclass(frozen=True)
class OmniPdp:
    """Reconstructed omni-directional PDP and the gain correction applied."""

    pdp: PowerDelayProfile
    correction_db: float
    band: SubBand


def build_omni(pdp_set: DirectionalPdpSet,
               gains: AntennaElevationGainTable) -> OmniPdp:
    """Elevation-sum, per-bin azimuth-pair maximum, then gain correction.

    The correction is interpolated at the sub-band center frequency and
    subtracted on a dB scale (i.e. a single linear division)."""
    correction_db = gains.correction_db_at(pdp_set.band.center_hz)
    elevsum = pdp_set.masked_powers.sum(axis=2)        # (n_tx, n_rx, n_delay)
    omni = elevsum.max(axis=(0, 1)) * 10.0 ** (-correction_db / 10.0)
    pdp = PowerDelayProfile(pdp_set.delays_s, omni, pdp_set.band, beam=None,
                            gated=pdp_set.gated, kept_mask=omni > 0)
    return OmniPdp(pdp, correction_db, pdp_set.band)
