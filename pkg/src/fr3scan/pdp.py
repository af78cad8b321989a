"""Calibration, sub-band slicing and power delay profile computation.

The delay transform is an inverse DFT with the 1/N convention applied to the
(windowed, zero-padded) transfer function.  Window and power scaling are
chosen so that the total PDP power equals the mean squared magnitude of the
windowed transfer function for any oversampling factor (discrete Parseval);
with the rectangular window this is exactly the mean of |H(f)|^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

from .errors import CalibrationError, ValidationError
from .model import CalibrationTrace, FrequencyGrid, FrequencyScanTensor, SubBand

#: Relative floor for the calibration trace magnitude; nulls deeper than this
#: indicate a corrupt reference, not information.
CAL_EPS_REL = 1e-12

WINDOW_RECT = "rect"
WINDOW_HANN = "hann"


@dataclass(frozen=True)
class PdpOptions:
    """Knobs for PDP computation and noise/delay gating.

    Nominal values: Hann window, 10x oversampling, 966.67 ns delay gate
    (290 m excess runlength at c = 3e8 m/s) and a 22 dB threshold below the
    per-profile peak.
    """

    window: str = WINDOW_HANN
    oversample_factor: int = 10
    gate_delay_s: float = 966.67e-9
    threshold_below_peak_db: float = 22.0

    def __post_init__(self):
        if self.window not in (WINDOW_RECT, WINDOW_HANN):
            raise ValidationError(f"unknown window {self.window!r}")
        if int(self.oversample_factor) != self.oversample_factor or self.oversample_factor < 1:
            raise ValidationError("oversample_factor must be a positive integer")
        if not self.gate_delay_s > 0:
            raise ValidationError("gate_delay_s must be positive")
        if not self.threshold_below_peak_db > 0:
            raise ValidationError("threshold_below_peak_db must be positive")


def spectral_window(kind: str, n: int) -> np.ndarray:
    """Window of length ``n`` normalized so that sum(w^2) == n.

    The Hann window is the DFT-periodic variant, w[k] = 0.5 - 0.5 cos(2 pi k / n),
    for which the normalization constant is exactly sqrt(8/3).
    """
    if kind == WINDOW_RECT:
        return np.ones(n)
    if kind == WINDOW_HANN:
        w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
        return w * np.sqrt(n / np.sum(w * w))
    raise ValidationError(f"unknown window {kind!r}")


def calibrate(h_meas: FrequencyScanTensor, h_ota: CalibrationTrace) -> FrequencyScanTensor:
    """Divide the measured tensor by the reference trace, frequency by frequency."""
    if h_meas.grid != h_ota.grid:
        raise CalibrationError(
            f"calibration grid mismatch: measurement {h_meas.grid}, reference {h_ota.grid}")
    mag = np.abs(h_ota.values)
    eps = CAL_EPS_REL * mag.max()
    bad = np.nonzero(mag < eps)[0]
    if bad.size:
        f_bad = h_ota.grid.frequencies_hz()[bad[0]]
        raise CalibrationError(
            f"calibration trace magnitude below {eps:.3e} at {f_bad/1e9:.6f} GHz "
            f"({bad.size} samples affected)")
    return FrequencyScanTensor(h_meas.grid, h_meas.angles, h_meas.values / h_ota.values)


def subband_slice(grid: FrequencyGrid, band: SubBand) -> slice:
    """Index slice selecting all grid frequencies with f_lo <= f <= f_hi
    (both edges inclusive and required to sit on grid points)."""
    try:
        lo = grid.index_of(band.f_lo_hz)
        hi = grid.index_of(band.f_hi_hz)
    except ValidationError as exc:
        raise ValidationError(f"sub-band edge not on grid: {exc}") from exc
    return slice(lo, hi + 1)


def extract_subband(tensor: FrequencyScanTensor, band: SubBand) -> FrequencyScanTensor:
    sl = subband_slice(tensor.grid, band)
    grid = FrequencyGrid(band.f_lo_hz, band.f_hi_hz, sl.stop - sl.start)
    return FrequencyScanTensor(grid, tensor.angles, tensor.values[..., sl])


@dataclass(frozen=True)
class PowerDelayProfile:
    """Delay-domain power samples on a uniform grid starting at zero delay.

    ``powers`` always holds the full (un-gated) profile; gating is recorded
    in ``kept_mask`` so that re-applying a gate stays idempotent.  Excluded
    bins contribute zero to every downstream sum.
    """

    delays_s: np.ndarray = field(repr=False)
    powers: np.ndarray = field(repr=False)
    band: SubBand
    beam: tuple[int, int, int] | None = None
    gated: bool = False
    kept_mask: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        delays = np.asarray(self.delays_s, dtype=np.float64)
        powers = np.asarray(self.powers, dtype=np.float64)
        if delays.ndim != 1 or powers.shape != delays.shape:
            raise ValidationError("delays and powers must be matching 1-D arrays")
        if not np.all(np.isfinite(powers)) or np.any(powers < 0):
            raise ValidationError("PDP powers must be finite and non-negative")
        kept = self.kept_mask
        kept = np.ones(powers.shape, bool) if kept is None else np.asarray(kept, bool)
        if kept.shape != powers.shape:
            raise ValidationError("kept_mask shape mismatch")
        for name, arr in (("delays_s", delays), ("powers", powers), ("kept_mask", kept)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def masked_powers(self) -> np.ndarray:
        """Powers with excluded bins zeroed."""
        return np.where(self.kept_mask, self.powers, 0.0)

    @property
    def spacing_s(self) -> float:
        return float(self.delays_s[1] - self.delays_s[0])


def compute_pdp(h: np.ndarray, grid: FrequencyGrid, opts: PdpOptions,
                beam: tuple[int, int, int] | None = None) -> PowerDelayProfile:
    """Transform one beam's transfer function samples into a PDP.

    Steps: window (power-normalized), zero-pad to ``oversample_factor * n``,
    inverse DFT (1/N convention on the padded length), then scale |h|^2 by
    the oversampling factor so that sum-over-delay equals mean-over-frequency
    of the windowed |H|^2.
    """
    h = np.asarray(h)
    if h.ndim != 1 or h.size < 2:
        raise ValidationError("compute_pdp needs a 1-D transfer function with >= 2 points")
    if h.size != grid.n_points:
        raise ValidationError(f"transfer function has {h.size} points, grid {grid.n_points}")
    n = h.size
    m = n * opts.oversample_factor
    w = spectral_window(opts.window, n)
    ht = sfft.ifft(h * w, n=m)
    powers = opts.oversample_factor * (ht.real**2 + ht.imag**2)
    delays = np.arange(m) / (m * grid.spacing_hz)
    return PowerDelayProfile(delays, powers, SubBand(grid.f_start_hz, grid.f_stop_hz), beam=beam)


def gate_mask(delays_s: np.ndarray, powers: np.ndarray, opts: PdpOptions) -> np.ndarray:
    """Noise/gate mask: keep bins with delay <= gate AND power >= peak/10^(thr/10).

    Both comparisons are inclusive; the peak is taken over the full profile.
    Works on the trailing axis for batched ``powers``.
    """
    peak = powers.max(axis=-1, keepdims=True)
    floor = peak * 10.0 ** (-opts.threshold_below_peak_db / 10.0)
    return (powers >= floor) & (delays_s <= opts.gate_delay_s)


def apply_gate_threshold(pdp: PowerDelayProfile, opts: PdpOptions) -> PowerDelayProfile:
    """Return a gated copy of ``pdp``.  Idempotent: the mask is always derived
    from the stored (un-gated) powers, so re-gating with the same options
    yields the same result.  An all-excluded output is legal and visible as an
    all-false ``kept_mask``."""
    kept = gate_mask(pdp.delays_s, pdp.powers, opts)
    return replace(pdp, gated=True, kept_mask=kept)
