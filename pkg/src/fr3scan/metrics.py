"""Condensed channel parameters: path gain/loss, RMS delay spread, angular
power spectra and circular-moment angular spreads."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .directional import DirectionalPdpSet
from .errors import OutageError, ValidationError
from .model import AngularGrid
from .pdp import PowerDelayProfile

APS_ENDS = ("tx_az", "rx_az", "rx_el")


def path_gain(pdp: PowerDelayProfile) -> float:
    """Total power over kept delay bins (linear)."""
    total = float(pdp.masked_powers.sum())
    if total <= 0.0:
        raise OutageError("zero total power after gating; link is in outage")
    return total


def path_loss_db(pdp: PowerDelayProfile) -> float:
    return -10.0 * np.log10(path_gain(pdp))


def rmsds(pdp: PowerDelayProfile) -> float:
    """RMS delay spread in seconds: square root of the second central moment
    of the gated profile."""
    p = pdp.masked_powers
    total = float(p.sum())
    if total <= 0.0:
        raise OutageError("zero total power after gating; RMS delay spread undefined")
    tau = pdp.delays_s
    mean = float((p * tau).sum()) / total
    second = float((p * tau * tau).sum()) / total
    return float(np.sqrt(max(second - mean * mean, 0.0)))


def db_seconds(tau_s: float) -> float:
    """Delay spread on a log scale: 10 log10(tau / 1 s)."""
    if tau_s <= 0.0:
        return -np.inf
    return float(10.0 * np.log10(tau_s))


@dataclass(frozen=True)
class Ddaps:
    """Double-directional angular power spectrum: delay-integrated power per
    beam triple, plus the co-elevation-summed azimuth form."""

    angles: AngularGrid
    values_full: np.ndarray = field(repr=False)  # (n_tx, n_rx, n_coel)
    values_az: np.ndarray = field(repr=False)    # (n_tx, n_rx)

    def __post_init__(self):
        full = np.asarray(self.values_full, dtype=np.float64)
        az = np.asarray(self.values_az, dtype=np.float64)
        if full.shape != self.angles.shape:
            raise ValidationError(f"values_full must have shape {self.angles.shape}")
        if az.shape != self.angles.shape[:2]:
            raise ValidationError(f"values_az must have shape {self.angles.shape[:2]}")
        if np.any(full < 0) or np.any(az < 0):
            raise ValidationError("DDAPS values must be non-negative")
        for name, arr in (("values_full", full), ("values_az", az)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_full(cls, angles: AngularGrid, values_full: np.ndarray) -> "Ddaps":
        full = np.asarray(values_full, dtype=np.float64)
        return cls(angles, full, full.sum(axis=2))


def compute_ddaps(pdp_set: DirectionalPdpSet) -> Ddaps:
    """Delay-integrate every beam's gated PDP."""
    return Ddaps.from_full(pdp_set.angles, pdp_set.masked_powers.sum(axis=-1))


def marginal_aps(ddaps: Ddaps, end: str) -> np.ndarray:
    """Power per angle for one link end.

    ``tx_az``/``rx_az`` marginalize the azimuth DDAPS over the opposite end;
    ``rx_el`` marginalizes the full DDAPS over both azimuths."""
    if end == "tx_az":
        return ddaps.values_az.sum(axis=1)
    if end == "rx_az":
        return ddaps.values_az.sum(axis=0)
    if end == "rx_el":
        return ddaps.values_full.sum(axis=(0, 1))
    raise ValidationError(f"unknown APS end {end!r}; expected one of {APS_ENDS}")


def aps_angles_deg(angles: AngularGrid, end: str) -> tuple[float, ...]:
    if end == "tx_az":
        return angles.tx_az_deg
    if end == "rx_az":
        return angles.rx_az_deg
    if end == "rx_el":
        return angles.rx_coel_deg
    raise ValidationError(f"unknown APS end {end!r}; expected one of {APS_ENDS}")


@dataclass(frozen=True)
class AngularSpreadResult:
    """Circular-moment angular spread: sigma in [0, 1] and the complex mean
    direction, tied by sigma^2 + |mu_phi|^2 = 1."""

    sigma: float
    mu_phi: complex
    end: str


def angular_spread(aps: np.ndarray, angles_deg, end: str = "rx_az") -> AngularSpreadResult:
    """Fleury-style spread of a sampled angular power spectrum.

    sigma = sqrt( sum |e^{j phi} - mu|^2 APS / sum APS ) with
    mu = sum e^{j phi} APS / sum APS, angles converted to radians here.
    """
    aps = np.asarray(aps, dtype=np.float64)
    phi = np.deg2rad(np.asarray(angles_deg, dtype=np.float64))
    if aps.shape != phi.shape or aps.ndim != 1:
        raise ValidationError("APS and angle arrays must be matching 1-D arrays")
    if np.any(aps < 0):
        raise ValidationError("APS values must be non-negative")
    total = float(aps.sum())
    if total <= 0.0:
        raise OutageError("zero total APS power; angular spread undefined")
    unit = np.exp(1j * phi)
    mu = complex((unit * aps).sum() / total)
    sigma = float(np.sqrt((np.abs(unit - mu) ** 2 * aps).sum() / total))
    # algebraic identity of the circular moments; guards implementation drift
    assert abs(sigma**2 + abs(mu) ** 2 - 1.0) < 1e-9
    return AngularSpreadResult(sigma=min(sigma, 1.0), mu_phi=mu, end=end)


@dataclass(frozen=True)
class CondensedLinkParams:
    """Per-link, per-band condensed parameters (one results-CSV row)."""

    rx_id: str
    band_label: str
    distance_m: float
    los_class: str
    pl_omni_db: float
    pl_maxdir_db: float
    rmsds_omni_s: float
    rmsds_omni_dbs: float
    rmsds_maxdir_s: float
    rmsds_maxdir_dbs: float
    as_tx_az: float
    as_rx_az: float
    as_rx_el: float

    CSV_FIELDS = ("rx_id", "band_label", "distance_m", "los_class",
                  "pl_omni_db", "pl_maxdir_db",
                  "rmsds_omni_s", "rmsds_omni_dbs",
                  "rmsds_maxdir_s", "rmsds_maxdir_dbs",
                  "as_tx_az", "as_rx_az", "as_rx_el")
