"""Core domain types: frequency/angle grids, scan tensors, link metadata.

All angles are stored in degrees; conversion to radians happens only inside
the angular-spread math.  All types are immutable after construction and can
be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

#: Default tolerance (as a fraction of grid spacing) when matching a
#: frequency to a grid point.
GRID_SNAP_TOL = 1e-6


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency sweep grid."""

    f_start_hz: float
    f_stop_hz: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise ValidationError(f"frequency grid needs >= 2 points, got {self.n_points}")
        if not (self.f_stop_hz > self.f_start_hz > 0):
            raise ValidationError(
                f"frequency grid must satisfy 0 < start < stop, got "
                f"[{self.f_start_hz}, {self.f_stop_hz}]"
            )

    @property
    def spacing_hz(self) -> float:
        return (self.f_stop_hz - self.f_start_hz) / (self.n_points - 1)

    @property
    def span_hz(self) -> float:
        return self.f_stop_hz - self.f_start_hz

    def frequencies_hz(self) -> np.ndarray:
        return np.linspace(self.f_start_hz, self.f_stop_hz, self.n_points)

    def index_of(self, f_hz: float) -> int:
        """Index of the grid point at ``f_hz``; raises if off-grid."""
        pos = (f_hz - self.f_start_hz) / self.spacing_hz
        idx = int(round(pos))
        if idx < 0 or idx >= self.n_points or abs(pos - idx) > GRID_SNAP_TOL:
            raise ValidationError(f"frequency {f_hz} Hz is not on the grid")
        return idx


@dataclass(frozen=True)
class AngularGrid:
    """Scan angles: Tx azimuth x Rx azimuth x Rx co-elevation (degrees)."""

    tx_az_deg: tuple[float, ...]
    rx_az_deg: tuple[float, ...]
    rx_coel_deg: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "tx_az_deg", tuple(float(a) for a in self.tx_az_deg))
        object.__setattr__(self, "rx_az_deg", tuple(float(a) for a in self.rx_az_deg))
        object.__setattr__(self, "rx_coel_deg", tuple(float(a) for a in self.rx_coel_deg))
        for name, angles in (("tx_az_deg", self.tx_az_deg),
                             ("rx_az_deg", self.rx_az_deg),
                             ("rx_coel_deg", self.rx_coel_deg)):
            if len(angles) == 0:
                raise ValidationError(f"{name}: empty angle list")
            if any(b <= a for a, b in zip(angles, angles[1:])):
                raise ValidationError(f"{name}: angles must be strictly increasing")
        if any(not (0.0 <= a < 360.0) for a in self.rx_az_deg):
            raise ValidationError("rx_az_deg: azimuths must lie in [0, 360)")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (len(self.tx_az_deg), len(self.rx_az_deg), len(self.rx_coel_deg))

    @property
    def n_positions(self) -> int:
        nt, nr, ne = self.shape
        return nt * nr * ne


@dataclass(frozen=True)
class SubBand:
    """Closed frequency interval used to slice a scan for per-band analysis."""

    f_lo_hz: float
    f_hi_hz: float

    def __post_init__(self):
        if not (self.f_lo_hz < self.f_hi_hz):
            raise ValidationError(f"sub-band must have f_lo < f_hi, got "
                                  f"[{self.f_lo_hz}, {self.f_hi_hz}]")

    @property
    def center_hz(self) -> float:
        return 0.5 * (self.f_lo_hz + self.f_hi_hz)


def band_label(band: SubBand, grid: FrequencyGrid | None = None) -> str:
    """Human-readable band name: ``"All Bands"`` for the full grid span,
    otherwise e.g. ``"6-7 GHz"``."""
    if grid is not None and band.f_lo_hz == grid.f_start_hz and band.f_hi_hz == grid.f_stop_hz:
        return "All Bands"

    def ghz(f):
        v = f / 1e9
        return f"{v:g}"

    return f"{ghz(band.f_lo_hz)}-{ghz(band.f_hi_hz)} GHz"


def band_slug(band: SubBand, grid: FrequencyGrid | None = None) -> str:
    """Filesystem-safe band name."""
    return band_label(band, grid).lower().replace(" ", "_").replace("-", "_")


def nominal_subbands(grid: FrequencyGrid) -> list[SubBand]:
    """The full span plus every integral 1-GHz band that fits on the grid.

    On the nominal 6-14 GHz campaign grid this yields the eight 1-GHz bands
    and the all-bands span (nine in total).
    """
    full = SubBand(grid.f_start_hz, grid.f_stop_hz)
    bands = []
    lo_ghz = int(np.ceil(grid.f_start_hz / 1e9 - GRID_SNAP_TOL))
    hi_ghz = int(np.floor(grid.f_stop_hz / 1e9 + GRID_SNAP_TOL))
    for g in range(lo_ghz, hi_ghz):
        band = SubBand(g * 1e9, (g + 1) * 1e9)
        if band == full:
            continue
        try:
            grid.index_of(band.f_lo_hz)
            grid.index_of(band.f_hi_hz)
        except ValidationError:
            continue
        bands.append(band)
    bands.append(full)
    return bands


def _check_tensor(values: np.ndarray, shape: tuple, what: str) -> np.ndarray:
    values = np.asarray(values)
    if values.shape != shape:
        raise ValidationError(f"{what}: expected shape {shape}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{what}: contains non-finite values")
    values = values.astype(np.complex128, copy=False)
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class FrequencyScanTensor:
    """Complex channel transfer function over (Tx az, Rx az, Rx coel, freq)."""

    grid: FrequencyGrid
    angles: AngularGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = self.angles.shape + (self.grid.n_points,)
        object.__setattr__(self, "values", _check_tensor(self.values, shape, "scan tensor"))

    def __eq__(self, other):
        if not isinstance(other, FrequencyScanTensor):
            return NotImplemented
        return (self.grid == other.grid and self.angles == other.angles
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True)
class CalibrationTrace:
    """Reference over-the-air sweep measured at a known distance."""

    grid: FrequencyGrid
    values: np.ndarray = field(repr=False)
    d_ota_m: float = 56.45

    def __post_init__(self):
        if not self.d_ota_m > 0:
            raise ValidationError(f"d_ota_m must be positive, got {self.d_ota_m}")
        object.__setattr__(
            self, "values", _check_tensor(self.values, (self.grid.n_points,), "calibration trace"))

    def __eq__(self, other):
        if not isinstance(other, CalibrationTrace):
            return NotImplemented
        return (self.grid == other.grid and self.d_ota_m == other.d_ota_m
                and np.array_equal(self.values, other.values))

    @classmethod
    def identity(cls, grid: FrequencyGrid, d_ota_m: float = 56.45) -> "CalibrationTrace":
        """All-ones trace; calibrating with it is a no-op."""
        return cls(grid, np.ones(grid.n_points, dtype=np.complex128), d_ota_m)


@dataclass(frozen=True)
class LinkGeometry:
    """One Tx-Rx link: identifier, 3D distance and sight classification."""

    rx_id: str
    distance_m: float
    los_class: str = "OLoS"

    def __post_init__(self):
        if not self.distance_m > 0:
            raise ValidationError(f"{self.rx_id}: distance must be positive")
        if self.los_class not in ("LoS", "OLoS"):
            raise ValidationError(f"{self.rx_id}: los_class must be 'LoS' or 'OLoS', "
                                  f"got {self.los_class!r}")


@dataclass(frozen=True)
class AntennaElevationGainTable:
    """Gain excess (dB) of the elevation-summed virtual pattern over the horn,
    tabulated versus frequency; interpolated linearly in dB."""

    entries: tuple[tuple[float, float], ...]

    def __post_init__(self):
        entries = tuple((float(f), float(g)) for f, g in self.entries)
        object.__setattr__(self, "entries", entries)
        if len(entries) < 1:
            raise ValidationError("gain table must have at least one entry")
        freqs = [f for f, _ in entries]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValidationError("gain table frequencies must be strictly increasing")
        if any(not np.isfinite(g) for _, g in entries):
            raise ValidationError("gain table corrections must be finite")

    def correction_db_at(self, f_hz: float) -> float:
        freqs = np.array([f for f, _ in self.entries])
        gains = np.array([g for _, g in self.entries])
        if f_hz < freqs[0] or f_hz > freqs[-1]:
            raise ValidationError(
                f"frequency {f_hz} Hz outside gain table hull "
                f"[{freqs[0]}, {freqs[-1]}]; extrapolation refused")
        return float(np.interp(f_hz, freqs, gains))

    @classmethod
    def flat(cls, correction_db: float = 0.0) -> "AntennaElevationGainTable":
        """Frequency-independent table (0 dB by default, for synthetic data)."""
        return cls(((1.0, correction_db), (1e15, correction_db)))


# Nominal campaign configuration: 6-14 GHz sweep with 1 MHz spacing, Tx
# azimuth -60..60 deg, Rx azimuth 0..350 deg, Rx co-elevation -20..20 deg
# (2340 scan positions), reference distance 56.45 m.
NOMINAL_GRID = FrequencyGrid(6e9, 14e9, 8001)
NOMINAL_ANGLES = AngularGrid(
    tx_az_deg=tuple(float(a) for a in range(-60, 61, 10)),
    rx_az_deg=tuple(float(a) for a in range(0, 360, 10)),
    rx_coel_deg=tuple(float(a) for a in range(-20, 21, 10)),
)
OTA_DISTANCE_M = 56.45

#: Measured elevation-gain excess anchors: 3.7 dB at 6.5 GHz, 1.57 dB at 13.5 GHz.
DEFAULT_GAIN_TABLE = AntennaElevationGainTable(((6.5e9, 3.7), (13.5e9, 1.57)))

#: Campaign link distances by receiver identifier (meters).
CAMPAIGN_LINKS = (
    LinkGeometry("Rx1", 65.1, "LoS"),
    LinkGeometry("Rx2", 62.1, "OLoS"),
    LinkGeometry("Rx3", 103.5, "OLoS"),
    LinkGeometry("Rx4", 139.1, "OLoS"),
    LinkGeometry("Rx5", 143.6, "OLoS"),
    LinkGeometry("Rx6", 162.8, "OLoS"),
    LinkGeometry("Rx7", 201.4, "OLoS"),
    LinkGeometry("Rx8", 214.9, "OLoS"),
    LinkGeometry("Rx9", 336.3, "OLoS"),
    LinkGeometry("Rx10", 404.9, "OLoS"),
    LinkGeometry("Rx11", 436.1, "OLoS"),
)
