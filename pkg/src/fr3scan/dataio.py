"""Measurement-set directory I/O and results serialization.

A measurement set is a directory with a ``manifest.json`` (format version 1)
and one binary payload per link plus one for the reference trace.  Payloads
are little-endian IEEE-754 float64 (real, imaginary) pairs, row-major in
index order [tx_az][rx_az][rx_coel][f]; the reference trace is [f] only.

All numeric text output uses ``repr`` floats, which round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .fitting import NormalFit, PowerLawFit
from .metrics import CondensedLinkParams
from .model import (AngularGrid, CalibrationTrace, FrequencyGrid,
                    FrequencyScanTensor, LinkGeometry)

MANIFEST_NAME = "manifest.json"
FORMAT_VERSION = 1

POWERLAW_HEADER = ["frequency", "alpha_lo", "alpha", "alpha_hi",
                   "beta_lo", "beta", "beta_hi"]
NORMAL_HEADER = ["frequency", "mu_lo", "mu", "mu_hi",
                 "sigma_lo", "sigma", "sigma_hi"]
SHADOWING_HEADER = ["frequency", "sigma_lo", "sigma", "sigma_hi"]


def fmt(x) -> str:
    """Round-trip-exact decimal rendering of a float."""
    return repr(float(x))


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else fmt(cell) for cell in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path: Path, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# measurement sets

@dataclass(frozen=True)
class MeasurementSet:
    """A fully loaded measurement set: one tensor per link plus the reference."""

    grid: FrequencyGrid
    angles: AngularGrid
    ota: CalibrationTrace
    links: tuple[LinkGeometry, ...]
    tensors: dict[str, FrequencyScanTensor]

    def tensor_for(self, rx_id: str) -> FrequencyScanTensor:
        return self.tensors[rx_id]


class MeasurementSetReader:
    """Lazy handle on a measurement-set directory; loads one link at a time so
    large campaigns do not need to fit in memory at once."""

    def __init__(self, root: Path):
        self.root = Path(root)
        manifest_path = self.root / MANIFEST_NAME
        if not manifest_path.is_file():
            raise ValidationError(f"missing manifest: {manifest_path}")
        try:
            manifest = json.loads(manifest_path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{manifest_path}: invalid JSON ({exc})") from exc
        self.manifest = manifest
        version = manifest.get("version")
        if version != FORMAT_VERSION:
            raise ValidationError(
                f"{manifest_path}: unknown format version {version!r} "
                f"(expected {FORMAT_VERSION})")
        try:
            freq = manifest["frequency"]
            self.grid = FrequencyGrid(float(freq["start_hz"]), float(freq["stop_hz"]),
                                      int(freq["n_points"]))
            ang = manifest["angles"]
            self.angles = AngularGrid(tuple(ang["tx_az_deg"]), tuple(ang["rx_az_deg"]),
                                      tuple(ang["rx_coel_deg"]))
            self.links = tuple(
                LinkGeometry(str(l["rx_id"]), float(l["distance_m"]), str(l["los_class"]))
                for l in manifest["links"])
            self._link_files = {str(l["rx_id"]): str(l["file"]) for l in manifest["links"]}
            ota_entry = manifest["ota"]
            ota_file, ota_distance = str(ota_entry["file"]), float(ota_entry["distance_m"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{manifest_path}: missing or malformed field {exc}") from exc
        if len({l.rx_id for l in self.links}) != len(self.links):
            raise ValidationError(f"{manifest_path}: duplicate rx_id in links")
        ota_values = self._read_payload(ota_file, (self.grid.n_points,))
        self.ota = CalibrationTrace(self.grid, ota_values, ota_distance)

    def _read_payload(self, name: str, shape: tuple[int, ...]) -> np.ndarray:
        path = self.root / name
        if not path.is_file():
            raise ValidationError(f"missing payload file: {path}")
        expected = int(np.prod(shape)) * 16
        actual = path.stat().st_size
        if actual != expected:
            raise ValidationError(
                f"{path}: dimension mismatch, expected {expected} bytes "
                f"({'x'.join(map(str, shape))} complex values), found {actual}")
        data = np.fromfile(path, dtype="<c16")
        return data.reshape(shape)

    def load_link(self, rx_id: str) -> FrequencyScanTensor:
        if rx_id not in self._link_files:
            raise ValidationError(f"unknown link {rx_id!r}")
        shape = self.angles.shape + (self.grid.n_points,)
        values = self._read_payload(self._link_files[rx_id], shape)
        try:
            return FrequencyScanTensor(self.grid, self.angles, values)
        except ValidationError as exc:
            raise ValidationError(f"{self.root / self._link_files[rx_id]}: {exc}") from exc

    @property
    def n_positions(self) -> int:
        return self.angles.n_positions


def load_measurement_set(path) -> MeasurementSet:
    """Load and validate a whole measurement-set directory."""
    reader = MeasurementSetReader(Path(path))
    tensors = {link.rx_id: reader.load_link(link.rx_id) for link in reader.links}
    return MeasurementSet(reader.grid, reader.angles, reader.ota, reader.links, tensors)


def save_measurement_set(mset: MeasurementSet, path) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    links = []
    for link in mset.links:
        fname = f"{link.rx_id.lower()}.bin"
        links.append({"rx_id": link.rx_id, "distance_m": link.distance_m,
                      "los_class": link.los_class, "file": fname})
        atomic_write_bytes(root / fname,
                           np.ascontiguousarray(mset.tensors[link.rx_id].values,
                                                dtype="<c16").tobytes())
    atomic_write_bytes(root / "ota.bin",
                       np.ascontiguousarray(mset.ota.values, dtype="<c16").tobytes())
    manifest = {
        "version": FORMAT_VERSION,
        "frequency": {"start_hz": mset.grid.f_start_hz, "stop_hz": mset.grid.f_stop_hz,
                      "n_points": mset.grid.n_points},
        "angles": {"tx_az_deg": list(mset.angles.tx_az_deg),
                   "rx_az_deg": list(mset.angles.rx_az_deg),
                   "rx_coel_deg": list(mset.angles.rx_coel_deg)},
        "ota": {"file": "ota.bin", "distance_m": mset.ota.d_ota_m},
        "links": links,
    }
    write_json(root / MANIFEST_NAME, manifest)


# ---------------------------------------------------------------------------
# results

def _powerlaw_row(fit: PowerLawFit) -> list:
    return [fit.band_label, fit.alpha_lo, fit.alpha_db, fit.alpha_hi,
            fit.beta_lo, fit.beta, fit.beta_hi]


def _normal_row(fit: NormalFit) -> list:
    return [fit.band_label, fit.mu_lo, fit.mu, fit.mu_hi,
            fit.sigma_lo, fit.sigma, fit.sigma_hi]


def _fit_payload(fit) -> dict:
    if isinstance(fit, PowerLawFit):
        return {"kind": "linear", "alpha": fit.alpha_db, "beta": fit.beta,
                "sigma_shadow": fit.sigma_shadow_db,
                "ci95": {"alpha": [fit.alpha_lo, fit.alpha_hi],
                         "beta": [fit.beta_lo, fit.beta_hi],
                         "sigma": [fit.sigma_lo, fit.sigma_hi]},
                "n_points": fit.n_points,
                "weighting": {"scheme": fit.weighting.scheme,
                              "bin_decades": fit.weighting.bin_decades}}
    return {"kind": "normal", "mu": fit.mu, "sigma": fit.sigma,
            "ci95": {"mu": [fit.mu_lo, fit.mu_hi], "sigma": [fit.sigma_lo, fit.sigma_hi]},
            "n_points": fit.n}


def save_results(fits: Sequence[PowerLawFit | NormalFit], path) -> None:
    """Emit per-metric CSV tables plus one JSON document keyed by
    (metric, band).  An empty collection emits a header-only ``fits.csv``."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    if not fits:
        write_csv(root / "fits.csv", POWERLAW_HEADER, [])
        write_json(root / "fits.json", {})
        return
    by_metric: dict[str, list] = {}
    for fit in fits:
        key = fit.metric_id or "fits"
        by_metric.setdefault(key, []).append(fit)
    payload: dict[str, dict] = {}
    for metric, group in by_metric.items():
        linear = [f for f in group if isinstance(f, PowerLawFit)]
        normal = [f for f in group if isinstance(f, NormalFit)]
        if linear:
            name = f"{metric}_linear.csv" if normal else f"{metric}.csv"
            write_csv(root / name, POWERLAW_HEADER, [_powerlaw_row(f) for f in linear])
        if normal:
            name = f"{metric}_normal.csv" if linear else f"{metric}.csv"
            write_csv(root / name, NORMAL_HEADER, [_normal_row(f) for f in normal])
        payload[metric] = {}
        for f in group:
            entry = _fit_payload(f)
            slot = payload[metric].setdefault(f.band_label, {})
            slot[entry["kind"]] = entry
    write_json(root / "fits.json", payload)


def write_shadowing_csv(fits: Sequence[PowerLawFit], path) -> None:
    """Shadowing sigma table (one row per band) for one metric."""
    rows = [[f.band_label, f.sigma_lo, f.sigma_shadow_db, f.sigma_hi] for f in fits]
    write_csv(Path(path), SHADOWING_HEADER, rows)


def write_condensed_csv(params: Sequence[CondensedLinkParams], path) -> None:
    fields = CondensedLinkParams.CSV_FIELDS
    rows = [[getattr(p, f) for f in fields] for p in params]
    write_csv(Path(path), list(fields), rows)


def read_condensed_csv(path) -> list[CondensedLinkParams]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kwargs = {}
            for name in CondensedLinkParams.CSV_FIELDS:
                raw = row[name]
                kwargs[name] = raw if name in ("rx_id", "band_label", "los_class") else float(raw)
            out.append(CondensedLinkParams(**kwargs))
    return out
