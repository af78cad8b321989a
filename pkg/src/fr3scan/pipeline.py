"""End-to-end orchestration: measurement set -> condensed parameters -> fits.

Conventions fixed here (and echoed into ``run_meta.json``):

* path gain / path loss / angular spectra come from rectangular-window,
  non-oversampled profiles (lossless total power);
* RMS delay spreads come from the configured window (Hann nominal) with the
  configured oversampling;
* the strongest beam is selected on the rectangular-pass totals;
* the omni gain correction is interpolated at each band's center frequency;
* "All Bands" rows are computed from the full-span wideband profiles, not by
  pooling sub-band results.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (MeasurementSetReader, save_results, write_condensed_csv,
                     write_csv, write_json, write_shadowing_csv)
from .engine import BandResult, process_link_band
from .errors import FitError, ValidationError
from .fitting import DistanceWeighting, NormalFit, PowerLawFit, fit_normal, fit_power_law
from .metrics import CondensedLinkParams, aps_angles_deg, marginal_aps
from .model import (AntennaElevationGainTable, SubBand, band_label, band_slug,
                    nominal_subbands)
from .pdp import PdpOptions, calibrate

#: metric -> (CondensedLinkParams attribute, has normal fit table)
FIT_METRICS = {
    "pl_omni": ("pl_omni_db", False),
    "pl_maxdir": ("pl_maxdir_db", False),
    "rmsds_omni": ("rmsds_omni_dbs", True),
    "rmsds_maxdir": ("rmsds_maxdir_dbs", True),
    "as_tx_az": ("as_tx_az", True),
    "as_rx_az": ("as_rx_az", True),
    "as_rx_el": ("as_rx_el", True),
}


@dataclass(frozen=True)
class LinkResult:
    rx_id: str
    distance_m: float
    los_class: str
    bands: list[BandResult]


def condense_link(values: np.ndarray, reader_grid, angles, bands, opts,
                  gains, precision: str) -> list[BandResult]:
    return [process_link_band(values, reader_grid, band, angles, opts, gains, precision)
            for band in bands]


def condensed_rows(link: LinkResult) -> list[CondensedLinkParams]:
    rows = []
    for br in link.bands:
        rows.append(CondensedLinkParams(
            rx_id=link.rx_id, band_label=br.label, distance_m=link.distance_m,
            los_class=link.los_class,
            pl_omni_db=br.pl_omni_db, pl_maxdir_db=br.pl_maxdir_db,
            rmsds_omni_s=br.rmsds_omni_s, rmsds_omni_dbs=br.rmsds_omni_dbs,
            rmsds_maxdir_s=br.rmsds_maxdir_s, rmsds_maxdir_dbs=br.rmsds_maxdir_dbs,
            as_tx_az=br.spreads["tx_az"].sigma, as_rx_az=br.spreads["rx_az"].sigma,
            as_rx_el=br.spreads["rx_el"].sigma))
    return rows


def fit_tables(rows: list[CondensedLinkParams],
               weighting: DistanceWeighting) -> tuple[list, dict]:
    """Per-metric, per-band linear (and where applicable normal) fits over
    links, one table row per band."""
    fits: list[PowerLawFit | NormalFit] = []
    skipped: dict[str, str] = {}
    band_order: list[str] = []
    for r in rows:
        if r.band_label not in band_order:
            band_order.append(r.band_label)
    for metric, (attr, with_normal) in FIT_METRICS.items():
        for label in band_order:
            sel = [r for r in rows if r.band_label == label]
            samples = [(r.distance_m, getattr(r, attr)) for r in sel]
            try:
                fits.append(fit_power_law(samples, weighting,
                                          band_label=label, metric_id=metric))
            except FitError as exc:
                skipped[f"{metric}/{label}/linear"] = str(exc)
            if with_normal:
                try:
                    fits.append(fit_normal([v for _, v in samples],
                                           band_label=label, metric_id=metric))
                except FitError as exc:
                    skipped[f"{metric}/{label}/normal"] = str(exc)
    return fits, skipped


def write_profiles(out_dir: Path, rx_id: str, grid, br: BandResult) -> None:
    """Plot-ready dumps: kept PDP bins and the three marginal spectra."""
    slug = band_slug(br.band, grid)
    prof = out_dir / "profiles"
    for name, pdp in (("pdp_omni", br.omni_display), ("pdp_maxdir", br.maxdir_display)):
        kept = pdp.kept_mask
        rows = zip(pdp.delays_s[kept], pdp.powers[kept])
        write_csv(prof / f"{rx_id}__{slug}__{name}.csv", ["delay_s", "power"], rows)
    for end in ("tx_az", "rx_az", "rx_el"):
        aps = marginal_aps(br.ddaps, end)
        angles = aps_angles_deg(br.ddaps.angles, end)
        write_csv(prof / f"{rx_id}__{slug}__aps_{end}.csv", ["angle_deg", "power"],
                  zip(angles, aps))


def resolve_bands(grid, tokens: list[str] | None) -> list[SubBand]:
    """Band list from CLI tokens; default is the full span plus every integral
    1-GHz band that fits on the grid."""
    if not tokens:
        bands = nominal_subbands(grid)
        # full span last in construction; present it first like the tables
        return [bands[-1]] + bands[:-1]
    out = []
    for tok in tokens:
        tok = tok.strip()
        if tok.lower() in ("all", "all_bands", "allbands"):
            out.append(SubBand(grid.f_start_hz, grid.f_stop_hz))
            continue
        lo, _, hi = tok.partition("-")
        out.append(SubBand(float(lo) * 1e9, float(hi) * 1e9))
    return out


def process_measurement_set(input_dir, out_dir, bands_tokens=None,
                            opts: PdpOptions = PdpOptions(),
                            weighting: DistanceWeighting = DistanceWeighting(),
                            gains: AntennaElevationGainTable | None = None,
                            precision: str = "single",
                            emit_profiles: bool = True) -> dict:
    """Run the full pipeline and write all outputs; returns a summary dict."""
    from .model import DEFAULT_GAIN_TABLE
    gains = gains if gains is not None else DEFAULT_GAIN_TABLE
    out_dir = Path(out_dir)
    reader = MeasurementSetReader(Path(input_dir))
    if not reader.links:
        raise ValidationError("no links in measurement set")
    bands = resolve_bands(reader.grid, bands_tokens)

    all_rows: list[CondensedLinkParams] = []
    for link in reader.links:
        tensor = reader.load_link(link.rx_id)
        calibrated = calibrate(tensor, reader.ota)
        values = calibrated.values
        del tensor, calibrated
        band_results = condense_link(values, reader.grid, reader.angles, bands,
                                     opts, gains, precision)
        del values
        link_result = LinkResult(link.rx_id, link.distance_m, link.los_class, band_results)
        all_rows.extend(condensed_rows(link_result))
        if emit_profiles:
            for br in band_results:
                write_profiles(out_dir, link.rx_id, reader.grid, br)

    write_condensed_csv(all_rows, out_dir / "condensed_params.csv")
    fits, skipped = fit_tables(all_rows, weighting)
    save_results(fits, out_dir / "tables")
    for metric in ("pl_omni", "pl_maxdir"):
        group = [f for f in fits if isinstance(f, PowerLawFit) and f.metric_id == metric]
        if group:
            write_shadowing_csv(group, out_dir / "tables" / f"{metric}_shadowing.csv")

    meta = {
        "package_version": __version__,
        "input": str(input_dir),
        "bands": [band_label(b, reader.grid) for b in bands],
        "n_links": len(reader.links),
        "conventions": {
            "pl_window": "rect",
            "pl_oversample": 1,
            "rmsds_window": opts.window,
            "rmsds_oversample": opts.oversample_factor,
            "gate_delay_s": opts.gate_delay_s,
            "threshold_below_peak_db": opts.threshold_below_peak_db,
            "maxdir_selection": "rectangular-pass gated totals",
            "gain_correction": "linear dB interpolation at band center",
            "rx_az_as_marginalization": "summed over tx azimuth",
            "all_bands_rows": "full-span wideband processing",
            "engine_precision": precision,
        },
        "weighting": {"scheme": weighting.scheme, "bin_decades": weighting.bin_decades},
        "skipped_fits": skipped,
    }
    write_json(out_dir / "run_meta.json", meta)
    return {"rows": len(all_rows), "fits": len(fits), "skipped": skipped,
            "out_dir": str(out_dir)}
