"""Figure rendering for processed output directories.

Reads only the delimited outputs (condensed CSV, fits JSON, profile dumps)
and writes PNG files next to them, so reports can be regenerated without
re-processing raw data.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from scipy import stats

from .dataio import read_condensed_csv
from .errors import ValidationError

C_LIGHT = 299_792_458.0

METRIC_LABELS = {
    "pl_omni": ("pl_omni_db", "Path loss, omni (dB)"),
    "pl_maxdir": ("pl_maxdir_db", "Path loss, strongest beam (dB)"),
    "rmsds_omni": ("rmsds_omni_dbs", "RMS delay spread, omni (dBs)"),
    "rmsds_maxdir": ("rmsds_maxdir_dbs", "RMS delay spread, strongest beam (dBs)"),
    "as_tx_az": ("as_tx_az", "Angular spread, Tx azimuth"),
    "as_rx_az": ("as_rx_az", "Angular spread, Rx azimuth"),
    "as_rx_el": ("as_rx_el", "Angular spread, Rx elevation"),
}


def _save(fig, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def _band_rows(rows, label):
    return [r for r in rows if r.band_label == label]


def render_distance_fit(rows, fits, metric: str, out: Path) -> Path | None:
    attr, ylabel = METRIC_LABELS[metric]
    labels = []
    for r in rows:
        if r.band_label not in labels:
            labels.append(r.band_label)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    cmap = plt.get_cmap("viridis")
    for idx, label in enumerate(labels):
        sel = _band_rows(rows, label)
        d = [r.distance_m for r in sel]
        v = [getattr(r, attr) for r in sel]
        ax.semilogx(d, v, "o", ms=4, color=cmap(idx / max(len(labels) - 1, 1)),
                    label=label, alpha=0.75)
    fit = fits.get(metric, {}).get("All Bands", {}).get("linear")
    if fit is None and labels:
        fit = fits.get(metric, {}).get(labels[0], {}).get("linear")
    if fit is not None:
        d_all = np.array([r.distance_m for r in rows])
        dd = np.geomspace(d_all.min(), d_all.max(), 100)
        line = fit["alpha"] + 10.0 * fit["beta"] * np.log10(dd)
        lo = fit["ci95"]["alpha"][0] + 10.0 * fit["ci95"]["beta"][0] * np.log10(dd)
        hi = fit["ci95"]["alpha"][1] + 10.0 * fit["ci95"]["beta"][1] * np.log10(dd)
        ax.semilogx(dd, line, "k-", lw=1.5,
                    label=f"fit: {fit['alpha']:.2f} + 10*{fit['beta']:.2f} log10(d)")
        ax.fill_between(dd, lo, hi, color="k", alpha=0.08, lw=0)
    ax.set_xlabel("distance (m)")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7, ncol=2)
    path = out / f"{metric}_vs_distance.png"
    _save(fig, path)
    return path


def render_cdf(rows, fits, metric: str, out: Path) -> Path | None:
    attr, xlabel = METRIC_LABELS[metric]
    labels = []
    for r in rows:
        if r.band_label not in labels:
            labels.append(r.band_label)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    cmap = plt.get_cmap("viridis")
    for idx, label in enumerate(labels):
        v = np.sort([getattr(r, attr) for r in _band_rows(rows, label)])
        if v.size == 0:
            continue
        cdf = np.arange(1, v.size + 1) / v.size
        ax.step(v, cdf, where="post", color=cmap(idx / max(len(labels) - 1, 1)),
                label=label, lw=1.2)
    fit = fits.get(metric, {}).get("All Bands", {}).get("normal")
    if fit is not None and fit["sigma"] > 0:
        xs = np.linspace(fit["mu"] - 3 * fit["sigma"], fit["mu"] + 3 * fit["sigma"], 200)
        ax.plot(xs, stats.norm.cdf(xs, fit["mu"], fit["sigma"]), "k--", lw=1.5,
                label=f"normal fit ({fit['mu']:.2f}, {fit['sigma']:.2f})")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("CDF")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7, ncol=2)
    path = out / f"{metric}_cdf.png"
    _save(fig, path)
    return path


def render_pdp(profile_csv: Path, out: Path) -> Path | None:
    data = np.genfromtxt(profile_csv, delimiter=",", names=True)
    if data.size == 0:
        return None
    delay = np.atleast_1d(data["delay_s"])
    power = np.atleast_1d(data["power"])
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot(delay * C_LIGHT, 10 * np.log10(power), ".", ms=3)
    ax.set_xlabel("runlength (m)")
    ax.set_ylabel("power (dB)")
    ax.set_title(profile_csv.stem.replace("__", "  "), fontsize=9)
    ax.grid(True, alpha=0.3)
    path = out / f"{profile_csv.stem}.png"
    _save(fig, path)
    return path


def render_aps(profile_csv: Path, out: Path) -> Path | None:
    data = np.genfromtxt(profile_csv, delimiter=",", names=True)
    if data.size == 0:
        return None
    ang = np.atleast_1d(data["angle_deg"])
    power = np.atleast_1d(data["power"])
    floor = power[power > 0].min() if np.any(power > 0) else 1.0
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot(ang, 10 * np.log10(np.maximum(power, floor * 1e-3)), "o-", ms=3, lw=1)
    ax.set_xlabel("angle (deg)")
    ax.set_ylabel("power (dB)")
    ax.set_title(profile_csv.stem.replace("__", "  "), fontsize=9)
    ax.grid(True, alpha=0.3)
    path = out / f"{profile_csv.stem}.png"
    _save(fig, path)
    return path


def render_report(processed_dir, out_dir=None, max_profile_figs: int = 12) -> list[str]:
    """Render every figure the processed directory supports; returns the list
    of files written."""
    processed = Path(processed_dir)
    out = Path(out_dir) if out_dir is not None else processed / "figures"
    csv_path = processed / "condensed_params.csv"
    if not csv_path.is_file():
        raise ValidationError(f"not a processed output directory: {csv_path} missing")
    rows = read_condensed_csv(csv_path)
    fits_path = processed / "tables" / "fits.json"
    fits = json.loads(fits_path.read_text("utf-8")) if fits_path.is_file() else {}

    written = []
    for metric in METRIC_LABELS:
        p = render_distance_fit(rows, fits, metric, out)
        if p:
            written.append(str(p))
        if not metric.startswith("pl_"):
            p = render_cdf(rows, fits, metric, out)
            if p:
                written.append(str(p))
    profiles = sorted((processed / "profiles").glob("*__pdp_*.csv"))[:max_profile_figs]
    for prof in profiles:
        p = render_pdp(prof, out)
        if p:
            written.append(str(p))
    aps = sorted((processed / "profiles").glob("*__aps_*.csv"))[:max_profile_figs]
    for prof in aps:
        p = render_aps(prof, out)
        if p:
            written.append(str(p))
    return written
