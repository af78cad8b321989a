"""Synthetic multipath generation and tensor rendering.

This is the inverse of the measurement pipeline: draw discrete multipath
components whose analytic totals match configured path-loss / delay-spread /
angular-spread targets, then render them into a frequency-scan tensor through
a simulated antenna pattern.  It exists to validate the forward pipeline end
to end; its distributional choices are conventions, not measurement claims.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import SynthesisError, ValidationError
from .model import AngularGrid, FrequencyGrid, FrequencyScanTensor, LinkGeometry, NOMINAL_ANGLES

C_LIGHT = 299_792_458.0


def friis_pl_db(distance_m: float, f_hz: float) -> float:
    """Free-space path loss between isotropic antennas, 20 log10(4 pi d f / c)."""
    if distance_m <= 0 or f_hz <= 0:
        raise ValidationError("distance and frequency must be positive")
    return float(20.0 * np.log10(4.0 * np.pi * distance_m * f_hz / C_LIGHT))


@dataclass(frozen=True)
class SyntheticMpc:
    """One discrete multipath component."""

    delay_s: float
    power: float
    tx_az_deg: float
    rx_az_deg: float
    rx_coel_deg: float
    phase_rad: float = 0.0

    def __post_init__(self):
        if self.delay_s < 0:
            raise ValidationError("MPC delay must be non-negative")
        if not self.power > 0:
            raise ValidationError("MPC power must be positive")


@dataclass(frozen=True)
class HornPatternModel:
    """Gaussian-beam approximation of a horn: power is -3 dB at half the HPBW
    off boresight; azimuth offsets wrap on the circle."""

    hpbw_az_deg: float = 30.0
    hpbw_el_deg: float = 30.0
    peak_gain_db: float = 0.0

    def __post_init__(self):
        if not (self.hpbw_az_deg > 0 and self.hpbw_el_deg > 0):
            raise ValidationError("beamwidths must be positive")

    def amplitude(self, d_az_deg, d_el_deg=0.0) -> np.ndarray:
        d_az = _wrap_deg(np.asarray(d_az_deg, float))
        d_el = np.asarray(d_el_deg, float)
        power_db = -12.0 * ((d_az / self.hpbw_az_deg) ** 2
                            + (d_el / self.hpbw_el_deg) ** 2)
        return 10.0 ** ((power_db + self.peak_gain_db) / 20.0)


def _wrap_deg(delta):
    return (np.asarray(delta, float) + 180.0) % 360.0 - 180.0


def render_tensor(mpcs: list[SyntheticMpc], grid: FrequencyGrid, angles: AngularGrid,
                  pattern: HornPatternModel | None = None) -> FrequencyScanTensor:
    """Sum of MPC contributions sqrt(P) g_T g_R e^{j psi} e^{-j 2 pi f tau}.

    ``pattern=None`` uses the idealized delta pattern (unit gain exactly on
    boresight, zero elsewhere), which makes every pipeline stage exactly
    predictable.
    """
    f = grid.frequencies_hz()
    tx = np.asarray(angles.tx_az_deg)
    rx = np.asarray(angles.rx_az_deg)
    el = np.asarray(angles.rx_coel_deg)
    values = np.zeros(angles.shape + (grid.n_points,), dtype=np.complex128)
    for mpc in mpcs:
        ramp = math.sqrt(mpc.power) * np.exp(1j * mpc.phase_rad
                                             - 2j * np.pi * f * mpc.delay_s)
        if pattern is None:
            gt = (np.abs(_wrap_deg(tx - mpc.tx_az_deg)) < 1e-9).astype(float)
            gr = (np.abs(_wrap_deg(rx - mpc.rx_az_deg)) < 1e-9).astype(float)
            ge = (np.abs(el - mpc.rx_coel_deg) < 1e-9).astype(float)
        else:
            gt = pattern.amplitude(tx - mpc.tx_az_deg)
            gr = pattern.amplitude(rx - mpc.rx_az_deg)
            ge = pattern.amplitude(0.0, el - mpc.rx_coel_deg)
        gain = gt[:, None, None] * gr[None, :, None] * ge[None, None, :]
        nz = np.nonzero(gain)
        if len(nz[0]) == 0:
            continue
        values[nz[0], nz[1], nz[2], :] += gain[nz][:, None] * ramp[None, :]
    return FrequencyScanTensor(grid, angles, values)


@dataclass(frozen=True)
class ModelParams:
    """Generative targets; defaults follow the campaign's all-bands results."""

    alpha_db: float = 21.76
    beta: float = 4.14
    sigma_shadow_db: float = 3.22
    rmsds_mu_dbs: float = -84.54
    rmsds_sigma_dbs: float = 8.59
    as_tx_az: float = 0.20
    as_rx_az: float = 0.20
    as_rx_el: float = 0.11
    seed: int = 0

    def __post_init__(self):
        if self.sigma_shadow_db < 0 or self.rmsds_sigma_dbs < 0:
            raise ValidationError("spread parameters must be non-negative")
        for name in ("as_tx_az", "as_rx_az", "as_rx_el"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1]")


def link_rng(seed: int, link_index: int) -> np.random.Generator:
    """Independent stream per link: the generator is seeded with the pair
    (seed, link_index) via numpy's SeedSequence spawning."""
    return np.random.default_rng([int(seed), int(link_index)])


def _grid_step(angles_deg: tuple[float, ...], what: str) -> float:
    if len(angles_deg) < 2:
        return 0.0
    steps = np.diff(angles_deg)
    if not np.allclose(steps, steps[0]):
        raise SynthesisError(f"{what}: cluster placement needs a uniform angle grid")
    return float(steps[0])


def _two_cluster(rng: np.random.Generator, angles_deg: tuple[float, ...],
                 sigma_target: float, circular: bool,
                 what: str) -> list[tuple[float, float]]:
    """Angles and power fractions realizing an exact circular-moment spread.

    Two clusters are placed symmetrically on grid points; the power split p is
    solved from sigma^2 = 2 p (1-p) (1 - cos(delta)).
    """
    if sigma_target == 0.0:
        return [(float(rng.choice(angles_deg)), 1.0)]
    n = len(angles_deg)
    step = _grid_step(angles_deg, what)
    if n < 2 or step == 0.0:
        raise SynthesisError(f"{what}: cannot realize spread {sigma_target} on a single angle")
    m_max = (n - 1) // 2 if not circular else max(1, min((n - 1) // 2, int(90.0 // step)))
    m = None
    for cand in range(1, m_max + 1):
        if math.sin(math.radians(cand * step)) >= sigma_target - 1e-12:
            m = cand
            break
    if m is None:
        reach = math.sin(math.radians(m_max * step)) if m_max >= 1 else 0.0
        raise SynthesisError(
            f"{what}: spread target {sigma_target:.3f} exceeds the grid's reachable "
            f"maximum {reach:.3f}")
    delta = math.radians(2 * m * step)
    q = min(sigma_target**2 / (2.0 * (1.0 - math.cos(delta))), 0.25)
    p = 0.5 * (1.0 + math.sqrt(max(1.0 - 4.0 * q, 0.0)))
    if circular:
        c = int(rng.integers(0, n))
        ia, ib = (c - m) % n, (c + m) % n
    else:
        c = int(rng.integers(m, n - m))
        ia, ib = c - m, c + m
    return [(float(angles_deg[ia]), p), (float(angles_deg[ib]), 1.0 - p)]


def delay_moments(delays_s: np.ndarray, powers: np.ndarray) -> tuple[float, float]:
    """Mean delay and RMS spread of discrete taps (the continuous second
    central moment evaluated on the tap set)."""
    p = np.asarray(powers, float)
    tau = np.asarray(delays_s, float)
    total = p.sum()
    mean = float((p * tau).sum() / total)
    second = float((p * tau**2).sum() / total)
    return mean, float(np.sqrt(max(second - mean * mean, 0.0)))


def _tap_profile(n_taps: int, sigma_target_s: float, first_delay_s: float,
                 decay_db: float, delay_quantum_s: float | None,
                 gap_ratio: float = 1.25) -> tuple[np.ndarray, np.ndarray]:
    """Tap delays (exponentially widening gaps) and exponentially decaying
    powers, scaled so the analytic RMS spread equals ``sigma_target_s``.

    With a delay quantum the delays are snapped to the quantum grid (gaps of
    at least three quanta) and the decay rate is re-solved so the spread
    target still holds exactly.
    """
    gaps = gap_ratio ** np.arange(n_taps - 1)
    u = np.concatenate([[0.0], np.cumsum(gaps)])
    lam0 = decay_db / 10.0 * math.log(10.0) / u[-1]

    def spread(uu, lam):
        return delay_moments(uu, np.exp(-lam * uu))[1]

    s = sigma_target_s / spread(u, lam0)
    if delay_quantum_s is None:
        delays = first_delay_s + s * u
        powers = np.exp(-lam0 * u)
        return delays, powers / powers.sum()

    quantum = delay_quantum_s
    for _ in range(40):
        int_gaps = np.maximum(3, np.round(s * gaps / quantum).astype(int))
        uq = np.concatenate([[0], np.cumsum(int_gaps)]) * quantum
        if spread(uq, 0.0) >= sigma_target_s:
            break
        s *= 1.5
    else:
        raise SynthesisError("could not bracket the delay-spread target on the quantum grid")
    lam_hi = 1.0 / quantum
    while spread(uq, lam_hi) > sigma_target_s:
        lam_hi *= 2.0
        if lam_hi > 1e12 / quantum:
            raise SynthesisError("delay-spread root search failed to bracket")
    lam = brentq(lambda L: spread(uq, L) - sigma_target_s, 0.0, lam_hi, xtol=1e-30)
    delays = round(first_delay_s / quantum) * quantum + uq
    powers = np.exp(-lam * uq)
    return delays, powers / powers.sum()


def sample_link(params: ModelParams, geometry: LinkGeometry, n_mpcs: int,
                link_index: int = 0, angles: AngularGrid = NOMINAL_ANGLES,
                delay_quantum_s: float | None = None, first_delay_s: float = 50e-9,
                decay_db: float = 12.0, gate_delay_s: float = 966.67e-9,
                dynamic_range_cap_db: float = 18.0, max_delay_s: float | None = None,
                max_rejects: int = 100) -> list[SyntheticMpc]:
    """Draw one link's MPC set; deterministic for a given (seed, link_index).

    The total power realizes the power-law draw exactly; tap delays/powers
    realize the delay-spread draw exactly (re-drawn when it cannot fit under
    the delay gate, or when hitting it on a coarse quantized delay grid would
    need a tap dynamic range beyond ``dynamic_range_cap_db`` - taps that deep
    would be clipped by a 22 dB processing threshold and bias every power
    total); angles realize the spread targets exactly via two on-grid
    clusters per end.  Each delay tap is split into one sub-MPC per cluster
    combination so all marginals are exact simultaneously.

    ``max_delay_s`` additionally bounds the last tap below the rendering
    grid's alias-free delay span (1 / frequency spacing); taps beyond it
    would wrap onto early delay bins.
    """
    if n_mpcs < 1:
        raise ValidationError("n_mpcs must be >= 1")
    delay_limit = 0.95 * gate_delay_s
    if max_delay_s is not None:
        delay_limit = min(delay_limit, max_delay_s)
    rng = link_rng(params.seed, link_index)

    eps = params.sigma_shadow_db * rng.standard_normal() if params.sigma_shadow_db else 0.0
    pl_db = params.alpha_db + 10.0 * params.beta * math.log10(geometry.distance_m) + eps
    total_power = 10.0 ** (-pl_db / 10.0)

    tx_cl = _two_cluster(rng, angles.tx_az_deg, params.as_tx_az, False, "tx_az")
    rx_cl = _two_cluster(rng, angles.rx_az_deg, params.as_rx_az, True, "rx_az")
    el_cl = _two_cluster(rng, angles.rx_coel_deg, params.as_rx_el, False, "rx_coel")

    if n_mpcs == 1:
        quantum = delay_quantum_s
        delay0 = first_delay_s if quantum is None else round(first_delay_s / quantum) * quantum
        delays, tap_powers = np.array([delay0]), np.array([1.0])
    else:
        for _ in range(max_rejects):
            draw_dbs = params.rmsds_mu_dbs + params.rmsds_sigma_dbs * rng.standard_normal()
            sigma_target = 10.0 ** (draw_dbs / 10.0)
            try:
                delays, tap_powers = _tap_profile(n_mpcs, sigma_target, first_delay_s,
                                                  decay_db, delay_quantum_s)
            except SynthesisError:
                continue
            range_db = 10.0 * math.log10(tap_powers.max() / tap_powers.min())
            if delays[-1] <= delay_limit and range_db <= dynamic_range_cap_db:
                break
        else:
            raise SynthesisError(
                f"{geometry.rx_id}: no realizable delay-spread draw within the "
                f"{delay_limit*1e9:.1f} ns delay bound and {dynamic_range_cap_db:.0f} dB "
                f"tap range after {max_rejects} attempts")

    mpcs = []
    for delay, q in zip(delays, tap_powers):
        for a_tx, w_tx in tx_cl:
            for a_rx, w_rx in rx_cl:
                for a_el, w_el in el_cl:
                    mpcs.append(SyntheticMpc(
                        delay_s=float(delay),
                        power=float(total_power * q * w_tx * w_rx * w_el),
                        tx_az_deg=a_tx, rx_az_deg=a_rx, rx_coel_deg=a_el,
                        phase_rad=float(rng.uniform(0.0, 2.0 * np.pi))))
    return mpcs


def mpc_total_power(mpcs: list[SyntheticMpc]) -> float:
    return float(sum(m.power for m in mpcs))


def mpc_path_loss_db(mpcs: list[SyntheticMpc]) -> float:
    return float(-10.0 * np.log10(mpc_total_power(mpcs)))


def mpc_delay_spread(mpcs: list[SyntheticMpc]) -> float:
    """Analytic RMS delay spread of the tap set."""
    return delay_moments(np.array([m.delay_s for m in mpcs]),
                         np.array([m.power for m in mpcs]))[1]


def mpc_angular_spread(mpcs: list[SyntheticMpc], end: str) -> float:
    attr = {"tx_az": "tx_az_deg", "rx_az": "rx_az_deg", "rx_el": "rx_coel_deg"}[end]
    phi = np.deg2rad(np.array([getattr(m, attr) for m in mpcs]))
    p = np.array([m.power for m in mpcs])
    mu = (np.exp(1j * phi) * p).sum() / p.sum()
    return float(np.sqrt(max(1.0 - abs(mu) ** 2, 0.0)))


def mpc_max_marginal_share(mpcs: list[SyntheticMpc], end: str) -> float:
    """Largest per-angle power fraction of one end's marginal spectrum.

    For idealized patterns this is the fraction of total power the pipeline's
    per-bin azimuth-pair maximum retains at that end."""
    attr = {"tx_az": "tx_az_deg", "rx_az": "rx_az_deg", "rx_el": "rx_coel_deg"}[end]
    shares: dict[float, float] = {}
    for m in mpcs:
        key = round(getattr(m, attr), 9)
        shares[key] = shares.get(key, 0.0) + m.power
    return max(shares.values()) / mpc_total_power(mpcs)


def generate_measurement_set(params: ModelParams, grid: FrequencyGrid,
                             angles: AngularGrid, links, n_mpcs: int = 8,
                             pattern: HornPatternModel | None = None,
                             first_delay_s: float = 50e-9,
                             quantize_delays: bool = True,
                             gate_delay_s: float = 966.67e-9):
    """Render a complete synthetic measurement set plus its ground truth.

    Returns ``(measurement_set, truth)`` where ``truth`` is a JSON-ready dict
    recording the generating parameters, every MPC, and the values an exact
    pipeline should measure.  Delays are snapped to the unpadded delay grid by
    default so the forward transform reproduces them bin-exactly.
    """
    from .dataio import MeasurementSet
    from .model import CalibrationTrace

    quantum = 1.0 / (grid.n_points * grid.spacing_hz) if quantize_delays else None
    alias_limit = 0.95 / grid.spacing_hz
    tensors = {}
    truth_links = []
    for index, link in enumerate(links):
        mpcs = sample_link(params, link, n_mpcs, link_index=index, angles=angles,
                           delay_quantum_s=quantum, first_delay_s=first_delay_s,
                           gate_delay_s=gate_delay_s, max_delay_s=alias_limit)
        tensors[link.rx_id] = render_tensor(mpcs, grid, angles, pattern)
        expected = expected_pipeline_values(mpcs)
        truth_links.append({
            "rx_id": link.rx_id, "distance_m": link.distance_m,
            "los_class": link.los_class, "link_index": index,
            "expected": expected,
            "mpcs": [{"delay_s": m.delay_s, "power": m.power,
                      "tx_az_deg": m.tx_az_deg, "rx_az_deg": m.rx_az_deg,
                      "rx_coel_deg": m.rx_coel_deg, "phase_rad": m.phase_rad}
                     for m in mpcs],
        })
    mset = MeasurementSet(grid, angles, CalibrationTrace.identity(grid),
                          tuple(links), tensors)
    truth = {
        "params": {
            "alpha_db": params.alpha_db, "beta": params.beta,
            "sigma_shadow_db": params.sigma_shadow_db,
            "rmsds_mu_dbs": params.rmsds_mu_dbs,
            "rmsds_sigma_dbs": params.rmsds_sigma_dbs,
            "as_tx_az": params.as_tx_az, "as_rx_az": params.as_rx_az,
            "as_rx_el": params.as_rx_el, "seed": params.seed,
        },
        "n_mpcs": n_mpcs,
        "pattern": None if pattern is None else {
            "hpbw_az_deg": pattern.hpbw_az_deg, "hpbw_el_deg": pattern.hpbw_el_deg,
            "peak_gain_db": pattern.peak_gain_db},
        "delay_quantum_s": quantum,
        "links": truth_links,
    }
    return mset, truth


def expected_pipeline_values(mpcs: list[SyntheticMpc]) -> dict:
    """What an exact pipeline (idealized pattern, identity reference, zero
    gain correction, on-grid delays) should measure for this MPC set."""
    pl = mpc_path_loss_db(mpcs)
    p_tx = mpc_max_marginal_share(mpcs, "tx_az")
    p_rx = mpc_max_marginal_share(mpcs, "rx_az")
    p_el = mpc_max_marginal_share(mpcs, "rx_el")
    return {
        "pl_total_db": pl,
        "pl_omni_db": pl - 10.0 * math.log10(p_tx * p_rx),
        "pl_maxdir_db": pl - 10.0 * math.log10(p_tx * p_rx * p_el),
        "rmsds_taps_s": mpc_delay_spread(mpcs),
        "as_tx_az": mpc_angular_spread(mpcs, "tx_az"),
        "as_rx_az": mpc_angular_spread(mpcs, "rx_az"),
        "as_rx_el": mpc_angular_spread(mpcs, "rx_el"),
    }
