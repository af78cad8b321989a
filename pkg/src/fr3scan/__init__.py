"""fr3scan: post-processing and statistical modeling for ultra-wideband
double-directional channel scans in the 6-14 GHz upper midband."""

__version__ = "0.1.0"

from .errors import (CalibrationError, FitError, Fr3ScanError, OutageError,
                     SynthesisError, ValidationError)
from .model import (AngularGrid, AntennaElevationGainTable, CalibrationTrace,
                    CAMPAIGN_LINKS, DEFAULT_GAIN_TABLE, FrequencyGrid,
                    FrequencyScanTensor, LinkGeometry, NOMINAL_ANGLES,
                    NOMINAL_GRID, OTA_DISTANCE_M, SubBand, band_label,
                    nominal_subbands)
from .pdp import (PdpOptions, PowerDelayProfile, apply_gate_threshold, calibrate,
                  compute_pdp, extract_subband, spectral_window)
from .directional import (DirectionalPdpSet, OmniPdp, build_omni,
                          compute_directional_pdps, select_max_dir)
from .metrics import (AngularSpreadResult, CondensedLinkParams, Ddaps,
                      angular_spread, compute_ddaps, db_seconds, marginal_aps,
                      path_gain, path_loss_db, rmsds)
from .fitting import (DistanceWeighting, NormalFit, PowerLawFit, fit_normal,
                      fit_power_law, shadowing_residuals)
from .synth import (HornPatternModel, ModelParams, SyntheticMpc, friis_pl_db,
                    render_tensor, sample_link)
from .dataio import (MeasurementSet, MeasurementSetReader, load_measurement_set,
                     save_measurement_set, save_results)
