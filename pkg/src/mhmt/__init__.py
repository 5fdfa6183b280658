"""Multihead, multitrack detection for magnetic recording channels.

Simulates n-track readback with intertrack interference and intersymbol
interference, detects it with joint Viterbi detectors (flat or eigenspace
metrics, with optional adaptive gain tracking), and analyzes minimum
distances, mismatch penalties, and bit error rates.
"""
from ._kernels import BACKEND
from .channel import (
    EPS_MAX,
    ItiProfile,
    coupling_matrix,
    interference_matrix,
    mix_tracks,
    noiseless_readback,
    readback,
)
from .detect import ml_detect, shst_detect, ssjd_detect, viterbi, wssjd_detect
from .distance import (
    DistanceReport,
    closed_form_dmin,
    d0_search,
    dmin_search,
    event_distance,
    mismatch_distance,
    mismatch_dmin_search,
    predicted_pe,
)
from .eigen import EigenSystem, toeplitz_eigen, transform_inputs, transform_outputs
from .gain import (
    GainLoop,
    GainTrace,
    adaptive_wssjd_detect,
    eps_from_gains,
    gain_step,
    ls_gain_estimate,
)
from .signal import (
    DICODE,
    EPR4,
    TargetPolynomial,
    convolve_tracks,
    random_bipolar,
    sigma_from_snr,
    snr_from_sigma,
    substream,
)
from .sim import (
    ResultRow,
    SimConfig,
    count_error_events,
    run_ber_sweep,
    run_dmin_table,
    run_gain_trace,
    run_sensitivity_sweep,
    write_csv,
)
from .trellis import Trellis, build_trellis, ml_labels, trellis_for, wssjd_labels

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DICODE",
    "EPR4",
    "EPS_MAX",
    "DistanceReport",
    "EigenSystem",
    "GainLoop",
    "GainTrace",
    "ItiProfile",
    "ResultRow",
    "SimConfig",
    "TargetPolynomial",
    "Trellis",
    "adaptive_wssjd_detect",
    "build_trellis",
    "closed_form_dmin",
    "count_error_events",
    "convolve_tracks",
    "coupling_matrix",
    "d0_search",
    "dmin_search",
    "eps_from_gains",
    "event_distance",
    "gain_step",
    "interference_matrix",
    "ls_gain_estimate",
    "mismatch_distance",
    "mismatch_dmin_search",
    "mix_tracks",
    "ml_detect",
    "ml_labels",
    "noiseless_readback",
    "predicted_pe",
    "random_bipolar",
    "readback",
    "run_ber_sweep",
    "run_dmin_table",
    "run_gain_trace",
    "run_sensitivity_sweep",
    "shst_detect",
    "sigma_from_snr",
    "snr_from_sigma",
    "ssjd_detect",
    "substream",
    "toeplitz_eigen",
    "transform_inputs",
    "transform_outputs",
    "trellis_for",
    "viterbi",
    "wssjd_detect",
    "wssjd_labels",
    "write_csv",
]
