"""mockbci: hardware-free calibration-to-control BCI pipeline.

Synthetic EEG/EMG sessions with known ground truth, the offline analyses
(sensorimotor rhythms, movement-related potentials, CSP transfer
classification) and an online streaming mock-BCI loop.
"""

from .classifiers import (
    LinearModel,
    emg_mean_power_features,
    lda_fit,
    lda_predict,
    logistic_fit,
    logistic_predict,
    logistic_predict_proba,
)
from .csp import SpatialFilterBank, csp_fit_multiclass, csp_log_bandpower, mi_order
from .data import (
    LEFT,
    REST,
    RIGHT,
    ChannelInfo,
    ChannelKind,
    Epochs,
    Marker,
    MarkerList,
    Recording,
    common_average_reference,
    epoch_extract,
    peak_to_peak_reject,
    surface_laplacian,
)
from .evaluation import (
    EvalReport,
    apply_rest_threshold,
    crossval,
    evaluate,
    rest_threshold_calibrate,
)
from .filters import (
    FIRFilter,
    IIRFilter,
    apply_fir_zero_phase,
    apply_iir_causal,
    design_butterworth_bandpass,
    design_fir_bandpass,
    design_notch,
)
from .ica import ICADecomposition, fastica_fit, ica_apply, ica_mark_artifacts
from .paradigm import (
    CalibrationSchedule,
    DrivingRun,
    emg_crop_window,
    extract_rest_markers,
    make_calibration_schedule,
    runs_to_markers,
    segment_driving,
)
from .spectral import DPSSBasis, TimeFrequencyMap, dpss_tapers, multitaper_tfr
from .synth import (
    GroundTruth,
    SynthSpec,
    default_track_sequence,
    generate_calibration_session,
    generate_driving_session,
)

__version__ = "0.1.0"

__all__ = [
    "LinearModel", "emg_mean_power_features", "lda_fit", "lda_predict",
    "logistic_fit", "logistic_predict", "logistic_predict_proba",
    "SpatialFilterBank", "csp_fit_multiclass", "csp_log_bandpower", "mi_order",
    "LEFT", "REST", "RIGHT", "ChannelInfo", "ChannelKind", "Epochs", "Marker",
    "MarkerList", "Recording", "common_average_reference", "epoch_extract",
    "peak_to_peak_reject", "surface_laplacian",
    "EvalReport", "apply_rest_threshold", "crossval", "evaluate",
    "rest_threshold_calibrate",
    "FIRFilter", "IIRFilter", "apply_fir_zero_phase", "apply_iir_causal",
    "design_butterworth_bandpass", "design_fir_bandpass", "design_notch",
    "ICADecomposition", "fastica_fit", "ica_apply", "ica_mark_artifacts",
    "CalibrationSchedule", "DrivingRun", "emg_crop_window",
    "extract_rest_markers", "make_calibration_schedule", "runs_to_markers",
    "segment_driving",
    "DPSSBasis", "TimeFrequencyMap", "dpss_tapers", "multitaper_tfr",
    "GroundTruth", "SynthSpec", "default_track_sequence",
    "generate_calibration_session", "generate_driving_session",
    "__version__",
]
