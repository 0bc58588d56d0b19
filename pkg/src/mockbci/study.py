"""Experiment orchestration: config, pipelines, and the transfer study.

The study reproduces the three-way comparison reported for the CSP
classifier: cross-validated within calibration, cross-validated within
driving, and calibration-to-driving transfer with a rest threshold
calibrated on the first 10% of driving trials.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .classifiers import (
    LinearModel,
    emg_mean_power_features,
    lda_fit,
    logistic_fit,
    logistic_predict_proba,
)
from .csp import SpatialFilterBank, csp_fit_multiclass, csp_log_bandpower
from .data import (
    LEFT,
    REST,
    RIGHT,
    ChannelInfo,
    ChannelKind,
    Epochs,
    MarkerList,
    Recording,
    common_average_reference,
    epoch_extract,
    peak_to_peak_reject,
    surface_laplacian,
)
from .errors import ValidationError
from .evaluation import (
    EvalReport,
    apply_rest_threshold,
    crossval,
    evaluate,
    rest_threshold_calibrate,
)
from .filters import (
    apply_fir_zero_phase,
    apply_iir_causal,
    design_butterworth_bandpass,
    design_fir_bandpass,
    design_notch,
)
from .ica import ICADecomposition, fastica_fit, ica_apply, ica_mark_artifacts
from .paradigm import (
    EMG_CROP_WINDOW_CUE,
    EMG_CROP_WINDOW_REST,
    MIN_RUN_DURATION_S,
    runs_to_markers,
    segment_driving,
)
from .spectral import TimeFrequencyMap, multitaper_tfr
from .streaming import EmgDecoderConfig, batch_causal_decode
from .synth import (
    GroundTruth,
    SynthSpec,
    default_track_sequence,
    generate_calibration_session,
    generate_driving_session,
)

CSP_WINDOW = (1.25, 5.0)        # movement-onset to end-of-trial epochs
REST_CSP_WINDOW = (0.0, 3.75)   # first 3.75 s of the 4 s rest sample
CLASSES = (LEFT, REST, RIGHT)   # sorted order used by the classifiers


@dataclass
class ExperimentConfig:
    """Everything a run needs; round-trips losslessly through JSON."""

    seed: int = 0
    out_dir: str = "out"
    synth: SynthSpec = field(default_factory=SynthSpec)
    laps: int = 3
    turns_per_lap: int = 6
    # EMG decoder chain
    emg_band: tuple[float, float] = (30.0, 500.0)
    emg_order: int = 4
    notch_freq: float = 50.0
    notch_q: float = 30.0
    emg_cv_folds: int = 10
    emit_period_s: float = 0.05
    min_run_s: float = MIN_RUN_DURATION_S
    # EEG chain
    fir_l_freq: float = 1.0
    fir_h_freq: float = 35.0
    fir_l_trans: float = 1.0
    fir_h_trans: float = 8.75
    fir_length_s: float = 3.3
    mrcp_band: tuple[float, float] = (0.1, 3.0)
    mrcp_order: int = 8
    ica_components: int = 20
    ica_decim: int = 8
    ica_threshold: float = 0.7
    ptp_reject_uv: float = 100.0
    # CSP classifier
    n_csp: int = 6
    shrinkage: str | float = "auto"
    logreg_l2: float = 1.0
    cv_folds: int = 5
    threshold_split: float = 0.10
    # analyses
    tfr_fmin: float = 5.0
    tfr_fmax: float = 35.0
    tfr_fstep: float = 1.0
    tfr_window_s: float = 0.5
    tfr_pad_s: float = 0.5
    smr_window: tuple[float, float] = (-3.0, 5.0)
    mrcp_window: tuple[float, float] = (-1.0, 3.0)
    laplacian_centers: tuple[str, ...] = ("C3", "C4")

    _TUPLES = ("emg_band", "mrcp_band", "smr_window", "mrcp_window",
               "laplacian_centers")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["synth"] = self.synth.to_dict()
        for name in self._TUPLES:
            out[name] = list(out[name])
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ValidationError(f"unknown config field(s): {sorted(unknown)}")
        kwargs = dict(obj)
        if "synth" in kwargs:
            kwargs["synth"] = SynthSpec.from_dict(kwargs["synth"])
        for name in cls._TUPLES:
            if name in kwargs:
                kwargs[name] = tuple(kwargs[name])
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    @property
    def tfr_freqs(self) -> np.ndarray:
        return np.arange(self.tfr_fmin, self.tfr_fmax + self.tfr_fstep / 2,
                         self.tfr_fstep)

    def emg_decoder_config(self, fs: float) -> EmgDecoderConfig:
        return EmgDecoderConfig(fs=fs, band_hz=self.emg_band,
                                band_order=self.emg_order,
                                notch_hz=self.notch_freq, notch_q=self.notch_q,
                                emit_period_s=self.emit_period_s)


@dataclass
class Session:
    recording: Recording
    markers: MarkerList
    truth: GroundTruth | None = None


def synthesize_sessions(config: ExperimentConfig) -> tuple[Session, Session]:
    """Generate the calibration and driving sessions for one subject."""
    root = np.random.SeedSequence(config.seed)
    cal_seed, drv_seed, track_seed = (int(s.generate_state(1)[0])
                                      for s in root.spawn(3))
    cal = Session(*generate_calibration_session(config.synth, cal_seed))
    track = default_track_sequence(config.laps, track_seed,
                                   config.turns_per_lap)
    drv = Session(*generate_driving_session(config.synth, drv_seed, track))
    return cal, drv


# ---------------------------------------------------------------- EMG path

def preprocess_emg(recording: Recording, config: ExperimentConfig) -> Recording:
    """CAR over the EMG channels, then causal band-pass and notch."""
    emg = recording.pick_kind(ChannelKind.EMG)
    emg = common_average_reference(emg, kinds=(ChannelKind.EMG,))
    band = design_butterworth_bandpass(config.emg_order, config.emg_band[0],
                                       config.emg_band[1], emg.fs)
    notch = design_notch(config.notch_freq, config.notch_q, emg.fs)
    emg = apply_iir_causal(band, emg)
    return apply_iir_causal(notch, emg)


def emg_training_set(emg: Recording, markers: MarkerList
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Mean-power features from the 200 ms movement and rest crops."""
    moves = epoch_extract(emg, markers, *EMG_CROP_WINDOW_CUE,
                          labels=(LEFT, RIGHT))
    rests = epoch_extract(emg, markers, *EMG_CROP_WINDOW_REST, labels=(REST,))
    epochs = Epochs.concatenate([moves, rests])
    return emg_mean_power_features(epochs), epochs.labels


def train_emg_model(cal: Session, config: ExperimentConfig
                    ) -> tuple[LinearModel, EvalReport]:
    """Fit the LDA mock-BCI decoder and report its cross-validated score."""
    emg = preprocess_emg(cal.recording, config)
    features, labels = emg_training_set(emg, cal.markers)

    def fit_predict(train_idx, test_idx):
        model = lda_fit(features[train_idx], labels[train_idx])
        return model.predict(features[test_idx])

    report = crossval(fit_predict, labels, config.emg_cv_folds, config.seed)
    return lda_fit(features, labels), report


def driving_prediction_stream(drv: Session, model: LinearModel,
                              config: ExperimentConfig
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Causal mock-BCI predictions over the driving session (offline path,
    bit-identical to the streamed decoder)."""
    emg = preprocess_emg(drv.recording, config)
    # the decoder consumes raw EMG and filters internally; feed it raw
    raw = drv.recording.pick_kind(ChannelKind.EMG)
    cfg = config.emg_decoder_config(raw.fs)
    return batch_causal_decode(raw, model, cfg)


# ---------------------------------------------------------------- EEG path

def _fir(config: ExperimentConfig, fs: float):
    return design_fir_bandpass(config.fir_l_freq, config.fir_h_freq,
                               config.fir_l_trans, config.fir_h_trans,
                               config.fir_length_s, fs)


def preprocess_eeg_smr(recording: Recording, config: ExperimentConfig
                       ) -> Recording:
    """CAR over EEG, zero-phase FIR band-pass on the EEG+EOG subset."""
    sub = recording.pick([c.label for c in recording.channels
                          if c.kind in (ChannelKind.EEG, ChannelKind.EOG)])
    sub = common_average_reference(sub, kinds=(ChannelKind.EEG,))
    return apply_fir_zero_phase(_fir(config, sub.fs), sub)


def fit_artifact_ica(filtered_cal: Recording, config: ExperimentConfig
                     ) -> ICADecomposition:
    """Fit FastICA on (decimated) calibration EEG and mark EOG components.

    Fitted on calibration only; applied to both sessions, which keeps the
    procedure valid for online use.
    """
    eeg = filtered_cal.pick_kind(ChannelKind.EEG)
    strided = Recording(eeg.data[:, ::config.ica_decim].copy(),
                        eeg.fs / config.ica_decim, eeg.channels)
    ica = fastica_fit(strided, config.ica_components, seed=config.seed)
    return ica_mark_artifacts(ica, filtered_cal, threshold=config.ica_threshold)


def preprocess_eeg_mrcp(recording: Recording, config: ExperimentConfig,
                        ica: ICADecomposition) -> Recording:
    """CAR, causal narrow low-frequency band-pass, then the shared ICA."""
    sub = recording.pick([c.label for c in recording.channels
                          if c.kind in (ChannelKind.EEG, ChannelKind.EOG)])
    sub = common_average_reference(sub, kinds=(ChannelKind.EEG,))
    band = design_butterworth_bandpass(config.mrcp_order, config.mrcp_band[0],
                                       config.mrcp_band[1], sub.fs)
    eeg_labels = [c.label for c in sub.channels if c.kind == ChannelKind.EEG]
    sub = apply_iir_causal(band, sub, channel_subset=eeg_labels)
    return ica_apply(ica, sub)


def csp_epochs_calibration(clean: Recording, markers: MarkerList,
                           config: ExperimentConfig) -> tuple[Epochs, int]:
    """Movement epochs (onset..end) plus re-anchored 3.75 s rest epochs."""
    eeg = clean.pick_kind(ChannelKind.EEG)
    moves = epoch_extract(eeg, markers, *CSP_WINDOW, labels=(LEFT, RIGHT))
    rests = epoch_extract(eeg, markers, *REST_CSP_WINDOW, labels=(REST,))
    epochs = Epochs.concatenate([moves, rests])
    return peak_to_peak_reject(epochs, config.ptp_reject_uv * 1e-6)


def csp_epochs_driving(clean: Recording, times: np.ndarray,
                       predictions: np.ndarray, config: ExperimentConfig
                       ) -> tuple[Epochs, int]:
    """Epochs from constant-prediction runs, in chronological order."""
    runs = segment_driving(times, predictions, min_duration_s=config.min_run_s)
    markers = runs_to_markers(runs)
    eeg = clean.pick_kind(ChannelKind.EEG)
    epochs = epoch_extract(eeg, markers, *CSP_WINDOW)
    return peak_to_peak_reject(epochs, config.ptp_reject_uv * 1e-6)


class CspPipeline:
    """CSP log-bandpower features into L2 logistic regression."""

    def __init__(self, config: ExperimentConfig) -> None:
        self.config = config
        self.bank: SpatialFilterBank | None = None
        self.model: LinearModel | None = None

    def fit(self, epochs: Epochs) -> "CspPipeline":
        self.bank = csp_fit_multiclass(epochs, n_filters=self.config.n_csp,
                                       shrinkage=self.config.shrinkage)
        features = csp_log_bandpower(self.bank, epochs)
        self.model = logistic_fit(features, epochs.labels,
                                  l2=self.config.logreg_l2)
        return self

    def predict(self, epochs: Epochs) -> np.ndarray:
        return self.model.predict(csp_log_bandpower(self.bank, epochs))

    def predict_proba(self, epochs: Epochs) -> np.ndarray:
        return logistic_predict_proba(self.model,
                                      csp_log_bandpower(self.bank, epochs))


def crossval_csp(epochs: Epochs, config: ExperimentConfig) -> EvalReport:
    def fit_predict(train_idx, test_idx):
        pipe = CspPipeline(config).fit(epochs.subset(train_idx))
        return pipe.predict(epochs.subset(test_idx))

    return crossval(fit_predict, epochs.labels, config.cv_folds, config.seed)


def transfer_evaluation(cal_epochs: Epochs, drv_epochs: Epochs,
                        config: ExperimentConfig
                        ) -> tuple[EvalReport, float, CspPipeline]:
    """Train on all calibration trials, calibrate the rest threshold on the
    first 10% of driving trials, evaluate on the remaining 90%."""
    pipe = CspPipeline(config).fit(cal_epochs)
    proba = pipe.predict_proba(drv_epochs)
    classes = pipe.model.classes
    theta = rest_threshold_calibrate(proba, drv_epochs.labels, classes,
                                     rest_label=REST,
                                     split_fraction=config.threshold_split)
    n_cal = int(np.ceil(config.threshold_split * drv_epochs.n_trials))
    preds = apply_rest_threshold(proba[n_cal:], classes, theta, rest_label=REST)
    report = evaluate(drv_epochs.labels[n_cal:], preds, classes)
    return report, theta, pipe


@dataclass
class StudyResult:
    emg_report: EvalReport
    calibration: EvalReport
    driving: EvalReport
    transfer: EvalReport
    rest_threshold: float
    cal_bank: SpatialFilterBank
    drv_bank: SpatialFilterBank
    n_driving_trials: int
    n_rejected: dict[str, int]
    emg_model: LinearModel
    prediction_stream: tuple[np.ndarray, np.ndarray]
    ica: ICADecomposition

    def to_json_dict(self) -> dict:
        return {
            "emg": self.emg_report.to_json_dict(),
            "calibration": self.calibration.to_json_dict(),
            "driving": self.driving.to_json_dict(),
            "transfer": {**self.transfer.to_json_dict(),
                         "rest_threshold": self.rest_threshold},
            "n_driving_trials": self.n_driving_trials,
            "n_rejected": self.n_rejected,
        }


def run_transfer_study(cal: Session, drv: Session, config: ExperimentConfig,
                       ica: ICADecomposition | None = None,
                       cal_filtered: Recording | None = None,
                       drv_filtered: Recording | None = None) -> StudyResult:
    """The full classification study for one subject."""
    emg_model, emg_report = train_emg_model(cal, config)
    times, stream = driving_prediction_stream(drv, emg_model, config)

    if cal_filtered is None:
        cal_filtered = preprocess_eeg_smr(cal.recording, config)
    if drv_filtered is None:
        drv_filtered = preprocess_eeg_smr(drv.recording, config)
    if ica is None:
        ica = fit_artifact_ica(cal_filtered, config)
    cal_clean = ica_apply(ica, cal_filtered)
    drv_clean = ica_apply(ica, drv_filtered)

    cal_epochs, cal_rej = csp_epochs_calibration(cal_clean, cal.markers, config)
    drv_epochs, drv_rej = csp_epochs_driving(drv_clean, times, stream, config)

    calibration = crossval_csp(cal_epochs, config)
    driving = crossval_csp(drv_epochs, config)
    transfer, theta, pipe = transfer_evaluation(cal_epochs, drv_epochs, config)

    cal_bank = pipe.bank  # trained once more on all calibration data
    drv_bank = csp_fit_multiclass(drv_epochs, n_filters=config.n_csp,
                                  shrinkage=config.shrinkage)
    return StudyResult(emg_report, calibration, driving, transfer, theta,
                       cal_bank, drv_bank, drv_epochs.n_trials,
                       {"calibration": cal_rej, "driving": drv_rej},
                       emg_model, (times, stream), ica)


# ------------------------------------------------------------- SMR / MRCP

def laplacian_recording(clean: Recording, config: ExperimentConfig
                        ) -> Recording:
    """Virtual recording of the surface-Laplacian channels."""
    rows = [surface_laplacian(clean, lab) for lab in config.laplacian_centers]
    chans = [ChannelInfo(lab, ChannelKind.EEG,
                         dict(zip([c.label for c in clean.channels],
                                  [c.position for c in clean.channels])).get(lab))
             for lab in config.laplacian_centers]
    return Recording(np.vstack(rows), clean.fs, chans, clean.t0)


def smr_tfr_maps(clean: Recording, markers: MarkerList,
                 config: ExperimentConfig
                 ) -> dict[tuple[str, str], TimeFrequencyMap]:
    """Per (class, channel) trial-averaged time-frequency maps on the
    Laplacian channels, (-3, 5) s epochs around the cue, no baseline."""
    lap = laplacian_recording(clean, config)
    out = {}
    for label in (LEFT, RIGHT):
        epochs = epoch_extract(lap, markers, *config.smr_window,
                               labels=(label,))
        maps = multitaper_tfr(epochs, config.tfr_freqs,
                              window_s=config.tfr_window_s,
                              pad_s=config.tfr_pad_s)
        for tfr in maps:
            out[(label, tfr.channel)] = tfr
    return out


def mrcp_averages(mrcp_clean: Recording, markers: MarkerList,
                  config: ExperimentConfig
                  ) -> dict[str, dict[str, np.ndarray]]:
    """Epoch-averaged slow potentials per channel and class, plus the
    epoch-local time axis under key ``times``."""
    eeg = mrcp_clean.pick(list(config.laplacian_centers))
    out: dict[str, dict[str, np.ndarray]] = {}
    times = None
    for label in (LEFT, RIGHT):
        epochs = epoch_extract(eeg, markers, *config.mrcp_window,
                               labels=(label,))
        times = epochs.times
        mean = epochs.data.mean(axis=0) if epochs.n_trials else np.zeros(
            (eeg.n_channels, len(times)))
        for ci, ch in enumerate(eeg.channel_labels):
            out.setdefault(ch, {})[label] = mean[ci]
    for ch in out:
        out[ch]["times"] = times
    return out


def driving_markers_from_stream(drv: Session, emg_model: LinearModel,
                                config: ExperimentConfig) -> MarkerList:
    times, stream = driving_prediction_stream(drv, emg_model, config)
    runs = segment_driving(times, stream, min_duration_s=config.min_run_s)
    return runs_to_markers(runs)


# --------------------------------------------------------------- file I/O

def export_csp_patterns_csv(bank: SpatialFilterBank,
                            channels: list[ChannelInfo],
                            path: str | Path) -> None:
    """Patterns in mutual-information order with channel positions."""
    by_label = {c.label: c for c in channels}
    ordered = bank.patterns[:, bank.mi_order]
    lines = ["channel,x,y," + ",".join(f"csp{i}" for i in range(bank.n_filters))]
    for ci, label in enumerate(bank.channel_labels):
        pos = by_label[label].position or (float("nan"), float("nan"))
        vals = ",".join(repr(v) for v in ordered[ci])
        lines.append(f"{label},{pos[0]!r},{pos[1]!r},{vals}")
    Path(path).write_text("\n".join(lines) + "\n")


def export_mrcp_csv(traces: dict[str, np.ndarray], path: str | Path) -> None:
    labels = [k for k in traces if k != "times"]
    lines = ["time_s," + ",".join(labels)]
    for i, t in enumerate(traces["times"]):
        row = ",".join(repr(traces[lab][i]) for lab in labels)
        lines.append(f"{t!r},{row}")
    Path(path).write_text("\n".join(lines) + "\n")
