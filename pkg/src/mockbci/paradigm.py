"""Calibration timeline, rest extraction and driving-run segmentation.

Trial time convention: t = 0 is the directional cue, the movement onset is
at t = 1.25 s and the hold phase lasts until t = 5.0 s. Driving runs are
re-anchored to the same frame so one epoching routine serves both sessions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LEFT, REST, RIGHT, TRIAL_END, Marker, MarkerList
from .errors import ValidationError

PREPARATION_S = 30.0
CROSS_DURATION_S = 3.0
CUE_TO_ONSET_S = 1.25
CUE_TO_END_S = 5.0
HOLD_DURATION_S = CUE_TO_END_S - CUE_TO_ONSET_S      # 3.75
REST_GAP_RANGE_S = (1.5, 3.5)
REST_EPOCH_OFFSET_S = 0.5        # rest sample starts this long after trial end
REST_EPOCH_DURATION_S = 4.0      # ... and ends 4.5 s after trial end
EMG_CROP_S = 0.2
MIN_RUN_DURATION_S = 3.75


@dataclass(frozen=True)
class TrialDescriptor:
    label: str                 # LEFT or RIGHT
    cross_onset_s: float
    cue_onset_s: float
    movement_onset_s: float
    trial_end_s: float
    rest_gap_s: float


@dataclass
class CalibrationSchedule:
    trials: tuple[TrialDescriptor, ...]
    preparation_s: float = PREPARATION_S

    @property
    def duration_s(self) -> float:
        last = self.trials[-1]
        return last.trial_end_s + last.rest_gap_s

    def cue_markers(self) -> MarkerList:
        return MarkerList([Marker(t.cue_onset_s, t.label) for t in self.trials])

    def end_markers(self) -> MarkerList:
        return MarkerList([Marker(t.trial_end_s, TRIAL_END) for t in self.trials])


@dataclass(frozen=True)
class DrivingRun:
    onset_s: float
    duration_s: float
    predicted_class: str


def make_calibration_schedule(seed: int, n_per_class: int = 20
                              ) -> CalibrationSchedule:
    """Shuffled left/right motor-execution timeline.

    30 s preparation, then per trial: fixation cross for 3 s, cue (trial
    t = 0), movement onset at +1.25 s, hold until +5.0 s, then a uniform
    1.5 - 3.5 s rest gap. Deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    labels = np.array([LEFT] * n_per_class + [RIGHT] * n_per_class)
    labels = labels[rng.permutation(len(labels))]
    gaps = rng.uniform(*REST_GAP_RANGE_S, size=len(labels))
    trials = []
    cursor = PREPARATION_S
    for label, gap in zip(labels, gaps):
        cross = cursor
        cue = cross + CROSS_DURATION_S
        trials.append(TrialDescriptor(
            label=str(label),
            cross_onset_s=cross,
            cue_onset_s=cue,
            movement_onset_s=cue + CUE_TO_ONSET_S,
            trial_end_s=cue + CUE_TO_END_S,
            rest_gap_s=float(gap),
        ))
        cursor = cue + CUE_TO_END_S + gap
    return CalibrationSchedule(tuple(trials))


def extract_rest_markers(schedule: CalibrationSchedule) -> MarkerList:
    """One REST marker per trial at trial_end + 0.5 s.

    The associated rest sample spans [trial_end + 0.5, trial_end + 4.5] s,
    i.e. a (0, REST_EPOCH_DURATION_S) epoch window relative to the marker.
    The window may overlap the next trial's fixation cross, which is
    intended: it matches the rest statistics of the driving session.
    """
    if not schedule.trials:
        raise ValidationError("schedule has no trials")
    return MarkerList([Marker(t.trial_end_s + REST_EPOCH_OFFSET_S, REST)
                       for t in schedule.trials])


def segment_driving(times: np.ndarray, predictions: np.ndarray,
                    min_duration_s: float = MIN_RUN_DURATION_S,
                    period_s: float | None = None) -> list[DrivingRun]:
    """Maximal constant-prediction runs of at least ``min_duration_s``.

    The stream must be chronological at a uniform rate; each prediction
    covers one period, so a run of n predictions lasts ``n * period``.
    Runs shorter than the threshold are discarded; each retained run yields
    one trial anchored at its first prediction.
    """
    times = np.asarray(times, dtype=float)
    predictions = np.asarray(predictions)
    if len(times) != len(predictions):
        raise ValidationError("times and predictions differ in length")
    if len(times) == 0:
        return []
    diffs = np.diff(times)
    if np.any(diffs <= 0):
        raise ValidationError("prediction times must be strictly increasing")
    if period_s is None:
        if len(times) < 2:
            raise ValidationError("cannot infer the period from one prediction")
        period_s = float(np.median(diffs))
    if len(diffs) and np.max(np.abs(diffs - period_s)) > 1e-6 * max(period_s, 1.0):
        raise ValidationError("prediction stream is not uniformly sampled")

    runs = []
    start = 0
    for i in range(1, len(predictions) + 1):
        if i == len(predictions) or predictions[i] != predictions[start]:
            duration = (i - start) * period_s
            if duration >= min_duration_s:
                runs.append(DrivingRun(float(times[start]), float(duration),
                                       str(predictions[start])))
            start = i
    return runs


def runs_to_markers(runs: list[DrivingRun]) -> MarkerList:
    """Cue-frame markers for driving runs.

    The run start is the movement onset, so the marker sits 1.25 s earlier;
    epoching with the calibration window (1.25, 5.0) then places the onset
    at t = 1.25 exactly as in calibration.
    """
    return MarkerList([Marker(r.onset_s - CUE_TO_ONSET_S, r.predicted_class)
                       for r in runs])


def emg_crop_window(trial: TrialDescriptor) -> tuple[float, float]:
    """Absolute 200 ms window centred on the midpoint of the hold phase
    (movement_onset + 1.875 s)."""
    center = trial.movement_onset_s + HOLD_DURATION_S / 2
    return (center - EMG_CROP_S / 2, center + EMG_CROP_S / 2)


# the same crop expressed relative to the cue, for epoch extraction
EMG_CROP_WINDOW_CUE = (CUE_TO_ONSET_S + HOLD_DURATION_S / 2 - EMG_CROP_S / 2,
                       CUE_TO_ONSET_S + HOLD_DURATION_S / 2 + EMG_CROP_S / 2)
# middle 200 ms of the 4 s rest sample, relative to the rest marker
EMG_CROP_WINDOW_REST = (REST_EPOCH_DURATION_S / 2 - EMG_CROP_S / 2,
                        REST_EPOCH_DURATION_S / 2 + EMG_CROP_S / 2)
