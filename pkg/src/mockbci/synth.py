"""Synthetic calibration and driving sessions with known ground truth.

The generative model projects a handful of sources through Gaussian scalp
blobs onto the 32-channel EEG montage:

* per-hemisphere alpha (8-12 Hz) and beta (12.5-30 Hz) oscillators whose
  amplitude envelopes carry the event-related desynchronization: the
  contralateral alpha amplitude drops by the configured fraction during the
  hold phase, starting ``erd_lead`` seconds before movement onset (0.25 s in
  calibration, 1.25 s in driving) and releasing 0.5 s before the hold ends;
* a brief beta dip aligned with each movement onset on both hemispheres;
* a slow pre-movement negativity (contingent-negative-variation style ramp)
  at the motor blobs, present only in calibration mode;
* a frontal blink source routed to the EEG and the EOG channels;
* 1/f noise plus a white sensor floor per channel.

EMG channels are band-limited bursts gated by the hold phases. Driving mode
additionally suppresses the baseline alpha amplitude and raises the noise
floor (the domain shift the transfer experiment measures). Everything is a
pure function of (spec, seed): identical inputs give identical bytes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.ndimage import gaussian_filter1d

from . import montage
from .data import (
    LEFT,
    PREP,
    REST,
    RIGHT,
    TRIAL_END,
    ChannelInfo,
    ChannelKind,
    Marker,
    MarkerList,
    Recording,
)
from .errors import ValidationError
from .filters import design_butterworth_bandpass, iir_init_state, iir_process_chunk
from .paradigm import CalibrationSchedule, make_calibration_schedule

Period = tuple[str, float, float]          # (label, start_s, end_s)
Command = tuple[str, float]                # (label, duration_s)


@dataclass
class SynthSpec:
    """Knobs of the generative model. Defaults are calibrated so that the
    standard pipeline lands near the reference operating point (EMG decoding
    well above 0.9 accuracy, calibration macro-F1 around 0.7)."""

    fs: float = 2048.0
    # oscillators (amplitudes are the source scale in volts at blob centre)
    alpha_band: tuple[float, float] = (8.0, 12.0)
    beta_band: tuple[float, float] = (12.5, 30.0)
    alpha_amp: float = 7e-6
    beta_amp: float = 3.0e-6
    # event-related desynchronization
    erd_drop: float = 0.55             # contralateral amplitude drop fraction
    erd_ipsi_fraction: float = 0.35    # ipsilateral drop = fraction * drop
    erd_depth_jitter: float = 0.10     # per-trial sd on the drop fraction
    erd_lead_calibration_s: float = 0.25
    erd_lead_driving_s: float = 1.25
    erd_ramp_s: float = 0.3
    erd_release_s: float = 0.5         # release starts this long before hold end
    # beta dip at movement onset
    beta_dip_depth: float = 0.5
    beta_dip_width_s: float = 0.15
    # slow pre-movement negativity (calibration only)
    cnv_amp: float = 12e-6
    cnv_ipsi_fraction: float = 0.7
    # blink artifact
    blink_rate_hz: float = 0.18
    blink_amp: float = 180e-6          # EOG peak amplitude
    blink_eeg_gain: float = 0.35       # frontal EEG peak = gain * blob * amp
    # EMG
    emg_burst_amp: float = 60e-6
    emg_cocontraction: float = 0.25
    emg_crosstalk: float = 0.05
    emg_noise_amp: float = 5e-6
    emg_mains_amp: float = 3e-6
    emg_burst_ramp_s: float = 0.1
    emg_burst_jitter: float = 0.15
    # noise floor
    pink_amp: float = 2.2e-6
    white_amp: float = 8e-7
    eog_noise_amp: float = 6e-6
    amp_drift_sigma: float = 0.25      # sd of the slow log-amplitude drift
    # driving-mode domain shift
    driving_alpha_suppression: float = 0.25
    driving_noise_factor: float = 1.5

    def validate(self) -> None:
        for name in ("alpha_band", "beta_band"):
            lo, hi = getattr(self, name)
            if not (0 < lo < hi < self.fs / 2):
                raise ValidationError(f"spec field {name}={lo, hi} is not an "
                                      f"ordered band inside (0, fs/2)")
        if self.fs <= 0:
            raise ValidationError("spec field fs must be positive")
        if not (0.0 < self.erd_drop < 1.0):
            raise ValidationError("spec field erd_drop must be in (0, 1)")
        if not (0.0 <= self.driving_alpha_suppression < 1.0):
            raise ValidationError(
                "spec field driving_alpha_suppression must be in [0, 1)")
        for name in ("alpha_amp", "beta_amp", "cnv_amp", "blink_rate_hz",
                     "blink_amp", "blink_eeg_gain", "emg_burst_amp",
                     "emg_noise_amp", "emg_mains_amp", "pink_amp", "white_amp",
                     "eog_noise_amp", "amp_drift_sigma", "erd_ipsi_fraction",
                     "erd_depth_jitter", "driving_noise_factor"):
            if getattr(self, name) < 0:
                raise ValidationError(f"spec field {name} must be >= 0")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["alpha_band"] = list(out["alpha_band"])
        out["beta_band"] = list(out["beta_band"])
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "SynthSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValidationError(f"unknown spec field(s): {sorted(unknown)}")
        kwargs = dict(obj)
        for name in ("alpha_band", "beta_band"):
            if name in kwargs:
                kwargs[name] = tuple(kwargs[name])
        spec = cls(**kwargs)
        spec.validate()
        return spec


@dataclass
class GroundTruth:
    """Everything the tests need to verify a pipeline end to end."""

    mode: str                                   # "calibration" | "driving"
    trial_classes: list[str]
    movement_onsets_s: list[float]
    periods: list[Period]                       # one per trial / command
    source_names: list[str]
    sources: np.ndarray                         # (n_sources, n_samples) f32
    mixing: np.ndarray                          # (32, n_sources) EEG gains
    blink_component: int
    schedule: CalibrationSchedule | None = None
    command_sequence: list[Command] | None = None

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "trial_classes": self.trial_classes,
            "movement_onsets_s": self.movement_onsets_s,
            "periods": [[lab, s, e] for lab, s, e in self.periods],
            "source_names": self.source_names,
            "mixing": self.mixing.tolist(),
            "blink_component": self.blink_component,
        }


SOURCE_NAMES = ["alpha_left_hemi", "alpha_right_hemi", "beta_left_hemi",
                "beta_right_hemi", "slow_left_hemi", "slow_right_hemi",
                "blink"]

# hemisphere contralateral to each hand
_CONTRA = {LEFT: "R", RIGHT: "L"}
_IPSI = {LEFT: "L", RIGHT: "R"}


def _rngs(seed: int) -> dict[str, np.random.Generator]:
    """Independent substreams so that zeroing one component's amplitude
    never perturbs the draws of the others."""
    names = ["schedule", "alpha_l", "alpha_r", "beta_l", "beta_r", "blink",
             "emg", "pink", "white", "eog", "drift", "jitter"]
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(child)
            for name, child in zip(names, children)}


def _bandpass_noise(rng: np.random.Generator, n: int, fs: float,
                    band: tuple[float, float], order: int = 4) -> np.ndarray:
    filt = design_butterworth_bandpass(order, band[0], band[1], fs)
    white = rng.standard_normal(n)
    out, _ = iir_process_chunk(filt, white[np.newaxis, :],
                               iir_init_state(filt, 1))
    out = out[0]
    std = out.std()
    return out / std if std > 0 else out


def _pink_noise(rng: np.random.Generator, n: int, fs: float,
                f_min: float = 0.05) -> np.ndarray:
    spec = rng.standard_normal(n // 2 + 1) + 1j * rng.standard_normal(n // 2 + 1)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    scale = 1.0 / np.sqrt(np.maximum(freqs, f_min))
    scale[0] = 0.0
    out = np.fft.irfft(spec * scale, n)
    std = out.std()
    return out / std if std > 0 else out


def _slow_drift(rng: np.random.Generator, n: int, fs: float,
                sigma: float) -> np.ndarray:
    """exp(sigma * g) with g a smooth unit-variance process (~10 s scale)."""
    if sigma == 0:
        return np.ones(n)
    knot_rate = 2.0
    n_knots = max(int(np.ceil(n / fs * knot_rate)) + 4, 8)
    g = gaussian_filter1d(rng.standard_normal(n_knots), sigma=20.0,
                          mode="reflect")
    std = g.std()
    if std > 0:
        g /= std
    knot_t = np.arange(n_knots) / knot_rate
    return np.exp(sigma * np.interp(np.arange(n) / fs, knot_t, g))


def _smooth(u: np.ndarray) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(np.pi * np.clip(u, 0.0, 1.0))


def _apply_dip(env: np.ndarray, fs: float, start_s: float, ramp_s: float,
               release_start_s: float, release_s: float, depth: float) -> None:
    """Multiply a smooth dip to (1 - depth) into ``env`` in place."""
    n = len(env)
    i0 = max(0, int(round(start_s * fs)))
    i1 = min(n, int(round((start_s + ramp_s) * fs)))
    i2 = min(n, max(i1, int(round(release_start_s * fs))))
    i3 = min(n, max(i2, int(round((release_start_s + release_s) * fs))))
    if i1 > i0:
        u = np.arange(i1 - i0) / max(1, i1 - i0)
        env[i0:i1] *= 1.0 - depth * _smooth(u)
    if i2 > i1:
        env[i1:i2] *= 1.0 - depth
    if i3 > i2:
        u = np.arange(i3 - i2) / max(1, i3 - i2)
        env[i2:i3] *= 1.0 - depth * (1.0 - _smooth(u))


def _apply_gaussian_dip(env: np.ndarray, fs: float, center_s: float,
                        width_s: float, depth: float) -> None:
    n = len(env)
    half = int(round(4 * width_s * fs))
    c = int(round(center_s * fs))
    lo, hi = max(0, c - half), min(n, c + half)
    if hi <= lo:
        return
    t = (np.arange(lo, hi) - c) / fs
    env[lo:hi] *= 1.0 - depth * np.exp(-(t**2) / (2 * width_s**2))


def _cnv_track(n: int, fs: float, cue_times: Sequence[float],
               amps: Sequence[float]) -> np.ndarray:
    """Negative ramp peaking 1.0 s after each cue, recovered by +2.2 s."""
    track = np.zeros(n)
    for cue, amp in zip(cue_times, amps):
        i0 = int(round(cue * fs))
        i1 = int(round((cue + 1.0) * fs))
        i2 = int(round((cue + 2.2) * fs))
        i0, i1, i2 = max(0, i0), min(n, i1), min(n, i2)
        if i1 > i0:
            u = np.arange(i1 - i0) / max(1, i1 - i0)
            track[i0:i1] -= amp * _smooth(u)
        if i2 > i1:
            u = np.arange(i2 - i1) / max(1, i2 - i1)
            track[i1:i2] -= amp * (1.0 - _smooth(u))
    return track


def _blink_train(rng: np.random.Generator, n: int, fs: float,
                 rate_hz: float) -> np.ndarray:
    """Unit-peak blink pulses with Poisson arrivals (80 ms rise, 180 ms fall)."""
    train = np.zeros(n)
    if rate_hz <= 0:
        return train
    duration = n / fs
    t = 1.0  # no blinks in the very first second
    rise, fall = 0.08, 0.18
    while True:
        t += rng.exponential(1.0 / rate_hz)
        amp = float(np.exp(rng.normal(0.0, 0.2)))
        if t >= duration - 0.5:
            break
        i0 = int(round(t * fs))
        i1 = int(round((t + rise) * fs))
        i2 = int(round((t + rise + fall) * fs))
        u = np.arange(i1 - i0) / max(1, i1 - i0)
        train[i0:i1] += amp * _smooth(u)
        u = np.arange(i2 - i1) / max(1, i2 - i1)
        train[i1:i2] += amp * (1.0 - _smooth(u))
    return train


def _burst_envelope(n: int, fs: float, intervals: Sequence[tuple[float, float]],
                    gains: Sequence[float], ramp_s: float) -> np.ndarray:
    env = np.zeros(n)
    ramp = int(round(ramp_s * fs))
    for (start, end), gain in zip(intervals, gains):
        i0, i1 = int(round(start * fs)), int(round(end * fs))
        i0, i1 = max(0, i0), min(n, i1)
        if i1 <= i0:
            continue
        seg = np.full(i1 - i0, gain)
        edge = min(ramp, len(seg) // 2)
        if edge > 0:
            u = np.arange(edge) / edge
            seg[:edge] *= _smooth(u)
            seg[-edge:] *= _smooth(u)[::-1]
        env[i0:i1] = np.maximum(env[i0:i1], seg)
    return env


def build_channels() -> list[ChannelInfo]:
    chans = [ChannelInfo(lab, ChannelKind.EEG, montage.EEG_POSITIONS[lab])
             for lab in montage.EEG_LABELS]
    chans += [ChannelInfo(lab, ChannelKind.EMG) for lab in montage.EMG_LABELS]
    chans += [ChannelInfo(lab, ChannelKind.EOG) for lab in montage.EOG_LABELS]
    return chans


def _generate(spec: SynthSpec, seed: int, mode: str, periods: list[Period],
              cue_times: list[float], markers: MarkerList,
              duration_s: float, schedule: CalibrationSchedule | None,
              commands: list[Command] | None
              ) -> tuple[Recording, MarkerList, GroundTruth]:
    spec.validate()
    fs = spec.fs
    n = int(round(duration_s * fs))
    rngs = _rngs(seed)
    driving = mode == "driving"

    alpha_scale = spec.alpha_amp * (1.0 - (spec.driving_alpha_suppression
                                           if driving else 0.0))
    noise_scale = spec.driving_noise_factor if driving else 1.0
    lead = spec.erd_lead_driving_s if driving else spec.erd_lead_calibration_s

    movement = [(lab, s, e) for lab, s, e in periods if lab in (LEFT, RIGHT)]

    # amplitude envelopes per hemisphere
    alpha_env = {"L": np.ones(n), "R": np.ones(n)}
    beta_env = {"L": np.ones(n), "R": np.ones(n)}
    jitter_rng = rngs["jitter"]
    for lab, onset, end in movement:
        depth = float(np.clip(
            spec.erd_drop * (1.0 + spec.erd_depth_jitter * jitter_rng.standard_normal()),
            0.05, 0.95))
        release_start = end - spec.erd_release_s
        _apply_dip(alpha_env[_CONTRA[lab]], fs, onset - lead, spec.erd_ramp_s,
                   release_start, spec.erd_release_s, depth)
        _apply_dip(alpha_env[_IPSI[lab]], fs, onset - lead, spec.erd_ramp_s,
                   release_start, spec.erd_release_s,
                   depth * spec.erd_ipsi_fraction)
        for hemi in ("L", "R"):
            _apply_gaussian_dip(beta_env[hemi], fs, onset,
                                spec.beta_dip_width_s, spec.beta_dip_depth)

    drift_rng = rngs["drift"]
    drift = {hemi: _slow_drift(drift_rng, n, fs, spec.amp_drift_sigma)
             for hemi in ("L", "R")}

    sources = np.zeros((len(SOURCE_NAMES), n))
    sources[0] = (alpha_scale * drift["L"] * alpha_env["L"]
                  * _bandpass_noise(rngs["alpha_l"], n, fs, spec.alpha_band))
    sources[1] = (alpha_scale * drift["R"] * alpha_env["R"]
                  * _bandpass_noise(rngs["alpha_r"], n, fs, spec.alpha_band))
    sources[2] = (spec.beta_amp * drift["L"] * beta_env["L"]
                  * _bandpass_noise(rngs["beta_l"], n, fs, spec.beta_band))
    sources[3] = (spec.beta_amp * drift["R"] * beta_env["R"]
                  * _bandpass_noise(rngs["beta_r"], n, fs, spec.beta_band))

    if not driving and movement:
        contra_amp = {"L": [], "R": []}
        for lab, _, _ in movement:
            contra_amp[_CONTRA[lab]].append(spec.cnv_amp)
            contra_amp[_IPSI[lab]].append(spec.cnv_amp * spec.cnv_ipsi_fraction)
        sources[4] = _cnv_track(n, fs, cue_times, contra_amp["L"])
        sources[5] = _cnv_track(n, fs, cue_times, contra_amp["R"])

    sources[6] = _blink_train(rngs["blink"], n, fs, spec.blink_rate_hz)

    blob_l = montage.gaussian_blob(montage.LEFT_MOTOR_CENTER)
    blob_r = montage.gaussian_blob(montage.RIGHT_MOTOR_CENTER)
    blob_f = montage.gaussian_blob(montage.FRONTAL_CENTER, sigma=0.30)
    mixing = np.column_stack([
        blob_l, blob_r, blob_l, blob_r, blob_l, blob_r,
        blob_f * spec.blink_eeg_gain * spec.blink_amp,
    ])

    n_eeg = len(montage.EEG_LABELS)
    eeg = mixing @ sources
    pink_rng = rngs["pink"]
    for ci in range(n_eeg):
        eeg[ci] += spec.pink_amp * noise_scale * _pink_noise(pink_rng, n, fs)
    eeg += spec.white_amp * noise_scale * rngs["white"].standard_normal((n_eeg, n))

    # EMG: flexor of the moving side bursts, same-side extensor co-contracts
    emg_rng = rngs["emg"]
    side_of = {LEFT: "L", RIGHT: "R"}
    intervals = [(s, e) for _, s, e in movement]
    burst_gains = {"LF": [], "LE": [], "RF": [], "RE": []}
    for lab, _, _ in movement:
        trial_gain = float(np.exp(emg_rng.normal(0.0, spec.emg_burst_jitter)))
        for key in burst_gains:
            side, muscle = key[0], key[1]
            if side == side_of[lab]:
                gain = 1.0 if muscle == "F" else spec.emg_cocontraction
            else:
                gain = spec.emg_crosstalk
            burst_gains[key].append(gain * trial_gain)
    emg = np.zeros((4, n))
    t_axis = np.arange(n) / fs
    for ci, key in enumerate(("LF", "LE", "RF", "RE")):
        env = _burst_envelope(n, fs, intervals, burst_gains[key],
                              spec.emg_burst_ramp_s)
        emg[ci] = (spec.emg_burst_amp * env
                   * _bandpass_noise(emg_rng, n, fs, (30.0, min(500.0, 0.45 * fs)))
                   + spec.emg_noise_amp
                   * _bandpass_noise(emg_rng, n, fs, (30.0, min(500.0, 0.45 * fs)))
                   + spec.white_amp * emg_rng.standard_normal(n))
        phase = emg_rng.uniform(0, 2 * np.pi)
        emg[ci] += spec.emg_mains_amp * np.sin(2 * np.pi * 50.0 * t_axis + phase)

    # EOG: blink plus slow noise
    eog_rng = rngs["eog"]
    eog_gains = np.array([0.15, 0.15, 1.0, -0.8]) * spec.blink_amp
    eog = np.outer(eog_gains, sources[6])
    for ci in range(4):
        eog[ci] += (spec.eog_noise_amp * _pink_noise(eog_rng, n, fs)
                    + spec.white_amp * eog_rng.standard_normal(n))

    data = np.vstack([eeg, emg, eog])
    recording = Recording(data, fs, build_channels(), t0=0.0)

    truth = GroundTruth(
        mode=mode,
        trial_classes=[lab for lab, _, _ in periods],
        movement_onsets_s=[s for lab, s, _ in periods if lab in (LEFT, RIGHT)],
        periods=periods,
        source_names=list(SOURCE_NAMES),
        sources=sources.astype(np.float32),
        mixing=mixing,
        blink_component=6,
        schedule=schedule,
        command_sequence=commands,
    )
    return recording, markers, truth


def generate_calibration_session(spec: SynthSpec, seed: int
                                 ) -> tuple[Recording, MarkerList, GroundTruth]:
    """Full calibration session: 30 s preparation then 2x20 shuffled trials."""
    spec.validate()
    rngs = _rngs(seed)
    schedule_seed = int(rngs["schedule"].integers(0, 2**31 - 1))
    schedule = make_calibration_schedule(schedule_seed)
    duration = schedule.duration_s + 5.0

    periods: list[Period] = [(t.label, t.movement_onset_s, t.trial_end_s)
                             for t in schedule.trials]
    cue_times = [t.cue_onset_s for t in schedule.trials]

    events = [Marker(0.0, PREP)]
    events += [Marker(t.cue_onset_s, t.label) for t in schedule.trials]
    events += [Marker(t.trial_end_s, TRIAL_END) for t in schedule.trials]
    events += [Marker(t.trial_end_s + 0.5, REST) for t in schedule.trials]
    events.sort(key=lambda m: m.t)

    return _generate(spec, seed, "calibration", periods, cue_times,
                     MarkerList(events), duration, schedule, None)


def generate_driving_session(spec: SynthSpec, seed: int,
                             command_sequence: Sequence[Command]
                             ) -> tuple[Recording, MarkerList, GroundTruth]:
    """Driving session driven by a command sequence.

    Commands are (label, duration) with label in {LEFT, RIGHT, REST}; turns
    are movement periods, straights are rest. Driving mode: longer ERD lead,
    no slow pre-movement ramp, suppressed baseline alpha, extra noise.
    """
    spec.validate()
    commands = [(str(lab), float(dur)) for lab, dur in command_sequence]
    if not commands:
        raise ValidationError("command sequence is empty")
    for lab, dur in commands:
        if lab not in (LEFT, RIGHT, REST):
            raise ValidationError(f"unknown command label {lab!r}")
        if dur <= 0:
            raise ValidationError("command durations must be positive")

    lead_in = 5.0
    periods: list[Period] = []
    cursor = lead_in
    for lab, dur in commands:
        periods.append((lab, cursor, cursor + dur))
        cursor += dur
    duration = cursor + 5.0

    events = [Marker(start, lab) for lab, start, _ in periods]
    return _generate(spec, seed, "driving", periods, [], MarkerList(events),
                     duration, None, commands)


def default_track_sequence(laps: int, seed: int,
                           turns_per_lap: int = 6) -> list[Command]:
    """Straight/turn command sequence for the simulated track.

    Per lap: ``turns_per_lap`` turns (balanced LEFT/RIGHT, shuffled), each
    preceded by a 5-10 s straight; turns last 4-6 s so every turn is long
    enough to segment.
    """
    if laps < 1:
        raise ValidationError("laps must be >= 1")
    if turns_per_lap < 2 or turns_per_lap % 2 != 0:
        raise ValidationError("turns_per_lap must be a positive even number")
    rng = np.random.default_rng(seed)
    sequence: list[Command] = []
    for _ in range(laps):
        turns = [LEFT] * (turns_per_lap // 2) + [RIGHT] * (turns_per_lap // 2)
        turns = [turns[i] for i in rng.permutation(turns_per_lap)]
        for turn in turns:
            sequence.append((REST, float(rng.uniform(5.0, 10.0))))
            sequence.append((turn, float(rng.uniform(4.0, 6.0))))
    return sequence
