"""Core data model: recordings, markers, epochs, re-referencing and rejection.

All signal data is stored in volts as ``channels x samples`` float arrays.
Marker times are seconds relative to the recording start (``t0``), so a
recording can be shifted in absolute time without touching its markers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import (
    InsufficientChannelsError,
    InvalidWindowError,
    LayoutError,
    UnknownChannelError,
    ValidationError,
)
from .montage import DEFAULT_LAPLACIAN_NEIGHBORS

# canonical event labels; MarkerList accepts arbitrary strings
LEFT = "LEFT"
RIGHT = "RIGHT"
REST = "REST"
TRIAL_END = "TRIAL_END"
PREP = "PREP"

MOVEMENT_LABELS = (LEFT, RIGHT)


class ChannelKind(str, Enum):
    EEG = "EEG"
    EMG = "EMG"
    EOG = "EOG"


@dataclass(frozen=True)
class ChannelInfo:
    """One channel: 10-20 label for EEG, kind, optional 2-D scalp position."""

    label: str
    kind: ChannelKind = ChannelKind.EEG
    position: tuple[float, float] | None = None


class Marker(NamedTuple):
    t: float  # seconds relative to t0
    label: str


@dataclass
class MarkerList:
    """Timestamped labelled events, non-decreasing in time."""

    events: list[Marker] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.events = [Marker(float(t), str(lab)) for t, lab in self.events]
        times = [m.t for m in self.events]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValidationError("marker times must be non-decreasing")

    def __iter__(self) -> Iterator[Marker]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def filter(self, labels: Iterable[str]) -> "MarkerList":
        keep = set(labels)
        return MarkerList([m for m in self.events if m.label in keep])

    def shifted(self, dt: float) -> "MarkerList":
        return MarkerList([Marker(m.t + dt, m.label) for m in self.events])

    @property
    def times(self) -> np.ndarray:
        return np.array([m.t for m in self.events], dtype=float)

    @property
    def labels(self) -> np.ndarray:
        return np.array([m.label for m in self.events])


@dataclass
class Recording:
    """Continuous multichannel signal.

    Attributes
    ----------
    data : (n_channels, n_samples) float array, volts
    fs : sampling rate in Hz
    channels : per-channel metadata, labels must be unique
    t0 : absolute start time in seconds
    """

    data: np.ndarray
    fs: float
    channels: list[ChannelInfo]
    t0: float = 0.0

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ValidationError("data must be 2-D (channels x samples)")
        if self.fs <= 0:
            raise ValidationError("fs must be positive")
        if len(self.channels) != self.data.shape[0]:
            raise ValidationError(
                f"{len(self.channels)} channel infos for {self.data.shape[0]} rows"
            )
        labels = [c.label for c in self.channels]
        if len(set(labels)) != len(labels):
            raise ValidationError("channel labels must be unique")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.fs

    @property
    def channel_labels(self) -> list[str]:
        return [c.label for c in self.channels]

    def channel_index(self, label: str) -> int:
        try:
            return self.channel_labels.index(label)
        except ValueError:
            raise UnknownChannelError(f"channel {label!r} not in recording") from None

    def kind_indices(self, kind: ChannelKind) -> list[int]:
        return [i for i, c in enumerate(self.channels) if c.kind == kind]

    def pick(self, labels: Sequence[str]) -> "Recording":
        idx = [self.channel_index(lab) for lab in labels]
        return Recording(self.data[idx].copy(), self.fs,
                         [self.channels[i] for i in idx], self.t0)

    def pick_kind(self, kind: ChannelKind) -> "Recording":
        idx = self.kind_indices(kind)
        return Recording(self.data[idx].copy(), self.fs,
                         [self.channels[i] for i in idx], self.t0)

    def copy(self) -> "Recording":
        return Recording(self.data.copy(), self.fs, list(self.channels), self.t0)


@dataclass
class Epochs:
    """Trials cut relative to markers.

    ``data`` is ``trials x channels x samples``; t=0 of the epoch-local time
    axis is the marker (directional cue for movement trials), so
    ``times = tmin + arange(n_samples)/fs``.
    """

    data: np.ndarray
    labels: np.ndarray
    tmin: float
    tmax: float
    fs: float
    channels: list[ChannelInfo]
    n_dropped: int = 0

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=float)
        self.labels = np.asarray(self.labels)
        if self.data.ndim != 3:
            raise ValidationError("epoch data must be 3-D")
        if len(self.labels) != self.data.shape[0]:
            raise ValidationError("labels length must equal trial count")
        if len(self.channels) != self.data.shape[1]:
            raise ValidationError("channel metadata does not match data")
        expected = int(np.rint((self.tmax - self.tmin) * self.fs))
        if self.data.shape[2] != expected:
            raise ValidationError(
                f"sample count {self.data.shape[2]} != round((tmax-tmin)*fs)={expected}"
            )

    @property
    def n_trials(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def n_samples(self) -> int:
        return self.data.shape[2]

    @property
    def times(self) -> np.ndarray:
        return self.tmin + np.arange(self.n_samples) / self.fs

    @property
    def channel_labels(self) -> list[str]:
        return [c.label for c in self.channels]

    def subset(self, indices: Sequence[int] | np.ndarray) -> "Epochs":
        indices = np.asarray(indices)
        return replace(self, data=self.data[indices], labels=self.labels[indices],
                       n_dropped=0)

    def pick(self, labels: Sequence[str]) -> "Epochs":
        idx = [self.channel_labels.index(lab) for lab in labels]
        return replace(self, data=self.data[:, idx],
                       channels=[self.channels[i] for i in idx])

    def pick_kind(self, kind: ChannelKind) -> "Epochs":
        idx = [i for i, c in enumerate(self.channels) if c.kind == kind]
        return replace(self, data=self.data[:, idx],
                       channels=[self.channels[i] for i in idx])

    @staticmethod
    def concatenate(blocks: Sequence["Epochs"]) -> "Epochs":
        """Stack epochs blocks trial-wise.

        Blocks must agree in fs, channel layout and sample count; the time
        frame (tmin/tmax) of the first block is kept, so blocks cut in a
        different frame are re-anchored to it.
        """
        if not blocks:
            raise ValidationError("no epoch blocks to concatenate")
        first = blocks[0]
        for b in blocks[1:]:
            if b.fs != first.fs or b.n_samples != first.n_samples:
                raise LayoutError("epoch blocks differ in fs or sample count")
            if b.channel_labels != first.channel_labels:
                raise LayoutError("epoch blocks differ in channel layout")
        return Epochs(
            np.concatenate([b.data for b in blocks], axis=0),
            np.concatenate([b.labels for b in blocks]),
            first.tmin, first.tmax, first.fs, list(first.channels),
            n_dropped=sum(b.n_dropped for b in blocks),
        )


def common_average_reference(recording: Recording,
                             kinds: Iterable[ChannelKind] = (ChannelKind.EEG,)
                             ) -> Recording:
    """Subtract the per-sample mean over all channels of the given kinds.

    Channels of other kinds are left untouched. Raises
    InsufficientChannelsError with fewer than two matching channels.
    """
    kinds = set(kinds)
    idx = [i for i, c in enumerate(recording.channels) if c.kind in kinds]
    if len(idx) < 2:
        raise InsufficientChannelsError(
            f"CAR needs >= 2 channels of kind {sorted(k.value for k in kinds)}, "
            f"found {len(idx)}"
        )
    out = recording.copy()
    out.data[idx] -= out.data[idx].mean(axis=0, keepdims=True)
    return out


def surface_laplacian(recording: Recording, center_label: str,
                      neighbor_labels: Sequence[str] | None = None) -> np.ndarray:
    """Hjorth small Laplacian: center minus the mean of its neighbours.

    With ``neighbor_labels=None`` the default 10-20 neighbour set for the
    32-channel montage is used (available for C3 and C4).
    """
    if neighbor_labels is None:
        try:
            neighbor_labels = DEFAULT_LAPLACIAN_NEIGHBORS[center_label]
        except KeyError:
            raise UnknownChannelError(
                f"no default Laplacian neighbours for {center_label!r}"
            ) from None
    labels = [center_label, *neighbor_labels]
    idx = [recording.channel_index(lab) for lab in labels]
    for i, lab in zip(idx, labels):
        if recording.channels[i].kind != ChannelKind.EEG:
            raise ValidationError(f"Laplacian channel {lab!r} is not EEG")
    center = recording.data[idx[0]]
    neighbors = recording.data[idx[1:]]
    return center - neighbors.mean(axis=0)


def epoch_extract(recording: Recording, markers: MarkerList, tmin: float,
                  tmax: float, labels: Iterable[str] | None = None) -> Epochs:
    """Cut one epoch per marker with a half-open [tmin, tmax) window.

    Sample count is ``round((tmax - tmin) * fs)`` regardless of marker phase;
    markers whose window falls outside the recording are dropped and counted
    in ``Epochs.n_dropped``.
    """
    if tmin >= tmax:
        raise InvalidWindowError(f"tmin={tmin} must be < tmax={tmax}")
    if labels is not None:
        markers = markers.filter(labels)
    n = int(np.rint((tmax - tmin) * recording.fs))
    kept_data = []
    kept_labels = []
    dropped = 0
    for m in markers:
        start = int(np.rint((m.t + tmin) * recording.fs))
        if start < 0 or start + n > recording.n_samples:
            dropped += 1
            continue
        kept_data.append(recording.data[:, start:start + n])
        kept_labels.append(m.label)
    data = (np.stack(kept_data) if kept_data
            else np.empty((0, recording.n_channels, n)))
    labels_arr = np.array(kept_labels) if kept_labels else np.array([], dtype=object)
    return Epochs(data, labels_arr, tmin, tmax, recording.fs,
                  list(recording.channels), n_dropped=dropped)


def peak_to_peak_reject(epochs: Epochs,
                        threshold_volts: float) -> tuple[Epochs, int]:
    """Drop trials whose peak-to-peak range on any EEG channel strictly
    exceeds the threshold. Trials at exactly the threshold are kept."""
    if threshold_volts <= 0:
        raise ValidationError("threshold must be positive")
    eeg = [i for i, c in enumerate(epochs.channels) if c.kind == ChannelKind.EEG]
    if not eeg or epochs.n_trials == 0:
        return epochs, 0
    ptp = epochs.data[:, eeg].max(axis=2) - epochs.data[:, eeg].min(axis=2)
    keep = ~(ptp > threshold_volts).any(axis=1)
    rejected = int((~keep).sum())
    return epochs.subset(np.flatnonzero(keep)), rejected


def empty_channel_warning(op: str) -> None:
    warnings.warn(f"{op}: empty channel subset, nothing to do", stacklevel=3)
