"""Framed streaming transport and the online causal EMG decoder.

Wire format (little-endian, 20-byte header)::

    magic      4s  b"BSTR"
    version    u8  (1)
    stream_id  u16
    kind       u8  (0=DATA, 1=MARKER, 2=END)
    n_channels u16
    n_samples  u16
    timestamp  f64 (first-sample time for DATA, event time for MARKER)
    payload        DATA: n_channels*n_samples little-endian f32,
                   channel-major; MARKER: UTF-8 label whose byte length is
                   carried in n_samples; END: empty

The decoder is strictly causal: a prediction emitted after consuming m
samples uses samples < m only, every ``emit_period`` (snapped to a whole
number of samples so the prediction rate is uniform and independent of the
chunking). Replaying a session offline through :func:`batch_causal_decode`
produces a bit-identical prediction stream.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .classifiers import LinearModel
from .data import ChannelInfo, ChannelKind, Marker, MarkerList, Recording
from .errors import DecodeError, ProtocolError, ValidationError
from .filters import (
    IIRFilter,
    design_butterworth_bandpass,
    design_notch,
    iir_init_state,
    iir_process_chunk,
)

MAGIC = b"BSTR"
VERSION = 1
KIND_DATA, KIND_MARKER, KIND_END = 0, 1, 2
_HEADER = struct.Struct("<4sBHBHHd")
HEADER_SIZE = _HEADER.size  # 20 bytes


@dataclass(frozen=True)
class StreamFrame:
    stream_id: int
    kind: int
    timestamp: float
    data: np.ndarray | None = None     # (n_channels, n_samples) float32
    label: str | None = None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StreamFrame):
            return NotImplemented
        if (self.stream_id, self.kind, self.timestamp, self.label) != \
                (other.stream_id, other.kind, other.timestamp, other.label):
            return False
        if (self.data is None) != (other.data is None):
            return False
        return self.data is None or (self.data.shape == other.data.shape
                                     and np.array_equal(self.data, other.data))


def data_frame(stream_id: int, timestamp: float, data: np.ndarray) -> StreamFrame:
    return StreamFrame(stream_id, KIND_DATA, timestamp,
                       np.ascontiguousarray(data, dtype=np.float32))


def marker_frame(stream_id: int, timestamp: float, label: str) -> StreamFrame:
    return StreamFrame(stream_id, KIND_MARKER, timestamp, label=label)


def end_frame(stream_id: int, timestamp: float) -> StreamFrame:
    return StreamFrame(stream_id, KIND_END, timestamp)


def encode_frame(frame: StreamFrame) -> bytes:
    if frame.kind == KIND_DATA:
        if frame.data is None or frame.data.ndim != 2:
            raise ValidationError("DATA frame needs a 2-D array")
        n_chan, n_samp = frame.data.shape
        payload = np.ascontiguousarray(frame.data, dtype="<f4").tobytes()
    elif frame.kind == KIND_MARKER:
        if frame.label is None:
            raise ValidationError("MARKER frame needs a label")
        payload = frame.label.encode("utf-8")
        n_chan, n_samp = 0, len(payload)
        if n_samp > 0xFFFF:
            raise ValidationError("marker label too long")
    elif frame.kind == KIND_END:
        payload = b""
        n_chan, n_samp = 0, 0
    else:
        raise ValidationError(f"unknown frame kind {frame.kind}")
    header = _HEADER.pack(MAGIC, VERSION, frame.stream_id, frame.kind,
                          n_chan, n_samp, frame.timestamp)
    return header + payload


def _expected_payload(kind: int, n_chan: int, n_samp: int) -> int:
    if kind == KIND_DATA:
        return 4 * n_chan * n_samp
    if kind == KIND_MARKER:
        return n_samp
    if kind == KIND_END:
        return 0
    raise DecodeError(f"unknown frame kind {kind}")


def decode_frame(buf: bytes) -> StreamFrame:
    """Decode exactly one frame; trailing or missing bytes are errors.

    Never raises anything but DecodeError on arbitrary byte input.
    """
    if len(buf) < HEADER_SIZE:
        raise DecodeError(f"buffer of {len(buf)} bytes shorter than header")
    magic, version, stream_id, kind, n_chan, n_samp, ts = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise DecodeError(f"bad magic {magic!r}")
    if version != VERSION:
        raise DecodeError(f"unsupported version {version}")
    need = _expected_payload(kind, n_chan, n_samp)
    payload = buf[HEADER_SIZE:]
    if len(payload) != need:
        raise DecodeError(f"payload of {len(payload)} bytes, expected {need}")
    if kind == KIND_DATA:
        if n_chan == 0:
            raise DecodeError("DATA frame with zero channels")
        data = np.frombuffer(payload, dtype="<f4").reshape(n_chan, n_samp)
        return StreamFrame(stream_id, kind, ts, data)
    if kind == KIND_MARKER:
        try:
            label = payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"marker label is not UTF-8: {exc}") from exc
        return StreamFrame(stream_id, kind, ts, label=label)
    return StreamFrame(stream_id, kind, ts)


class FrameParser:
    """Incremental frame assembly from an ordered byte stream."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, chunk: bytes) -> list[StreamFrame]:
        self._buf.extend(chunk)
        frames = []
        while True:
            if len(self._buf) < HEADER_SIZE:
                break
            magic, version, _, kind, n_chan, n_samp, _ = _HEADER.unpack_from(
                bytes(self._buf[:HEADER_SIZE]))
            if magic != MAGIC:
                raise DecodeError(f"bad magic {magic!r}")
            if version != VERSION:
                raise DecodeError(f"unsupported version {version}")
            total = HEADER_SIZE + _expected_payload(kind, n_chan, n_samp)
            if len(self._buf) < total:
                break
            frames.append(decode_frame(bytes(self._buf[:total])))
            del self._buf[:total]
        return frames

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)


def stream_producer(recording: Recording, markers: MarkerList | None = None,
                    chunk_samples: int = 32, pacing: float = 0.0,
                    stream_id: int = 0) -> Iterator[bytes]:
    """Yield encoded frames covering the recording exactly once, in order.

    Marker frames are interleaved by timestamp (before the data chunk whose
    first sample passes them); an END frame terminates the stream. ``pacing``
    is a real-time factor: 0 streams as fast as possible, 1 sleeps one chunk
    duration per chunk, 2 runs at twice real time.
    """
    if chunk_samples < 1:
        raise ValidationError("chunk_samples must be >= 1")
    if pacing < 0:
        raise ValidationError("pacing must be >= 0")
    pending = list(markers) if markers is not None else []
    pending.sort(key=lambda m: m.t)
    mi = 0
    t0 = recording.t0
    last_time = None
    for start in range(0, recording.n_samples, chunk_samples):
        ts = t0 + start / recording.fs
        while mi < len(pending) and t0 + pending[mi].t <= ts:
            yield encode_frame(marker_frame(stream_id, t0 + pending[mi].t,
                                            pending[mi].label))
            mi += 1
        chunk = recording.data[:, start:start + chunk_samples]
        yield encode_frame(data_frame(stream_id, ts, chunk))
        if pacing > 0:
            now = time.monotonic()
            if last_time is not None:
                budget = chunk.shape[1] / recording.fs / pacing
                remaining = budget - (now - last_time)
                if remaining > 0:
                    time.sleep(remaining)
                    now = time.monotonic()
            last_time = now
    end_ts = t0 + recording.n_samples / recording.fs
    while mi < len(pending):
        yield encode_frame(marker_frame(stream_id, t0 + pending[mi].t,
                                        pending[mi].label))
        mi += 1
    yield encode_frame(end_frame(stream_id, end_ts))


def frames_from_bytes(chunks: Iterable[bytes]) -> Iterator[StreamFrame]:
    parser = FrameParser()
    for chunk in chunks:
        yield from parser.feed(chunk)
    if parser.pending_bytes:
        raise DecodeError(f"{parser.pending_bytes} trailing bytes after last frame")


@dataclass
class EmgDecoderConfig:
    fs: float
    band_hz: tuple[float, float] = (30.0, 500.0)
    band_order: int = 4
    notch_hz: float = 50.0
    notch_q: float = 30.0
    window_s: float = 0.2
    emit_period_s: float = 0.05

    @property
    def window_samples(self) -> int:
        return int(np.rint(self.window_s * self.fs))

    @property
    def emit_every(self) -> int:
        # snapped to the sample grid so the prediction rate is uniform
        return max(1, int(np.rint(self.emit_period_s * self.fs)))


def _predict_one(model: LinearModel, features: np.ndarray) -> str:
    scores = features @ model.weights.T + model.intercepts
    return str(model.classes[int(np.argmax(scores))])


def _window_features(window_sq: np.ndarray) -> np.ndarray:
    return np.mean(window_sq, axis=1)


class EmgDecoder:
    """Streaming CAR -> band-pass -> notch -> mean-power -> LDA chain.

    State evolution depends only on the consumed samples; the IIR recurrence
    and the feature windows are anchored to the global sample count, so
    predictions are independent of how the stream is chunked.
    """

    def __init__(self, model: LinearModel, config: EmgDecoderConfig,
                 n_channels: int = 4) -> None:
        self.model = model
        self.config = config
        self.n_channels = n_channels
        self._band = design_butterworth_bandpass(
            config.band_order, config.band_hz[0], config.band_hz[1], config.fs)
        self._notch = design_notch(config.notch_hz, config.notch_q, config.fs)
        self._band_state = iir_init_state(self._band, n_channels)
        self._notch_state = iir_init_state(self._notch, n_channels)
        # last window_samples - 1 squared samples from previous chunks
        self._hist = np.zeros((n_channels, config.window_samples - 1))
        self._consumed = 0
        self._t0: float | None = None
        self._last_ts: float | None = None
        self._tamper_at: int | None = None

    def enable_tamper(self, at_emission: int) -> None:
        """Test hook: corrupt the emitted class from the given emission on
        (negative control for the online/offline equivalence check)."""
        self._tamper_at = at_emission

    def _filtered(self, chunk: np.ndarray) -> np.ndarray:
        car = chunk - chunk.mean(axis=0, keepdims=True)
        band, self._band_state = iir_process_chunk(self._band, car,
                                                   self._band_state)
        out, self._notch_state = iir_process_chunk(self._notch, band,
                                                   self._notch_state)
        return out

    def process_chunk(self, chunk: np.ndarray,
                      timestamp: float) -> list[tuple[float, str]]:
        """Consume one (channels x samples) chunk; return due predictions."""
        chunk = np.asarray(chunk, dtype=float)
        if chunk.shape[0] != self.n_channels:
            raise ProtocolError(
                f"chunk has {chunk.shape[0]} channels, expected {self.n_channels}")
        if self._t0 is None:
            self._t0 = timestamp
        if self._last_ts is not None and timestamp <= self._last_ts:
            raise ProtocolError("frames out of order")
        self._last_ts = timestamp

        xsq = self._filtered(chunk) ** 2
        cfg = self.config
        w = cfg.window_samples
        before = self._consumed
        length = xsq.shape[1]
        # `full` covers global samples [before - (w-1), before + length)
        full = np.concatenate([self._hist, xsq], axis=1)
        out = []
        first = ((before // cfg.emit_every) + 1) * cfg.emit_every
        for m in range(first, before + length + 1, cfg.emit_every):
            if m < w:
                continue
            start = m - before - 1
            window = np.ascontiguousarray(full[:, start:start + w])
            label = _predict_one(self.model, _window_features(window))
            k = m // cfg.emit_every
            if self._tamper_at is not None and k >= self._tamper_at:
                pos = int(np.flatnonzero(self.model.classes == label)[0])
                label = str(self.model.classes[(pos + 1) % len(self.model.classes)])
            out.append((self._t0 + (m - 1) / cfg.fs, label))
        self._consumed = before + length
        self._hist = full[:, full.shape[1] - (w - 1):].copy()
        return out


def online_emg_decode(frames: Iterable[StreamFrame], model: LinearModel,
                      config: EmgDecoderConfig,
                      decoder: EmgDecoder | None = None
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Run the causal decoder over a frame stream; marker frames pass
    through untouched. Returns (times, labels)."""
    times: list[float] = []
    labels: list[str] = []
    for frame in frames:
        if frame.kind == KIND_MARKER:
            continue
        if frame.kind == KIND_END:
            break
        if decoder is None:
            decoder = EmgDecoder(model, config, n_channels=frame.data.shape[0])
        for t, lab in decoder.process_chunk(frame.data, frame.timestamp):
            times.append(t)
            labels.append(lab)
    return np.array(times), np.array(labels)


def batch_causal_decode(recording: Recording, model: LinearModel,
                        config: EmgDecoderConfig
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Offline oracle for the online decoder: same causal chain applied to
    the whole recording at once. Bit-identical to any chunked replay."""
    x = recording.data
    car = x - x.mean(axis=0, keepdims=True)
    band = design_butterworth_bandpass(config.band_order, config.band_hz[0],
                                       config.band_hz[1], config.fs)
    notch = design_notch(config.notch_hz, config.notch_q, config.fs)
    y, _ = iir_process_chunk(band, car, iir_init_state(band, x.shape[0]))
    y, _ = iir_process_chunk(notch, y, iir_init_state(notch, x.shape[0]))
    xsq = y**2
    w = config.window_samples
    times = []
    labels = []
    for m in range(config.emit_every, recording.n_samples + 1,
                   config.emit_every):
        if m < w:
            continue
        window = np.ascontiguousarray(xsq[:, m - w:m])
        label = _predict_one(model, _window_features(window))
        times.append(recording.t0 + (m - 1) / config.fs)
        labels.append(label)
    return np.array(times), np.array(labels)


@dataclass
class StreamGap:
    stream_id: int
    t_start: float
    duration_s: float


@dataclass
class RecordedStreams:
    recordings: list[Recording]
    markers: MarkerList
    offsets: dict[int, float]
    gaps: list[StreamGap] = field(default_factory=list)


def _stream_sample_times(frames: list[StreamFrame], fs: float) -> np.ndarray:
    times = []
    for f in frames:
        times.append(f.timestamp + np.arange(f.data.shape[1]) / fs)
    return np.concatenate(times)


def record_streams(frame_streams: Sequence[Iterable[StreamFrame]],
                   channels: Sequence[list[ChannelInfo]] | None = None
                   ) -> RecordedStreams:
    """Merge multiple streams onto the first stream's clock.

    A constant clock offset per stream is estimated as the median difference
    between its sample timestamps and the nearest reference sample
    timestamps, then removed. Dropped-frame gaps are reported.
    """
    if not frame_streams:
        raise ValidationError("no streams to record")
    per_stream: list[list[StreamFrame]] = []
    mark_frames: list[tuple[int, StreamFrame]] = []
    stream_ids: list[int] = []
    for si, stream in enumerate(frame_streams):
        frames = []
        last_ts = None
        sid = None
        for frame in stream:
            if sid is None:
                sid = frame.stream_id
            if frame.kind == KIND_END:
                break
            if frame.kind == KIND_MARKER:
                mark_frames.append((si, frame))
                continue
            if last_ts is not None and frame.timestamp <= last_ts:
                raise ProtocolError(f"stream {si}: DATA timestamps not increasing")
            last_ts = frame.timestamp
            frames.append(frame)
        per_stream.append(frames)
        stream_ids.append(sid if sid is not None else si)

    data_streams = [i for i, frames in enumerate(per_stream) if frames]
    if not data_streams:
        raise ValidationError("no DATA frames in any stream")

    # per-stream sampling rate from the frame grid
    fss = []
    for frames in per_stream:
        if not frames:
            fss.append(0.0)
            continue
        if len(frames) == 1:
            raise ValidationError("cannot infer fs from a single frame")
        spans = [(b.timestamp - a.timestamp) / a.data.shape[1]
                 for a, b in zip(frames, frames[1:])]
        fss.append(float(np.round(1.0 / np.median(spans), 6)))

    ref = data_streams[0]
    ref_times = _stream_sample_times(per_stream[ref], fss[ref])
    offsets: dict[int, float] = {}
    recordings = []
    gaps: list[StreamGap] = []
    for si in data_streams:
        frames = per_stream[si]
        fs = fss[si]
        times = _stream_sample_times(frames, fs)
        if si == ref:
            offset = 0.0
        else:
            pos = np.searchsorted(ref_times, times)
            pos = np.clip(pos, 1, len(ref_times) - 1)
            nearest = np.where(
                np.abs(times - ref_times[pos - 1])
                <= np.abs(times - ref_times[pos]),
                ref_times[pos - 1], ref_times[pos])
            offset = float(np.median(times - nearest))
        offsets[stream_ids[si]] = offset
        for a, b in zip(frames, frames[1:]):
            expected = a.timestamp + a.data.shape[1] / fs
            if b.timestamp - expected > 1.5 / fs:
                gaps.append(StreamGap(stream_ids[si], expected - offset,
                                      b.timestamp - expected))
        data = np.concatenate([f.data for f in frames], axis=1).astype(float)
        if channels is not None and channels[si] is not None:
            chans = list(channels[si])
        else:
            chans = [ChannelInfo(f"S{stream_ids[si]}_CH{c}", ChannelKind.EEG)
                     for c in range(data.shape[0])]
        recordings.append(Recording(data, fs, chans,
                                    t0=frames[0].timestamp - offset))

    ref_t0 = recordings[0].t0
    events = []
    for si, frame in mark_frames:
        offset = offsets.get(stream_ids[si], 0.0)
        events.append(Marker(frame.timestamp - offset - ref_t0, frame.label))
    events.sort(key=lambda m: m.t)
    return RecordedStreams(recordings, MarkerList(events), offsets, gaps)
