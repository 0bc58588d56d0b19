"""On-disk formats: MBR1 recordings and JSON-lines markers.

MBR1 layout (all little-endian)::

    magic   4s   b"MBR1"
    version u16  (currently 1)
    fs      f64
    n_chan  u16
    per channel:
        label_len u8, label utf-8 bytes
        kind      u8 (0=EEG, 1=EMG, 2=EOG)
        has_pos   u8, then x f64, y f64 when 1
    samples f32, channel-major (all of channel 0, then channel 1, ...)

The sample count is derived from the file size. The header does not carry
``t0``; markers are stored relative to the recording start, so a loaded
recording has ``t0 = 0``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .data import ChannelInfo, ChannelKind, Marker, MarkerList, Recording
from .errors import DecodeError

MAGIC = b"MBR1"
VERSION = 1

_KIND_CODE = {ChannelKind.EEG: 0, ChannelKind.EMG: 1, ChannelKind.EOG: 2}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


def write_recording(path: str | Path, recording: Recording) -> None:
    """Write a recording as MBR1 (samples stored as float32)."""
    parts = [MAGIC, struct.pack("<Hd H", VERSION, recording.fs,
                                recording.n_channels)]
    for ch in recording.channels:
        label = ch.label.encode("utf-8")
        if len(label) > 255:
            raise ValueError(f"channel label too long: {ch.label!r}")
        parts.append(struct.pack("<B", len(label)))
        parts.append(label)
        parts.append(struct.pack("<B", _KIND_CODE[ch.kind]))
        if ch.position is None:
            parts.append(struct.pack("<B", 0))
        else:
            parts.append(struct.pack("<Bdd", 1, ch.position[0], ch.position[1]))
    parts.append(np.ascontiguousarray(recording.data, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_recording(path: str | Path) -> Recording:
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise DecodeError(f"{path}: not an MBR1 file")
    off = 4
    try:
        version, fs, n_chan = struct.unpack_from("<Hd H", buf, off)
        off += struct.calcsize("<Hd H")
        if version != VERSION:
            raise DecodeError(f"{path}: unsupported MBR1 version {version}")
        channels = []
        for _ in range(n_chan):
            (label_len,) = struct.unpack_from("<B", buf, off)
            off += 1
            label = buf[off:off + label_len].decode("utf-8")
            off += label_len
            kind_code, has_pos = struct.unpack_from("<BB", buf, off)
            off += 2
            position = None
            if has_pos:
                x, y = struct.unpack_from("<dd", buf, off)
                off += 16
                position = (x, y)
            channels.append(ChannelInfo(label, _CODE_KIND[kind_code], position))
    except struct.error as exc:
        raise DecodeError(f"{path}: truncated MBR1 header") from exc
    payload = buf[off:]
    if n_chan == 0 or len(payload) % (4 * n_chan) != 0:
        raise DecodeError(f"{path}: sample payload not divisible by channel count")
    n_samples = len(payload) // (4 * n_chan)
    data = np.frombuffer(payload, dtype="<f4").reshape(n_chan, n_samples)
    return Recording(data.astype(float), fs, channels, t0=0.0)


def write_markers(path: str | Path, markers: MarkerList) -> None:
    """One JSON object per line: {"t": seconds, "label": string}."""
    lines = [json.dumps({"t": m.t, "label": m.label}) for m in markers]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_markers(path: str | Path) -> MarkerList:
    events = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        events.append(Marker(float(obj["t"]), str(obj["label"])))
    return MarkerList(events)
