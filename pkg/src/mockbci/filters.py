"""IIR and FIR filter design and application.

IIR filters are Butterworth designs realized as second-order-section
cascades through the bilinear transform with frequency pre-warping; the
``order`` argument is the overall band-pass order (pole count), so a
"4th-order band-pass" maps to a 2nd-order analog low-pass prototype.
FIR filters are Hamming-windowed sincs with the band edges placed at the
transition-band midpoints and an odd, exactly symmetric tap count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal as sps

from .data import Recording, empty_channel_warning
from .errors import InvalidBandError, TooShortError, UnsupportedOrderError


@dataclass
class IIRFilter:
    """Second-order-section cascade with design metadata.

    ``sos`` has shape (n_sections, 6). Streaming state is not stored here;
    use :func:`iir_init_state` / :func:`iir_process_chunk` to carry state
    across chunks.
    """

    sos: np.ndarray
    kind: str                      # "bandpass" | "notch"
    order: int                     # overall filter order
    band_hz: tuple[float, float]   # (low, high) or (notch, notch)
    fs: float

    @property
    def n_sections(self) -> int:
        return self.sos.shape[0]

    def is_stable(self) -> bool:
        for section in self.sos:
            poles = np.roots(section[3:])
            if np.any(np.abs(poles) >= 1.0):
                return False
        return True


@dataclass
class FIRFilter:
    """Linear-phase FIR taps with design metadata (taps are exactly
    symmetric about the midpoint, tap count is odd)."""

    taps: np.ndarray
    l_freq: float
    h_freq: float
    l_trans: float
    h_trans: float
    length_s: float
    fs: float

    @property
    def n_taps(self) -> int:
        return len(self.taps)

    @property
    def half(self) -> int:
        return (self.n_taps - 1) // 2


def design_butterworth_bandpass(order: int, low_hz: float, high_hz: float,
                                fs: float) -> IIRFilter:
    """Causal Butterworth band-pass with -3.01 dB gain at both edges.

    ``order`` is the overall order and must be even (a band-pass always has
    an even pole count); the analog prototype order is ``order // 2``.
    """
    if order < 2 or order % 2 != 0:
        raise UnsupportedOrderError(
            f"band-pass order must be a positive even integer, got {order}")
    if not (0 < low_hz < high_hz < fs / 2):
        raise InvalidBandError(
            f"band edges ({low_hz}, {high_hz}) must satisfy 0 < low < high < fs/2={fs / 2}")
    sos = sps.butter(order // 2, [low_hz, high_hz], btype="bandpass",
                     fs=fs, output="sos")
    filt = IIRFilter(sos, "bandpass", order, (low_hz, high_hz), fs)
    if not filt.is_stable():
        raise InvalidBandError(
            f"design ({order}, {low_hz}, {high_hz}) at fs={fs} is unstable")
    return filt


def design_notch(freq_hz: float, quality: float, fs: float) -> IIRFilter:
    """Second-order IIR notch with unity gain away from the notch."""
    if not (0 < freq_hz < fs / 2):
        raise InvalidBandError(f"notch frequency {freq_hz} outside (0, fs/2={fs / 2})")
    if quality <= 0:
        raise InvalidBandError(f"quality factor must be positive, got {quality}")
    b, a = sps.iirnotch(freq_hz, quality, fs=fs)
    sos = sps.tf2sos(b, a)
    return IIRFilter(sos, "notch", 2, (freq_hz, freq_hz), fs)


def iir_frequency_response(filt: IIRFilter, freqs_hz: Sequence[float]) -> np.ndarray:
    """Complex frequency response of the cascade at the given frequencies."""
    _, h = sps.sosfreqz(filt.sos, worN=np.asarray(freqs_hz, dtype=float), fs=filt.fs)
    return h


def iir_init_state(filt: IIRFilter, n_channels: int) -> np.ndarray:
    """Zero streaming state for ``n_channels`` rows filtered along axis 1."""
    return np.zeros((filt.n_sections, n_channels, 2))


def iir_process_chunk(filt: IIRFilter, chunk: np.ndarray,
                      state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Filter one (channels x samples) chunk, carrying state.

    Any partition of a signal into chunks produces bit-identical output to a
    single pass, because this is the same sample-sequential recurrence.
    """
    out, new_state = sps.sosfilt(filt.sos, chunk, axis=1, zi=state)
    return out, new_state


def apply_iir_causal(filt: IIRFilter, recording: Recording,
                     channel_subset: Sequence[str] | None = None) -> Recording:
    """Causally filter the given channels (all by default) from zero state.

    Output sample n depends only on input samples <= n. An empty channel
    subset is a warned no-op, not an error.
    """
    out = recording.copy()
    if channel_subset is None:
        idx = list(range(recording.n_channels))
    else:
        idx = [recording.channel_index(lab) for lab in channel_subset]
    if not idx:
        empty_channel_warning("apply_iir_causal")
        return out
    state = iir_init_state(filt, len(idx))
    filtered, _ = iir_process_chunk(filt, out.data[idx], state)
    out.data[idx] = filtered
    return out


def _half_taps(n_taps: int, f_lo: float, f_hi: float, fs: float
               ) -> tuple[np.ndarray, float]:
    """Positive-offset half of a Hamming-windowed band-pass sinc plus the
    center tap. Building one half and mirroring guarantees exact symmetry."""
    half = (n_taps - 1) // 2
    m = np.arange(1, half + 1, dtype=float)
    ideal = (np.sin(2 * np.pi * f_hi * m / fs)
             - np.sin(2 * np.pi * f_lo * m / fs)) / (np.pi * m)
    window = 0.54 + 0.46 * np.cos(np.pi * m / half)
    center = 2.0 * (f_hi - f_lo) / fs
    return ideal * window, center


def design_fir_bandpass(l_freq: float, h_freq: float, l_trans: float,
                        h_trans: float, length_s: float, fs: float) -> FIRFilter:
    """Windowed-sinc band-pass with edges at the transition midpoints.

    The -6 dB cutoffs sit at ``l_freq - l_trans/2`` and ``h_freq + h_trans/2``
    so that the transition bands are centred on the stated pass-band edges.
    Tap count is ``round(length_s * fs)`` forced odd.
    """
    if not (0 < l_freq < h_freq < fs / 2):
        raise InvalidBandError(
            f"pass band ({l_freq}, {h_freq}) must satisfy 0 < low < high < fs/2")
    if l_trans <= 0 or h_trans <= 0:
        raise InvalidBandError("transition bandwidths must be positive")
    f_lo = l_freq - l_trans / 2
    f_hi = h_freq + h_trans / 2
    if f_lo <= 0 or f_hi >= fs / 2:
        raise InvalidBandError(
            f"transition bands extend to ({f_lo}, {f_hi}), outside (0, fs/2)")
    n_taps = int(np.rint(length_s * fs))
    if n_taps < 3:
        raise TooShortError(f"length {length_s}s at fs={fs} gives < 3 taps")
    if n_taps % 2 == 0:
        n_taps += 1
    half_taps, center = _half_taps(n_taps, f_lo, f_hi, fs)
    taps = np.concatenate([half_taps[::-1], [center], half_taps])
    return FIRFilter(taps, l_freq, h_freq, l_trans, h_trans, length_s, fs)


def fir_frequency_response(filt: FIRFilter, freqs_hz: Sequence[float]) -> np.ndarray:
    """Complex tap DFT evaluated at arbitrary frequencies."""
    f = np.asarray(freqs_hz, dtype=float)
    n = np.arange(filt.n_taps)
    phase = np.exp(-2j * np.pi * np.outer(f, n) / filt.fs)
    return phase @ filt.taps


def apply_fir_zero_phase(filt: FIRFilter, recording: Recording) -> Recording:
    """Zero-phase FIR filtering with reflection-padded edges.

    The group delay of the symmetric kernel is compensated exactly, so the
    output is sample-aligned with the input and has the same length.
    """
    half = filt.half
    if recording.n_samples < half + 1:
        raise TooShortError(
            f"recording ({recording.n_samples} samples) shorter than half the "
            f"filter ({half + 1} samples)")
    padded = np.pad(recording.data, ((0, 0), (half, half)), mode="reflect")
    out = recording.copy()
    out.data = sps.oaconvolve(padded, filt.taps[np.newaxis, :], mode="valid", axes=1)
    return out
