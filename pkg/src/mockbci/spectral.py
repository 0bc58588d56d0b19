"""DPSS tapers and multitaper time-frequency estimation.

The time-frequency maps are absolute power (V^2) with no baseline
correction; baselines differ too much between sessions for a relative view
to be meaningful, so plots and exports carry raw power.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import windows

from .data import Epochs
from .errors import InvalidRequestError, TooShortError, ValidationError


@dataclass
class DPSSBasis:
    """Slepian tapers ordered by descending concentration eigenvalue.

    ``tapers`` is (K, N) with orthonormal rows; eigenvalues lie in [0, 1].
    Sign convention: each taper has a positive mean, or a positive first
    non-negligible element for the antisymmetric ones.
    """

    tapers: np.ndarray
    eigenvalues: np.ndarray
    nw: float

    @property
    def k(self) -> int:
        return self.tapers.shape[0]

    @property
    def n_samples(self) -> int:
        return self.tapers.shape[1]


@dataclass
class TimeFrequencyMap:
    """Power as freqs x times, absolute units (V^2), per channel."""

    power: np.ndarray
    freqs: np.ndarray
    times: np.ndarray
    channel: str
    units: str = "V^2"


def dpss_tapers(n_samples: int, nw: float, k: int) -> DPSSBasis:
    """Discrete prolate spheroidal sequences.

    Eigenvectors of the symmetric tridiagonal Slepian matrix, unit norm,
    ordered by descending spectral concentration in the band +-nw/n_samples.
    """
    if k < 1:
        raise InvalidRequestError(f"need at least one taper, got k={k}")
    if k > n_samples:
        raise InvalidRequestError(f"k={k} tapers exceed n_samples={n_samples}")
    if nw <= 0 or 2 * nw >= n_samples:
        raise InvalidRequestError(f"nw={nw} out of range for n={n_samples}")
    tapers, ratios = windows.dpss(n_samples, nw, Kmax=k, sym=True, norm=2,
                                  return_ratios=True)
    tapers = np.atleast_2d(tapers)
    ratios = np.atleast_1d(ratios)
    # enforce the sign convention independent of scipy's choices
    for i, taper in enumerate(tapers):
        total = taper.sum()
        if abs(total) > 1e-8:
            sign = np.sign(total)
        else:
            big = np.flatnonzero(np.abs(taper) > 1e-9 * np.abs(taper).max())
            sign = np.sign(taper[big[0]])
        if sign < 0:
            tapers[i] = -taper
    eigenvalues = np.clip(ratios, 0.0, 1.0)
    return DPSSBasis(tapers, eigenvalues, float(nw))


def multitaper_tfr(epochs: Epochs, freqs: np.ndarray, window_s: float = 0.5,
                   pad_s: float = 0.5, nw: float = 2.0, k: int = 3
                   ) -> list[TimeFrequencyMap]:
    """Trial-averaged sliding-window multitaper power per channel.

    Windows are ``window_s`` long with 50% overlap. Each epoch is reflection
    padded by ``pad_s`` on both sides before windowing and the padding is
    removed from the output grid, so edge windows see plausible data without
    leaking into the reported time range. No baseline correction is applied.

    With unit-norm tapers the expected power of white noise with variance
    ``s**2`` is ``s**2`` at every frequency.
    """
    freqs = np.asarray(freqs, dtype=float)
    if freqs.ndim != 1 or len(freqs) == 0:
        raise ValidationError("freqs must be a non-empty 1-D grid")
    if np.any(freqs <= 0) or np.any(freqs >= epochs.fs / 2):
        raise ValidationError("freqs must lie strictly inside (0, fs/2)")
    if np.any(np.diff(freqs) <= 0):
        raise ValidationError("freqs must be strictly increasing")
    fs = epochs.fs
    win = int(np.rint(window_s * fs))
    pad = int(np.rint(pad_s * fs))
    padded_len = epochs.n_samples + 2 * pad
    if win > padded_len:
        raise TooShortError(
            f"window of {win} samples exceeds padded epoch of {padded_len}")
    if pad > epochs.n_samples - 1 and pad > 0:
        raise TooShortError("epoch too short for the requested padding")
    hop = max(1, win // 2)
    basis = dpss_tapers(win, nw, k)

    starts = np.arange(0, padded_len - win + 1, hop)
    centers = starts + win // 2
    keep = (centers >= pad) & (centers < pad + epochs.n_samples)
    starts, centers = starts[keep], centers[keep]
    if len(starts) == 0:
        raise TooShortError("no analysis windows fall inside the epoch")
    times = epochs.tmin + (centers - pad) / fs

    # (F, win) complex exponentials for direct DFT evaluation on the grid
    phase = np.exp(-2j * np.pi * np.outer(freqs, np.arange(win)) / fs)
    tapered_phase = phase[np.newaxis, :, :] * basis.tapers[:, np.newaxis, :]

    maps = []
    for ci in range(epochs.n_channels):
        acc = np.zeros((len(freqs), len(starts)))
        for ti in range(epochs.n_trials):
            x = epochs.data[ti, ci]
            xp = np.pad(x, pad, mode="reflect") if pad else x
            segs = sliding_window_view(xp, win)[starts]  # (n_win, win)
            # (k, F, n_win) spectra; average power over tapers
            spec = np.einsum("kfs,ws->kfw", tapered_phase, segs)
            acc += np.mean(np.abs(spec) ** 2, axis=0)
        if epochs.n_trials:
            acc /= epochs.n_trials
        maps.append(TimeFrequencyMap(acc, freqs.copy(), times.copy(),
                                     epochs.channels[ci].label))
    return maps


def export_tfr_csv(tfr: TimeFrequencyMap, path: str | Path) -> None:
    """CSV matrix with frequency row labels and time column labels, plus a
    JSON sidecar describing channel, units and the grids."""
    path = Path(path)
    header = "freq_hz," + ",".join(repr(t) for t in tfr.times)
    rows = [header]
    for f, row in zip(tfr.freqs, tfr.power):
        rows.append(repr(f) + "," + ",".join(repr(v) for v in row))
    path.write_text("\n".join(rows) + "\n")
    sidecar = {
        "channel": tfr.channel,
        "units": tfr.units,
        "freqs_hz": list(tfr.freqs),
        "times_s": list(tfr.times),
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")
