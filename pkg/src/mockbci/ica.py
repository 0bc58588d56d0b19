"""FastICA decomposition and EOG-based artifact rejection.

Fixed-point iteration with the tanh (log-cosh) contrast. All component
weights are updated each sweep and re-orthogonalized with symmetric
decorrelation, which avoids the error accumulation of one-by-one deflation.
Whitening is by PCA; the decomposition is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import ChannelKind, Epochs, Recording
from .errors import (
    CriterionUnavailableError,
    InvalidRequestError,
    LayoutError,
    UnknownChannelError,
)


@dataclass
class ICADecomposition:
    """Fitted unmixing/mixing pair with rejection bookkeeping.

    ``unmixing`` (n_components x n_channels) maps centred channel data to
    sources; ``mixing`` is its pseudo-inverse. ``unmixing @ mixing`` is the
    identity on the component space.
    """

    unmixing: np.ndarray
    mixing: np.ndarray
    mean: np.ndarray
    channel_labels: tuple[str, ...] | None
    rejected: tuple[int, ...] = ()
    converged: bool = True
    n_iter: int = 0

    @property
    def n_components(self) -> int:
        return self.unmixing.shape[0]

    def _matching_rows(self, recording: Recording) -> np.ndarray:
        if self.channel_labels is None:
            if recording.n_channels != self.unmixing.shape[1]:
                raise LayoutError("recording channel count differs from fit")
            return recording.data
        try:
            idx = [recording.channel_index(lab) for lab in self.channel_labels]
        except UnknownChannelError as exc:
            raise LayoutError(str(exc)) from exc
        return recording.data[idx]

    def sources(self, data: "Recording | np.ndarray") -> np.ndarray:
        """Component time-courses for data in the fitted layout."""
        if isinstance(data, Recording):
            x = self._matching_rows(data)
        else:
            x = np.asarray(data, dtype=float)
            if x.shape[0] != self.unmixing.shape[1]:
                raise LayoutError("data channel count differs from fit")
        return self.unmixing @ (x - self.mean[:, np.newaxis])


def _as_channel_matrix(data: "Recording | Epochs | np.ndarray"
                       ) -> tuple[np.ndarray, tuple[str, ...] | None]:
    if isinstance(data, Recording):
        idx = data.kind_indices(ChannelKind.EEG)
        if not idx:
            idx = list(range(data.n_channels))
        labels = tuple(data.channels[i].label for i in idx)
        return data.data[idx], labels
    if isinstance(data, Epochs):
        picked = data.pick_kind(ChannelKind.EEG)
        if picked.n_channels == 0:
            picked = data
        x = np.concatenate(list(picked.data), axis=1)
        return x, tuple(picked.channel_labels)
    return np.asarray(data, dtype=float), None


def _sym_decorrelate(w: np.ndarray) -> np.ndarray:
    """W <- (W W^T)^(-1/2) W."""
    vals, vecs = np.linalg.eigh(w @ w.T)
    vals = np.maximum(vals, 1e-18)
    return (vecs / np.sqrt(vals)) @ vecs.T @ w


def fastica_fit(data: "Recording | Epochs | np.ndarray", n_components: int,
                seed: int, max_iter: int = 500, tol: float = 1e-6
                ) -> ICADecomposition:
    """Fit FastICA on EEG channels (or a raw channels x samples matrix).

    Data is centred internally and whitened by PCA to ``n_components``
    dimensions. Iteration stops when the largest elementwise weight change
    (after per-component sign alignment) drops below ``tol``; hitting
    ``max_iter`` flags ``converged=False`` and returns the best iterate.
    """
    x, labels = _as_channel_matrix(data)
    n_ch, n_samp = x.shape
    if n_components > n_ch:
        raise InvalidRequestError(
            f"n_components={n_components} exceeds {n_ch} channels")
    if n_components < 1:
        raise InvalidRequestError("n_components must be >= 1")
    mean = x.mean(axis=1)
    xc = x - mean[:, np.newaxis]
    cov = (xc @ xc.T) / max(1, n_samp - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:n_components]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    if eigvals[-1] <= 0:
        raise InvalidRequestError(
            f"data rank below n_components={n_components}")
    whitener = (eigvecs / np.sqrt(eigvals)).T  # (m, n_ch)
    z = whitener @ xc

    rng = np.random.default_rng(seed)
    w = _sym_decorrelate(rng.standard_normal((n_components, n_components)))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        wz = w @ z
        g = np.tanh(wz)
        g_prime = 1.0 - g**2
        w_new = (g @ z.T) / n_samp - g_prime.mean(axis=1)[:, np.newaxis] * w
        w_new = _sym_decorrelate(w_new)
        # align signs so the convergence check is insensitive to flips
        signs = np.sign(np.sum(w_new * w, axis=1))
        signs[signs == 0] = 1.0
        w_new *= signs[:, np.newaxis]
        delta = np.max(np.abs(w_new - w))
        w = w_new
        if delta < tol:
            converged = True
            break

    unmixing = w @ whitener
    mixing = np.linalg.pinv(unmixing)
    return ICADecomposition(unmixing, mixing, mean, labels,
                            converged=converged, n_iter=it)


def _select_rejections(correlations: np.ndarray, threshold: float
                       ) -> tuple[int, ...]:
    """Components whose max |r| over EOG channels strictly exceeds the
    threshold. Exactly-at-threshold components are kept."""
    peak = np.max(np.abs(correlations), axis=1)
    return tuple(int(i) for i in np.flatnonzero(peak > threshold))


def eog_correlations(ica: ICADecomposition, recording: Recording,
                     eog_labels: "list[str] | None" = None) -> np.ndarray:
    """Pearson correlation of each component time-course with each EOG
    channel; shape (n_components, n_eog)."""
    if eog_labels is None:
        eog_labels = [c.label for c in recording.channels
                      if c.kind == ChannelKind.EOG]
    if not eog_labels:
        raise CriterionUnavailableError(
            "no EOG channels available for artifact correlation")
    eog_idx = [recording.channel_index(lab) for lab in eog_labels]
    sources = ica.sources(recording)
    eog = recording.data[eog_idx]
    s = sources - sources.mean(axis=1, keepdims=True)
    e = eog - eog.mean(axis=1, keepdims=True)
    s_norm = np.linalg.norm(s, axis=1)
    e_norm = np.linalg.norm(e, axis=1)
    s_norm[s_norm == 0] = 1.0
    e_norm[e_norm == 0] = 1.0
    return (s @ e.T) / np.outer(s_norm, e_norm)


def ica_mark_artifacts(ica: ICADecomposition, recording: Recording,
                       eog_labels: "list[str] | None" = None,
                       threshold: float = 0.7) -> ICADecomposition:
    """Return a copy with components EOG-correlated above the threshold
    marked as rejected."""
    corr = eog_correlations(ica, recording, eog_labels)
    return replace(ica, rejected=_select_rejections(corr, threshold))


def ica_apply(ica: ICADecomposition, recording: Recording) -> Recording:
    """Subtract the rejected components' contribution from the recording.

    With no rejected components the output equals the input exactly; only
    the channels used in the fit are touched.
    """
    out = recording.copy()
    if not ica.rejected:
        return out
    rej = list(ica.rejected)
    x = ica._matching_rows(recording)
    sources = ica.unmixing[rej] @ (x - ica.mean[:, np.newaxis])
    cleaned = x - ica.mixing[:, rej] @ sources
    if ica.channel_labels is None:
        out.data[:] = cleaned
    else:
        idx = [recording.channel_index(lab) for lab in ica.channel_labels]
        out.data[idx] = cleaned
    return out
