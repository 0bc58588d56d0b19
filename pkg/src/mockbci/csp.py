"""Multiclass common spatial patterns and log band-power features.

One-vs-rest formulation: for each class the generalized eigenproblem
``S_class v = lambda (S_class + S_rest) v`` is solved on shrinkage-
regularized covariances and the eigenvectors with the largest eigenvalues
are taken (``n_filters // n_classes`` per class). Patterns for topographic
display are the pseudo-inverse of the full filter set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from sklearn.covariance import ledoit_wolf

from .data import Epochs
from .errors import LayoutError, ValidationError


@dataclass
class SpatialFilterBank:
    filters: np.ndarray        # (n_filters, n_channels), unit-norm rows
    patterns: np.ndarray       # (n_channels, n_filters)
    mi_order: np.ndarray       # permutation of filters by mutual information
    eigenvalues: np.ndarray    # generalized eigenvalue per filter
    filter_classes: np.ndarray  # class label each filter was derived for
    channel_labels: tuple[str, ...]
    shrinkage_used: dict

    @property
    def n_filters(self) -> int:
        return self.filters.shape[0]


def _shrunk_covariance(trials: np.ndarray, shrinkage) -> tuple[np.ndarray, float]:
    """Covariance over concatenated trials with Ledoit-Wolf ("auto") or a
    fixed shrinkage coefficient toward the scaled identity."""
    # (n_trials, n_channels, n_samples) -> samples-by-features
    x = np.concatenate(list(trials), axis=1).T
    if shrinkage == "auto":
        cov, coef = ledoit_wolf(x)
        return cov, float(coef)
    coef = float(shrinkage)
    if not 0.0 <= coef <= 1.0:
        raise ValidationError(f"shrinkage must be in [0, 1], got {coef}")
    xc = x - x.mean(axis=0)
    emp = (xc.T @ xc) / len(x)
    mu = np.trace(emp) / emp.shape[0]
    return (1 - coef) * emp + coef * mu * np.eye(emp.shape[0]), coef


def csp_fit_multiclass(epochs: Epochs, n_filters: int = 6,
                       shrinkage="auto") -> SpatialFilterBank:
    """Fit one-vs-rest CSP filters on band-passed epochs.

    Requires at least two trials per class and ``n_filters`` divisible by
    the class count. Filters are unit-normalized; ``mi_order`` ranks them by
    mutual information between their log band power and the labels on the
    fitting data.
    """
    classes = np.unique(epochs.labels)
    if len(classes) < 2:
        raise ValidationError("CSP needs at least two classes")
    if n_filters % len(classes) != 0 or n_filters < len(classes):
        raise ValidationError(
            f"n_filters={n_filters} must be a positive multiple of the "
            f"class count ({len(classes)})")
    per_class = n_filters // len(classes)
    counts = {c: int(np.sum(epochs.labels == c)) for c in classes}
    if min(counts.values()) < 2:
        raise ValidationError(f"need >= 2 trials per class, got {counts}")

    covs = {}
    shrink = {}
    for c in classes:
        covs[c], shrink[str(c)] = _shrunk_covariance(
            epochs.data[epochs.labels == c], shrinkage)

    filters = []
    eigenvalues = []
    filter_classes = []
    for c in classes:
        s_class = covs[c]
        s_rest = np.sum([covs[o] for o in classes if o != c], axis=0)
        try:
            vals, vecs = eigh(s_class, s_class + s_rest)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise np.linalg.LinAlgError(
                f"composite covariance for class {c} is singular despite "
                f"shrinkage: {exc}") from exc
        order = np.argsort(vals)[::-1]
        for j in order[:per_class]:
            v = vecs[:, j]
            filters.append(v / np.linalg.norm(v))
            eigenvalues.append(vals[j])
            filter_classes.append(c)

    filters = np.stack(filters)
    patterns = np.linalg.pinv(filters)
    features = _log_bandpower(filters, epochs.data)
    order = mi_order(features, epochs.labels)
    return SpatialFilterBank(filters, patterns, order, np.array(eigenvalues),
                             np.array(filter_classes),
                             tuple(epochs.channel_labels), shrink)


def _log_bandpower(filters: np.ndarray, data: np.ndarray) -> np.ndarray:
    projected = np.einsum("fc,tcs->tfs", filters, data)
    return np.log(projected.var(axis=2) + 1e-12)


def csp_log_bandpower(bank: SpatialFilterBank, epochs: Epochs) -> np.ndarray:
    """log(var(filter' X) + 1e-12) per trial and filter."""
    if tuple(epochs.channel_labels) != bank.channel_labels:
        raise LayoutError("epoch channel layout differs from the fitted bank")
    return _log_bandpower(bank.filters, epochs.data)


def mutual_information_bits(feature: np.ndarray, labels: np.ndarray,
                            bins: int = 8) -> float:
    """MI between an equal-frequency-binned feature and the labels, in bits.

    Binning is rank based, so the estimate is invariant under strictly
    monotone transforms of the feature.
    """
    n = len(feature)
    order = np.argsort(feature, kind="stable")
    bin_idx = np.empty(n, dtype=int)
    bin_idx[order] = (np.arange(n) * bins) // n
    _, label_idx = np.unique(labels, return_inverse=True)
    n_classes = label_idx.max() + 1
    joint = np.zeros((bins, n_classes))
    np.add.at(joint, (bin_idx, label_idx), 1.0)
    joint /= n
    pf = joint.sum(axis=1, keepdims=True)
    pl = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    return float(np.sum(joint[mask] * np.log2(joint[mask]
                                              / (pf @ pl)[mask])))


def mi_order(features: np.ndarray, labels: np.ndarray,
             bins: int = 8) -> np.ndarray:
    """Feature permutation by descending mutual information with the labels,
    ties broken by feature index."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if len(features) < 10:
        raise ValidationError("MI ordering needs at least 10 trials")
    mi = np.array([mutual_information_bits(features[:, j], labels, bins)
                   for j in range(features.shape[1])])
    return np.argsort(-mi, kind="stable")
