"""Linear classifiers: closed-form LDA and multinomial logistic regression.

Both produce a :class:`LinearModel` whose prediction is the argmax of
``X @ weights.T + intercepts`` with ties broken toward the lowest class
index (classes are kept in sorted order). Adding a constant to all class
scores therefore never changes a prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ChannelKind, Epochs
from .errors import InsufficientDataError, LayoutError, ValidationError


@dataclass
class LinearModel:
    weights: np.ndarray      # (n_classes, n_features)
    intercepts: np.ndarray   # (n_classes,)
    kind: str                # "lda" | "logistic"
    classes: np.ndarray

    def decision_scores(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=float))
        return features @ self.weights.T + self.intercepts

    def predict(self, features: np.ndarray) -> np.ndarray:
        scores = self.decision_scores(features)
        return self.classes[np.argmax(scores, axis=1)]


def emg_mean_power_features(epochs: Epochs) -> np.ndarray:
    """Mean instantaneous power per channel: feature[i, c] = mean(x**2).

    Expects epochs that contain only EMG channels (already CAR'd and
    band/notch filtered upstream).
    """
    kinds = {c.kind for c in epochs.channels}
    if kinds != {ChannelKind.EMG}:
        raise LayoutError(
            f"EMG feature extraction expects EMG channels only, got "
            f"{sorted(k.value for k in kinds)}")
    return np.mean(epochs.data**2, axis=2)


def lda_fit(features: np.ndarray, labels: np.ndarray) -> LinearModel:
    """Closed-form LDA with a pooled within-class covariance.

    ``w_c = inv(S) mu_c`` and ``b_c = -0.5 mu_c' inv(S) mu_c + log pi_c``.
    The pooled covariance gets a relative ridge of 1e-9 times its mean
    diagonal so volt-scale features stay well conditioned.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels)
    if x.ndim != 2 or len(y) != len(x):
        raise ValidationError("features must be (n, d) with matching labels")
    classes, y_idx = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise InsufficientDataError("LDA needs at least two classes")
    n, d = x.shape
    counts = np.bincount(y_idx, minlength=len(classes))
    if np.any(counts < 2):
        lacking = classes[counts < 2]
        raise InsufficientDataError(f"classes with < 2 samples: {list(lacking)}")
    means = np.stack([x[y_idx == c].mean(axis=0) for c in range(len(classes))])
    scatter = np.zeros((d, d))
    for c in range(len(classes)):
        xc = x[y_idx == c] - means[c]
        scatter += xc.T @ xc
    cov = scatter / (n - len(classes))
    ridge = 1e-9 * max(np.mean(np.diag(cov)), np.finfo(float).tiny)
    cov += ridge * np.eye(d)
    weights = np.linalg.solve(cov, means.T).T
    priors = counts / n
    intercepts = -0.5 * np.sum(means * weights, axis=1) + np.log(priors)
    return LinearModel(weights, intercepts, "lda", classes)


def lda_predict(model: LinearModel, features: np.ndarray) -> np.ndarray:
    return model.predict(features)


def logistic_loss_grad(weights: np.ndarray, intercepts: np.ndarray,
                       features: np.ndarray, y_idx: np.ndarray, l2: float
                       ) -> tuple[float, np.ndarray, np.ndarray]:
    """Summed multinomial NLL with 0.5*l2*||W||^2 (intercepts unpenalized),
    and its analytic gradient."""
    scores = features @ weights.T + intercepts
    scores -= scores.max(axis=1, keepdims=True)
    expd = np.exp(scores)
    proba = expd / expd.sum(axis=1, keepdims=True)
    n = len(features)
    nll = -np.sum(np.log(proba[np.arange(n), y_idx] + 1e-300))
    loss = nll + 0.5 * l2 * np.sum(weights**2)
    resid = proba.copy()
    resid[np.arange(n), y_idx] -= 1.0
    grad_w = resid.T @ features + l2 * weights
    grad_b = resid.sum(axis=0)
    return loss, grad_w, grad_b


def _logistic_hessian(weights: np.ndarray, intercepts: np.ndarray,
                      features: np.ndarray, l2: float) -> np.ndarray:
    """Full Hessian over flattened (W, b) parameters."""
    k, d = weights.shape
    xt = np.hstack([features, np.ones((len(features), 1))])  # (n, d+1)
    scores = features @ weights.T + intercepts
    scores -= scores.max(axis=1, keepdims=True)
    expd = np.exp(scores)
    p = expd / expd.sum(axis=1, keepdims=True)
    # H[(c,j),(c',j')] = sum_i x_ij x_ij' (p_ic delta_cc' - p_ic p_ic')
    same = np.einsum("ic,id,ie->cde", p, xt, xt)
    cross = np.einsum("ic,ik,id,ie->ckde", p, p, xt, xt)
    h = -cross
    for c in range(k):
        h[c, c] += same[c]
    h = h.transpose(0, 2, 1, 3).reshape(k * (d + 1), k * (d + 1))
    l2_diag = np.zeros(k * (d + 1))
    l2_diag.reshape(k, d + 1)[:, :d] = l2
    return h + np.diag(l2_diag)


def logistic_fit(features: np.ndarray, labels: np.ndarray,
                 l2: float = 1.0, max_iter: int = 200,
                 grad_tol: float = 1e-6) -> LinearModel:
    """Multinomial logistic regression fitted by damped Newton iterations.

    Runs until the L2 norm of the full gradient drops below ``grad_tol``.
    The softmax null direction (a shared shift of all intercepts) is handled
    by a least-squares Newton solve.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels)
    if not np.all(np.isfinite(x)):
        raise ValidationError("features contain non-finite values")
    if x.ndim != 2 or len(y) != len(x):
        raise ValidationError("features must be (n, d) with matching labels")
    if l2 < 0:
        raise ValidationError("l2 must be non-negative")
    classes, y_idx = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise InsufficientDataError("logistic regression needs >= 2 classes")
    k, d = len(classes), x.shape[1]
    weights = np.zeros((k, d))
    intercepts = np.zeros(k)

    loss, gw, gb = logistic_loss_grad(weights, intercepts, x, y_idx, l2)
    for _ in range(max_iter):
        grad = np.hstack([np.hstack([gw, gb[:, None]]).ravel()])
        if np.linalg.norm(grad) < grad_tol:
            break
        hess = _logistic_hessian(weights, intercepts, x, l2)
        step, *_ = np.linalg.lstsq(hess, grad, rcond=None)
        step = step.reshape(k, d + 1)
        # backtracking line search on the summed loss
        scale = 1.0
        for _ in range(50):
            w_try = weights - scale * step[:, :d]
            b_try = intercepts - scale * step[:, d]
            loss_try, gw_try, gb_try = logistic_loss_grad(w_try, b_try, x,
                                                          y_idx, l2)
            if loss_try <= loss + 1e-12:
                weights, intercepts = w_try, b_try
                loss, gw, gb = loss_try, gw_try, gb_try
                break
            scale *= 0.5
        else:
            break
    return LinearModel(weights, intercepts, "logistic", classes)


def logistic_predict_proba(model: LinearModel, features: np.ndarray
                           ) -> np.ndarray:
    """Class probabilities; rows sum to one."""
    scores = model.decision_scores(features)
    scores -= scores.max(axis=1, keepdims=True)
    expd = np.exp(scores)
    return expd / expd.sum(axis=1, keepdims=True)


def logistic_predict(model: LinearModel, features: np.ndarray) -> np.ndarray:
    return model.predict(features)
