"""Maximal coding rate reduction on directly optimized feature matrices.

Features are the columns of a ``d x m`` matrix ``Z``. A membership is a
``k x m`` array of nonnegative weights whose columns sum to one (row ``j``
is the diagonal of ``Pi_j``); hard labels convert via
:func:`membership_from_labels`. All rates are in bits.

The rate reduction ``delta_R = R(Z) - R^c(Z | Pi)`` grows with the scale of
``Z``, so features are kept on the unit sphere (default) or at per-class
Frobenius norm ``||Z_j||_F^2 = m_j`` while optimizing.
"""
from dataclasses import dataclass, field

import numpy as np

from .coding import LN2, as_data_matrix, check_distortion, gram_eigenvalues, log2det_shifted
from .errors import DimensionMismatch, HardLabelsRequired, InvalidInput

SIMPLEX_ATOL = 1e-9
UNIT_ATOL = 1e-9
NORM_MODES = ("sphere", "frobenius")


@dataclass
class RateReport:
    R: float
    Rc: float
    deltaR: float
    per_class_rates: list
    epsilon: float
    normalization_mode: str = "none"
    skipped_classes: list = field(default_factory=list)

    def as_dict(self):
        return {
            "R": self.R, "Rc": self.Rc, "deltaR": self.deltaR,
            "per_class_rates": list(self.per_class_rates), "epsilon": self.epsilon,
            "normalization_mode": self.normalization_mode, "skipped_classes": list(self.skipped_classes),
        }


def membership_from_labels(labels, k=None):
    """One-hot ``k x m`` membership from integer labels ``0..k-1``."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0 or not np.issubdtype(labels.dtype, np.integer):
        raise InvalidInput("labels must be a non-empty 1-D integer array")
    if labels.min() < 0:
        raise InvalidInput("labels must be nonnegative")
    k = int(labels.max()) + 1 if k is None else int(k)
    if labels.max() >= k:
        raise InvalidInput(f"label {labels.max()} out of range for k={k}")
    pi = np.zeros((k, labels.size))
    pi[labels, np.arange(labels.size)] = 1.0
    return pi


def check_membership(pi, m):
    pi = np.asarray(pi, dtype=np.float64)
    if pi.ndim == 1:
        pi = membership_from_labels(pi.astype(np.int64)) if np.all(pi == np.round(pi)) else pi[None, :]
    if pi.ndim != 2 or pi.shape[1] != m:
        raise DimensionMismatch(f"membership must be k x {m}, got shape {pi.shape}")
    if not np.all(np.isfinite(pi)) or np.any(pi < 0):
        raise InvalidInput("membership weights must be finite and nonnegative")
    if np.max(np.abs(pi.sum(axis=0) - 1.0)) > SIMPLEX_ATOL:
        raise InvalidInput("membership weights of every sample must sum to 1")
    return pi


def is_hard(pi):
    return bool(np.all((pi == 0.0) | (pi == 1.0)))


def _features(Z):
    return as_data_matrix(Z, "Z")


def rate_R(Z, eps):
    """``1/2 log2 det(I + d / (m eps^2) Z Z^T)``."""
    Z = _features(Z)
    eps = check_distortion(eps)
    d, m = Z.shape
    return 0.5 * log2det_shifted(gram_eigenvalues(Z), d / (m * eps * eps))


def _rate_Rc_terms(Z, pi, eps):
    d, m = Z.shape
    rates = np.zeros(pi.shape[0])
    skipped = []
    total = 0.0
    for j, w in enumerate(pi):
        tr = float(w.sum())
        if tr <= 0.0:
            skipped.append(j)
            continue
        Zw = Z * np.sqrt(w)
        rates[j] = 0.5 * log2det_shifted(gram_eigenvalues(Zw), d / (tr * eps * eps))
        total += tr / m * rates[j]
    return total, rates, skipped


def rate_Rc(Z, pi, eps):
    """Membership-weighted rate ``sum_j tr(Pi_j)/(2m) log2 det(I + d/(tr(Pi_j) eps^2) Z Pi_j Z^T)``.

    Classes with zero total weight contribute nothing.
    """
    Z = _features(Z)
    eps = check_distortion(eps)
    return _rate_Rc_terms(Z, check_membership(pi, Z.shape[1]), eps)[0]


def delta_R(Z, pi, eps, normalization_mode="none"):
    Z = _features(Z)
    eps = check_distortion(eps)
    pi = check_membership(pi, Z.shape[1])
    R = rate_R(Z, eps)
    Rc, rates, skipped = _rate_Rc_terms(Z, pi, eps)
    return RateReport(R, Rc, R - Rc, rates.tolist(), eps, normalization_mode, skipped)


def _rate_grad(Z, alpha, weights=None):
    """Gradient of ``1/2 log2 det(I + alpha Z W Z^T)`` with ``W = diag(weights)``."""
    d = Z.shape[0]
    ZW = Z if weights is None else Z * weights
    A = np.eye(d) + alpha * (ZW @ Z.T)
    return (alpha / LN2) * np.linalg.solve(A, ZW)


def grad_delta_R(Z, pi, eps):
    """Analytic gradient of :func:`delta_R` with respect to ``Z`` (``d x m``)."""
    Z = _features(Z)
    eps = check_distortion(eps)
    pi = check_membership(pi, Z.shape[1])
    d, m = Z.shape
    g = _rate_grad(Z, d / (m * eps * eps))
    for w in pi:
        tr = float(w.sum())
        if tr > 0.0:
            g -= (tr / m) * _rate_grad(Z, d / (tr * eps * eps), w)
    return g


def _hard_labels(pi):
    if not is_hard(pi):
        raise HardLabelsRequired("this operation needs a hard (0/1) membership")
    return np.argmax(pi, axis=0)


def normalize(Z, pi=None, mode="sphere"):
    """Project onto the unit sphere per column, or scale each class to ``||Z_j||_F^2 = m_j``."""
    Z = np.array(Z, dtype=np.float64)
    if mode == "sphere":
        norms = np.linalg.norm(Z, axis=0)
        if np.any(norms == 0):
            raise InvalidInput("cannot normalize a zero feature column")
        return Z / norms
    if mode == "frobenius":
        labels = _hard_labels(pi)
        for j in np.unique(labels):
            cols = labels == j
            f = np.linalg.norm(Z[:, cols])
            if f == 0:
                raise InvalidInput(f"class {j} has all-zero features")
            Z[:, cols] *= np.sqrt(cols.sum()) / f
        return Z
    raise InvalidInput(f"normalization mode must be one of {NORM_MODES}, got {mode!r}")


def _check_normalized(Z, pi, mode):
    if mode == "sphere":
        bad = np.abs(np.linalg.norm(Z, axis=0) - 1.0) > UNIT_ATOL
        if np.any(bad):
            raise InvalidInput(f"feature column {int(np.argmax(bad))} is not unit-norm")
    else:
        labels = _hard_labels(pi)
        for j in np.unique(labels):
            cols = labels == j
            if abs(np.sum(Z[:, cols] ** 2) - cols.sum()) > UNIT_ATOL * cols.sum():
                raise InvalidInput(f"class {j} does not satisfy ||Z_j||_F^2 = m_j")


def is_normalized(Z, pi, mode="sphere"):
    try:
        _check_normalized(_features(Z), check_membership(pi, np.shape(Z)[1]), mode)
    except InvalidInput:
        return False
    return True


def optimize_features(Z0, pi, eps, steps=200, step_size=0.5, norm="sphere", max_halvings=20):
    """Projected gradient ascent on ``delta_R`` with step halving.

    Each step moves along the gradient and re-normalizes; if that lowers
    ``delta_R`` the step is halved (at most ``max_halvings`` times) and, if
    nothing helps, the iterate stays put. Returns ``(Z, trajectory)`` where
    ``trajectory[0]`` is the starting value and the sequence never decreases.
    """
    if norm not in NORM_MODES:
        raise InvalidInput(f"normalization mode must be one of {NORM_MODES}, got {norm!r}")
    Z = _features(Z0).copy()
    eps = check_distortion(eps)
    pi = check_membership(pi, Z.shape[1])
    _check_normalized(Z, pi, norm)
    if steps < 0 or not step_size > 0:
        raise InvalidInput("steps must be >= 0 and step_size > 0")
    current = delta_R(Z, pi, eps).deltaR
    trajectory = [current]
    for _ in range(int(steps)):
        g = grad_delta_R(Z, pi, eps)
        eta = step_size
        for _ in range(max_halvings + 1):
            cand = normalize(Z + eta * g, pi, norm)
            value = delta_R(cand, pi, eps).deltaR
            if value >= current:
                Z, current = cand, value
                break
            eta *= 0.5
        trajectory.append(current)
    return Z, np.asarray(trajectory)


def nuclear_norm(A):
    return float(np.linalg.svd(A, compute_uv=False).sum()) if A.size else 0.0


def ole_loss(Z, pi):
    """``||Z||_* - sum_j ||Z_j||_*``; zero exactly when the class spans are mutually orthogonal."""
    Z = _features(Z)
    labels = _hard_labels(check_membership(pi, Z.shape[1]))
    parts = sum(nuclear_norm(Z[:, labels == j]) for j in np.unique(labels))
    return nuclear_norm(Z) - parts


def pairwise_rate_distance(Zi, Zj, eps):
    """``R(Zi | Zj) - (R(Zi) + R(Zj)) / 2`` with ``|`` meaning column concatenation."""
    Zi, Zj = _features(Zi), _features(Zj)
    if Zi.shape[0] != Zj.shape[0]:
        raise DimensionMismatch(f"feature dimensions differ: {Zi.shape[0]} vs {Zj.shape[0]}")
    return rate_R(np.hstack([Zi, Zj]), eps) - 0.5 * (rate_R(Zi, eps) + rate_R(Zj, eps))


def precision_condition(eps, d, class_sizes, class_dims):
    """Whether ``eps^4 < min_j (m_j / m) (d^2 / d_j^2)``."""
    sizes = np.asarray(class_sizes, dtype=np.float64)
    dims = np.asarray(class_dims, dtype=np.float64)
    bound = np.min(sizes / sizes.sum() * d**2 / dims**2)
    return bool(eps**4 < bound)


def numerical_rank(A, rtol=1e-3):
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.count_nonzero(s > rtol * s[0])) if s.size and s[0] > 0 else 0


def subspace_metrics(Z, labels, rtol=1e-3):
    """Between-class coherence, per-class rank and top singular-value spread.

    ``coherence`` is the largest ``|z_a^T z_b|`` over samples of different
    classes; ``spread[j]`` is ``(s_0 - s_{r-2}) / s_0`` over the leading
    ``r - 1`` singular values of class ``j`` (0 when ``r < 2``).
    """
    Z = _features(Z)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    coherence = 0.0
    for a in range(len(classes)):
        for b in range(a + 1, len(classes)):
            C = Z[:, labels == classes[a]].T @ Z[:, labels == classes[b]]
            coherence = max(coherence, float(np.max(np.abs(C))))
    ranks, spreads, singular = [], [], []
    for c in classes:
        s = np.linalg.svd(Z[:, labels == c], compute_uv=False)
        r = int(np.count_nonzero(s > rtol * s[0]))
        ranks.append(r)
        spreads.append(float((s[0] - s[r - 2]) / s[0]) if r >= 2 else 0.0)
        singular.append(s.tolist())
    return {"coherence": coherence, "ranks": ranks, "spreads": spreads, "singular_values": singular}
