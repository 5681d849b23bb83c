"""Minimum Incremental Coding Length (MICL) classification.

A test sample goes to the class whose lossy code grows least when the
sample is appended to that class's training set, counting the bits for the
label as well::

    delta_L(x, j) = L(X_j + {x}) - L(X_j) - log2(pi_j)

``L`` is :func:`ratecode.coding.coding_length_with_mean`. The large-sample
limit is a regularized MAP rule with a reward for the effective dimension of
each class (:func:`classify_asymptotic`). The kernel variant evaluates the
deviation term from centered Gram matrices only.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .coding import (
    LN2, as_data_matrix, check_distortion, coding_length_with_mean, covariance_term,
    effective_dimension, kernel_coding_length, psd_eigenvalues,
)
from .errors import DimensionMismatch, InvalidInput

PRIOR_ATOL = 1e-9


def _as_vector(x, n=None):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise InvalidInput("test sample contains non-finite entries")
    if n is not None and x.shape[0] != n:
        raise DimensionMismatch(f"sample has dimension {x.shape[0]}, classes have {n}")
    return x


def _pick(labels, values, best=np.argmin):
    """Label at the optimum of ``values``; exact ties go to the smallest label."""
    values = np.asarray(values)
    target = values[best(values)]
    return min(lab for lab, v in zip(labels, values) if v == target)


@dataclass(frozen=True)
class ClassModel:
    samples: np.ndarray  # n x m_j
    prior: float
    label: int

    def __post_init__(self):
        object.__setattr__(self, "samples", as_data_matrix(self.samples, "samples"))
        if not (np.isfinite(self.prior) and 0.0 < self.prior <= 1.0):
            raise InvalidInput(f"class prior must lie in (0, 1], got {self.prior}")

    @property
    def dim(self):
        return self.samples.shape[0]

    @property
    def count(self):
        return self.samples.shape[1]


@dataclass(frozen=True)
class ClassifierState:
    classes: tuple
    epsilon: float
    _base: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        classes = tuple(self.classes)
        if len(classes) < 2:
            raise InvalidInput("need at least two classes")
        labels = [c.label for c in classes]
        if len(set(labels)) != len(labels):
            raise InvalidInput("class labels must be distinct")
        if len({c.dim for c in classes}) != 1:
            raise DimensionMismatch("classes have different ambient dimensions")
        total = sum(c.prior for c in classes)
        if abs(total - 1.0) > PRIOR_ATOL:
            raise InvalidInput(f"class priors sum to {total!r}, expected 1")
        eps = check_distortion(self.epsilon)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "_base", {c.label: coding_length_with_mean(c.samples, eps) for c in classes})

    @classmethod
    def from_labeled(cls, X, y, eps, priors="empirical"):
        """Split the columns of ``X`` by label; priors ``empirical`` or ``uniform``."""
        X = as_data_matrix(X, "X")
        y = np.asarray(y).reshape(-1)
        if y.shape[0] != X.shape[1]:
            raise DimensionMismatch(f"{y.shape[0]} labels for {X.shape[1]} samples")
        labels = sorted(set(y.tolist()))
        m = X.shape[1]
        if priors == "empirical":
            pi = {lab: np.count_nonzero(y == lab) / m for lab in labels}
        elif priors == "uniform":
            pi = {lab: 1.0 / len(labels) for lab in labels}
        else:
            raise InvalidInput(f"unknown prior mode {priors!r}")
        return cls(tuple(ClassModel(X[:, y == lab], pi[lab], lab) for lab in labels), eps)

    @property
    def labels(self):
        return [c.label for c in self.classes]

    @property
    def dim(self):
        return self.classes[0].dim

    def base_length(self, label):
        return self._base[label]


def incremental_coding_length(x, model, eps):
    """Extra bits to code ``x`` together with class ``model`` plus its label."""
    eps = check_distortion(eps)
    x = _as_vector(x, model.dim)
    X = model.samples
    augmented = np.hstack([X, x[:, None]])
    return (coding_length_with_mean(augmented, eps) - coding_length_with_mean(X, eps)
            - np.log2(model.prior))


def classify_micl(x, state):
    """Return ``(label, deltas)`` with ``deltas`` in ``state.classes`` order."""
    x = _as_vector(x, state.dim)
    eps = state.epsilon
    deltas = np.empty(len(state.classes))
    for k, c in enumerate(state.classes):
        augmented = np.hstack([c.samples, x[:, None]])
        deltas[k] = coding_length_with_mean(augmented, eps) - state.base_length(c.label) - np.log2(c.prior)
    return _pick(state.labels, deltas), deltas


# --------------------------------------------------------------------------
# Large-sample form
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticClassModel:
    mean: np.ndarray
    covariance: np.ndarray
    prior: float
    label: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.asarray(self.covariance, dtype=np.float64)
        if cov.shape != (mean.size, mean.size):
            raise DimensionMismatch(f"covariance shape {cov.shape} does not match mean length {mean.size}")
        psd_eigenvalues(cov, "covariance")
        if not (np.isfinite(self.prior) and 0.0 < self.prior <= 1.0):
            raise InvalidInput(f"class prior must lie in (0, 1], got {self.prior}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


def gaussian_loglik(x, mean, cov):
    """Natural-log density of ``N(mean, cov)`` at ``x`` (``cov`` positive definite)."""
    L = np.linalg.cholesky(cov)
    z = np.linalg.solve(L, x - mean)
    n = x.shape[0]
    return -0.5 * (n * np.log(2 * np.pi) + 2.0 * np.sum(np.log(np.diag(L))) + z @ z)


def asymptotic_score(x, model, eps):
    """Regularized log-likelihood + log prior + half the effective dimension (nats)."""
    eps = check_distortion(eps)
    x = _as_vector(x, model.mean.shape[0])
    n = x.shape[0]
    softened = model.covariance + (eps * eps / n) * np.eye(n)
    return (gaussian_loglik(x, model.mean, softened) + np.log(model.prior)
            + 0.5 * effective_dimension(model.covariance, eps))


def asymptotic_incremental_length(x, model, eps):
    """Limit of ``delta_L(x, j)`` as the class sample count grows, in bits.

    Expanding the rank-one covariance update gives
    ``n/2 log2(n / (2 pi eps^2)) - score / ln 2`` with ``score`` from
    :func:`asymptotic_score`; the first term is common to all classes.
    """
    eps = check_distortion(eps)
    n = model.mean.shape[0]
    return 0.5 * n * np.log2(n / (2 * np.pi * eps * eps)) - asymptotic_score(x, model, eps) / LN2


def classify_asymptotic(x, models, eps):
    """Return ``(label, scores)``: argmax of :func:`asymptotic_score` over ``models``."""
    scores = np.array([asymptotic_score(x, mdl, eps) for mdl in models])
    return _pick([mdl.label for mdl in models], scores, best=np.argmax), scores


def map_classify(x, models):
    """Plain Gaussian MAP rule from the same moments (no softening, no reward)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    scores = np.array([gaussian_loglik(x, mdl.mean, mdl.covariance) + np.log(mdl.prior) for mdl in models])
    return _pick([mdl.label for mdl in models], scores, best=np.argmax), scores


def asymptotic_models(state_or_moments):
    """Moment models from a :class:`ClassifierState` (sample mean, biased covariance)."""
    out = []
    for c in state_or_moments.classes:
        X = c.samples
        mu = X.mean(axis=1)
        Xc = X - mu[:, None]
        out.append(AsymptoticClassModel(mu, Xc @ Xc.T / X.shape[1], c.prior, c.label))
    return out


# --------------------------------------------------------------------------
# Kernel variant
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    degree: int = 1
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "polynomial", "rbf"):
            raise InvalidInput(f"unknown kernel kind {self.kind!r}")
        if self.kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise InvalidInput(f"polynomial degree must be an integer >= 1, got {self.degree}")
        if self.kind == "rbf" and not (np.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidInput(f"rbf gamma must be positive, got {self.gamma}")

    @classmethod
    def parse(cls, text):
        """``linear``, ``poly:D`` or ``rbf:GAMMA``."""
        kind, _, arg = str(text).strip().partition(":")
        try:
            if kind == "linear" and not arg:
                return cls("linear")
            if kind in ("poly", "polynomial"):
                return cls("polynomial", degree=int(arg))
            if kind == "rbf":
                return cls("rbf", gamma=float(arg))
        except ValueError:
            pass
        raise InvalidInput(f"cannot parse kernel {text!r}; expected linear, poly:D or rbf:GAMMA")

    def __str__(self):
        if self.kind == "polynomial":
            return f"poly:{self.degree}"
        if self.kind == "rbf":
            return f"rbf:{self.gamma!r}"
        return "linear"

    def gram(self, A, B):
        """Kernel matrix between the columns of ``A`` and of ``B``."""
        if A.shape[0] != B.shape[0]:
            raise DimensionMismatch("kernel arguments have different dimensions")
        if self.kind == "rbf":
            return _kernels.rbf_gram(A, B, self.gamma)
        inner = A.T @ B
        if self.kind == "polynomial":
            return (inner + 1.0) ** self.degree
        return inner


def kernel_eval(a, b, kernel):
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimensionMismatch(f"kernel arguments have dimensions {a.size} and {b.size}")
    if kernel.kind == "rbf":
        d = a - b
        return float(np.exp(-kernel.gamma * (d @ d)))
    if kernel.kind == "polynomial":
        return float((a @ b + 1.0) ** kernel.degree)
    return float(a @ b)


def center_gram(K):
    """``H K H`` with ``H = I - 11^T / m``."""
    K = np.asarray(K, dtype=np.float64)
    row = K.mean(axis=0, keepdims=True)
    col = K.mean(axis=1, keepdims=True)
    Kc = K - row - col + K.mean()
    return 0.5 * (Kc + Kc.T)


def kernel_class_length(K, eps):
    """Deviation coding length of one class from its (uncentered) Gram matrix."""
    return kernel_coding_length(center_gram(K), eps)


def classify_micl_kernel(x, state, kernel):
    """Kernelized MICL; returns ``(label, deltas)``.

    Each class is coded through its centered Gram matrix; no separate mean
    term is charged in feature space.
    """
    x = _as_vector(x, state.dim)
    eps = state.epsilon
    deltas = np.empty(len(state.classes))
    for k, c in enumerate(state.classes):
        X = c.samples
        K = kernel.gram(X, X)
        kx = kernel.gram(X, x[:, None])[:, 0]
        kxx = kernel_eval(x, x, kernel)
        K_aug = np.block([[K, kx[:, None]], [kx[None, :], np.array([[kxx]])]])
        deltas[k] = kernel_class_length(K_aug, eps) - kernel_class_length(K, eps) - np.log2(c.prior)
    return _pick(state.labels, deltas), deltas


def linear_kernel_data_term(x, model, eps):
    """Primal counterpart of the kernel path's data term (covariance part only)."""
    x = _as_vector(x, model.dim)
    augmented = np.hstack([model.samples, x[:, None]])
    return covariance_term(augmented, eps) - covariance_term(model.samples, eps)


# --------------------------------------------------------------------------
# Batch helpers
# --------------------------------------------------------------------------

def classify_batch(X, state, kernel=None, threads=None):
    """Classify each column of ``X``; returns ``(labels, deltas)`` (deltas: points x classes).

    Points are spread over ``RATECODE_THREADS`` worker threads; each result
    depends only on its own point.
    """
    X = as_data_matrix(X, "X")
    if X.shape[0] != state.dim:
        raise DimensionMismatch(f"test data has dimension {X.shape[0]}, classes have {state.dim}")
    if kernel is None:
        fn = lambda col: classify_micl(col, state)  # noqa: E731
    else:
        fn = lambda col: classify_micl_kernel(col, state, kernel)  # noqa: E731
    workers = threads or _kernels.thread_count()
    cols = [X[:, i] for i in range(X.shape[1])]
    if workers > 1 and len(cols) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, cols))
    else:
        results = [fn(col) for col in cols]
    labels = np.array([r[0] for r in results])
    deltas = np.array([r[1] for r in results]).reshape(len(cols), len(state.classes))
    return labels, deltas
