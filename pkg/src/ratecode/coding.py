"""Lossy coding rates and coding lengths of finite sample sets.

All quantities are in bits. A data matrix holds one sample per column
(shape ``(n, m)``: ambient dimension by sample count).

The log-determinants are evaluated from the eigenvalues of the smaller of
the two Gram products ``W W^T`` / ``W^T W``; both share the same non-zero
spectrum, so ``log det(I + a W W^T) = log det(I + a W^T W)``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDistortion, InvalidInput, NotPositiveSemidefinite

LN2 = np.log(2.0)
PSD_RTOL = 1e-10
SYMMETRY_ATOL = 1e-12


@dataclass(frozen=True)
class GaussianMoments:
    """Sample mean, biased (1/m) covariance and sample count."""

    mean: np.ndarray
    covariance: np.ndarray
    count: int

    @classmethod
    def from_samples(cls, X):
        X = as_data_matrix(X)
        mu = X.mean(axis=1)
        centered = X - mu[:, None]
        return cls(mu, centered @ centered.T / X.shape[1], X.shape[1])


def as_data_matrix(W, name="W"):
    """Validate and return ``W`` as a finite 2-D float array."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim == 1:
        W = W[:, None]
    if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
        raise InvalidInput(f"{name} must be a non-empty 2-D matrix, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return W


def check_distortion(eps):
    try:
        eps = float(eps)
    except (TypeError, ValueError):
        raise InvalidDistortion(f"distortion must be a positive real, got {eps!r}") from None
    if not np.isfinite(eps) or eps <= 0.0:
        raise InvalidDistortion(f"distortion must be a positive real, got {eps!r}")
    return eps


def gram_eigenvalues(W):
    """Eigenvalues of whichever of ``W W^T`` and ``W^T W`` is smaller.

    Roundoff negatives are clamped to zero; the product is PSD by construction.
    """
    n, m = W.shape
    G = W @ W.T if n <= m else W.T @ W
    lam = np.linalg.eigvalsh(G)
    return np.maximum(lam, 0.0)


def psd_eigenvalues(S, name="matrix"):
    """Eigenvalues of a user-supplied symmetric PSD matrix.

    Accepts eigenvalues down to ``-1e-10 * max(1, lambda_max)`` (zeroed);
    anything more negative raises.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] == 0:
        raise InvalidInput(f"{name} must be a non-empty square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InvalidInput(f"{name} contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) > SYMMETRY_ATOL * scale:
        raise NotPositiveSemidefinite(f"{name} is not symmetric")
    lam = np.linalg.eigvalsh(0.5 * (S + S.T))
    lam_max = float(lam[-1])
    if lam[0] < -PSD_RTOL * max(1.0, lam_max):
        raise NotPositiveSemidefinite(
            f"{name} has eigenvalue {lam[0]:.3e} below tolerance"
        )
    return np.maximum(lam, 0.0)


def log2det_shifted(lam, alpha):
    """log2 det(I + alpha * S) from the eigenvalues of S."""
    return float(np.sum(np.log1p(alpha * lam)) / LN2)


def coding_rate(W, eps):
    """Bits per vector to code the columns of ``W`` up to distortion ``eps``.

    ``1/2 log2 det(I + n / (m eps^2) W W^T)``.
    """
    W = as_data_matrix(W)
    eps = check_distortion(eps)
    n, m = W.shape
    return 0.5 * log2det_shifted(gram_eigenvalues(W), n / (m * eps * eps))


def coding_length(W, eps):
    """Total bits for the zero-mean code of ``W``: ``(m + n) * coding_rate``."""
    W = as_data_matrix(W)
    n, m = W.shape
    return (m + n) * coding_rate(W, eps)


def covariance_term(X, eps):
    """Deviation-about-the-mean part of :func:`coding_length_with_mean`."""
    X = as_data_matrix(X, "X")
    eps = check_distortion(eps)
    n, m = X.shape
    centered = X - X.mean(axis=1, keepdims=True)
    # (n / eps^2) * Sigma = (n / (m eps^2)) * Xc Xc^T
    return 0.5 * (m + n) * log2det_shifted(gram_eigenvalues(centered), n / (m * eps * eps))


def mean_term(X, eps):
    """Bits to code the sample mean: ``n/2 log2(1 + mu^T mu / eps^2)``."""
    X = as_data_matrix(X, "X")
    eps = check_distortion(eps)
    mu = X.mean(axis=1)
    return 0.5 * X.shape[0] * float(np.log1p(mu @ mu / (eps * eps)) / LN2)


def coding_length_with_mean(X, eps):
    """Coding length of a sample set with non-zero mean.

    The centered samples are coded with the Gaussian rate of the biased
    covariance and the mean is coded separately::

        (m + n)/2 log2 det(I + n/eps^2 Sigma) + n/2 log2(1 + mu^T mu / eps^2)
    """
    return covariance_term(X, eps) + mean_term(X, eps)


def gram_rank(lam, rtol=1e-9):
    """Number of eigenvalues above ``rtol * lambda_max``."""
    lam = np.asarray(lam)
    if lam.size == 0 or lam.max() <= 0.0:
        return 0
    return int(np.count_nonzero(lam > rtol * lam.max()))


def kernel_coding_length(K, eps, ambient_dim=None):
    """Coding length evaluated purely from an ``m x m`` Gram matrix.

    ``(m + d)/2 log2 det(I + d / (m eps^2) K)`` with ``d = ambient_dim``.
    With ``K = W^T W`` and ``d = n`` this equals :func:`coding_length`.
    When ``ambient_dim`` is None, ``d`` is the numerical rank of ``K``
    (threshold ``1e-9 * lambda_max``), floored at 1.
    """
    eps = check_distortion(eps)
    lam = psd_eigenvalues(K, "K")
    m = lam.size
    if ambient_dim is None:
        d = max(1, min(m, gram_rank(lam)))
    else:
        d = int(ambient_dim)
        if d < 1:
            raise InvalidInput(f"ambient_dim must be positive, got {ambient_dim}")
    return 0.5 * (m + d) * log2det_shifted(lam, d / (m * eps * eps))


def effective_dimension(Sigma, eps):
    """Distortion-softened dimension ``tr(Sigma (Sigma + eps^2/n I)^-1)``."""
    eps = check_distortion(eps)
    lam = psd_eigenvalues(Sigma, "Sigma")
    n = lam.size
    shift = eps * eps / n
    return float(np.sum(lam / (lam + shift)))
