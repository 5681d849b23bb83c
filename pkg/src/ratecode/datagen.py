"""Seeded synthetic data: Gaussian / subspace mixtures, outliers, rings.

Randomness comes from the Philox-4x64 counter-based generator (numpy's
``Philox`` bit generator, 10 rounds, default key schedule) read as uniform
doubles ``(next_uint64 >> 11) * 2**-53``. Normal deviates use Box-Muller on
that stream rather than numpy's ziggurat, so the sequence depends only on
the generator and the two transcendental functions.
"""
from dataclasses import dataclass, field

import numpy as np

from .coding import as_data_matrix
from .errors import InvalidSpec

WEIGHT_ATOL = 1e-9
ORTHONORMAL_ATOL = 1e-9


class Stream:
    """Uniform and normal deviates from a seeded Philox generator."""

    def __init__(self, seed):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.Philox(self.seed))

    def uniform(self, size):
        """Uniform doubles in [0, 1)."""
        return self._gen.random(size)

    def normal(self, size):
        size = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(size))
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs)
        u1 = 1.0 - u[0::2]  # (0, 1], keeps log finite
        u2 = u[1::2]
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.empty(2 * pairs)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        return z[:count].reshape(size)


@dataclass
class Component:
    """One mixture component.

    Either ``covariance`` (full Gaussian) or ``basis`` (orthonormal ``n x d``
    subspace with isotropic in-subspace ``scale``) must be given; ``noise``
    adds isotropic ambient Gaussian noise with that standard deviation.
    """

    mean: np.ndarray
    weight: float = 1.0
    covariance: np.ndarray = None
    basis: np.ndarray = None
    scale: float = 1.0
    noise: float = 0.0

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        if self.covariance is not None:
            self.covariance = np.asarray(self.covariance, dtype=np.float64)
        if self.basis is not None:
            self.basis = np.asarray(self.basis, dtype=np.float64)
            if self.basis.ndim == 1:
                self.basis = self.basis[:, None]

    @property
    def dim(self):
        return self.mean.shape[0]


@dataclass
class MixtureSpec:
    components: list
    seed: int = 0
    names: list = field(default_factory=list)

    def validate(self):
        if not self.components:
            raise InvalidSpec("mixture has no components")
        n = self.components[0].dim
        weights = np.array([c.weight for c in self.components], dtype=np.float64)
        if np.any(~np.isfinite(weights)) or np.any(weights < 0):
            raise InvalidSpec("component weights must be finite and nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_ATOL:
            raise InvalidSpec(f"component weights sum to {weights.sum()!r}, expected 1")
        for k, c in enumerate(self.components):
            if c.dim != n or not np.all(np.isfinite(c.mean)):
                raise InvalidSpec(f"component {k}: mean must be finite with dimension {n}")
            if (c.covariance is None) == (c.basis is None):
                raise InvalidSpec(f"component {k}: give exactly one of covariance or basis")
            if c.noise < 0 or not np.isfinite(c.noise):
                raise InvalidSpec(f"component {k}: noise must be nonnegative")
            if c.covariance is not None:
                S = c.covariance
                if S.shape != (n, n) or np.max(np.abs(S - S.T)) > 1e-12 * max(1.0, np.abs(S).max()):
                    raise InvalidSpec(f"component {k}: covariance must be symmetric {n}x{n}")
                lam = np.linalg.eigvalsh(S)
                if lam[0] < -1e-10 * max(1.0, lam[-1]):
                    raise InvalidSpec(f"component {k}: covariance is not PSD")
            else:
                B = c.basis
                if B.shape[0] != n or B.shape[1] < 1 or B.shape[1] > n:
                    raise InvalidSpec(f"component {k}: basis must be {n} x d with 1 <= d <= {n}")
                if np.max(np.abs(B.T @ B - np.eye(B.shape[1]))) > ORTHONORMAL_ATOL:
                    raise InvalidSpec(f"component {k}: basis columns are not orthonormal")
        return n


def _sqrt_psd(S):
    lam, V = np.linalg.eigh(0.5 * (S + S.T))
    return V * np.sqrt(np.maximum(lam, 0.0))


def assign_components(u, weights):
    """Inverse-CDF component index for each uniform in ``u``."""
    cdf = np.cumsum(np.asarray(weights, dtype=np.float64))
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1)


def sample_mixture(spec, m, seed=None):
    """Draw ``m`` columns from the mixture; returns ``(X, labels)``.

    Stream layout: ``m`` uniforms choose the components, then a
    ``(2n + d_max) x m`` block of normals, column ``i`` feeding sample ``i``:
    rows ``[0, n)`` drive full-covariance components, ``[n, n + d)`` the
    in-subspace coordinates and the last ``n`` rows the ambient noise.
    """
    n = spec.validate()
    m = int(m)
    if m < 1:
        raise InvalidSpec(f"sample count must be positive, got {m}")
    stream = Stream(spec.seed if seed is None else seed)
    weights = [c.weight for c in spec.components]
    labels = assign_components(stream.uniform(m), weights)
    d_max = max(c.basis.shape[1] if c.basis is not None else 0 for c in spec.components)
    Z = stream.normal((2 * n + d_max, m))
    X = np.empty((n, m))
    for k, c in enumerate(spec.components):
        cols = np.flatnonzero(labels == k)
        if cols.size == 0:
            continue
        if c.covariance is not None:
            X[:, cols] = c.mean[:, None] + _sqrt_psd(c.covariance) @ Z[:n, cols]
        else:
            d = c.basis.shape[1]
            X[:, cols] = c.mean[:, None] + c.basis @ (c.scale * Z[n:n + d, cols])
        if c.noise > 0:
            X[:, cols] += c.noise * Z[n + d_max:, cols]
    return X, labels


def add_outliers(W, fraction, bound, seed):
    """Replace ``floor(fraction * m)`` random columns with uniform noise in ``[-bound, bound]^n``."""
    W = as_data_matrix(W)
    if not 0.0 <= fraction < 1.0:
        raise InvalidSpec(f"outlier fraction must lie in [0, 1), got {fraction}")
    if not bound > 0:
        raise InvalidSpec(f"outlier bound must be positive, got {bound}")
    n, m = W.shape
    count = int(np.floor(fraction * m))
    stream = Stream(seed)
    keys = stream.uniform(m)
    chosen = np.sort(np.argsort(keys, kind="stable")[:count])
    out = W.copy()
    out[:, chosen] = bound * (2.0 * stream.uniform((n, count)) - 1.0)
    mask = np.zeros(m, dtype=bool)
    mask[chosen] = True
    return out, mask


def two_rings(m_per_class, seed, radii=(1.0, 3.0), noise=0.1):
    """Two concentric noisy circles in the plane; label 0 is the inner ring."""
    stream = Stream(seed)
    m = 2 * int(m_per_class)
    labels = np.repeat([0, 1], m_per_class)
    angle = 2.0 * np.pi * stream.uniform(m)
    radius = np.asarray(radii, dtype=np.float64)[labels] + noise * stream.normal(m)
    X = np.vstack([radius * np.cos(angle), radius * np.sin(angle)])
    return X, labels


def random_orthonormal(n, d, stream):
    """``n x d`` matrix with orthonormal columns (QR of a normal block)."""
    Q, R = np.linalg.qr(stream.normal((n, d)))
    return Q * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))


def unit_columns(Z):
    norms = np.linalg.norm(Z, axis=0)
    norms[norms == 0] = 1.0
    return Z / norms


def subspace_features(d, k, sub_dim, m, seed):
    """Unit-norm features, class ``j`` confined to its own random ``sub_dim``-plane.

    Classes get ``m // k`` samples each (the first ``m % k`` classes one more).
    Returns ``(Z, labels)``.
    """
    stream = Stream(seed)
    sizes = [m // k + (1 if j < m % k else 0) for j in range(k)]
    blocks, labels = [], []
    for j, size in enumerate(sizes):
        basis = random_orthonormal(d, sub_dim, stream)
        blocks.append(basis @ stream.normal((sub_dim, size)))
        labels.extend([j] * size)
    return unit_columns(np.hstack(blocks)), np.asarray(labels, dtype=np.int64)


# --------------------------------------------------------------------------
# Named fixtures used by the CLI and the test-suite
# --------------------------------------------------------------------------

def two_blobs(seed=0, separation=10.0, minor_var=1e-4):
    """Two nearly degenerate planar Gaussians, ``diag(1, minor_var)``, split along x."""
    cov = np.diag([1.0, minor_var])
    return MixtureSpec(
        [Component([0.0, 0.0], 0.5, covariance=cov), Component([separation, 0.0], 0.5, covariance=cov)],
        seed=seed, names=["left", "right"],
    )


def three_component(seed=0):
    """Three planar Gaussians: two nearly degenerate lines and one isotropic blob."""
    return MixtureSpec(
        [
            Component([0.0, 0.0], 1 / 3, covariance=np.diag([1.0, 1e-4])),
            Component([10.0, 10.0], 1 / 3, covariance=np.eye(2)),
            Component([10.0, 0.0], 1 / 3, covariance=np.diag([1e-4, 1.0])),
        ],
        seed=seed, names=["horizontal", "blob", "vertical"],
    )


PRESETS = {"two-blobs": two_blobs, "three-component": three_component}


def preset(name, seed=0):
    try:
        return PRESETS[name](seed=seed)
    except KeyError:
        raise InvalidSpec(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def spec_from_dict(data):
    """Build a :class:`MixtureSpec` from plain JSON-style data."""
    try:
        comps = []
        for c in data["components"]:
            comps.append(Component(
                mean=c["mean"],
                weight=float(c.get("weight", 1.0)),
                covariance=c.get("covariance"),
                basis=c.get("basis"),
                scale=float(c.get("scale", 1.0)),
                noise=float(c.get("noise", 0.0)),
            ))
        spec = MixtureSpec(comps, seed=int(data.get("seed", 0)), names=list(data.get("names", [])))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"malformed mixture spec: {exc}") from None
    spec.validate()
    return spec


def spec_to_dict(spec):
    out = {"seed": spec.seed, "components": []}
    if spec.names:
        out["names"] = list(spec.names)
    for c in spec.components:
        item = {"mean": c.mean.tolist(), "weight": c.weight}
        if c.covariance is not None:
            item["covariance"] = c.covariance.tolist()
        else:
            item["basis"] = c.basis.tolist()
            item["scale"] = c.scale
        if c.noise:
            item["noise"] = c.noise
        out["components"].append(item)
    return out
