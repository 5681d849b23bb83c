"""Hot numerical kernels, each with a numba and a pure-numpy implementation.

The numba path is used when numba imports and ``RATECODE_DISABLE_NUMBA`` is
unset (or ``0``). Both paths compute the same quantities in the same
summation order where it matters (partition totals), so results agree to
roundoff; the brute-force search is bit-identical between them.
"""
import logging
import os

import numpy as np
from scipy.spatial.distance import cdist

_LN2 = np.log(2.0)
_FALSY = ("", "0", "false", "no", "off")


def _env_disabled():
    return os.environ.get("RATECODE_DISABLE_NUMBA", "").strip().lower() not in _FALSY


try:
    import numba

    logging.getLogger("numba").setLevel(logging.WARNING)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def thread_count():
    """Worker cap from ``RATECODE_THREADS`` (0 or unset means one per core)."""
    raw = os.environ.get("RATECODE_THREADS", "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value <= 0:
        value = os.cpu_count() or 1
    return value


def _njit(fn):
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True, nogil=True)(fn)


# --------------------------------------------------------------------------
# Coding length of groups described by (count, mean, centered scatter)
# --------------------------------------------------------------------------

def _moment_lengths_numpy(counts, means, scatters, eps2):
    counts = np.asarray(counts, dtype=np.float64)
    n = means.shape[1]
    if counts.size == 0:
        return np.zeros(0)
    cov = scatters / counts[:, None, None]
    lam = np.linalg.eigvalsh(cov)
    np.maximum(lam, 0.0, out=lam)
    logdet = np.log1p((n / eps2) * lam).sum(axis=1) / _LN2
    mean_sq = np.einsum("ij,ij->i", means, means)
    return 0.5 * (counts + n) * logdet + 0.5 * n * np.log1p(mean_sq / eps2) / _LN2


def _merged_lengths_numpy(counts, means, scatters, ia, ib, eps2, chunk=16384):
    out = np.empty(len(ia))
    for start in range(0, len(ia), chunk):
        a = ia[start:start + chunk]
        b = ib[start:start + chunk]
        ca = counts[a].astype(np.float64)
        cb = counts[b].astype(np.float64)
        c = ca + cb
        delta = means[b] - means[a]
        mu = means[a] + delta * (cb / c)[:, None]
        w = ca * cb / c
        m2 = scatters[a] + scatters[b] + w[:, None, None] * delta[:, :, None] * delta[:, None, :]
        out[start:start + chunk] = _moment_lengths_numpy(c, mu, m2, eps2)
    return out


def _merged_lengths_loop(counts, means, scatters, ia, ib, eps2):
    n = means.shape[1]
    p = ia.shape[0]
    out = np.empty(p)
    cov = np.empty((n, n))
    for t in range(p):
        a = ia[t]
        b = ib[t]
        ca = float(counts[a])
        cb = float(counts[b])
        c = ca + cb
        w = ca * cb / c
        mean_sq = 0.0
        for r in range(n):
            mu_r = means[a, r] + (means[b, r] - means[a, r]) * (cb / c)
            mean_sq += mu_r * mu_r
        for r in range(n):
            dr = means[b, r] - means[a, r]
            for s in range(n):
                ds = means[b, s] - means[a, s]
                cov[r, s] = (scatters[a, r, s] + scatters[b, r, s] + w * dr * ds) / c
        lam = np.linalg.eigvalsh(cov)
        logdet = 0.0
        for r in range(n):
            if lam[r] > 0.0:
                logdet += np.log1p((n / eps2) * lam[r])
        out[t] = (0.5 * (c + n) * logdet + 0.5 * n * np.log1p(mean_sq / eps2)) / np.log(2.0)
    return out


_merged_lengths_numba = _njit(_merged_lengths_loop)


def merged_lengths(counts, means, scatters, ia, ib, eps2, use_numba=None):
    """Coding length (covariance plus mean term) of the union of groups ``ia[t]`` and ``ib[t]``.

    Groups are given by sample count, mean (rows) and centered scatter
    matrix; the union's moments come from the pairwise update formula.
    """
    ia = np.ascontiguousarray(ia, dtype=np.int64)
    ib = np.ascontiguousarray(ib, dtype=np.int64)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba and _merged_lengths_numba is not None:
        return _merged_lengths_numba(
            np.ascontiguousarray(counts, dtype=np.int64),
            np.ascontiguousarray(means, dtype=np.float64),
            np.ascontiguousarray(scatters, dtype=np.float64),
            ia, ib, float(eps2),
        )
    return _merged_lengths_numpy(np.asarray(counts), means, scatters, ia, ib, float(eps2))


def moment_lengths(counts, means, scatters, eps2):
    """Coding length of each group from its moments (batched, numpy)."""
    return _moment_lengths_numpy(np.asarray(counts), np.asarray(means, dtype=np.float64),
                                 np.asarray(scatters, dtype=np.float64), float(eps2))


# --------------------------------------------------------------------------
# Exhaustive partition search over restricted growth strings
# --------------------------------------------------------------------------

def _rgs_search_loop(table, m):
    # table[mask] = cost of a group with member bitmask ``mask``
    a = np.zeros(m, dtype=np.int64)
    prefix_max = np.zeros(m, dtype=np.int64)  # max(a[0..i-1]) for i >= 1
    masks = np.zeros(m, dtype=np.int64)
    best = np.copy(a)
    best_total = np.inf
    while True:
        for g in range(m):
            masks[g] = 0
        top = 0
        for i in range(m):
            masks[a[i]] |= 1 << i
            if a[i] > top:
                top = a[i]
        total = 0.0
        for g in range(top + 1):
            total += table[masks[g]]
        if total < best_total:
            best_total = total
            for i in range(m):
                best[i] = a[i]
        i = m - 1
        while i >= 1 and a[i] > prefix_max[i]:
            i -= 1
        if i < 1:
            break
        a[i] += 1
        running = prefix_max[i] if prefix_max[i] > a[i] else a[i]
        for j in range(i + 1, m):
            a[j] = 0
            prefix_max[j] = running
    return best, best_total


def _rgs_search_python(table, m):
    a = [0] * m
    prefix_max = [0] * m
    best = list(a)
    best_total = np.inf
    table = np.asarray(table).tolist()
    while True:
        masks = {}
        for i, g in enumerate(a):
            masks[g] = masks.get(g, 0) | (1 << i)
        total = 0.0
        for g in range(len(masks)):
            total += table[masks[g]]
        if total < best_total:
            best_total = total
            best = list(a)
        i = m - 1
        while i >= 1 and a[i] > prefix_max[i]:
            i -= 1
        if i < 1:
            break
        a[i] += 1
        running = max(prefix_max[i], a[i])
        for j in range(i + 1, m):
            a[j] = 0
            prefix_max[j] = running
    return np.asarray(best, dtype=np.int64), float(best_total)


_rgs_search_numba = _njit(_rgs_search_loop)


def rgs_search(table, m, use_numba=None):
    """Lexicographically first restricted growth string minimizing the total cost."""
    if use_numba is None:
        use_numba = USE_NUMBA
    table = np.ascontiguousarray(table, dtype=np.float64)
    if use_numba and _rgs_search_numba is not None:
        labels, total = _rgs_search_numba(table, int(m))
        return np.asarray(labels), float(total)
    return _rgs_search_python(table, int(m))


# --------------------------------------------------------------------------
# Kernel Gram matrices
# --------------------------------------------------------------------------

def _rbf_gram_loop(a, b, gamma):
    n = a.shape[0]
    p = a.shape[1]
    q = b.shape[1]
    out = np.empty((p, q))
    for i in range(p):
        for j in range(q):
            acc = 0.0
            for r in range(n):
                d = a[r, i] - b[r, j]
                acc += d * d
            out[i, j] = np.exp(-gamma * acc)
    return out


_rbf_gram_numba = _njit(_rbf_gram_loop)


def rbf_gram(a, b, gamma, use_numba=None):
    """exp(-gamma * ||a_i - b_j||^2) for columns a_i of ``a`` and b_j of ``b``."""
    if use_numba is None:
        use_numba = USE_NUMBA
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if use_numba and _rbf_gram_numba is not None:
        return _rbf_gram_numba(a, b, float(gamma))
    return np.exp(-gamma * cdist(a.T, b.T, "sqeuclidean"))
