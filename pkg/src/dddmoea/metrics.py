"""IGD, hypervolume, per-run summaries and the rank-sum test."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm, rankdata

from .core import ContractError, nondominated_mask

ALPHA = 0.05
HV_SCALE = 1.1


def _objectives(P) -> np.ndarray:
    F = getattr(P, "F", P)
    F = getattr(F, "points", F)
    return np.atleast_2d(np.asarray(F, dtype=float))


def igd(reference, P) -> float:
    """Mean distance from each reference point to its nearest member of ``P``."""
    R = _objectives(reference)
    F = _objectives(P)
    if F.shape[0] == 0 or F.size == 0:
        raise ContractError("IGD of an empty approximation is undefined")
    if R.shape[0] == 0:
        raise ContractError("empty reference front")
    best = np.full(R.shape[0], np.inf)
    for start in range(0, F.shape[0], 256):
        chunk = F[start : start + 256]
        d = np.sqrt(np.sum((R[:, None, :] - chunk[None, :, :]) ** 2, axis=-1))
        best = np.minimum(best, d.min(axis=1))
    # correctly rounded, so the result does not depend on summation order
    return math.fsum(best.tolist()) / R.shape[0]


def hv_reference(front) -> np.ndarray:
    """Reference point for hypervolume: the front's nadir pushed out by 10%.

    Scaling a zero or negative nadir component would not move it outward, so
    the offset is taken on the magnitude instead.
    """
    nadir = _objectives(front).max(axis=0)
    return nadir + (HV_SCALE - 1.0) * np.abs(nadir)


def _hv2(F: np.ndarray, r: np.ndarray) -> float:
    F = F[np.lexsort((F[:, 1], F[:, 0]))]
    vol, best = 0.0, r[1]
    for f1, f2 in F:
        if f2 < best:
            vol += (r[0] - f1) * (best - f2)
            best = f2
    return vol


def _hv3(F: np.ndarray, r: np.ndarray) -> float:
    F = F[np.argsort(F[:, 2], kind="stable")]
    vol = 0.0
    for i in range(F.shape[0]):
        top = F[i + 1, 2] if i + 1 < F.shape[0] else r[2]
        if top > F[i, 2]:
            vol += _hv2(F[: i + 1, :2], r[:2]) * (top - F[i, 2])
    return vol


def hv(P, r) -> float:
    """Exact hypervolume dominated by ``P`` and bounded by ``r``.

    Members not strictly better than ``r`` in every objective add nothing.
    """
    F = _objectives(P)
    r = np.asarray(r, dtype=float)
    if F.size == 0:
        return 0.0
    if F.shape[1] != r.size:
        raise ContractError("reference point length differs from objective count")
    F = F[np.all(F < r, axis=1)]
    if F.shape[0] == 0:
        return 0.0
    F = F[nondominated_mask(F)]
    if r.size == 2:
        return _hv2(F, r)
    if r.size == 3:
        return _hv3(F, r)
    raise ContractError("hypervolume is implemented for 2 or 3 objectives")


def hv_monte_carlo(P, r, samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Hypervolume estimate and its standard error by uniform sampling.

    Samples fall in the box spanned by the componentwise minimum of ``P`` and
    ``r``, which contains the whole dominated region.
    """
    if samples < 2:
        raise ContractError("need at least two samples")
    F = _objectives(P)
    r = np.asarray(r, dtype=float)
    if F.size == 0:
        return 0.0, 0.0
    F = F[np.all(F < r, axis=1)]
    if F.shape[0] == 0:
        return 0.0, 0.0
    lo = F.min(axis=0)
    box = float(np.prod(r - lo))
    hits = 0
    for start in range(0, samples, 100_000):
        k = min(100_000, samples - start)
        U = lo + rng.random((k, r.size)) * (r - lo)
        dom = np.zeros(k, dtype=bool)
        for f in F:
            dom |= np.all(U >= f, axis=1)
        hits += int(dom.sum())
    p = hits / samples
    return box * p, box * math.sqrt(p * (1.0 - p) / samples)


def summarize(series) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value)."""
    a = np.asarray(series, dtype=float)
    if a.size == 0:
        raise ContractError("cannot summarize an empty series")
    return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0


def wilcoxon_rank_sum(a, b, alpha: float = ALPHA) -> tuple[float, bool, str]:
    """Two-sided rank-sum test of ``a`` against ``b`` for a metric to minimize.

    Uses the normal approximation with tie correction and no continuity
    correction.

    Returns:
        The z statistic, whether it is significant at ``alpha``, and ``"+"``
        when ``a`` is significantly smaller, ``"-"`` when significantly
        larger, ``"="`` otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n1, n2 = a.size, b.size
    if n1 == 0 or n2 == 0:
        raise ContractError("both samples must be non-empty")
    ranks = rankdata(np.concatenate([a, b]))
    U = ranks[:n1].sum() - n1 * (n1 + 1) / 2.0
    n = n1 + n2
    _, counts = np.unique(ranks, return_counts=True)
    tie = np.sum(counts**3 - counts) / (n * (n - 1))
    var = n1 * n2 / 12.0 * ((n + 1) - tie)
    if var <= 0:
        return 0.0, False, "="
    z = (U - n1 * n2 / 2.0) / math.sqrt(var)
    p = 2.0 * norm.sf(abs(z))
    significant = bool(p < alpha)
    if not significant:
        return float(z), False, "="
    return float(z), True, "+" if z < 0 else "-"
