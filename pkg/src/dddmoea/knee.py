"""Subspace partitioning, knee extraction and knee-trend prediction.

Knees are found in objective space but tracked in decision space: the
movement of a subspace's knee between two environments is turned into polar
form, perturbed by a random deflection, and projected one step ahead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Bounds, ContractError, Population, clamp


@dataclass(frozen=True)
class SubspacePartition:
    """Equal-width slices of the range of f1.

    Attributes:
        lower: Lower edge of each slice.
        upper: Upper edge of each slice.
        width: Common slice width.
        assignment: Slice index of every member of the partitioned population.
        degenerate: True when the whole population shares one f1 value.
    """

    lower: np.ndarray
    upper: np.ndarray
    width: float
    assignment: np.ndarray
    degenerate: bool = False

    @property
    def N_s(self) -> int:
        return self.lower.size

    def members(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == i)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.N_s)


def partition(pop: Population, N_s: int, axis: int = 0) -> SubspacePartition:
    """Split the range of objective ``axis`` into ``N_s`` equal slices.

    Members sitting exactly on an interior edge belong to the upper slice;
    the maximum itself closes the last slice.
    """
    if N_s < 1:
        raise ContractError("N_s must be positive")
    if len(pop) < N_s:
        raise ContractError(f"need at least {N_s} members to partition, got {len(pop)}")
    pop.common_time
    f = pop.F[:, axis]
    lo, hi = float(f.min()), float(f.max())
    if hi == lo:
        edges = np.full(N_s + 1, lo)
        return SubspacePartition(edges[:-1], edges[1:], 0.0, np.zeros(len(pop), dtype=int), True)
    width = (hi - lo) / N_s
    edges = lo + width * np.arange(N_s + 1)
    edges[-1] = hi
    assignment = np.searchsorted(edges[1:-1], f, side="right")
    return SubspacePartition(edges[:-1], edges[1:], width, assignment)


def knee_index(F: np.ndarray) -> int:
    """Row of ``F`` farthest beyond the hyperplane through the extreme members.

    The extremes are the members minimizing each objective. Distance is
    signed so that points bulging toward the ideal point count as positive.
    Ties go to the lowest index.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    k, m = F.shape
    if k == 0:
        raise ContractError("no members to pick a knee from")
    if k == 1:
        return 0
    E = F[np.argmin(F, axis=0)]
    normal = None
    D = E[1:] - E[0]
    if np.linalg.matrix_rank(D) == m - 1:
        _, _, vt = np.linalg.svd(D)
        normal = vt[-1]
        if normal.sum() < 0:
            normal = -normal
        if np.any(normal < -1e-12):
            normal = None  # extremes do not span a usable plane
    if normal is None:
        normal = np.ones(m) / np.sqrt(m)
    dist = (E[0] - F) @ normal
    # distances equal up to rounding count as ties
    tol = 1e-12 * max(1.0, float(np.max(np.abs(F))))
    return int(np.flatnonzero(dist >= dist.max() - tol)[0])


def extract_knee(pop: Population):
    """The knee member of ``pop``, or None for an empty subspace."""
    if len(pop) == 0:
        return None
    pop.common_time
    return pop.member(knee_index(pop.F))


@dataclass(frozen=True)
class Polar:
    v: np.ndarray
    r: float
    beta: np.ndarray
    zero: bool


def direction_polar(knee_prev, knee_prev2) -> Polar:
    """Movement vector between two knees in hyperspherical coordinates.

    The last angle is the signed ``atan2(v_n, v_{n-1})`` so that vectors with
    a negative final component survive the round trip; every earlier angle
    lies in [0, pi].
    """
    a = np.asarray(knee_prev, dtype=float)
    b = np.asarray(knee_prev2, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ContractError("knees must be equal-length vectors with n >= 2")
    v = a - b
    r = float(np.linalg.norm(v))
    n = v.size
    if r == 0.0:
        return Polar(v, 0.0, np.zeros(n - 1), True)
    tail = np.sqrt(np.cumsum((v**2)[::-1])[::-1])  # tail[j] = ||v[j:]||
    beta = np.arctan2(tail[1:], v[:-1])
    beta[-1] = np.arctan2(v[-1], v[-2])
    return Polar(v, r, beta, False)


def direction_components(beta, theta) -> np.ndarray:
    """Unit vector with hyperspherical angles ``beta + theta``."""
    ang = np.asarray(beta, dtype=float) + np.asarray(theta, dtype=float)
    s = np.concatenate([[1.0], np.cumprod(np.sin(ang))])
    c = np.concatenate([np.cos(ang), [1.0]])
    return s * c


def sample_deflection(r: float, rng: np.random.Generator, size=None):
    """Draw from the density proportional to exp(-|theta|/r) on [-pi, pi].

    The magnitude comes from the inverse CDF of the truncated exponential and
    the sign is a fair coin, so zero is always the most likely deflection.
    """
    if r < 0:
        raise ContractError("r must be non-negative")
    if r == 0:
        return 0.0 if size is None else np.zeros(size)
    u = rng.random(size)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    mag = -r * np.log1p(-u * -np.expm1(-np.pi / r))
    out = sign * np.minimum(mag, np.pi)
    return float(out) if size is None else out


def expected_abs_deflection(r: float) -> float:
    """Mean of |theta| under :func:`sample_deflection`."""
    q = np.exp(-np.pi / r)
    return r - np.pi * q / (1.0 - q)


@dataclass
class KneeTrack:
    """Knee history of one subspace. Entries are None until observed."""

    x_prev: np.ndarray | None = None
    f_prev: np.ndarray | None = None
    x_prev2: np.ndarray | None = None
    f_prev2: np.ndarray | None = None

    @property
    def complete(self) -> bool:
        return self.x_prev is not None and self.x_prev2 is not None

    def push(self, x, f) -> None:
        self.x_prev2, self.f_prev2 = self.x_prev, self.f_prev
        self.x_prev = np.asarray(x, dtype=float).copy()
        self.f_prev = np.asarray(f, dtype=float).copy()


class MissingHistory(ContractError):
    """Raised when a prediction needs two past knees and fewer exist."""


def akp_raw(track: KneeTrack, rng: np.random.Generator | None, deterministic: bool = False) -> np.ndarray:
    """Unclamped trend prediction ``knee_prev + r * Theta``."""
    if not track.complete:
        raise MissingHistory("knee prediction needs two past knees")
    pol = direction_polar(track.x_prev, track.x_prev2)
    if pol.zero:
        return track.x_prev.copy()
    if deterministic:
        theta = np.zeros_like(pol.beta)
    else:
        theta = sample_deflection(pol.r, rng, size=pol.beta.size)
    return track.x_prev + pol.r * direction_components(pol.beta, theta)


def akp_predict(track: KneeTrack, rng: np.random.Generator | None, bounds: Bounds,
                deterministic: bool = False) -> np.ndarray:
    """Trend-model knee forecast, clamped to ``bounds``."""
    return clamp(akp_raw(track, rng, deterministic), bounds)


def linear_predict(knee_prev, knee_prev2, bounds: Bounds | None = None) -> np.ndarray:
    """Straight-line extrapolation ``2 * knee_prev - knee_prev2``."""
    out = 2.0 * np.asarray(knee_prev, dtype=float) - np.asarray(knee_prev2, dtype=float)
    return out if bounds is None else clamp(out, bounds)
