"""Value types, Pareto dominance and bounds handling shared by every module.

Everything here assumes minimization. Populations are stored column-wise as
numpy arrays (one row per member) because every consumer works on whole
matrices; ``Individual`` exists for the few places that pass a single member
around (knee records, CLI dumps).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ContractError(ValueError):
    """Raised when a caller violates a function's preconditions."""


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ContractError("lower and upper must be 1-D arrays of equal length")
        if not np.all(lower < upper):
            raise ContractError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n(self) -> int:
        return self.lower.size

    def uniform(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` points uniformly inside the box."""
        return self.lower + rng.random((size, self.n)) * (self.upper - self.lower)


@dataclass(frozen=True)
class Individual:
    x: np.ndarray
    f: np.ndarray
    t_eval: float


@dataclass
class Population:
    """Members evaluated at (normally) one common time.

    ``source`` tags where each member came from ("pred", "last", "rand",
    "moead", ...). It is carried only for provenance checks in tests and
    dumps; no algorithm branches on it.
    """

    X: np.ndarray
    F: np.ndarray
    t_eval: np.ndarray
    source: np.ndarray = field(default=None)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.F = np.atleast_2d(np.asarray(self.F, dtype=float))
        k = self.X.shape[0]
        if self.F.shape[0] != k:
            raise ContractError("X and F must have the same number of rows")
        self.t_eval = np.broadcast_to(np.asarray(self.t_eval, dtype=float), (k,)).copy()
        if self.source is None:
            self.source = np.full(k, "", dtype=object)
        else:
            self.source = np.broadcast_to(np.asarray(self.source, dtype=object), (k,)).copy()

    @classmethod
    def empty(cls, n: int, m: int) -> Population:
        return cls(np.empty((0, n)), np.empty((0, m)), np.empty(0))

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, idx) -> Population:
        idx = np.atleast_1d(np.arange(len(self))[idx])
        return Population(self.X[idx], self.F[idx], self.t_eval[idx], self.source[idx])

    def member(self, i: int) -> Individual:
        return Individual(self.X[i].copy(), self.F[i].copy(), float(self.t_eval[i]))

    @property
    def common_time(self) -> float:
        """The shared evaluation time; raises if members are stale."""
        if len(self) == 0:
            raise ContractError("empty population has no evaluation time")
        t = self.t_eval[0]
        if not np.all(self.t_eval == t):
            raise ContractError("population members were evaluated at different times")
        return float(t)

    @staticmethod
    def concat(parts: list[Population]) -> Population:
        parts = [p for p in parts if len(p)]
        if not parts:
            raise ContractError("nothing to concatenate")
        return Population(
            np.vstack([p.X for p in parts]),
            np.vstack([p.F for p in parts]),
            np.concatenate([p.t_eval for p in parts]),
            np.concatenate([p.source for p in parts]),
        )


def dominates(a, b) -> bool:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ContractError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_mask(F: np.ndarray) -> np.ndarray:
    """Boolean mask of rows of ``F`` not dominated by any other row.

    Identical rows do not dominate each other, so duplicates survive together.
    """
    F = np.asarray(F, dtype=float)
    k = F.shape[0]
    if F.ndim == 2 and F.shape[1] == 2:
        return _nondominated_mask_2d(F)
    keep = np.ones(k, dtype=bool)
    for i in range(k):
        # rows that dominate F[i]
        le = np.all(F <= F[i], axis=1)
        lt = np.any(F < F[i], axis=1)
        if np.any(le & lt):
            keep[i] = False
    return keep


def _nondominated_mask_2d(F: np.ndarray) -> np.ndarray:
    order = np.lexsort((F[:, 1], F[:, 0]))
    f1 = F[order, 0]
    f2 = F[order, 1]
    keep_sorted = np.zeros(len(order), dtype=bool)
    best_f2 = np.inf  # min f2 over strictly smaller f1
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and f1[j + 1] == f1[i]:
            j += 1
        group_min = f2[i]  # sorted by f2 inside the group
        if group_min < best_f2:
            keep_sorted[i : j + 1] = f2[i : j + 1] == group_min
            best_f2 = group_min
        i = j + 1
    keep = np.zeros(len(order), dtype=bool)
    keep[order] = keep_sorted
    return keep


def pareto_filter(pop: Population) -> Population:
    if len(pop) == 0:
        return pop
    pop.common_time  # stale-fitness guard
    return pop[np.flatnonzero(nondominated_mask(pop.F))]


def clamp(x, b: Bounds) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != b.n:
        raise ContractError(f"vector length {x.shape[-1]} does not match bounds ({b.n})")
    return np.minimum(b.upper, np.maximum(b.lower, x))


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide random source: PCG64 seeded from a 64-bit integer."""
    return np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))


_MASK64 = 0xFFFFFFFFFFFFFFFF


def splitmix64(value: int) -> int:
    """One round of the splitmix64 finalizer, used to derive per-run seeds."""
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def child_rng(rng: np.random.Generator) -> np.random.Generator:
    """Independent generator whose stream is fixed by one draw from ``rng``."""
    return np.random.default_rng(int(rng.integers(0, 2**63)))
