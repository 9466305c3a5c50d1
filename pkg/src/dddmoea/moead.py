"""MOEA/D with Tchebycheff decomposition, the static optimizer run between changes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import Bounds, ContractError, Population, pareto_filter

ZERO_WEIGHT = 1e-6


@dataclass(frozen=True)
class MoeadConfig:
    T: int = 20
    nr: int = 2
    delta: float = 0.9
    eta_c: float = 20.0
    eta_m: float = 20.0
    pc: float = 1.0
    pm: float | None = None  # None means 1/n

    def mutation_rate(self, n: int) -> float:
        return 1.0 / n if self.pm is None else self.pm


@dataclass(frozen=True)
class WeightSet:
    vectors: np.ndarray
    neighbors: np.ndarray

    @property
    def T(self) -> int:
        return self.neighbors.shape[1]


def _lattice(H: int, m: int) -> np.ndarray:
    # stars and bars: every composition of H into m non-negative parts
    rows = []
    for bars in combinations(range(H + m - 1), m - 1):
        parts, prev = [], -1
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(H + m - 2 - prev)
        rows.append(parts)
    return np.asarray(rows, dtype=float) / H


def weight_vectors(N: int, m: int, T: int = 20) -> WeightSet:
    """Simplex-lattice weights, padded with random simplex points up to ``N``.

    The padding uses a fixed internal seed so that the weight set, like the
    lattice, depends only on (N, m).
    """
    if m < 2 or N < m:
        raise ContractError("need m >= 2 and N >= m")
    H = 1
    while math.comb(H + 1 + m - 1, m - 1) <= N:
        H += 1
    W = _lattice(H, m)
    if W.shape[0] < N:
        pad = np.random.default_rng(0).dirichlet(np.ones(m), N - W.shape[0])
        W = np.vstack([W, pad])
    T = min(T, N)
    d = np.linalg.norm(W[:, None, :] - W[None, :, :], axis=2)
    neighbors = np.argsort(d, axis=1, kind="stable")[:, :T]
    return WeightSet(W, neighbors)


def tchebycheff(f, w, z) -> float | np.ndarray:
    """max_j w_j |f_j - z_j|; works row-wise when ``f`` or ``w`` is a matrix."""
    f = np.asarray(f, dtype=float)
    w = np.asarray(w, dtype=float)
    w = np.where(w == 0, ZERO_WEIGHT, w)
    return np.max(w * np.abs(f - np.asarray(z, dtype=float)), axis=-1)


def sbx_crossover(a, b, rng: np.random.Generator, bounds: Bounds, eta_c: float = 20.0, p_c: float = 1.0):
    """One simulated-binary-crossover child of ``a`` and ``b``.

    Bounded SBX (Deb and Agrawal): each gene is crossed with probability 0.5,
    both children are built, and one of them is returned at random, so the
    child distribution is symmetric about the parents' midpoint.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ContractError("parents differ in length")
    if p_c <= 0 or rng.random() >= p_c:
        return a.copy()
    lo, hi = bounds.lower, bounds.upper
    n = a.size
    u = rng.random(n)
    swap = rng.random(n) < 0.5
    gene = rng.random(n) <= 0.5
    first = rng.random() < 0.5
    child = (a if first else b).copy()
    y1 = np.minimum(a, b)
    y2 = np.maximum(a, b)
    diff = y2 - y1
    active = gene & (diff > 1e-14)
    if np.any(active):
        y1, y2, d = y1[active], y2[active], diff[active]
        l, h, r = lo[active], hi[active], u[active]
        e1 = eta_c + 1.0

        def spread(beta):
            alpha = 2.0 - beta ** (-e1)
            return np.where(
                r <= 1.0 / alpha,
                (r * alpha) ** (1.0 / e1),
                (1.0 / np.maximum(2.0 - r * alpha, 1e-300)) ** (1.0 / e1),
            )

        c1 = 0.5 * ((y1 + y2) - spread(1.0 + 2.0 * (y1 - l) / d) * d)
        c2 = 0.5 * ((y1 + y2) + spread(1.0 + 2.0 * (h - y2) / d) * d)
        s = swap[active] ^ (not first)
        child[active] = np.where(s, c2, c1)
    return np.clip(child, lo, hi)


def poly_mutation(x, rng: np.random.Generator, bounds: Bounds, eta_m: float = 20.0, p_m: float | None = None):
    """Bounded polynomial mutation, each gene mutated with probability ``p_m``."""
    x = np.asarray(x, dtype=float)
    p_m = 1.0 / x.size if p_m is None else p_m
    y = x.copy()
    if p_m <= 0:
        return y
    lo, hi = bounds.lower, bounds.upper
    mask = rng.random(x.size) < p_m
    u = rng.random(x.size)
    if not np.any(mask):
        return y
    span = hi - lo
    d1 = (x - lo) / span
    d2 = (hi - x) / span
    p = 1.0 / (eta_m + 1.0)
    left = u < 0.5
    with np.errstate(over="ignore", under="ignore"):
        xy = 1.0 - np.where(left, d1, d2)
        val_l = 2.0 * u + (1.0 - 2.0 * u) * xy ** (eta_m + 1.0)
        val_r = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy ** (eta_m + 1.0)
        delta = np.where(left, val_l**p - 1.0, 1.0 - val_r**p)
    y[mask] = x[mask] + delta[mask] * span[mask]
    return np.clip(y, lo, hi)


def assign_to_subproblems(pop: Population, weights: WeightSet, z: np.ndarray) -> Population:
    """Cut an over-full pool down to one member per subproblem.

    Each weight vector takes the pool member with the lowest Tchebycheff value
    for it; one member may serve several subproblems.
    """
    N = weights.vectors.shape[0]
    if len(pop) == N:
        return pop
    if len(pop) < N:
        raise ContractError(f"initial pool has {len(pop)} members, need at least {N}")
    w = np.where(weights.vectors == 0, ZERO_WEIGHT, weights.vectors)
    scores = np.max(w[:, None, :] * np.abs(pop.F[None, :, :] - z), axis=2)
    return pop[np.argmin(scores, axis=1)]


class MoeadRun:
    """State of one MOEA/D optimization at a fixed time ``t``.

    Kept as an object so tests can step generation by generation and inspect
    the ideal point and the replacement counts.
    """

    def __init__(self, init: Population, problem, t: float, rng: np.random.Generator,
                 config: MoeadConfig = MoeadConfig(), weights: WeightSet | None = None):
        N = len(init)
        self.problem = problem
        self.t = t
        self.rng = rng
        self.config = config
        self.weights = weights or weight_vectors(N, problem.m, config.T)
        N = self.weights.vectors.shape[0]
        if np.any(init.t_eval != t):
            raise ContractError("initial population must be evaluated at the optimization time")
        self.z = init.F.min(axis=0)
        pop = assign_to_subproblems(init, self.weights, self.z)
        self.X = pop.X.copy()
        self.F = pop.F.copy()
        self.source = pop.source.copy()
        self.N = N
        self.last_replacements: list[int] = []

    def generation(self) -> None:
        cfg, rng, W, B = self.config, self.rng, self.weights.vectors, self.weights.neighbors
        W = np.where(W == 0, ZERO_WEIGHT, W)
        bounds = self.problem.bounds
        pm = cfg.mutation_rate(self.problem.n)
        everyone = np.arange(self.N)
        self.last_replacements = []
        for i in rng.permutation(self.N):
            pool = B[i] if rng.random() < cfg.delta else everyone
            a = rng.integers(len(pool))
            b = rng.integers(len(pool) - 1)
            k, l = pool[a], pool[b + (b >= a)]
            child = sbx_crossover(self.X[k], self.X[l], rng, bounds, cfg.eta_c, cfg.pc)
            child = poly_mutation(child, rng, bounds, cfg.eta_m, pm)
            fc = self.problem.evaluate(child, self.t)
            self.z = np.minimum(self.z, fc)
            # every neighbour is visited at most once and z is fixed here, so
            # comparing against all of them up front matches the sequential rule
            order = rng.permutation(pool)
            w = W[order]
            g_child = np.max(w * np.abs(fc - self.z), axis=1)
            g_old = np.max(w * np.abs(self.F[order] - self.z), axis=1)
            hits = order[g_child <= g_old][: cfg.nr]
            self.X[hits] = child
            self.F[hits] = fc
            self.source[hits] = "moead"
            self.last_replacements.append(len(hits))

    def population(self) -> Population:
        return Population(self.X.copy(), self.F.copy(), self.t, self.source.copy())


def optimize(init: Population, problem, t: float, generations: int, rng: np.random.Generator,
             config: MoeadConfig = MoeadConfig(), weights: WeightSet | None = None) -> Population:
    """Run MOEA/D for ``generations`` and return the non-dominated final members."""
    if generations < 1:
        raise ContractError("generations must be at least 1")
    run = MoeadRun(init, problem, t, rng, config, weights)
    for _ in range(generations):
        run.generation()
    return pareto_filter(run.population())
