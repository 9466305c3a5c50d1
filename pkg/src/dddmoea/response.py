"""Reactions to an environment change.

Each strategy builds the starting population for the next static run:

* ``ddm``: denoised members guided by trend-predicted knees, part of the
  last front, and some random members.
* ``v1``: as ``ddm`` but knees come from straight-line extrapolation.
* ``v2``: the last front padded with random members.
* ``v3``: the ``ddm`` layout with the denoised slots filled at random.
* ``random``: a fresh random population.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .core import ContractError, Population, child_rng, pareto_filter
from .ddm import SAMPLING, GuidanceConfig, adaptive_psi, denoise_population, kde_prior_density, make_schedule
from .knee import KneeTrack, akp_predict, extract_knee, linear_predict, partition

STRATEGIES = ("ddm", "v1", "v2", "v3", "random")
_ALIASES = {"random_restart": "random"}


def normalize_strategy(kind: str) -> str:
    kind = _ALIASES.get(kind, kind)
    if kind not in STRATEGIES:
        raise ContractError(f"unknown strategy {kind!r}; choose from {', '.join(STRATEGIES)}")
    return kind


@dataclass(frozen=True)
class ResponseConfig:
    N_s: int = 5
    frac_pred: float = 0.4
    frac_last: float = 0.4
    frac_rand: float = 0.2
    K: int = 100
    schedule: str = "cosine"
    prior: str = "knee"
    guidance: GuidanceConfig = GuidanceConfig()
    deterministic_theta: bool = False
    sampling: str = "fixed"

    def __post_init__(self):
        fr = (self.frac_pred, self.frac_last, self.frac_rand)
        if min(fr) < 0 or abs(sum(fr) - 1.0) > 1e-9:
            raise ContractError("composition fractions must be non-negative and sum to 1")
        if self.prior not in ("knee", "kde"):
            raise ContractError(f"unknown prior {self.prior!r}")
        if self.sampling not in SAMPLING:
            raise ContractError(f"unknown sampling set {self.sampling!r}")
        if self.N_s < 1:
            raise ContractError("N_s must be positive")
        make_schedule(self.schedule, self.K)

    def quotas(self, N: int) -> tuple[int, int, int]:
        """Slots for (pred, last, rand); rounding leftovers go to rand."""
        n_pred = int(np.floor(self.frac_pred * N + 1e-9))
        n_last = int(np.floor(self.frac_last * N + 1e-9))
        return n_pred, n_last, N - n_pred - n_last


@dataclass
class History:
    """What a strategy remembers between environments.

    Attributes:
        pos_prev: Final front of the previous environment.
        pos_prev2: Final front of the one before.
        tracks: True-knee history per subspace.
        predicted: Knees predicted for the environment being optimized.
        psi: Guidance width per subspace for the next prediction.
        count: Number of environments recorded so far.
    """

    N_s: int = 5
    psi_min: float = 0.1
    pos_prev: Population | None = None
    pos_prev2: Population | None = None
    tracks: list[KneeTrack] = field(default_factory=list)
    predicted: list = field(default_factory=list)
    psi: np.ndarray = None
    errors: list = field(default_factory=list)
    count: int = 0

    def __post_init__(self):
        if not self.tracks:
            self.tracks = [KneeTrack() for _ in range(self.N_s)]
        if not self.predicted:
            self.predicted = [None] * self.N_s
        if self.psi is None:
            self.psi = np.full(self.N_s, self.psi_min)
        if not self.errors:
            self.errors = [None] * self.N_s


def farthest_point_subset(F: np.ndarray, k: int) -> np.ndarray:
    """Indices of ``k`` rows picked greedily to spread out in objective space.

    Starts from the row with the smallest first objective; ties go to the
    lowest index so the choice is deterministic.
    """
    F = np.asarray(F, dtype=float)
    if k >= F.shape[0]:
        return np.arange(F.shape[0])
    if k <= 0:
        return np.empty(0, dtype=int)
    span = F.max(axis=0) - F.min(axis=0)
    G = F / np.where(span > 0, span, 1.0)
    chosen = [int(np.argmin(F[:, 0]))]
    dist = np.linalg.norm(G - G[chosen[0]], axis=1)
    for _ in range(k - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(G - G[nxt], axis=1))
    return np.asarray(chosen)


def _largest_remainder(total: int, sizes: np.ndarray) -> np.ndarray:
    if total <= 0 or sizes.sum() == 0:
        return np.zeros_like(sizes)
    exact = total * sizes / sizes.sum()
    base = np.floor(exact).astype(int)
    rest = total - base.sum()
    order = np.argsort(-(exact - base), kind="stable")
    base[order[:rest]] += 1
    return base


def _evaluated(problem, X: np.ndarray, t: float, tag: str) -> Population:
    if X.shape[0] == 0:
        return Population.empty(problem.n, problem.m)
    return Population(X, problem.evaluate(X, t), t, tag)


def predict_knees(kind: str, hist: History, problem, rng: np.random.Generator,
                  cfg: ResponseConfig) -> list:
    """Forecast one knee per subspace, or None where nothing can be said.

    A subspace with only one past knee falls back to that knee.
    """
    out = []
    for tr in hist.tracks:
        if tr.x_prev is None:
            out.append(None)
        elif not tr.complete:
            out.append(tr.x_prev.copy())
        elif kind == "v1":
            out.append(linear_predict(tr.x_prev, tr.x_prev2, problem.bounds))
        else:
            out.append(akp_predict(tr, rng, problem.bounds, cfg.deterministic_theta))
    return out


def respond(kind: str, hist: History, problem, t: float, N: int, rng: np.random.Generator,
            cfg: ResponseConfig = ResponseConfig()) -> Population:
    """Starting population for the environment at time ``t``.

    The random part and the pred part draw from separate child streams, so two
    strategies given the same seed share every non-predicted member.
    """
    kind = normalize_strategy(kind)
    rng_rand = child_rng(rng)
    rng_pred = child_rng(rng)
    bounds = problem.bounds
    if kind == "random" or hist.count < 2 or hist.pos_prev is None or len(hist.pos_prev) == 0:
        return _evaluated(problem, bounds.uniform(rng_rand, N), t, "rand")

    prev = hist.pos_prev
    if kind == "v2":
        keep = prev if len(prev) <= N else prev[farthest_point_subset(prev.F, N)]
        last = _evaluated(problem, keep.X, t, "last")
        rand = _evaluated(problem, bounds.uniform(rng_rand, N - len(keep)), t, "rand")
        return Population.concat([last, rand])

    n_pred, n_last, n_rand = cfg.quotas(N)
    keep = prev[farthest_point_subset(prev.F, n_last)]
    n_rand += n_last - len(keep)
    parts = [_evaluated(problem, keep.X, t, "last")]

    pred_X = np.empty((0, problem.n))
    if kind in ("ddm", "v1") and n_pred > 0 and len(prev) >= cfg.N_s:
        pred_X = _denoised(kind, hist, prev, problem, rng_pred, cfg, n_pred)
    if kind == "v3":
        pred_X = bounds.uniform(rng_pred, n_pred)
    n_rand += n_pred - pred_X.shape[0]
    parts.append(_evaluated(problem, pred_X, t, "pred"))
    parts.append(_evaluated(problem, bounds.uniform(rng_rand, n_rand), t, "rand"))
    return Population.concat(parts)


def _denoised(kind, hist: History, prev: Population, problem, rng, cfg: ResponseConfig, n_pred: int) -> np.ndarray:
    knees = predict_knees(kind, hist, problem, rng, cfg)
    hist.predicted = knees
    part = partition(prev, cfg.N_s)
    sizes = np.array([len(part.members(i)) if knees[i] is not None else 0 for i in range(cfg.N_s)])
    quota = _largest_remainder(n_pred, sizes)
    schedule = make_schedule(cfg.schedule, cfg.K)
    out = []
    for i in range(cfg.N_s):
        if quota[i] == 0:
            continue
        S = prev.X[part.members(i)]
        prior = partial(kde_prior_density, data=prev.X) if cfg.prior == "kde" else None
        out.append(denoise_population(S, knees[i], hist.psi[i], schedule, child_rng(rng), problem.bounds,
                                      n_out=int(quota[i]), prior=prior, sampling=cfg.sampling))
    return np.vstack(out) if out else np.empty((0, problem.n))


def record_truth(hist: History, pos_t: Population, cfg: ResponseConfig = ResponseConfig()) -> History:
    """Store the knees of the front just found and update the guidance widths.

    Subspaces that end up empty repeat their last knee, so their trend
    becomes zero; ones never seen stay unknown.
    """
    if len(pos_t) == 0:
        raise ContractError("cannot record an empty front")
    pos_t = pareto_filter(pos_t)
    g = cfg.guidance
    if len(pos_t) >= cfg.N_s:
        part = partition(pos_t, cfg.N_s)
        groups = [part.members(i) for i in range(cfg.N_s)]
    else:
        groups = [np.arange(len(pos_t))] + [np.empty(0, dtype=int)] * (cfg.N_s - 1)
    for i, idx in enumerate(groups):
        tr = hist.tracks[i]
        knee = extract_knee(pos_t[idx]) if len(idx) else None
        pred = hist.predicted[i]
        if knee is None:
            hist.errors[i] = None
            hist.psi[i] = g.psi_min
            if tr.x_prev is not None:
                tr.push(tr.x_prev, tr.f_prev)
            continue
        hist.errors[i] = None if pred is None else float(np.linalg.norm(pred - knee.x))
        hist.psi[i] = adaptive_psi(pred, knee.x, g)
        tr.push(knee.x, knee.f)
    hist.pos_prev2 = hist.pos_prev
    hist.pos_prev = pos_t
    hist.predicted = [None] * cfg.N_s
    hist.count += 1
    return hist


def new_history(cfg: ResponseConfig = ResponseConfig()) -> History:
    return History(N_s=cfg.N_s, psi_min=cfg.guidance.psi_min)
