"""The CEC2018 dynamic benchmark suite DF1-DF14 and its time controller.

Formulas follow the competition's technical definition: S. Jiang, S. Yang,
X. Yao, K. C. Tan, M. Kaiser, N. Krasnogor, "Benchmark Problems for CEC2018
Competition on Dynamic Multiobjective Optimisation", 2018. Each problem is
written three times on purpose:

* ``_evaluate``: the objective functions F(x, t);
* ``_pos``: a map from position parameters u in [0, 1]^(m-1) onto the
  Pareto-optimal set at time t;
* ``_front``: the closed-form front for the same u, written without going
  through ``_evaluate``.

Tests compare ``evaluate(pos(u))`` against ``front(u)``, so a typo in one of
the three shows up as a mismatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .core import Bounds, ContractError, nondominated_mask

PI = math.pi


@dataclass(frozen=True)
class TimeContext:
    n_t: int
    tau_t: int
    tau: int = 0

    @property
    def t(self) -> float:
        return time_of(self)


def time_of(ctx: TimeContext) -> float:
    if ctx.n_t < 1 or ctx.tau_t < 1:
        raise ContractError("n_t and tau_t must be positive")
    return (ctx.tau // ctx.tau_t) / ctx.n_t


@dataclass(frozen=True)
class ReferenceFront:
    points: np.ndarray
    t: float

    @property
    def count(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class _Definition:
    m: int
    bounds: Callable[[int], tuple[np.ndarray, np.ndarray]]
    evaluate: Callable[[np.ndarray, float], np.ndarray]
    pos: Callable[[np.ndarray, float, int], np.ndarray]
    front: Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class DmopInstance:
    id: str
    m: int
    n: int
    bounds: Bounds
    _definition: _Definition = field(repr=False, compare=False)

    def evaluate(self, x, t: float) -> np.ndarray:
        """Objective values of one vector (shape (n,)) or a batch (shape (k, n))."""
        X = np.asarray(x, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n:
            raise ContractError(f"{self.id} expects {self.n} variables, got {X.shape[1]}")
        F = self._definition.evaluate(X, float(t))
        return F[0] if single else F

    def optimal_x(self, u, t: float) -> np.ndarray:
        """Pareto-optimal decision vectors for position parameters ``u`` (k, m-1)."""
        U = np.atleast_2d(np.asarray(u, dtype=float))
        return self._definition.pos(U, float(t), self.n)

    def analytic_front(self, u, t: float) -> np.ndarray:
        U = np.atleast_2d(np.asarray(u, dtype=float))
        return self._definition.front(U, float(t))


# -- shared pieces -----------------------------------------------------------


def _box(first: tuple[float, float], rest: tuple[float, float], k: int = 1):
    def bounds(n: int):
        lo = np.full(n, rest[0], dtype=float)
        hi = np.full(n, rest[1], dtype=float)
        lo[:k], hi[:k] = first
        return lo, hi

    return bounds


def _tail_sq(X: np.ndarray, target, start: int) -> np.ndarray:
    return np.sum((X[:, start:] - target) ** 2, axis=1)


def _fill_tail(U: np.ndarray, n: int, head: np.ndarray, target) -> np.ndarray:
    X = np.empty((U.shape[0], n))
    X[:, : head.shape[1]] = head
    X[:, head.shape[1] :] = np.reshape(target, (-1, 1)) if np.ndim(target) else target
    return X


def _sin_half(t: float) -> float:
    return math.sin(0.5 * PI * t)


# -- bi-objective ------------------------------------------------------------


def _df1_eval(X, t):
    v = _sin_half(t)
    G, H = abs(v), 0.75 * v + 1.25
    g = 1 + _tail_sq(X, G, 1)
    f1 = X[:, 0]
    return np.column_stack([f1, g * (1 - (f1 / g) ** H)])


def _df1_pos(U, t, n):
    return _fill_tail(U, n, U[:, :1], abs(_sin_half(t)))


def _df1_front(U, t):
    H = 0.75 * _sin_half(t) + 1.25
    u = U[:, 0]
    return np.column_stack([u, 1 - u**H])


def _df2_r(t: float, n: int) -> int:
    return int(math.floor((n - 1) * abs(_sin_half(t))))


def _df2_eval(X, t):
    G = abs(_sin_half(t))
    r = _df2_r(t, X.shape[1])
    others = np.delete(X, r, axis=1)
    g = 1 + np.sum((others - G) ** 2, axis=1)
    f1 = X[:, r]
    return np.column_stack([f1, g * (1 - np.sqrt(f1 / g))])


def _df2_pos(U, t, n):
    X = np.full((U.shape[0], n), abs(_sin_half(t)))
    X[:, _df2_r(t, n)] = U[:, 0]
    return X


def _df2_front(U, t):
    u = U[:, 0]
    return np.column_stack([u, 1 - np.sqrt(u)])


def _df3_eval(X, t):
    G = _sin_half(t)
    H = G + 1.5
    x1 = X[:, 0]
    g = 1 + np.sum((X[:, 1:] - G - (x1**H)[:, None]) ** 2, axis=1)
    return np.column_stack([x1, g * (1 - (x1 / g) ** H)])


def _df3_pos(U, t, n):
    G = _sin_half(t)
    u = U[:, 0]
    return _fill_tail(U, n, U[:, :1], G + u ** (G + 1.5))


def _df3_front(U, t):
    H = _sin_half(t) + 1.5
    u = U[:, 0]
    return np.column_stack([u, 1 - u**H])


def _df4_params(t):
    a = _sin_half(t)
    b = 1 + abs(math.cos(0.5 * PI * t))
    c = max(abs(a), a + b)
    return a, b, c, 1.5 + a


def _df4_eval(X, t):
    a, b, c, H = _df4_params(t)
    x1 = X[:, 0]
    i = np.arange(2, X.shape[1] + 1)
    target = a * (x1[:, None] / c) ** 2 / i
    g = 1 + np.sum((X[:, 1:] - target) ** 2, axis=1)
    return np.column_stack([g * np.abs(x1 - a) ** H, g * np.abs(x1 - a - b) ** H])


def _df4_pos(U, t, n):
    a, b, c, _ = _df4_params(t)
    # a + b reaches 1 + sqrt(2) > 2, so part of this set lies outside the box;
    # the reference front keeps the full analytic curve, as the suite does
    x1 = a + b * U[:, 0]
    i = np.arange(2, n + 1)
    return np.column_stack([x1, a * (x1[:, None] / c) ** 2 / i])


def _df4_front(U, t):
    _, b, _, H = _df4_params(t)
    u = U[:, 0]
    return np.column_stack([(b * u) ** H, (b * (1 - u)) ** H])


def _df5_eval(X, t):
    G = _sin_half(t)
    w = math.floor(10 * G)
    g = 1 + _tail_sq(X, G, 1)
    x1 = X[:, 0]
    ripple = 0.02 * np.sin(w * PI * x1)
    return np.column_stack([g * (x1 + ripple), g * (1 - x1 + ripple)])


def _df5_pos(U, t, n):
    return _fill_tail(U, n, U[:, :1], _sin_half(t))


def _df5_front(U, t):
    w = math.floor(10 * _sin_half(t))
    u = U[:, 0]
    ripple = 0.02 * np.sin(w * PI * u)
    return np.column_stack([u + ripple, 1 - u + ripple])


def _df6_eval(X, t):
    G = _sin_half(t)
    a = 0.2 + 2.8 * abs(G)
    y = X[:, 1:] - G
    g = 1 + np.sum(abs(G) * y**2 - 10 * np.cos(2 * PI * y) + 10, axis=1)
    x1 = X[:, 0]
    ripple = 0.1 * np.sin(3 * PI * x1)
    # both bases are non-negative on [0, 1]; the clip only absorbs rounding
    return np.column_stack([
        g * np.maximum(x1 + ripple, 0) ** a,
        g * np.maximum(1 - x1 + ripple, 0) ** a,
    ])


def _df6_pos(U, t, n):
    return _fill_tail(U, n, U[:, :1], _sin_half(t))


def _df6_front(U, t):
    a = 0.2 + 2.8 * abs(_sin_half(t))
    u = U[:, 0]
    ripple = 0.1 * np.sin(3 * PI * u)
    return np.column_stack([np.maximum(u + ripple, 0) ** a, np.maximum(1 - u + ripple, 0) ** a])


def _df7_target(x1, t):
    a = 5 * math.cos(0.5 * PI * t)
    return 1 / (1 + np.exp(a * (x1 - 2.5)))


def _df7_eval(X, t):
    x1 = X[:, 0]
    g = 1 + np.sum((X[:, 1:] - _df7_target(x1, t)[:, None]) ** 2, axis=1)
    return np.column_stack([g * (1 + t) / x1, g * x1 / (1 + t)])


def _df7_pos(U, t, n):
    x1 = 1 + 3 * U[:, 0]
    return np.column_stack([x1, np.repeat(_df7_target(x1, t)[:, None], n - 1, axis=1)])


def _df7_front(U, t):
    x1 = 1 + 3 * U[:, 0]
    return np.column_stack([(1 + t) / x1, x1 / (1 + t)])


def _df8_params(t):
    G = _sin_half(t)
    return G, 2.25 + 2 * math.cos(2 * PI * t), 100 * G**2


def _df8_target(x1, t):
    G, _, b = _df8_params(t)
    return G * np.sin(4 * PI * x1**b) / (1 + abs(G))


def _df8_eval(X, t):
    _, a, _ = _df8_params(t)
    x1 = X[:, 0]
    g = 1 + np.sum((X[:, 1:] - _df8_target(x1, t)[:, None]) ** 2, axis=1)
    ripple = 0.1 * np.sin(3 * PI * x1)
    return np.column_stack([g * (x1 + ripple), g * np.maximum(1 - x1 + ripple, 0) ** a])


def _df8_pos(U, t, n):
    x1 = U[:, 0]
    return np.column_stack([x1, np.repeat(_df8_target(x1, t)[:, None], n - 1, axis=1)])


def _df8_front(U, t):
    _, a, _ = _df8_params(t)
    u = U[:, 0]
    ripple = 0.1 * np.sin(3 * PI * u)
    return np.column_stack([u + ripple, np.maximum(1 - u + ripple, 0) ** a])


def _df9_segments(t):
    return 1 + math.floor(10 * abs(_sin_half(t)))


def _df9_eval(X, t):
    N = _df9_segments(t)
    x1 = X[:, 0]
    target = np.cos(4 * t + x1[:, None] + X[:, :-1])
    g = 1 + np.sum((X[:, 1:] - target) ** 2, axis=1)
    bump = np.maximum(0, (0.5 / N + 0.1) * np.sin(2 * N * PI * x1))
    return np.column_stack([g * (x1 + bump), g * (1 - x1 + bump)])


def _df9_pos(U, t, n):
    X = np.empty((U.shape[0], n))
    X[:, 0] = U[:, 0]
    for i in range(1, n):
        X[:, i] = np.cos(4 * t + X[:, 0] + X[:, i - 1])
    return X


def _df9_front(U, t):
    N = _df9_segments(t)
    u = U[:, 0]
    bump = np.maximum(0, (0.5 / N + 0.1) * np.sin(2 * N * PI * u))
    return np.column_stack([u + bump, 1 - u + bump])


# -- tri-objective -----------------------------------------------------------


def _sphere(x1, x2, H=1.0):
    """(sin a, sin b cos a, cos b cos a) ** H with a = x1*pi/2, b = x2*pi/2."""
    c1, s1 = np.cos(0.5 * PI * x1), np.sin(0.5 * PI * x1)
    c2, s2 = np.cos(0.5 * PI * x2), np.sin(0.5 * PI * x2)
    return np.column_stack([s1**H, (s2 * c1) ** H, (c2 * c1) ** H])


def _df10_target(X2, t):
    G = _sin_half(t)
    return np.sin(2 * PI * (X2[:, 0] + X2[:, 1])) / (1 + abs(G))


def _df10_H(t):
    return 2.25 + 2 * math.cos(0.5 * PI * t)


def _df10_eval(X, t):
    g = 1 + np.sum((X[:, 2:] - _df10_target(X, t)[:, None]) ** 2, axis=1)
    return g[:, None] * _sphere(X[:, 0], X[:, 1], _df10_H(t))


def _df10_pos(U, t, n):
    return np.column_stack([U[:, :2], np.repeat(_df10_target(U, t)[:, None], n - 2, axis=1)])


def _df10_front(U, t):
    # points of sum(f_i ** (2/H)) = 1, parameterized by a pair of angles
    H = _df10_H(t)
    a, b = 0.5 * PI * U[:, 0], 0.5 * PI * U[:, 1]
    return np.column_stack([np.sin(a) ** H, (np.cos(a) * np.sin(b)) ** H, (np.cos(a) * np.cos(b)) ** H])


def _df11_eval(X, t):
    G = abs(_sin_half(t))
    g = 1 + G + np.sum((X[:, 2:] - 0.5 * G * X[:, [0]]) ** 2, axis=1)
    y1 = PI / 6 * G + (PI / 2 - PI / 3 * G) * X[:, 0]
    y2 = PI / 6 * G + (PI / 2 - PI / 3 * G) * X[:, 1]
    return g[:, None] * np.column_stack([np.sin(y1), np.sin(y2) * np.cos(y1), np.cos(y2) * np.cos(y1)])


def _df11_pos(U, t, n):
    G = abs(_sin_half(t))
    return np.column_stack([U[:, :2], np.repeat(0.5 * G * U[:, [0]], n - 2, axis=1)])


def _df11_front(U, t):
    G = abs(_sin_half(t))
    lo, span = PI / 6 * G, PI / 2 - PI / 3 * G
    y1, y2 = lo + span * U[:, 0], lo + span * U[:, 1]
    r = 1 + G
    return r * np.column_stack([np.sin(y1), np.cos(y1) * np.sin(y2), np.cos(y1) * np.cos(y2)])


def _df12_holes(X2, t):
    k = 10 * math.sin(PI * t)
    return np.abs(
        np.sin(np.floor(k * (2 * X2[:, 0] - 1)) * PI / 2) * np.sin(np.floor(k * (2 * X2[:, 1] - 1)) * PI / 2)
    )


def _df12_eval(X, t):
    target = np.sin(t * X[:, [0]])
    g = 1 + np.sum((X[:, 2:] - target) ** 2, axis=1) + _df12_holes(X, t)
    c1, s1 = np.cos(0.5 * PI * X[:, 0]), np.sin(0.5 * PI * X[:, 0])
    c2, s2 = np.cos(0.5 * PI * X[:, 1]), np.sin(0.5 * PI * X[:, 1])
    return g[:, None] * np.column_stack([c2 * c1, s2 * c1, s1])


def _df12_pos(U, t, n):
    return np.column_stack([U[:, :2], np.repeat(np.sin(t * U[:, [0]]), n - 2, axis=1)])


def _df12_front(U, t):
    g = 1 + _df12_holes(U, t)
    a, b = 0.5 * PI * U[:, 0], 0.5 * PI * U[:, 1]
    return g[:, None] * np.column_stack([np.cos(a) * np.cos(b), np.cos(a) * np.sin(b), np.sin(a)])


def _df13_shape(x1, x2, t):
    p = math.floor(6 * _sin_half(t))
    s1, s2 = np.sin(0.5 * PI * x1), np.sin(0.5 * PI * x2)
    return np.column_stack([
        np.cos(0.5 * PI * x1) ** 2,
        np.cos(0.5 * PI * x2) ** 2,
        s1**2 + s1 * np.cos(p * PI * x1) ** 2 + s2**2 + s2 * np.cos(p * PI * x2) ** 2,
    ])


def _df13_eval(X, t):
    g = 1 + _tail_sq(X, _sin_half(t), 2)
    return g[:, None] * _df13_shape(X[:, 0], X[:, 1], t)


def _df13_pos(U, t, n):
    return _fill_tail(U, n, U[:, :2], _sin_half(t))


def _df13_front(U, t):
    p = math.floor(6 * _sin_half(t))
    a, b = 0.5 * PI * U[:, 0], 0.5 * PI * U[:, 1]
    f3 = (
        np.sin(a) ** 2 + np.sin(a) * np.cos(p * PI * U[:, 0]) ** 2
        + np.sin(b) ** 2 + np.sin(b) * np.cos(p * PI * U[:, 1]) ** 2
    )
    return np.column_stack([np.cos(a) ** 2, np.cos(b) ** 2, f3])


def _df14_eval(X, t):
    G = _sin_half(t)
    g = 1 + _tail_sq(X, G, 2)
    y = 0.5 + G * (X[:, 0] - 0.5)
    x2 = X[:, 1]
    wy = y + 0.05 * np.sin(6 * PI * y)
    return g[:, None] * np.column_stack([
        1 - y + 0.05 * np.sin(6 * PI * y),
        (1 - x2 + 0.05 * np.sin(6 * PI * x2)) * wy,
        (x2 + 0.05 * np.sin(6 * PI * x2)) * wy,
    ])


def _df14_pos(U, t, n):
    return _fill_tail(U, n, U[:, :2], _sin_half(t))


def _df14_front(U, t):
    G = _sin_half(t)
    y = 0.5 + G * (U[:, 0] - 0.5)
    s = 0.05 * np.sin(6 * PI * y)
    r = 0.05 * np.sin(6 * PI * U[:, 1])
    return np.column_stack([1 - y + s, (y + s) * (1 - U[:, 1] + r), (y + s) * (U[:, 1] + r)])


_UNIT = (0.0, 1.0)
_SYM = (-1.0, 1.0)

_DEFINITIONS: dict[str, _Definition] = {
    "DF1": _Definition(2, _box(_UNIT, _UNIT), _df1_eval, _df1_pos, _df1_front),
    "DF2": _Definition(2, _box(_UNIT, _UNIT), _df2_eval, _df2_pos, _df2_front),
    "DF3": _Definition(2, _box(_UNIT, (-1.0, 2.0)), _df3_eval, _df3_pos, _df3_front),
    "DF4": _Definition(2, _box((-2.0, 2.0), (-2.0, 2.0)), _df4_eval, _df4_pos, _df4_front),
    "DF5": _Definition(2, _box(_UNIT, _SYM), _df5_eval, _df5_pos, _df5_front),
    "DF6": _Definition(2, _box(_UNIT, _SYM), _df6_eval, _df6_pos, _df6_front),
    "DF7": _Definition(2, _box((1.0, 4.0), _UNIT), _df7_eval, _df7_pos, _df7_front),
    "DF8": _Definition(2, _box(_UNIT, _SYM), _df8_eval, _df8_pos, _df8_front),
    "DF9": _Definition(2, _box(_UNIT, _SYM), _df9_eval, _df9_pos, _df9_front),
    "DF10": _Definition(3, _box(_UNIT, _SYM, 2), _df10_eval, _df10_pos, _df10_front),
    "DF11": _Definition(3, _box(_UNIT, _UNIT, 2), _df11_eval, _df11_pos, _df11_front),
    "DF12": _Definition(3, _box(_UNIT, _SYM, 2), _df12_eval, _df12_pos, _df12_front),
    "DF13": _Definition(3, _box(_UNIT, _SYM, 2), _df13_eval, _df13_pos, _df13_front),
    "DF14": _Definition(3, _box(_UNIT, _SYM, 2), _df14_eval, _df14_pos, _df14_front),
}

PROBLEM_IDS = tuple(_DEFINITIONS)


def get_problem(problem_id: str, n: int = 10) -> DmopInstance:
    key = problem_id.upper()
    if key not in _DEFINITIONS:
        raise KeyError(f"unknown problem {problem_id!r}; expected one of {', '.join(PROBLEM_IDS)}")
    d = _DEFINITIONS[key]
    if n < d.m + 1:
        raise ContractError(f"{key} needs at least {d.m + 1} decision variables")
    lo, hi = d.bounds(n)
    return DmopInstance(key, d.m, n, Bounds(lo, hi), d)


def catalog(n: int = 10) -> list[DmopInstance]:
    return [get_problem(pid, n) for pid in PROBLEM_IDS]


def default_front_size(m: int) -> int:
    return 1000 if m == 2 else 1035


def _thin(F: np.ndarray, count: int) -> np.ndarray:
    idx = np.linspace(0, F.shape[0] - 1, count).round().astype(int)
    return F[idx]


def sample_true_pof(p: DmopInstance, t: float, count: int | None = None) -> ReferenceFront:
    """Points on the analytic Pareto front of ``p`` at time ``t``.

    Bi-objective fronts return exactly ``count`` points: a uniform sweep of the
    position variable, re-swept densely and thinned when parts of the sweep are
    dominated (disconnected fronts such as DF9). Tri-objective fronts use a
    square grid over the two position variables with at least ``count`` nodes,
    keeping only mutually non-dominated, distinct points.
    """
    if count is None:
        count = default_front_size(p.m)
    if count < 2:
        raise ContractError("count must be at least 2")
    if p.m == 2:
        F = p.analytic_front(np.linspace(0, 1, count)[:, None], t)
        keep = nondominated_mask(F)
        if keep.all():
            return ReferenceFront(F, t)
        dense = max(50 * count, 20001)
        F = p.analytic_front(np.linspace(0, 1, dense)[:, None], t)
        F = F[nondominated_mask(F)]
        return ReferenceFront(_thin(F, count), t)
    side = math.isqrt(count - 1) + 1
    g = np.linspace(0, 1, side)
    U = np.column_stack([np.repeat(g, side), np.tile(g, side)])
    F = p.analytic_front(U, t)
    _, first = np.unique(np.round(F, 12), axis=0, return_index=True)
    F = F[np.sort(first)]
    return ReferenceFront(F[nondominated_mask(F)], t)


@lru_cache(maxsize=512)
def _cached_front(problem_id: str, n: int, t: float, count: int) -> np.ndarray:
    pts = sample_true_pof(get_problem(problem_id, n), t, count).points
    pts.setflags(write=False)
    return pts


def reference_front(p: DmopInstance, t: float, count: int | None = None) -> ReferenceFront:
    """Memoized ``sample_true_pof``; the runner asks for the same fronts every run."""
    count = count or default_front_size(p.m)
    return ReferenceFront(_cached_front(p.id, p.n, float(t), count), t)
