import math

import numpy as np
import pytest

from dddmoea.core import ContractError, Population, clamp, make_rng, nondominated_mask
from dddmoea.metrics import igd
from dddmoea.moead import optimize
from dddmoea.problems import (
    PROBLEM_IDS,
    TimeContext,
    catalog,
    get_problem,
    reference_front,
    sample_true_pof,
    time_of,
)

TIMES = [0.0, 0.3, 0.9, 1.7, 2.5, 5.8]


def test_catalog_counts():
    probs = catalog()
    assert len(probs) == 14
    assert sum(p.m == 2 for p in probs) == 9
    assert sum(p.m == 3 for p in probs) == 5
    assert all(p.n == 10 for p in probs)
    assert [p.id for p in probs if p.m == 3] == ["DF10", "DF11", "DF12", "DF13", "DF14"]


@pytest.mark.parametrize(
    "n_t, tau_t, tau, expected",
    [(10, 10, 0, 0.0), (10, 10, 95, 0.9), (5, 5, 149, 5.8)],
)
def test_time_of_examples(n_t, tau_t, tau, expected):
    assert time_of(TimeContext(n_t, tau_t, tau)) == expected


def test_time_of_is_a_step_function():
    for n_t, tau_t in [(10, 10), (5, 10), (10, 5), (1, 1), (7, 3)]:
        for tau in range(601):
            k = tau // tau_t
            assert time_of(TimeContext(n_t, tau_t, tau)) == time_of(TimeContext(n_t, tau_t, k * tau_t))
            assert time_of(TimeContext(n_t, tau_t, tau)) == k / n_t


def test_time_of_rejects_bad_context():
    with pytest.raises(ContractError):
        time_of(TimeContext(0, 10, 0))


def test_unknown_problem():
    with pytest.raises(KeyError):
        get_problem("DF15")


def test_dimension_mismatch():
    with pytest.raises(ContractError):
        get_problem("DF1").evaluate(np.zeros(9), 0.0)


@pytest.mark.parametrize("pid", PROBLEM_IDS)
def test_evaluate_is_deterministic_and_batch_consistent(pid):
    p = get_problem(pid)
    X = p.bounds.uniform(make_rng(1), 20)
    F = p.evaluate(X, 0.7)
    assert F.shape == (20, p.m)
    assert np.array_equal(F, p.evaluate(X, 0.7))
    assert np.array_equal(F[3], p.evaluate(X[3], 0.7))


@pytest.mark.parametrize("pid", PROBLEM_IDS)
def test_evaluate_finite_fuzz(pid):
    p = get_problem(pid)
    rng = make_rng(hash(pid) % 2**32)
    X = p.bounds.uniform(rng, 10_000)
    # include the corners, where powers and divisions are most fragile
    X[:2] = [p.bounds.lower, p.bounds.upper]
    t = rng.random(10_000) * 6
    for tv in np.unique(np.round(t, 1)):
        F = p.evaluate(X, tv)
        assert np.all(np.isfinite(F)), (pid, tv)


@pytest.mark.parametrize("pid", PROBLEM_IDS)
@pytest.mark.parametrize("t", TIMES)
def test_optimal_set_maps_onto_front(pid, t):
    p = get_problem(pid)
    side = 12
    g = np.linspace(0, 1, side)
    U = g[:, None] if p.m == 2 else np.column_stack([np.repeat(g, side), np.tile(g, side)])
    X = p.optimal_x(U, t)
    assert np.allclose(p.evaluate(X, t), p.analytic_front(U, t), atol=1e-9)


@pytest.mark.parametrize("pid", [pid for pid in PROBLEM_IDS if pid != "DF4"])
def test_optimal_set_in_bounds(pid):
    p = get_problem(pid)
    U = np.linspace(0, 1, 50)[:, None] if p.m == 2 else np.random.default_rng(0).random((50, 2))
    for t in TIMES:
        X = p.optimal_x(U, t)
        assert np.allclose(clamp(X, p.bounds), X, atol=1e-12)


def test_df4_optimal_set_leaves_the_box_only_when_the_curve_does():
    p = get_problem("DF4")
    for t in TIMES:
        a = math.sin(0.5 * math.pi * t)
        b = 1 + abs(math.cos(0.5 * math.pi * t))
        X = p.optimal_x(np.linspace(0, 1, 50)[:, None], t)
        inside = np.all((X >= p.bounds.lower - 1e-12) & (X <= p.bounds.upper + 1e-12))
        assert inside == (a + b <= 2 + 1e-12)


def test_df1_consistency_with_sampled_front():
    p = get_problem("DF1")
    for t in [0.0, 0.4, 1.3]:
        ref = sample_true_pof(p, t, 1000).points
        u = np.random.default_rng(5).random((30, 1))
        F = p.evaluate(p.optimal_x(u, t), t)
        # DF1's front is f2 = 1 - f1^H, so check the curve itself as well as
        # proximity to the sampled points
        G = abs(math.sin(0.5 * math.pi * t))
        H = 0.75 * math.sin(0.5 * math.pi * t) + 1.25
        assert np.allclose(F[:, 1], 1 - F[:, 0] ** H, atol=1e-9)
        assert np.allclose(F[:, 0], u[:, 0], atol=1e-12)
        assert G == pytest.approx(p.optimal_x(u, t)[0, 1])
        gap = np.min(np.linalg.norm(ref[None] - F[:, None], axis=2), axis=1)
        assert gap.max() < 2e-3  # spacing of the 1000-point sweep


def test_df2_set_moves_while_front_keeps_its_shape():
    p = get_problem("DF2")
    u = np.array([[0.3]])
    x_old = p.optimal_x(u, 0.2)
    f_old, f_new = p.evaluate(x_old, 0.2), p.evaluate(x_old, 0.7)
    assert np.any(f_old != f_new)
    front_a = sample_true_pof(p, 0.2, 200).points
    front_b = sample_true_pof(p, 0.7, 200).points
    assert np.allclose(front_a, front_b)
    # convex: midpoint of two front points lies above the chord's image
    f1 = front_a[:, 0]
    f2 = front_a[:, 1]
    assert np.all(np.diff(f2, 2) >= -1e-12) and np.all(np.diff(f1) > 0)


@pytest.mark.parametrize("pid", PROBLEM_IDS)
def test_reference_fronts_are_nondominated(pid):
    p = get_problem(pid)
    for t in [0.0, 0.5, 1.7]:
        F = sample_true_pof(p, t).points
        assert nondominated_mask(F).all()
        if p.m == 2:
            assert F.shape == (1000, 2)


def test_sample_true_pof_cardinality_and_errors():
    p = get_problem("DF9")
    assert sample_true_pof(p, 0.3, 1000).count == 1000
    assert sample_true_pof(p, 0.3, 2).count == 2
    with pytest.raises(ContractError):
        sample_true_pof(p, 0.3, 1)


def test_reference_front_is_cached_and_read_only():
    p = get_problem("DF10")
    a = reference_front(p, 0.4).points
    b = reference_front(p, 0.4).points
    assert a is b and not a.flags.writeable


@pytest.mark.slow
def test_long_static_run_approaches_df1_front():
    p = get_problem("DF1")
    rng = make_rng(11)
    X = p.bounds.uniform(rng, 100)
    out = optimize(Population(X, p.evaluate(X, 0.0), 0.0), p, 0.0, 300, rng)
    assert igd(sample_true_pof(p, 0.0, 1000), out) < 0.1
