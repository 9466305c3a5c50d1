import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_posterior

from dddmoea.core import Bounds, ContractError, make_rng
from dddmoea.ddm import (
    GuidanceConfig,
    adaptive_psi,
    cosine_schedule,
    ddim_sigma,
    denoise_population,
    denoise_step,
    implied_noise,
    kde_prior_density,
    knee_prior_density,
    linear_schedule,
    posterior_x0,
    silverman_bandwidth,
)

def test_cosine_schedule_examples():
    sch = cosine_schedule(100)
    assert sch.alpha[0] == 1.0 and sch.alpha[100] == 0.0
    assert sch.alpha[50] == pytest.approx(0.5, abs=1e-15)
    k = np.arange(101)
    assert np.allclose(sch.alpha, 0.5 * (np.cos(k * np.pi / 100) + 1), atol=1e-12)


@pytest.mark.parametrize("K", [2, 3, 10, 100, 400])
def test_schedule_invariants(K):
    for sch in (cosine_schedule(K), linear_schedule(K)):
        a = sch.alpha
        assert a[0] == 1.0 and a[-1] == 0.0
        assert np.all(np.diff(a) < 0)
        for k in range(2, K + 1):
            s = ddim_sigma(a[k - 1], a[k])
            assert s >= 0 and 1 - a[k - 1] - s * s >= -1e-15


def test_schedule_rejects_short_chains():
    with pytest.raises(ContractError):
        cosine_schedule(1)


def test_ddim_sigma_examples():
    assert ddim_sigma(0.6, 0.6) == 0.0
    assert ddim_sigma(1.0, 0.3) == 0.0
    assert ddim_sigma(0.75, 0.5) == pytest.approx(math.sqrt(0.5 / 3), abs=1e-12)
    assert ddim_sigma(0.75, 0.5) == pytest.approx(0.40825, abs=1e-5)
    with pytest.raises(ContractError):
        ddim_sigma(0.0, 0.0)


def test_ddim_radicand_identity():
    # 1 - a' - s^2 equals (1 - a')^2 a / ((1 - a) a'), hence never negative
    rng = np.random.default_rng(0)
    for _ in range(200):
        ap = rng.uniform(0.01, 1)
        a = rng.uniform(0, ap * 0.999)
        s = ddim_sigma(ap, a)
        assert 1 - ap - s * s == pytest.approx((1 - ap) ** 2 * a / ((1 - a) * ap), abs=1e-12)


def test_knee_prior_examples():
    knee = np.array([0.1, 0.2, 0.3])
    assert knee_prior_density(knee, knee, 0.4) == pytest.approx(-1.5 * math.log(2 * math.pi * 0.16))
    assert knee_prior_density([1.0], [0.0], 1.0) == pytest.approx(-1.41894, abs=1e-5)
    radii = np.sort(np.random.default_rng(1).uniform(0, 3, 100))
    vals = [knee_prior_density(knee + r * np.array([1.0, 0, 0]), knee, 0.3) for r in radii]
    assert np.all(np.diff(vals) < 0)


def test_kde_prior_matches_direct_sum():
    rng = np.random.default_rng(2)
    data = rng.random((15, 3))
    x = rng.random(3)
    h = silverman_bandwidth(data)
    direct = np.mean([np.exp(-np.sum((x - d) ** 2) / (2 * h * h)) for d in data]) / (2 * np.pi * h * h) ** 1.5
    assert kde_prior_density(x, data) == pytest.approx(math.log(direct), rel=1e-12)


def test_posterior_symmetric_samples_get_uniform_weights():
    S = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    x0, w = posterior_x0(S, np.zeros(2), 0.5, np.zeros(2), 0.3)
    assert np.allclose(w, 0.25) and np.allclose(x0, 0.0)


def test_posterior_single_sample():
    x0, w = posterior_x0([[0.2, 0.7]], [5.0, -3.0], 0.9, [0.0, 0.0], 0.1)
    assert w.tolist() == [1.0] and x0.tolist() == [0.2, 0.7]


def test_posterior_matches_naive_oracle():
    rng = np.random.default_rng(3)
    for _ in range(30):
        S = rng.random((5, 3))
        x = rng.normal(size=3)
        a = rng.uniform(0, 0.99)
        knee, psi = rng.random(3), rng.uniform(0.1, 0.5)
        x0, w = posterior_x0(S, x, a, knee, psi)
        assert np.allclose(x0, naive_posterior(S, x, a, knee, psi), atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10), st.integers(1, 5), st.floats(0, 0.9999), st.integers(0, 2**32 - 1))
def test_posterior_weights_and_hull(J, n, alpha, seed):
    rng = np.random.default_rng(seed)
    S = rng.normal(size=(J, n)) * 3
    x0, w = posterior_x0(S, rng.normal(size=n) * 3, alpha, rng.normal(size=n), rng.uniform(0.05, 1))
    assert np.all(w >= 0) and abs(w.sum() - 1) < 1e-12
    assert np.all(x0 >= S.min(axis=0) - 1e-12) and np.all(x0 <= S.max(axis=0) + 1e-12)


def test_posterior_survives_extreme_distances():
    # raw densities underflow to zero here; log-space weights do not
    S = np.array([[50.0, 50.0], [51.0, 50.0]])
    x0, w = posterior_x0(S, [-50.0, -50.0], 0.999, [0.0, 0.0], 0.1)
    assert np.all(np.isfinite(x0)) and abs(w.sum() - 1) < 1e-12


def test_implied_noise_examples_and_round_trip():
    x = np.array([0.3, -0.2])
    assert np.array_equal(implied_noise(x, [9.0, 9.0], 0.0), x)
    a = 0.64
    assert np.allclose(implied_noise(math.sqrt(a) * x, x, a), 0.0)
    rng = np.random.default_rng(4)
    for _ in range(100):
        xk, x0, a = rng.normal(size=4), rng.normal(size=4), rng.uniform(0, 0.999)
        eps = implied_noise(xk, x0, a)
        assert np.allclose(math.sqrt(a) * x0 + math.sqrt(1 - a) * eps, xk, atol=1e-12)
    with pytest.raises(ContractError):
        implied_noise(x, x, 1.0)


def test_denoise_step_examples():
    rng = make_rng(0)
    x0 = np.array([0.4, 0.6])
    assert np.array_equal(denoise_step([9.0, 9.0], x0, [1.0, 1.0], 1.0, 0.0, rng), x0)
    # sigma = 0 and alpha_prev = alpha_k make the step a fixed point
    a = 0.3
    xk = np.array([0.2, -0.5])
    eps = implied_noise(xk, xk, a)
    assert np.allclose(denoise_step(xk, xk, eps, a, 0.0, rng), xk, atol=1e-12)
    s1 = denoise_step(xk, x0, eps, 0.5, 0.2, make_rng(7))
    s2 = denoise_step(xk, x0, eps, 0.5, 0.2, make_rng(7))
    assert np.array_equal(s1, s2)


def test_denoise_step_rejects_negative_radicand():
    with pytest.raises(AssertionError):
        denoise_step([0.0], [0.0], [0.0], 0.5, 0.9, make_rng(0))


def test_denoise_population_cardinality_bounds_and_determinism():
    box = Bounds(np.zeros(4), np.ones(4))
    S = np.random.default_rng(5).random((7, 4))
    sch = cosine_schedule(50)
    out = denoise_population(S, S[0], 0.2, sch, make_rng(1), box)
    assert out.shape == (7, 4)
    assert np.all((out >= 0) & (out <= 1))
    assert np.array_equal(out, denoise_population(S, S[0], 0.2, sch, make_rng(1), box))
    assert denoise_population(S, S[0], 0.2, sch, make_rng(1), box, n_out=12).shape == (12, 4)
    assert denoise_population(np.empty((0, 4)), S[0], 0.2, sch, make_rng(1), box).shape[0] == 0


@pytest.mark.parametrize("sampling", ["fixed", "current"])
def test_denoise_population_moves_toward_knee(sampling):
    box = Bounds(np.zeros(5), np.ones(5))
    sch = cosine_schedule(100)
    closer = 0
    for seed in range(20):
        g = np.random.default_rng(seed)
        S = g.random((20, 5))
        knee = g.random(5)
        out = denoise_population(S, knee, 0.1, sch, make_rng(seed), box, sampling=sampling)
        before = np.linalg.norm(S - knee, axis=1).mean()
        after = np.linalg.norm(out - knee, axis=1).mean()
        closer += after <= before
    assert closer == 20


def test_denoise_population_two_step_chain_by_hand():
    sch = cosine_schedule(2)  # alpha = 1, 0.5, 0
    x = np.array([[0.3, 0.8]])
    knee, psi = np.array([0.5, 0.5]), 0.3
    out = denoise_population(x, knee, psi, sch, make_rng(3))
    # one step from k = 2 (alpha 0) to k = 1 (alpha 0.5) with a single sample
    a_k, a_p = 0.0, 0.5
    x0 = x[0]
    eps = (x[0] - math.sqrt(a_k) * x0) / math.sqrt(1 - a_k)
    sigma = math.sqrt((1 - a_p) / (1 - a_k) * (1 - a_k / a_p))
    xi = make_rng(3).standard_normal((1, 2))[0]
    expect = math.sqrt(a_p) * x0 + math.sqrt(max(1 - a_p - sigma**2, 0.0)) * eps + sigma * xi
    assert np.allclose(out[0], expect, atol=1e-15)


def test_denoise_population_rejects_unknown_sampling():
    with pytest.raises(ContractError):
        denoise_population(np.zeros((2, 2)), np.zeros(2), 0.1, cosine_schedule(4), make_rng(0), sampling="x")


def test_adaptive_psi_examples():
    z = np.zeros(3)
    assert adaptive_psi(z, z) == 0.1
    assert adaptive_psi(np.array([0.1, 0, 0]), z) == pytest.approx(0.3)
    assert adaptive_psi(np.array([1.0, 0, 0]), z) == 0.5
    assert adaptive_psi(None, z) == 0.1


@given(st.floats(0, 5), st.floats(0, 5))
def test_adaptive_psi_range_and_monotone(e1, e2):
    lo, hi = sorted((e1, e2))
    z = np.zeros(1)
    p_lo = adaptive_psi(np.array([lo]), z)
    p_hi = adaptive_psi(np.array([hi]), z)
    assert 0.1 <= p_lo <= p_hi <= 0.5


def test_guidance_config_validation():
    with pytest.raises(ContractError):
        GuidanceConfig(psi_min=0.6, psi_max=0.5)
    with pytest.raises(ContractError):
        GuidanceConfig(psi_min=0.0)
