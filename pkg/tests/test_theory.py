import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gammaknn.theory import (BallSampler, Gaussian, GaussianMixture, SphereModel, UniformBox,
                             complement_power, empirical_bridge, fn_probability, fp_probability,
                             make_distribution, monte_carlo_sphere_prob, proposition_table)


def const(p):
    return lambda center, radius: p


def test_hand_arithmetic():
    assert fn_probability(1.0, [0.0], 1.0, const(0.1), 5) == 0.59049
    exact = float((1 - Fraction(0.01)) ** 500)
    got = fp_probability(1.0, [0.0], 1.0, const(0.01), 500)
    assert abs(got - exact) <= 1e-12
    assert round(got, 5) == 0.00657


def test_log_domain_agrees_with_exact_rationals():
    for p, m in [(0.3, 51), (0.001, 5000), (0.5, 200), (1e-6, 3000)]:
        exact = float((1 - Fraction(p)) ** m)
        assert complement_power(p, m) == pytest.approx(exact, rel=1e-12, abs=1e-300)
    assert complement_power(0.2, 10**7) == 0.0
    assert complement_power(1.0, 3) == 0.0 and complement_power(0.0, 3) == 1.0
    with pytest.raises(ValueError):
        complement_power(1.5, 2)


def test_gamma_one_identity_and_limits():
    g = Gaussian((0.0, 0.0))
    z, eps = np.zeros(2), 0.7
    p = g.ball_probability(z, eps)
    assert fn_probability(1.0, z, eps, g.ball_probability, 10) == complement_power(p, 10)
    assert fp_probability(1.0, z, eps, g.ball_probability, 100) == complement_power(p, 100)
    assert fn_probability(1e-6, z, eps, g.ball_probability, 10) < 1e-12
    with pytest.raises(ValueError):
        fn_probability(0.0, z, eps, g.ball_probability, 10)


def test_convergence_speed_remark():
    fn = fn_probability(1.0, [0.0], 1.0, const(0.05), 10)
    fp = fp_probability(1.0, [0.0], 1.0, const(0.05), 1000)
    assert fn == pytest.approx(0.95 ** 10)
    assert fp < 1e-20 < fn


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["uniform", "gaussian", "mixture"]), st.integers(1, 5),
       st.floats(0.05, 2.0), st.integers(1, 50), st.integers(1, 500))
def test_fn_fp_monotone_on_exact_and_sampled_probabilities(name, dim, eps, m_plus, m_minus):
    gammas = [round(0.1 * i, 10) for i in range(1, 11)]
    dist = make_distribution(name, dim)
    z = dist.center
    if hasattr(dist, "ball_probability"):
        prob = dist.ball_probability
    else:
        sampler = BallSampler(SphereModel(dist, trials=2000), z)
        prob = lambda c, r: sampler(r).value
    fn = [fn_probability(g, z, eps, prob, m_plus) for g in gammas]
    assert all(a <= b + 1e-15 for a, b in zip(fn, fn[1:]))      # non-increasing as gamma drops
    assert all(v <= fn[-1] + 1e-15 for v in fn)
    up = [1.0 + 0.1 * i for i in range(11)]
    fp = [fp_probability(g, z, eps, prob, m_minus) for g in up]
    assert all(a >= b - 1e-15 for a, b in zip(fp, fp[1:]))      # non-increasing as gamma grows


def test_monte_carlo_examples():
    box = SphereModel(UniformBox((0.0, 0.0), (1.0, 1.0)), trials=100_000, seed=3)
    est = monte_carlo_sphere_prob(box, (0.5, 0.5), 0.5)
    assert abs(est.value - math.pi / 4) <= 3 * est.stderr
    assert monte_carlo_sphere_prob(box, (0.5, 0.5), 10.0).value == 1.0
    assert monte_carlo_sphere_prob(box, (0.5, 0.5), 0.0).value == 0.0
    with pytest.raises(ValueError):
        SphereModel(UniformBox((0.0,), (1.0,)), trials=0)


def test_gaussian_ball_probability_closed_forms():
    g = Gaussian((0.0, 0.0), 1.0)
    assert g.ball_probability((0.0, 0.0), 1.0) == pytest.approx(1 - math.exp(-0.5), rel=1e-12)
    sampled = monte_carlo_sphere_prob(SphereModel(g, trials=200_000, seed=1), (1.0, 0.5), 0.8)
    exact = g.ball_probability((1.0, 0.5), 0.8)
    assert abs(sampled.value - exact) <= 4 * sampled.stderr
    mix = GaussianMixture(((-1.0, 0.0), (1.0, 0.0)), 0.5, (0.25, 0.75))
    sampled = monte_carlo_sphere_prob(SphereModel(mix, trials=200_000, seed=2), (0.5, 0.0), 0.6)
    assert abs(sampled.value - mix.ball_probability((0.5, 0.0), 0.6)) <= 4 * sampled.stderr


def test_ball_sampler_is_monotone_in_radius():
    s = BallSampler(SphereModel(make_distribution("mixture", 3), trials=5000), np.zeros(3))
    values = [s(r).value for r in np.linspace(0, 3, 40)]
    assert values == sorted(values)


def test_proposition_table_rows():
    model = SphereModel(Gaussian((0.0, 0.0)), Gaussian((1.0, 0.0)), 10, 100, 20_000, seed=4)
    rows = proposition_table(model, (0.3, 0.0), 0.5, [1.0, 0.5, 0.2])
    assert [r.gamma for r in rows] == [1.0, 0.5, 0.2]
    assert rows[0].fn >= rows[1].fn >= rows[2].fn
    assert rows[0].fp <= rows[1].fp <= rows[2].fp
    assert all(r.fn_se >= 0 and r.fp_se >= 0 for r in rows)


def test_empirical_bridge_small():
    model = SphereModel(Gaussian((0.0, 0.0)), Gaussian((1.5, 0.0)), m_plus=5, m_minus=20,
                        trials=20_000, seed=9)
    fn, fp = empirical_bridge(model, (0.6, 0.0), 0.7)
    for r in (fn, fp):
        assert 0 < r.observed < 1 and abs(r.z) <= 3
