import math
import warnings

import numpy as np
import pytest

from complex_momentum.errors import DimensionMismatch, NonfiniteGradient, NonfiniteIterate
from complex_momentum.games import GameSpec, bilinear_game, dirac_gan, quadratic_game
from complex_momentum.optimizers import (
    AggregatedMomentum,
    AltCM,
    CMConfig,
    ComplexAdam,
    Extragradient,
    OptimisticGradient,
    RecurrentConfig,
    RecurrentMomentum,
    SimCM,
    SimCMReal,
    measured_rate,
    run,
    simulate_batch,
)


def random_quadratic(rng, d=4):
    return quadratic_game(rng.normal(size=(d, d)))


def trajectory(opt, game, w0, n):
    s = opt.init(w0)
    out = [s.omega.copy()]
    for _ in range(n):
        s = opt.step(s, game)
        out.append(s.omega.copy())
    return np.array(out), s


def test_sim_cm_single_step_by_hand():
    game = quadratic_game(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    opt = SimCM(0.5, 0.5j)
    s = opt.init([1.0, 2.0])
    s = opt.step(s, game)
    g = np.array([2.0, -1.0])
    assert np.allclose(s.mu, -g)
    assert np.allclose(s.omega, [1 - 0.5 * 2, 2 + 0.5])
    s2 = opt.step(s, game)
    g2 = game.grad(s.omega)
    mu2 = 0.5j * s.mu - g2
    assert np.allclose(s2.mu, mu2) and np.allclose(s2.omega, s.omega + np.real(0.5 * mu2))


def test_zero_beta_is_gradient_descent(rng):
    game = random_quadratic(rng)
    w0 = rng.normal(size=4)
    a, _ = trajectory(SimCM(0.05, 0.0), game, w0, 20)
    w = w0.copy()
    for j in range(20):
        w = w - 0.05 * game.grad(w)
    assert np.allclose(a[-1], w, atol=1e-13)


def test_negative_momentum_two_term_recurrence(rng):
    game = random_quadratic(rng)
    alpha, beta = 0.02, -0.6
    W, _ = trajectory(SimCM(alpha, beta), game, rng.normal(size=4), 200)
    for j in range(1, 200):
        rhs = W[j] - alpha * game.grad(W[j]) + beta * (W[j] - W[j - 1])
        assert np.max(np.abs(W[j + 1] - rhs)) <= 1e-12 * (1 + np.max(np.abs(W[j])))


def test_buffer_is_cosine_weighted_sum_for_constant_gradient():
    # a constant gradient field g: Re(mu^j) = -g sum_k |b|^k cos(k arg b)
    g = np.array([1.0, -2.0])
    game = GameSpec(dim=2, split=1, grad=lambda w: np.broadcast_to(g, np.shape(w)).copy())
    mag, phase = 0.9, np.pi / 3
    opt = SimCM(0.1, mag * np.exp(1j * phase))
    s = opt.init(np.zeros(2))
    for j in range(1, 30):
        s = opt.step(s, game)
        k = np.arange(j)
        weight = np.sum(mag**k * np.cos(k * phase))
        assert np.allclose(s.mu.real, -g * weight, atol=1e-12)


def test_real_arithmetic_matches_complex(rng):
    game = random_quadratic(rng, 5)
    w0 = rng.normal(size=5)
    for alpha in (0.03, 0.02 + 0.01j):
        beta = 0.8 * np.exp(1j * 1.1)
        a, _ = trajectory(SimCM(alpha, beta), game, w0, 300)
        b, _ = trajectory(SimCMReal(alpha, beta), game, w0, 300)
        assert np.max(np.abs(a - b)) <= 1e-12 * (1 + np.max(np.abs(a)))


def test_recurrent_two_buffer_equals_complex(rng):
    game = random_quadratic(rng)
    w0 = rng.normal(size=4)
    beta = 0.7 * np.exp(0.4j)
    a, _ = trajectory(SimCM(0.05, beta), game, w0, 100)
    b, _ = trajectory(RecurrentMomentum(RecurrentConfig.from_complex(0.05, beta)), game, w0, 100)
    assert np.allclose(a, b, atol=1e-12)


def test_recurrent_diagonal_equals_aggregated(rng):
    game = random_quadratic(rng)
    w0 = rng.normal(size=4)
    betas, alphas = [0.0, 0.5, 0.9], [0.01, 0.02, 0.005]
    a, _ = trajectory(AggregatedMomentum(betas, alphas), game, w0, 100)
    b, _ = trajectory(RecurrentMomentum(RecurrentConfig(np.diag(betas), alphas)), game, w0, 100)
    assert np.allclose(a, b, atol=1e-12)


def test_recurrent_validation():
    with pytest.raises(DimensionMismatch):
        RecurrentConfig(np.zeros((2, 3)), [1, 1])
    with pytest.raises(DimensionMismatch):
        RecurrentConfig(np.eye(2), [1, 1, 1])


def test_gradient_evaluation_counters(rng):
    game = random_quadratic(rng)
    calls = []

    def grad(w):
        calls.append(1)
        return game.grad(w)

    counted = GameSpec(dim=4, split=2, grad=grad, fixed_point=np.zeros(4))
    for opt, per in [
        (SimCM(0.01, 0.5j), 1),
        (AltCM(0.01, 0.5j), 2),
        (Extragradient(0.01, 0.01), 2),
        (OptimisticGradient(0.01, 0.01), 1),
        (ComplexAdam(), 1),
    ]:
        calls.clear()
        _, s = trajectory(opt, counted, np.ones(4), 7)
        assert s.grad_evals == len(calls) == 7 * per == 7 * opt.evals_per_step


def test_alternating_second_player_sees_update():
    # bilinear f = x y: player y must see the updated x
    game = bilinear_game([[1.0]])
    s = AltCM(0.1, 0.0).init([1.0, 1.0])
    s = AltCM(0.1, 0.0).step(s, game)
    x1 = 1 - 0.1 * 1.0
    assert s.omega == pytest.approx([x1, 1 + 0.1 * x1])


def test_extragradient_and_optimistic_by_hand():
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    game = quadratic_game(J)
    w = np.array([1.0, 1.0])
    s = Extragradient(0.1, 0.2).step(Extragradient(0.1, 0.2).init(w), game)
    mid = w - 0.2 * (J @ w)
    assert np.allclose(s.omega, w - 0.1 * (J @ mid))
    og = OptimisticGradient(0.1, 0.05)
    s = og.step(og.init(w), game)
    assert np.allclose(s.omega, w - 0.2 * (J @ w))  # no previous gradient
    s2 = og.step(s, game)
    assert np.allclose(s2.omega, s.omega - 0.2 * (J @ s.omega) + 0.05 * (J @ w))


def test_complex_adam_first_step_bias_correction():
    game = dirac_gan()
    opt = ComplexAdam(1e-3, 0.8 * np.exp(1j * np.pi / 8), 0.999)
    s0 = opt.init([1.0, 1.0])
    g = game.grad(s0.omega)
    s = opt.step(s0, game)
    v_hat = s.v / (1 - 0.999**s.t)
    assert s.t == 1
    assert np.array_equal(v_hat, g * g) or np.allclose(v_hat, g * g, rtol=1e-15)
    assert np.allclose(s.omega, s0.omega - 1e-3 * g / (np.abs(g) + 1e-8))


def test_complex_adam_rejects_nonfinite_gradient():
    game = GameSpec(dim=1, split=1, grad=lambda w: np.full_like(w, np.nan))
    opt = ComplexAdam()
    with pytest.raises(NonfiniteGradient):
        opt.step(opt.init([0.0]), game)


def test_config_warns_for_non_decaying_momentum():
    with pytest.warns(UserWarning):
        CMConfig(0.1, 1.2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        CMConfig(0.1, 0.99j)


def test_run_statuses(rng):
    game = bilinear_game([[0.5]])
    conv = run(game, SimCM(0.1, 0.9 * np.exp(1j * np.pi / 8)), [1.0, 1.0], max_steps=20000)
    assert conv.converged and conv.steps == len(conv.distances) - 1
    assert conv.evals_to_converge == conv.steps
    div = run(game, SimCM(1.0, 0.0), [1.0, 1.0], max_steps=20000)
    assert div.diverged and math.isinf(div.steps)
    with pytest.raises(NonfiniteIterate):
        run(game, SimCM(1.0, 0.0), [1.0, 1.0], max_steps=20000, raise_on_divergence=True)
    budget = run(game, SimCM(0.1, 0.0), [1.0, 1.0], max_steps=5)
    assert budget.status == "budget" and len(budget.distances) == 6
    capped = run(game, AltCM(0.1, 0.5j), [1.0, 1.0], max_steps=100, max_evals=9)
    assert capped.total_grad_evals == 8
    zero = run(game, SimCM(0.1, 0.5), [0.0, 0.0])
    assert zero.converged and zero.steps == 0


def test_measured_rate_exact_geometric():
    assert measured_rate(0.97 ** np.arange(100)) == pytest.approx(0.97)
    assert math.isnan(measured_rate([1.0, 0.5]))


def test_simulate_batch_matches_individual_runs():
    game = dirac_gan()
    betas = np.array([0.0, 0.9 * np.exp(1j * np.pi / 8), 0.8 * np.exp(1j * np.pi / 4), 0.5])
    tol = 1e-6 * np.sqrt(2)
    out = simulate_batch(game, SimCM(np.full(4, 0.1), betas), [1.0, 1.0], tol, 20000)
    for k, b in enumerate(betas):
        rep = run(game, SimCM(0.1, b), [1.0, 1.0], max_steps=20000, tol=tol)
        if rep.converged:
            assert out.status[k] == "converged" and out.steps[k] == rep.steps
        else:
            assert out.status[k] != "converged" and math.isinf(out.steps[k])
