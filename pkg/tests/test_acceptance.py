"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (lines appear in the summary
section) or ``python3 tests/test_acceptance.py``.
"""
import math
import sys
import time

import numpy as np
import pytest

from complex_momentum import harness
from complex_momentum.games import dirac_gan, quadratic_game
from complex_momentum.optimizers import ComplexAdam, SimCM, SimCMReal, run
from complex_momentum.spectral import (
    block_matrix,
    char_poly,
    convergence_rate,
    predicted_rho,
    rate_for_full_R,
)

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # pragma: no cover
    ACCEPTANCE_LINES = []


def report(label, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail} [{elapsed:.2f}s / {limit:g}s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_corollary_constants():
    t = time.perf_counter()
    res = harness.cmd_corollary_check()
    el = time.perf_counter() - t
    got = {r["selection"]: r["rho"] for r in res.rows if r["c"] == 1.0}
    a, b = got["almost_negative"], got["almost_positive"]
    ok = abs(a - 0.9998) <= 5e-4 and abs(b - 0.973) <= 1e-3 and res.summary["passed"]
    report("1 (corollary constants)", ok, f"rho_A={a:.10f} rho_B={b:.10f}", el, 1)


def test_criterion_02_real_momentum_cannot_converge():
    t = time.perf_counter()
    alphas = np.linspace(2 / 50, 2, 50)
    betas = np.linspace(0, 1, 50, endpoint=False)
    A, B = np.meshgrid(alphas, betas, indexing="ij")
    rho = predicted_rho([1j, -1j], A, B)
    el = time.perf_counter() - t
    ok = rho.size == 2500 and np.all(rho >= 1 - 1e-12)
    report("2 (real-beta impossibility)", ok, f"{rho.size} cells, min rho = {rho.min():.15f}", el, 5)


def test_criterion_03_rate_prediction_matches_simulation():
    t = time.perf_counter()
    game = dirac_gan()
    opt = SimCM(0.1, 0.9 * np.exp(1j * np.pi / 8))
    pred = harness.predict_rate(game, opt)
    rep = run(game, opt, [1.0, 1.0], max_steps=100_000, tol=1e-6 * math.sqrt(2))
    el = time.perf_counter() - t
    rel = abs(rep.rate - pred) / pred
    ok = rep.converged and rel <= 0.05
    report("3 (rate vs simulation)", ok, f"measured={rep.rate:.9f} predicted={pred:.9f} rel={rel:.2e}", el, 5)


def _heatmap(mode):
    cfg = harness.ExperimentConfig("heatmap", game="dirac", alpha=0.1, options={"mode": mode})
    t = time.perf_counter()
    res = harness.cmd_phase_heatmap(cfg)
    return res, time.perf_counter() - t


def test_criterion_04a_heatmap_simultaneous():
    res, el = _heatmap("simultaneous")
    best = res.summary["best_rate"]["rate"]
    cell = res.summary["best_cell"]
    real = res.summary["converged_real_beta_cells"]
    ok = abs(best - 0.955) <= 0.01 and real == 0
    detail = f"best rate={best:.5f} (best simulated cell measured {cell['measured_rate']:.5f}), convergent real-beta cells={real}"
    report("4a (heatmap, simultaneous)", ok, detail, el, 120)


def test_criterion_04b_heatmap_alternating():
    res, el = _heatmap("alternating")
    best = res.summary["best_rate"]["rate"]
    cell = res.summary["best_cell"]
    neg = sum(1 for r in res.rows if r["converged"] and math.isclose(r["beta_arg"], math.pi))
    ok = abs(best - 0.931) <= 0.01 and neg > 0
    detail = f"best rate={best:.5f} (best simulated cell measured {cell['measured_rate']:.5f}), convergent arg=pi cells={neg}"
    report("4b (heatmap, alternating)", ok, detail, el, 120)


def test_criterion_05_complex_real_equivalence():
    t = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    games = 0
    while games < 20:
        d = int(rng.integers(2, 7))
        J = rng.normal(size=(d, d))
        alpha = rng.uniform(0.005, 0.2)
        beta = rng.uniform(0, 0.95) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        # stable draws only: an exponentially growing trajectory cannot be
        # compared at an absolute 1e-12
        if convergence_rate(np.linalg.eigvals(J), alpha, beta).rho >= 1:
            continue
        games += 1
        game = quadratic_game(J)
        w0 = rng.normal(size=d)
        a, b = SimCM(alpha, beta), SimCMReal(alpha, beta)
        sa, sb = a.init(w0), b.init(w0)
        for _ in range(1000):
            sa, sb = a.step(sa, game), b.step(sb, game)
            worst = max(worst, np.max(np.abs(sa.omega - sb.omega)))
    el = time.perf_counter() - t
    report("5 (complex/real equivalence)", worst <= 1e-12, f"max |diff| = {worst:.3e} over 20 games x 1000 steps", el, 10)


def test_criterion_06_negative_momentum_recurrence():
    t = time.perf_counter()
    rng = np.random.default_rng(6)
    d = 4
    M = rng.normal(size=(d, d))
    game = quadratic_game(M @ M.T / d + 0.1 * np.eye(d))
    alpha, beta = 0.05, -0.5
    opt = SimCM(alpha, beta)
    s = opt.init(rng.normal(size=d))
    W = [s.omega.copy()]
    for _ in range(500):
        s = opt.step(s, game)
        W.append(s.omega.copy())
    worst = 0.0
    for j in range(1, 500):
        rhs = W[j] - alpha * game.grad(W[j]) + beta * (W[j] - W[j - 1])
        worst = max(worst, np.max(np.abs(W[j + 1] - rhs)))
    el = time.perf_counter() - t
    report("6 (negative-momentum recurrence)", worst <= 1e-12, f"max residual = {worst:.3e} over 500 steps", el, 5)


def _match(a, b):
    # greedy nearest matching of two 3-element root sets
    b = list(b)
    err = 0.0
    for x in a:
        k = int(np.argmin([abs(x - y) for y in b]))
        err = max(err, abs(x - b.pop(k)))
    return err


def test_criterion_07_cubic_vs_dense():
    t = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_roots = 0.0
    for _ in range(200):
        lam = complex(rng.normal(), rng.normal())
        alpha = rng.uniform(0, 1)
        beta = rng.uniform(0, 0.99) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        roots = char_poly(lam, alpha, beta).roots()
        dense = np.linalg.eigvals(block_matrix(lam, alpha, beta))
        worst_roots = max(worst_roots, _match(roots, dense))
    worst_rho = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 9))
        A = rng.normal(size=(d, d))
        J = A - A.T
        alpha = rng.uniform(0.01, 0.5)
        beta = rng.uniform(0, 0.99) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        cubic = convergence_rate(np.linalg.eigvals(J), alpha, beta).rho
        worst_rho = max(worst_rho, abs(cubic - rate_for_full_R(J, alpha, beta)))
    el = time.perf_counter() - t
    ok = worst_roots <= 1e-8 and worst_rho <= 1e-8
    report("7 (cubic vs dense)", ok, f"roots err={worst_roots:.2e}, rho err={worst_rho:.2e}", el, 30)


def test_criterion_08_sweep_ordering():
    t = time.perf_counter()
    res = harness.cmd_coop_adversarial_sweep(harness.ExperimentConfig("sweep", seed=0))
    el = time.perf_counter() - t
    table = {(r["gamma_max"], r["method"]): r for r in res.rows}
    at0 = {m: table[(0.0, m)]["grad_evals"] for m in harness.SWEEP_METHODS}
    pos_wins = all(at0["posmom"] < v for m, v in at0.items() if m != "posmom")
    adv = {m: table[(1.0, m)]["converged"] for m in harness.SWEEP_METHODS}
    adv_ok = not adv["posmom"] and not adv["negmom"] and adv["cm:pi/2"] and adv["eg"] and adv["og"]
    pi8 = all(table[(g, "cm:pi/8")]["converged"] for g in (0.0, 0.25, 0.5, 0.75, 1.0))
    detail = (
        f"gamma=0 evals {', '.join(f'{m}={v:g}' for m, v in at0.items())}; "
        f"gamma=1 converged {', '.join(m for m, c in adv.items() if c)}; cm:pi/8 always converges={pi8}"
    )
    report("8 (cooperative/adversarial ordering)", pos_wins and adv_ok and pi8, detail, el, 600)


def test_criterion_09_existence_by_phase():
    t = time.perf_counter()
    args = [0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi]
    res = harness.cmd_spectrum_scan(harness.ExperimentConfig("spectrum", game="bilinear:1", grids={"beta_arg": args}))
    el = time.perf_counter() - t
    found = {}
    for r in res.rows:
        found[r["beta_arg"]] = found.get(r["beta_arg"], False) or r["converged"]
    ok = all(found[a] for a in args[1:4]) and not found[0.0] and not found[math.pi]
    detail = ", ".join(f"arg={a:.4f}:{'yes' if found[a] else 'no'}" for a in args)
    report("9 (convergence exists for non-real beta)", ok, detail, el, 30)


def test_criterion_10_complex_adam():
    t = time.perf_counter()
    game = dirac_gan()
    kw = dict(max_steps=harness.MAX_EVALS, tol=1e-2, max_evals=harness.MAX_EVALS)
    cplx = run(game, ComplexAdam(1e-3, 0.8 * np.exp(1j * np.pi / 8), 0.999), [1.0, 1.0], **kw)
    real = run(game, ComplexAdam(1e-3, 0.8, 0.999), [1.0, 1.0], **kw)
    opt = ComplexAdam(1e-3, 0.8 * np.exp(1j * np.pi / 8), 0.999)
    s0 = opt.init([1.0, 1.0])
    g0 = game.grad(s0.omega)
    s1 = opt.step(s0, game)
    v_hat = s1.v / (1 - 0.999**s1.t)
    exact = np.array_equal(v_hat, g0 * g0)
    el = time.perf_counter() - t
    ok = cplx.converged and not real.converged and exact
    detail = (
        f"complex beta1 reaches 1e-2 at step {cplx.steps:g}; real beta1 final distance "
        f"{real.distances[-1]:.4f} after {real.total_grad_evals} evals; v_hat(t=1) == g^2: {exact}"
    )
    report("10 (complex Adam)", ok, detail, el, 30)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
