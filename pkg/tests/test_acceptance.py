"""Acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) and then
asserts, so a miss shows up both as a verdict line and as a test failure.
"""
import time

import numpy as np
import pytest

from oracles import grid_argmin_1d, profile_objective_loop, rbf_rows, sample_atoms_joint, sample_model_joint
from robust_mem.baselines import SimexConfig, naive_fit, simex
from robust_mem.bootstrap import FitRequest, fit, posterior_bootstrap_tls
from robust_mem.core import DPConfig, ErrorPrior, KernelConfig, validate_dataset
from robust_mem.dp import sample_pseudo_measure
from robust_mem.mmd import (BoundInputs, bound_constants, flatten, mmd2_gaussians, mmd2_linear_statistic,
                            mmd2_model_vs_atoms)
from robust_mem.models import SplineBasisSpec, bspline_basis, bspline_model, linear_model, sigmoid_model
from robust_mem.optimize import OptimizerConfig, grad_check
from robust_mem.synthetic import simulate
from robust_mem.tls import tls_nll_equivalence_check, tls_solve, weighted_tls_solve

LIN = linear_model(1, True)
T3 = ErrorPrior("student_t", (1.0,), 3.0)


def linear_study(sigma_nu2, reps=20, with_simex=True):
    """Squared slope errors of each estimator over replicated linear data sets."""
    err = {"robust_tls": [], "tls_plain": [], "simex": [], "ols": []}
    for r in range(reps):
        ds, _ = simulate("linear", seed=r, n=800, theta0=(1.0, 0.0), sigma_eps2=4.0, sigma_nu2=sigma_nu2)
        post = fit(FitRequest(ds, LIN, "robust_tls", T3, DPConfig(1.0, 100, 100, r)))
        err["robust_tls"].append(post.theta[:, 0].mean() - 1.0)
        err["tls_plain"].append(tls_solve(ds.w, ds.y, with_intercept=True).theta[0] - 1.0)
        err["ols"].append(naive_fit(ds, LIN)[0] - 1.0)
        if with_simex:
            err["simex"].append(simex(ds, LIN, "ols", SimexConfig(sigma_nu2, seed=r)).theta[0] - 1.0)
    return {k: float(np.mean(np.square(v))) for k, v in err.items() if v}


def show(mse):
    return ", ".join(f"{k}={v * 1e3:.2f}e-3" for k, v in mse.items())


@pytest.mark.slow
def test_c01_linear_ordering_under_error(verdict):
    t = time.time()
    mse = linear_study(4.0)
    order = mse["robust_tls"] < mse["tls_plain"] < mse["simex"] < mse["ols"]
    ok = order and mse["robust_tls"] < 5e-3
    verdict(1, ok, f"MSE(slope) {show(mse)}; {time.time() - t:.0f}s")
    assert ok


@pytest.mark.slow
def test_c02_ols_wins_without_error(verdict):
    mse = linear_study(1e-5, with_simex=False)
    ok = mse["ols"] < mse["robust_tls"]
    verdict(2, ok, f"MSE(slope) {show(mse)}")
    assert ok


def test_c03_zero_concentration_is_plain_tls(verdict):
    ds, _ = simulate("linear", seed=0, n=200)
    ref = tls_solve(ds.w, ds.y, with_intercept=True).theta
    req = FitRequest(ds, LIN, "robust_tls", T3, DPConfig(0.0, 100, 50, 1))
    ok = all(np.array_equal(posterior_bootstrap_tls(req, w).theta, np.tile(ref, (50, 1))) for w in (1, 2, 8))
    verdict(3, ok, "50 rows bit-identical to plain TLS at 1, 2 and 8 workers")
    assert ok


def random_instance(k, g):
    kind = ("linear", "sigmoid", "bspline")[k % 3]
    if kind == "linear":
        m, th = linear_model(1, True, g.uniform(0.2, 1.0)), g.normal(size=2)
    elif kind == "sigmoid":
        m, th = sigmoid_model(g.uniform(0.2, 1.0)), np.array([0.0, 2.0, -5.0, 0.2]) + 0.5 * g.normal(size=4)
    else:
        m, th = bspline_model(SplineBasisSpec(5, -1.0, 2.0), g.uniform(0.2, 1.0)), g.normal(size=6)
    n = int(g.integers(3, 10))
    x = np.sort(g.uniform(0, 1, n))
    ds = validate_dataset(np.column_stack([x, np.sin(3 * x) + 0.2 * g.normal(size=n)]))
    pm = sample_pseudo_measure(ds, ErrorPrior("gaussian", (0.1,)), DPConfig(g.uniform(0.5, 5), 4, 1, k), 0)
    return kind, m, th, flatten(pm), KernelConfig(g.uniform(0.5, 1.5), g.uniform(0.5, 1.5))


def test_c04_closed_form_mmd_vs_monte_carlo(verdict):
    g = np.random.default_rng(2024)
    N = 10**5
    zs, slowest = [], 0.0
    for k in range(10):
        kind, m, th, fa, kc = random_instance(k, g)
        t = time.time()
        exact, _ = mmd2_model_vs_atoms(th, m, fa, kc)
        P1, P2 = (sample_model_joint(th, m, fa, N, g) for _ in range(2))
        Q1, Q2 = (sample_atoms_joint(fa, N, g) for _ in range(2))
        est, se = mmd2_linear_statistic(P1, P2, Q1, Q2, rbf_rows(kc.l_x, kc.l_y))
        slowest = max(slowest, time.time() - t)
        zs.append(abs(est - exact) / se)
    ok = max(zs) <= 3 and slowest < 10
    verdict(4, ok, f"max |z| = {max(zs):.2f} over 10 instances, slowest {slowest:.1f}s")
    assert ok


def test_c05_gradient_suite(verdict):
    g = np.random.default_rng(5)
    worst = {}
    for k in range(100):
        kind, m, th, fa, kc = random_instance(k, g)
        fa = fa.with_gram(kc)
        worst[kind] = max(worst.get(kind, 0.0), grad_check(lambda t: mmd2_model_vs_atoms(t, m, fa, kc), th))
    ok = max(worst.values()) < 1e-4
    verdict(5, ok, "max rel. error " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))
    assert ok


def test_c06_gaussian_constants(verdict):
    C1, _ = bound_constants(BoundInputs(100, 1.0, 0.0, 1.0, 0.6, 0.6))
    value = mmd2_gaussians(1.0, 0.0, 1.0, 1, squared_kernel=True)
    g = np.random.default_rng(6)
    N = 10**5
    Q = np.zeros((N, 1))
    est, se = mmd2_linear_statistic(g.normal(size=(N, 1)), g.normal(size=(N, 1)), Q, Q,
                                    lambda U, V: np.exp(-np.sum((U - V) ** 2, axis=1)))
    ok = C1 == 0.0 and abs(est - value) <= 3 * se and abs(value - 0.2925) < 5e-4
    verdict(6, ok, f"C1={C1}, closed form {value:.5f}, MC {est:.5f} +- {se:.5f}")
    assert ok


def test_c07_tls_matches_grid_search(verdict):
    g = np.random.default_rng(7)
    worst = 0.0
    for k in range(20):
        n = int(g.integers(5, 31))
        x = g.normal(size=n)
        y = g.uniform(-2, 2) * x + 0.3 * g.normal(size=n)
        plain = tls_solve(x, y).theta[0]
        ref = grid_argmin_1d(lambda t: profile_objective_loop(t, 0.0, x, y, np.ones(n)))
        pm = sample_pseudo_measure(validate_dataset(np.column_stack([x, y])), ErrorPrior("gaussian", (0.3,)),
                                   DPConfig(1.0, 2, 1, k), 0)
        weighted = weighted_tls_solve(pm, with_intercept=False).theta[0]
        wref = grid_argmin_1d(lambda t: profile_objective_loop(t, 0.0, pm.atoms_x[:, :, 0].ravel(),
                                                               np.repeat(pm.y, 3), pm.weights.ravel()))
        worst = max(worst, abs(plain - ref), abs(weighted - wref))
    ok = worst < 1e-3
    verdict(7, ok, f"max |solver - grid| = {worst:.1e} over 20 instances")
    assert ok


def test_c08_bspline_identities(verdict):
    spec = SplineBasisSpec(10, -3.0, 12.74)
    xs = np.random.default_rng(8).uniform(spec.knot_lo, spec.knot_hi, 1000)
    Bm = bspline_basis(xs, spec)
    dev = np.max(np.abs(Bm.sum(axis=1) - 1))
    nnz = int(np.max(np.count_nonzero(Bm, axis=1)))
    ok = dev <= 1e-12 and nnz <= 3
    verdict(8, ok, f"max |row sum - 1| = {dev:.1e}, max nonzeros per row {nnz}")
    assert ok


@pytest.mark.slow
def test_c09_sigmoid_robustness(verdict):
    m = sigmoid_model(0.5)
    grid = np.linspace(0, 1, 200)
    opt = OptimizerConfig(learning_rate=0.05, max_iters=600, restart_keep=6)
    wins, lines, t = 0, [], time.time()
    for r in range(5):
        ds, truth = simulate("sigmoid", seed=r, n=500, sigma_nu2=0.04)
        true = m.eval(np.array(truth.theta0), grid)
        naive = naive_fit(ds, m, "nonlinear_ls", OptimizerConfig(learning_rate=0.01, max_iters=5000), seed=r)
        post = fit(FitRequest(ds, m, "robust_mmd", ErrorPrior("gaussian", (0.2,)), DPConfig(1.0, 50, 50, r),
                              KernelConfig(1.0, 0.67), opt, atom_cap=200))
        # posterior mean of the curve, not the curve at the mean parameter
        curve = np.mean([m.eval(th, grid) for th in post.theta], axis=0)
        rmse_mmd = np.sqrt(np.mean((curve - true) ** 2))
        rmse_naive = np.sqrt(np.mean((m.eval(naive, grid) - true) ** 2))
        wins += rmse_mmd <= rmse_naive
        lines.append(f"{rmse_mmd:.3f}/{rmse_naive:.3f}")
    ok = wins >= 4
    verdict(9, ok, f"{wins}/5 wins, RMSE mmd/naive {' '.join(lines)}; {time.time() - t:.0f}s")
    assert ok


def test_c10_nll_identity(verdict):
    g = np.random.default_rng(10)
    worst = 0.0
    for k in range(50):
        n = int(g.integers(1, 40))
        d = 1 if k < 40 else int(g.integers(2, 4))
        X = g.normal(size=(n, d))
        t, nll = tls_nll_equivalence_check(g.normal(size=d), g.normal(size=(n, d)), X, g.normal(size=n))
        # one log(2 pi)/2 per Gaussian coordinate: d for w, one for y
        worst = max(worst, abs(nll - n * (d + 1) / 2 * np.log(2 * np.pi) - 0.5 * t))
    ok = worst < 1e-10
    verdict(10, ok, f"max deviation {worst:.1e} over 50 instances")
    assert ok
