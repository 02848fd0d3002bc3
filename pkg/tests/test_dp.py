import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_mem.core import DPConfig, ErrorPrior, derive_substream, validate_dataset
from robust_mem.dp import sample_dirichlet_weights, sample_error, sample_pseudo_measure


def rng(k=0):
    return np.random.default_rng(k)


def test_point_mass_draws_are_zero():
    z = sample_error(ErrorPrior("point_mass"), 5, rng(), d_x=2)
    assert z.shape == (5, 2)
    assert np.all(z == 0.0)


def test_gaussian_moments():
    z = sample_error(ErrorPrior("gaussian", (1.0,)), 10**5, rng(1))[:, 0]
    assert abs(z.mean()) < 4 / np.sqrt(1e5)
    assert abs(z.var() - 1) < 0.05


def test_student_t_variance():
    # the t(3) sample variance has infinite variance itself; about 1 seed in 12
    # misses the 15% band, so the stream is pinned
    z = sample_error(ErrorPrior("student_t", (1.0,), df=3.0), 10**5, derive_substream(0, 0, 0))[:, 0]
    assert abs(z.var() - 3.0) / 3.0 < 0.15


def test_per_dimension_scale():
    z = sample_error(ErrorPrior("gaussian", (2.0, 0.0)), 1000, rng(3))
    assert np.all(z[:, 1] == 0.0)
    assert 1.8 < z[:, 0].std() < 2.2


def test_zero_concentration_is_exact():
    w = sample_dirichlet_weights(0.0, 4, rng())
    assert w.tolist() == [0, 0, 0, 0, 1.0]


def test_last_weight_mean():
    g = rng(5)
    last = np.array([sample_dirichlet_weights(1.0, 4, g)[-1] for _ in range(10**5)])
    assert abs(last.mean() - 0.5) < 0.01


def test_first_weights_mean_large_c():
    g = rng(6)
    W = np.array([sample_dirichlet_weights(100.0, 100, g) for _ in range(4000)])
    m = W[:, :100].mean(axis=0)
    se = W[:, :100].std(axis=0) / np.sqrt(len(W))
    assert np.all(np.abs(m - 1 / 101) < 5 * se)
    # the pooled mean is much tighter
    assert abs(m.mean() - 1 / 101) < 5 * se.mean() / 10


@pytest.mark.parametrize("c", [0.1, 1.0, 10.0])
def test_mass_split(c):
    g = rng(7)
    W = np.array([sample_dirichlet_weights(c, 100, g) for _ in range(10**4)])
    last = W[:, -1]
    se = last.std() / np.sqrt(len(last))
    assert abs(last.mean() - 1 / (c + 1)) < 5 * se
    assert abs(W[:, :-1].sum(axis=1).mean() - c / (c + 1)) < 5 * se


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e4), st.integers(1, 300), st.integers(0, 2**32))
def test_simplex(c, T, seed):
    w = sample_dirichlet_weights(c, T, rng(seed))
    assert w.shape == (T + 1,)
    assert np.all(w >= 0)
    assert abs(w.sum() - 1) < 1e-12


def test_tiny_shapes_stay_finite():
    # c/T = 1e-9: naive gamma draws underflow to zero for every component
    w = sample_dirichlet_weights(1e-7, 100, rng(8))
    assert np.all(np.isfinite(w)) and abs(w.sum() - 1) < 1e-12


def small_data(n=6, d=1, seed=0):
    g = rng(seed)
    return validate_dataset(np.column_stack([g.normal(size=(n, d)), g.normal(size=n)]))


def test_pseudo_measure_layout():
    ds = small_data()
    pm = sample_pseudo_measure(ds, ErrorPrior("gaussian", (1.0,)), DPConfig(1.0, 7, 1, 3), j=2)
    assert pm.atoms_x.shape == (6, 8, 1)
    np.testing.assert_array_equal(pm.atoms_x[:, -1], ds.w)
    np.testing.assert_allclose(pm.weights.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_array_equal(pm.y, ds.y)


def test_zero_concentration_gives_empirical_measure():
    ds = small_data()
    pm = sample_pseudo_measure(ds, ErrorPrior("student_t", (1.0,), 3.0), DPConfig(0.0, 5, 1, 0), j=0)
    assert np.all(pm.weights[:, -1] == 1.0)
    assert np.all(pm.weights[:, :-1] == 0.0)


def test_point_mass_atoms_equal_observations():
    ds = small_data(d=2)
    pm = sample_pseudo_measure(ds, ErrorPrior("point_mass"), DPConfig(3.0, 5, 1, 0), j=0)
    for t in range(6):
        np.testing.assert_array_equal(pm.atoms_x[:, t], ds.w)


def test_weighted_atom_mean_centres_on_observation():
    ds = small_data(n=2)
    prior = ErrorPrior("gaussian", (1.0,))
    means = []
    for j in range(1000):
        pm = sample_pseudo_measure(ds, prior, DPConfig(1.0, 100, 1, 11), j)
        means.append(pm.weights[0] @ pm.atoms_x[0, :, 0])
    means = np.array(means)
    se = means.std() / np.sqrt(len(means))
    assert abs(means.mean() - ds.w[0, 0]) < 4 * se


def test_substreams_make_draws_order_free():
    ds = small_data()
    prior = ErrorPrior("gaussian", (1.0,))
    dp = DPConfig(1.0, 10, 5, 99)
    a = sample_pseudo_measure(ds, prior, dp, j=3)
    calls = []

    def spy(seed, j, i, domain):
        calls.append((seed, j, i, domain))
        return derive_substream(seed, j, i, domain)

    b = sample_pseudo_measure(ds, prior, dp, j=3, deriver=spy)
    np.testing.assert_array_equal(a.atoms_x, b.atoms_x)
    np.testing.assert_array_equal(a.weights, b.weights)
    assert [c[2] for c in calls] == list(range(6))
    assert {c[1] for c in calls} == {3}
