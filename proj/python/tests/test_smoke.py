import os
import pathlib

import numpy as np
import pytest

import gnngp

DATA = pathlib.Path(os.environ.get("GNNGP_TEST_DATA", pathlib.Path(__file__).parents[2] / "tests" / "data"))
FIXTURE = DATA / "fixture"


def path_graph(n):
    edges = np.array([[i, i + 1] for i in range(n - 1)], dtype=np.int64)
    return gnngp.Graph(edges, n)


def test_graph_normalization():
    g = path_graph(4)
    assert g.n_nodes == 4
    a = g.normalized("sym").to_dense()
    np.testing.assert_allclose(a, a.T)
    r = g.normalized("row").to_dense()
    np.testing.assert_allclose(r.sum(axis=1), np.ones(4))
    with pytest.raises(gnngp.InputError):
        g.normalized("col")


def test_relu_expectation_halves_the_diagonal():
    rng = np.random.default_rng(0)
    b = rng.standard_normal((5, 7))
    k = b @ b.T
    g = gnngp.relu_expectation(k)
    np.testing.assert_array_equal(np.diag(g), np.diag(k) / 2)
    assert gnngp.correlation_map(1.0) == pytest.approx(1.0)
    assert gnngp.correlation_map(0.0) == pytest.approx(1 / np.pi)


def test_gcn_kernel_matches_numpy_recursion():
    rng = np.random.default_rng(1)
    g = path_graph(6)
    x = rng.standard_normal((6, 3))
    a = g.normalized("sym").to_dense()
    k1 = a @ (x @ x.T / 3) @ a.T + 0.01
    diag = np.sqrt(np.diag(k1))
    rho = np.clip(k1 / np.outer(diag, diag), -1, 1)
    t = np.arccos(rho)
    c1 = np.outer(diag, diag) * (np.sin(t) + (np.pi - t) * np.cos(t)) / (2 * np.pi)
    k2 = a @ c1 @ a.T + 0.01
    np.testing.assert_allclose(gnngp.kernel("gcn", g, x, layers=2, sigma_b=0.1), k2, rtol=1e-10, atol=1e-12)


def test_lowrank_with_all_landmarks_is_exact():
    rng = np.random.default_rng(2)
    g = path_graph(7)
    x = rng.standard_normal((7, 9))
    k = gnngp.kernel("gin", g, x, layers=3)
    q = gnngp.kernel_lowrank("gin", g, x, list(range(7)), layers=3)
    assert np.linalg.norm(q @ q.T - k) <= 1e-8 * np.linalg.norm(k)


def test_posteriors_agree():
    rng = np.random.default_rng(3)
    q = rng.standard_normal((10, 3))
    y = rng.standard_normal((4, 1))
    train, test = [0, 2, 4, 6], [1, 3, 5]
    m_exact = gnngp.posterior_mean(q @ q.T, train, test, y, 0.5)
    m_low = gnngp.posterior_mean_lowrank(q, train, test, y, 0.5)
    np.testing.assert_allclose(m_low, m_exact, atol=1e-10)
    v_exact = gnngp.posterior_variance(q @ q.T, train, test, 0.5)
    v_low = gnngp.posterior_variance_lowrank(q, train, test, 0.5)
    np.testing.assert_allclose(v_low, v_exact, atol=1e-10)
    with pytest.raises(gnngp.InputError):
        gnngp.posterior_mean(q @ q.T, [0, 99], test, np.zeros((2, 1)), 0.5)


def test_mc_covariance_is_close_to_the_kernel():
    rng = np.random.default_rng(4)
    g = path_graph(5)
    x = rng.standard_normal((5, 3))
    emp, ana = gnngp.mc_covariance("gcn", g, x, layers=2, width=1024, samples=50, seed=1, sigma_b=0.1)
    assert np.linalg.norm(emp - ana) / np.linalg.norm(ana) <= 0.05


def test_fixture_dataset_and_infer():
    d = gnngp.load_dataset(FIXTURE)
    assert d["features"].shape == (4, 2)
    assert d["labels"] == [0, 0, 1, 1]
    assert d["train"] == [0, 3]
    res = gnngp.infer(FIXTURE, nugget=0.1)
    assert res["test"] == 1.0
    assert "[metrics]" in res["report"]
    with pytest.raises(gnngp.InputError):
        gnngp.infer(FIXTURE, arch="gat")
    with pytest.raises(gnngp.InputError):
        gnngp.kernel("gcn", path_graph(4), np.ones((4, 2)), bogus=1.0)
