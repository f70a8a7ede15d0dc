import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import svd_ridge
from steadyrc.dataset import Episode
from steadyrc.errors import DataError, DimensionMismatch, SingularSystem
from steadyrc.readout import (
    DesignMatrix,
    NormalEquations,
    episode_inputs,
    ridge_regress,
    solve_ridge,
    train_model,
)
from steadyrc.reservoir import ReservoirConfig


def random_design(rng, n_s, n):
    X = np.hstack([rng.standard_normal((n_s, n - 1)), np.ones((n_s, 1))])
    return DesignMatrix(X, rng.choice([-1.0, 1.0], n_s))


def rel_residual(X, y, lam, w):
    a = X.T @ X + lam * np.eye(X.shape[1])
    b = X.T @ y
    return np.linalg.norm(a @ w - b) / np.linalg.norm(b)


class TestRidge:
    def test_identity_design(self):
        y = np.array([1.0, -1.0, 1.0])
        np.testing.assert_allclose(ridge_regress(DesignMatrix(np.eye(3), y), 0.0), y, atol=1e-14)

    def test_regularization_shrinks(self):
        d = random_design(np.random.default_rng(0), 30, 6)
        assert np.linalg.norm(ridge_regress(d, 10.0)) <= np.linalg.norm(ridge_regress(d, 0.001))

    def test_norm_monotone_in_lambda(self):
        d = random_design(np.random.default_rng(1), 40, 8)
        norms = [np.linalg.norm(ridge_regress(d, lam)) for lam in np.logspace(-4, 4, 17)]
        assert all(b <= a for a, b in zip(norms, norms[1:]))
        assert norms[-1] < 1e-2

    def test_matches_svd(self):
        rng = np.random.default_rng(2)
        d = random_design(rng, 20, 5)
        w = ridge_regress(d, 0.01)
        ref = svd_ridge(d.X, d.y, 0.01)
        assert np.linalg.norm(w - ref) <= 1e-8 * np.linalg.norm(ref)

    def test_singular_without_regularization(self):
        X = np.ones((6, 2))
        with pytest.raises(SingularSystem):
            ridge_regress(DesignMatrix(X, np.ones(6)), 0.0)

    def test_rank_deficient_ok_with_lambda(self):
        X = np.ones((6, 2))
        w = ridge_regress(DesignMatrix(X, np.ones(6)), 0.1)
        assert np.all(np.isfinite(w))

    def test_global_optimum(self):
        rng = np.random.default_rng(3)
        d, lam = random_design(rng, 50, 6), 0.5
        w = ridge_regress(d, lam)

        def loss(v):
            return np.sum((d.X @ v - d.y) ** 2) + lam * np.sum(v**2)

        best = loss(w)
        assert all(best <= loss(w + 1e-3 * rng.standard_normal(w.shape)) for _ in range(100))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), n_s=st.integers(10, 120), n=st.integers(2, 30),
           lam=st.floats(1e-3, 10.0))
    def test_residual(self, seed, n_s, n, lam):
        d = random_design(np.random.default_rng(seed), n_s, n)
        assert rel_residual(d.X, d.y, lam, ridge_regress(d, lam)) <= 1e-8


class TestDesignMatrix:
    def test_from_states_adds_ones(self):
        d = DesignMatrix.from_states(np.zeros((4, 3)), np.ones(4))
        assert d.X.shape == (4, 4) and np.all(d.X[:, -1] == 1)
        assert d.n_s == 4

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            DesignMatrix(np.ones((3, 2)), np.ones(4))


def test_normal_equations_equal_stacked():
    rng = np.random.default_rng(4)
    blocks = [(rng.uniform(-1, 1, (n, 5)), rng.choice([-1.0, 1.0], n)) for n in (7, 3, 12)]
    acc = NormalEquations(5)
    for s, y in blocks:
        acc.add(s, y)
    d = DesignMatrix.from_states(np.vstack([b[0] for b in blocks]), np.concatenate([b[1] for b in blocks]))
    np.testing.assert_allclose(acc.xtx, d.X.T @ d.X, atol=1e-12)
    np.testing.assert_allclose(acc.xty, d.X.T @ d.y, atol=1e-12)
    assert acc.n_s == d.n_s
    np.testing.assert_allclose(acc.solve(0.01), ridge_regress(d, 0.01), atol=1e-10)


def test_solve_ridge_rejects_negative_lambda():
    with pytest.raises(ValueError):
        solve_ridge(np.eye(2), np.ones(2), -1.0)


def toy_episode(n=300, label=1, eid="e0"):
    t = np.arange(n)
    ep = Episode(
        id=eid, model_tag="toy",
        cap=0.5 + 0.1 * np.sin(t / 20), shell_temp=np.full(n, 0.8), pressure=np.full(n, 0.5), ref=0.5,
        normalized=True,
    )
    ep.y_hat = np.full(n, label, dtype=np.int8)
    ep.t_d = 0 if label > 0 else n
    ep.cap_f = 0.5
    return ep


class TestTrainModel:
    def test_constant_label_sign(self):
        for label in (1, -1):
            ep = toy_episode(label=label)
            model = train_model([ep], ReservoirConfig(n_r=30, seed=1), lam=0.001)
            scores = model.score([ep])[0]
            assert np.mean(np.sign(scores[10:]) == label) >= 0.95

    def test_lambda_recorded(self):
        model = train_model([toy_episode()], ReservoirConfig(n_r=10))
        assert model.lam == 0.001

    def test_deterministic(self):
        eps = [toy_episode(eid="a"), toy_episode(label=-1, eid="b")]
        a = train_model(eps, ReservoirConfig(n_r=20, seed=5))
        b = train_model(eps, ReservoirConfig(n_r=20, seed=5))
        assert np.array_equal(a.w_out, b.w_out)

    def test_input_dimension_follows_layout(self):
        m = train_model([toy_episode()], ReservoirConfig(n_r=10), use_setpoint=True)
        assert m.config.n_i == 4 and m.weights.w_in.shape == (10, 4)
        m = train_model([toy_episode()], ReservoirConfig(n_r=10), use_setpoint=False)
        assert m.config.n_i == 3

    def test_empty_or_unlabeled(self):
        with pytest.raises(DataError):
            train_model([], ReservoirConfig(n_r=10))
        ep = toy_episode()
        ep.y_hat = None
        with pytest.raises(DataError):
            train_model([ep], ReservoirConfig(n_r=10))


def test_episode_inputs_layout():
    ep = toy_episode(n=280)
    u = episode_inputs(ep, True, u2=[0.0, 1.0, 0.0])
    assert u.shape == (280, 7)
    np.testing.assert_array_equal(u[:, 0], ep.cap)
    np.testing.assert_array_equal(u[:, 3], ep.setpoint)
    assert np.all(u[:, 4:] == [0.0, 1.0, 0.0])
    assert episode_inputs(ep, False).shape == (280, 3)
