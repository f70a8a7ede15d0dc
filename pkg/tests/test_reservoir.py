import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import dense_spectral_radius
from steadyrc.errors import ConfigError, DataError, DegenerateMatrix, DimensionMismatch
from steadyrc.reservoir import (
    ReservoirConfig,
    ReservoirWeights,
    harvest_batch,
    harvest_states,
    init_weights,
    readout,
    rescale_spectral_radius,
    spectral_radius,
    update_state,
)


def scalar_weights(w_in=1.0, w_res=0.0, w_bias=0.0):
    return ReservoirWeights(w_in=np.array([[w_in]]), w_res=np.array([[w_res]]), w_bias=np.array([w_bias]))


class TestConfig:
    def test_defaults(self):
        c = ReservoirConfig()
        assert (c.n_r, c.alpha, c.rho_target, c.v_inp, c.v_bias) == (600, 0.1, 0.2, 0.4, 0.2)
        assert c.weight_dist == "gaussian"

    @pytest.mark.parametrize(
        "kw", [dict(alpha=0.0), dict(alpha=1.5), dict(rho_target=0.0), dict(n_r=0), dict(v_inp=-1.0),
               dict(v_bias=-0.1), dict(weight_dist="uniform")]
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            ReservoirConfig(**kw)


class TestInitWeights:
    def test_deterministic(self):
        cfg = ReservoirConfig(n_r=30, n_i=4, seed=7)
        a, b = init_weights(cfg), init_weights(cfg)
        for name in ("w_in", "w_res", "w_bias"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_seed_matters(self):
        a = init_weights(ReservoirConfig(n_r=30, seed=1))
        b = init_weights(ReservoirConfig(n_r=30, seed=2))
        assert not np.array_equal(a.w_res, b.w_res)

    def test_zero_input_scaling(self):
        w = init_weights(ReservoirConfig(n_r=20, v_inp=0.0))
        assert np.all(w.w_in == 0)

    @pytest.mark.parametrize("dist", ["gaussian", "discrete"])
    def test_spectral_radius_on_target(self, dist):
        w = init_weights(ReservoirConfig(n_r=50, rho_target=0.2, weight_dist=dist))
        assert dense_spectral_radius(w.w_res) == pytest.approx(0.2, abs=1e-6)

    def test_discrete_values(self):
        cfg = ReservoirConfig(n_r=40, n_i=3, weight_dist="discrete", v_inp=1.0, v_bias=1.0)
        w = init_weights(cfg)
        assert set(np.unique(w.w_in)) <= {-1.0, 0.0, 1.0}
        assert set(np.unique(w.w_bias)) <= {-1.0, 0.0, 1.0}

    def test_immutable(self):
        w = init_weights(ReservoirConfig(n_r=10))
        with pytest.raises(ValueError):
            w.w_res[0, 0] = 1.0


class TestSpectralRadius:
    def test_diagonal(self):
        out = rescale_spectral_radius(np.diag([2.0, 1.0]), 0.2)
        np.testing.assert_allclose(out, np.diag([0.2, 0.1]), atol=1e-12)

    def test_already_on_target(self):
        w = np.diag([0.2, -0.1, 0.05])
        np.testing.assert_allclose(rescale_spectral_radius(w, 0.2), w, rtol=1e-12)

    @pytest.mark.parametrize("w", [np.zeros((2, 2)), np.array([[0.0, 1.0], [0.0, 0.0]])])
    def test_degenerate(self, w):
        with pytest.raises(DegenerateMatrix):
            rescale_spectral_radius(w, 0.2)

    def test_complex_dominant_pair(self):
        # rotation block: eigenvalues +/- 3i dominate a real eigenvalue 2.9
        w = np.zeros((3, 3))
        w[:2, :2] = [[0.0, -3.0], [3.0, 0.0]]
        w[2, 2] = 2.9
        assert spectral_radius(w) == pytest.approx(3.0, rel=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(2, 60), seed=st.integers(0, 10_000), target=st.floats(0.05, 1.5))
    def test_matches_dense_solver(self, n, seed, target):
        w = np.random.default_rng(seed).standard_normal((n, n))
        assert dense_spectral_radius(rescale_spectral_radius(w, target)) == pytest.approx(target, abs=1e-6)


class TestUpdateState:
    def test_zero_fixed_point(self):
        w = ReservoirWeights(w_in=np.ones((3, 2)), w_res=np.eye(3) * 0.1, w_bias=np.zeros(3))
        assert np.all(update_state(w, np.zeros(3), np.zeros(2), 0.3) == 0)

    def test_scalar_alpha_one(self):
        x = update_state(scalar_weights(), np.zeros(1), np.array([0.5]), 1.0)
        assert x[0] == pytest.approx(np.tanh(0.5), abs=1e-15)

    def test_scalar_leaky(self):
        x = update_state(scalar_weights(w_res=0.1), np.array([0.2]), np.array([1.0]), 0.5)
        assert x[0] == pytest.approx(np.tanh(0.61), abs=1e-15)

    def test_input_not_modified(self):
        x = np.array([0.2])
        update_state(scalar_weights(w_res=0.1), x, np.array([1.0]), 0.5)
        assert x[0] == 0.2

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            update_state(scalar_weights(), np.zeros(2), np.array([1.0]), 0.5)
        with pytest.raises(DimensionMismatch):
            update_state(scalar_weights(), np.zeros(1), np.array([1.0, 2.0]), 0.5)


@pytest.fixture
def small_weights():
    return init_weights(ReservoirConfig(n_r=25, n_i=3, seed=3))


class TestHarvest:
    def test_zero_inputs_zero_bias(self):
        w = ReservoirWeights(w_in=np.ones((4, 2)), w_res=np.eye(4) * 0.2, w_bias=np.zeros(4))
        assert np.all(harvest_states(w, np.zeros((10, 2)), 0.1) == 0)

    def test_one_step(self, small_weights):
        u = np.array([[0.3, -0.2, 0.9]])
        states = harvest_states(small_weights, u, 0.1)
        np.testing.assert_allclose(states[0], update_state(small_weights, np.zeros(25), u[0], 0.1), atol=1e-15)

    def test_matches_iterated_update(self, small_weights):
        u = np.random.default_rng(0).uniform(0, 1, (40, 3))
        states = harvest_states(small_weights, u, 0.3)
        x = np.zeros(25)
        for t in range(40):
            x = update_state(small_weights, x, u[t], 0.3)
            np.testing.assert_allclose(states[t], x, atol=1e-14)

    def test_reset_isolates_episodes(self, small_weights):
        u = np.random.default_rng(1).uniform(0, 1, (30, 3))
        assert np.array_equal(harvest_states(small_weights, u, 0.1), harvest_states(small_weights, u, 0.1))

    def test_empty(self, small_weights):
        with pytest.raises(DataError):
            harvest_states(small_weights, np.zeros((0, 3)), 0.1)

    def test_batch_equals_single(self, small_weights):
        rng = np.random.default_rng(2)
        eps = [rng.uniform(0, 1, (n, 3)) for n in (5, 40, 17)]
        for single, batched in zip((harvest_states(small_weights, e, 0.2) for e in eps),
                                   harvest_batch(small_weights, eps, 0.2)):
            np.testing.assert_allclose(batched, single, atol=1e-14)

    def test_bounded(self, small_weights):
        u = np.random.default_rng(3).uniform(-5, 5, (100, 3))
        states = harvest_states(small_weights, u, 1.0)
        assert np.all(np.abs(states) < 1)


class TestReadout:
    def test_bias_only(self):
        w_out = np.r_[np.zeros(5), 0.3]
        assert readout(w_out, np.random.default_rng(0).uniform(-1, 1, 5)) == pytest.approx(0.3)
        assert readout(w_out, np.zeros(5)) == pytest.approx(0.3)

    def test_zero_state_gives_bias(self):
        w_out = np.r_[np.arange(4.0), -1.5]
        assert readout(w_out, np.zeros(4)) == -1.5

    def test_elementwise_oracle(self):
        rng = np.random.default_rng(4)
        w_out, x = rng.standard_normal(8), rng.uniform(-1, 1, 7)
        expected = sum(w_out[i] * x[i] for i in range(7)) + w_out[7]
        assert readout(w_out, x) == pytest.approx(expected, abs=1e-13)

    def test_stacked_states(self):
        rng = np.random.default_rng(5)
        w_out, xs = rng.standard_normal(4), rng.uniform(-1, 1, (6, 3))
        np.testing.assert_allclose(readout(w_out, xs), [readout(w_out, x) for x in xs])

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            readout(np.zeros(4), np.zeros(4))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_fading_memory(seed):
    rng = np.random.default_rng(seed)
    cfg = ReservoirConfig(n_r=40, n_i=1, rho_target=0.2, alpha=1.0, v_bias=0.0, seed=seed)
    w = init_weights(cfg)
    x = rng.uniform(-1, 1, 40)
    x /= max(1.0, np.linalg.norm(x))
    norms = [np.linalg.norm(x)]
    for _ in range(50):
        x = update_state(w, x, np.zeros(1), 1.0)
        norms.append(np.linalg.norm(x))
    assert all(b <= a for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-6
