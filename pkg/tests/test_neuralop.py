import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaystep import neuralop
from delaystep.neuralop import (
    DeepONetConfig,
    DeepONetWeights,
    default_config,
    forward,
    forward_batch,
    gains_from_network,
    load_weights,
    plant_encoding,
    predict_kernel,
    random_weights,
    reference_forward,
    save_weights,
    zero_weights,
)
from delaystep.plant import PlantConfig, SpatialGrid, eval_coefficients


@pytest.fixture(scope="module")
def small_cfg():
    return default_config("K", reduced=True)


@pytest.fixture(scope="module")
def small_weights(small_cfg):
    return random_weights(small_cfg, seed=1)


def _enc(cfg, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((cfg.input_channels, cfg.grid_points,
                                cfg.grid_points))


class TestConfig:
    def test_default_full_sizes(self):
        cfg = default_config("K")
        assert cfg.flatten_dim == 12800
        assert cfg.conv_out_spatial == 10
        assert cfg.branch_fc == (12800, 512, 256)
        assert cfg.trunk_fc == (2601, 128, 256)
        assert cfg.input_channels == 3
        assert default_config("L").input_channels == 4
        assert default_config("Q1").input_channels == 2
        assert default_config("Q1").query_dim == 1
        # one-variable outputs carry a lattice matching their query grid
        assert default_config("Q1").trunk_fc == (51, 128, 256)
        assert default_config("J").trunk_fc == (51, 128, 256)

    def test_raw_mode_trunk_dims(self):
        assert default_config("K", query_encoding="raw").trunk_fc[0] == 2
        assert default_config("J", query_encoding="raw").trunk_fc[0] == 1

    def test_bad_flatten_rejected(self):
        with pytest.raises(ValueError):
            DeepONetConfig(kind="K", input_channels=3,
                           branch_fc=(999, 512, 256)).validate()

    def test_round_trip_dict(self):
        cfg = default_config("L")
        assert DeepONetConfig.from_dict(cfg.to_dict()) == cfg


class TestWeights:
    def test_shape_validation(self, small_cfg):
        w = zero_weights(small_cfg)
        bad = dict(w.tensors)
        bad["fc1_w"] = np.zeros((3, 3))
        with pytest.raises(ValueError, match="shape"):
            DeepONetWeights(config=small_cfg, tensors=bad)

    def test_missing_tensor_rejected(self, small_cfg):
        w = zero_weights(small_cfg)
        partial = {k: v for k, v in w.tensors.items() if k != "out_b"}
        with pytest.raises(ValueError, match="missing"):
            DeepONetWeights(config=small_cfg, tensors=partial)


class TestForward:
    def test_zero_network_outputs_zero(self, small_cfg):
        w = zero_weights(small_cfg)
        out = forward(w, _enc(small_cfg), np.array([[0.3, 0.6], [0.0, 1.0]]))
        assert np.all(out == 0.0)

    def test_single_basis_dot_product(self, small_cfg):
        # zero weights except constant heads: branch = (2,0,..),
        # trunk = (3,0,..) at every query, so the output is 6 everywhere
        w = zero_weights(small_cfg)
        w.tensors["fc2_b"][0] = 2.0
        w.tensors["trunk2_b"][0] = 3.0
        out = forward(w, _enc(small_cfg), np.array([[0.2, 0.9]]))
        assert out[0] == pytest.approx(6.0, abs=1e-14)

    def test_matches_reference_grid_mode(self, small_weights, small_cfg):
        rng = np.random.default_rng(5)
        q = rng.uniform(0, 1, (25, 2))
        enc = _enc(small_cfg, 2)
        assert np.max(np.abs(forward(small_weights, enc, q)
                             - reference_forward(small_weights, enc, q))) <= 1e-12

    def test_matches_reference_raw_mode(self):
        cfg = default_config("Q1", query_encoding="raw", reduced=True)
        w = random_weights(cfg, seed=3)
        rng = np.random.default_rng(6)
        q = rng.uniform(0, 1, (25, 1))
        enc = _enc(cfg, 3)
        assert np.max(np.abs(forward(w, enc, q)
                             - reference_forward(w, enc, q))) <= 1e-12

    def test_deterministic(self, small_weights, small_cfg):
        enc = _enc(small_cfg, 7)
        q = np.array([[0.5, 0.75]])
        assert forward(small_weights, enc, q) == forward(small_weights, enc, q)

    def test_shape_mismatch_rejected_before_compute(self, small_weights):
        with pytest.raises(ValueError, match="encoding shape"):
            forward(small_weights, np.zeros((1, 51, 51)), np.array([[0.1, 0.2]]))
        with pytest.raises(ValueError, match="coordinates"):
            forward(small_weights, _enc(small_weights.config),
                    np.array([[0.1]]))

    @settings(max_examples=10, deadline=None)
    @given(lam=st.floats(min_value=-3.0, max_value=3.0,
                         allow_nan=False, allow_subnormal=False))
    def test_branch_head_linearity(self, small_cfg, lam):
        # scaling the final branch layer scales every output by the same
        # factor (inner-product structure; output bias kept at zero)
        w = random_weights(small_cfg, seed=11)
        w.tensors["out_b"][0] = 0.0
        scaled = {k: v.copy() for k, v in w.tensors.items()}
        scaled["fc2_w"] = lam * scaled["fc2_w"]
        scaled["fc2_b"] = lam * scaled["fc2_b"]
        w2 = DeepONetWeights(config=small_cfg, tensors=scaled)
        enc = _enc(small_cfg, 12)
        q = np.array([[0.25, 0.5], [0.1, 0.9]])
        assert np.allclose(forward(w2, enc, q), lam * forward(w, enc, q),
                           atol=1e-10)

    def test_batch_matches_single(self, small_weights, small_cfg):
        rng = np.random.default_rng(8)
        encs = rng.standard_normal((3, small_cfg.input_channels, 51, 51))
        q = rng.uniform(0, 1, (17, 2))
        batched = forward_batch(small_weights, encs, q)
        for i in range(3):
            assert np.allclose(batched[i], forward(small_weights, encs[i], q),
                               atol=1e-11)


class TestEncodingsAndGains:
    def test_plant_encoding_channels(self, paper_cfg, paper_coeff):
        enc = plant_encoding("K", paper_cfg, paper_coeff)
        assert enc.shape == (3, 51, 51)
        assert np.all(enc[0] == paper_cfg.tau)
        assert np.array_equal(enc[1], paper_coeff.f_grid)
        assert np.array_equal(enc[2][:, 0], paper_coeff.c_grid)
        enc_q = plant_encoding("Q1", paper_cfg, paper_coeff)
        assert enc_q.shape == (2, 51, 51)
        assert np.all(enc_q[0] == paper_cfg.h)

    def test_zero_networks_give_zero_feedback(self, paper_cfg, paper_coeff,
                                              grid02):
        bundle = {k: zero_weights(default_config(k, reduced=True))
                  for k in ("K", "L", "J")}
        g = gains_from_network(bundle, paper_cfg, paper_coeff, grid02,
                               need="control")
        from delaystep.simulate import control_full_state, initial_state
        state = initial_state(grid02, np.sin(grid02.s))
        assert control_full_state(state, g, paper_cfg.h, paper_cfg.eta,
                                  grid02.ds) == 0.0

    def test_missing_network_is_configuration_error(self, paper_cfg,
                                                    paper_coeff, grid02):
        bundle = {"K": zero_weights(default_config("K", reduced=True))}
        with pytest.raises(ValueError, match="missing networks"):
            gains_from_network(bundle, paper_cfg, paper_coeff, grid02,
                               need="control")

    def test_predict_kernel_shapes(self, paper_cfg, paper_coeff, grid02):
        w = random_weights(default_config("K", reduced=True), seed=2)
        out = predict_kernel(w, paper_cfg, paper_coeff, grid02)
        assert out.shape == (51, 51)
        assert np.all(out[np.tril_indices(51, -1)] == 0.0)
        wq = random_weights(default_config("Q2", reduced=True), seed=2)
        assert predict_kernel(wq, paper_cfg, paper_coeff, grid02).shape == (51,)


class TestWeightsIO:
    def test_save_load_round_trip(self, tmp_path, small_weights):
        p = tmp_path / "w.pdon"
        save_weights(p, {"K": small_weights}, extra_meta={"loss": 1e-5})
        back = load_weights(p)
        assert back["K"].config == small_weights.config
        for name, arr in small_weights.tensors.items():
            assert np.array_equal(back["K"].tensors[name], arr)

    def test_config_echo_mismatch_rejected(self, tmp_path, small_weights):
        import json

        from delaystep.container import read_container, write_container
        p = tmp_path / "w.pdon"
        save_weights(p, {"K": small_weights})
        cont = read_container(p)
        cont.meta["deeponet_config"]["networks"]["K"]["conv_channels"] = [8, 16]
        write_container(p, cont.arrays, cont.meta)
        with pytest.raises(ValueError):
            load_weights(p)

    def test_missing_config_block_rejected(self, tmp_path):
        from delaystep.container import write_container
        p = tmp_path / "w.pdon"
        write_container(p, {"K/conv1_w": np.zeros((4, 3, 5, 5))}, meta={})
        with pytest.raises(ValueError, match="deeponet_config"):
            load_weights(p)


def test_bench_smoke(tmp_path):
    bundle = {k: random_weights(default_config(k), seed=i)
              for i, k in enumerate(("K", "L", "J"))}
    rep = neuralop.bench_inference(bundle, [1, 2], (0.05,), runs=1,
                                   target="control")
    row = rep["rows"][0]
    assert row["ds"] == 0.05
    assert row["solver_mean_s"] > 0 and row["infer_mean_s"] > 0
    assert "protocol" in rep
