import math

import numpy as np
import pytest

import oracles
import qagnn.training as training
from qagnn.feature_map import EncoderConfig
from qagnn.graph import FlowGraph, build_graph, hop_operators
from qagnn.model import VARIANTS, forward, init_params
from qagnn.synthetic import make_clusters
from qagnn.training import (
    AdamState,
    TrainConfig,
    TrainingError,
    adam_step,
    bce_with_logits,
    loss_and_gradients,
    loss_gradients,
    train,
)

CFG = EncoderConfig(4, 2)


def total_loss(graph, hops, params, cfg):
    return bce_with_logits(forward(graph, hops, params, cfg), graph.labels)


def check_fd(graph, hops, params, cfg, tol=1e-5):
    _, grads = loss_and_gradients(graph, hops, params, cfg)
    g = grads.to_dict()
    base = params.to_dict()
    for name in params.trainable():
        fd = oracles.finite_difference(
            lambda a: total_loss(graph, hops, params.with_arrays({name: a}), cfg), base[name])
        np.testing.assert_allclose(g[name], fd, atol=tol, err_msg=name)


def duplicated(g):
    N = g.n_nodes
    A = np.zeros((2 * N, 2 * N), dtype=g.adjacency.dtype)
    A[:N, :N] = A[N:, N:] = g.adjacency
    return FlowGraph(np.vstack([g.features] * 2), np.concatenate([g.labels] * 2), A,
                     g.node_ids + [f"{i}'" for i in g.node_ids])


class TestBce:
    def test_examples(self):
        assert bce_with_logits([0.0], [1]) == pytest.approx(math.log(2))
        assert bce_with_logits([0.0], [0]) == pytest.approx(math.log(2))
        assert bce_with_logits([100.0], [1]) < 1e-10
        assert bce_with_logits([-800.0], [1]) == pytest.approx(800.0)

    def test_matches_naive_form(self, rng):
        l, y = rng.normal(size=20), rng.integers(0, 2, 20)
        p = 1 / (1 + np.exp(-l))
        ref = -np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))
        assert bce_with_logits(l, y) == pytest.approx(ref, abs=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            bce_with_logits([], [])
        with pytest.raises(ValueError):
            bce_with_logits([0.0, 1.0], [1])


class TestGradients:
    @pytest.mark.parametrize("variant", VARIANTS)
    def test_finite_differences_statevector(self, toy_graph, variant):
        g, h = toy_graph
        check_fd(g, h, init_params(CFG, variant, seed=11, angle_scale=1.0), CFG)

    @pytest.mark.parametrize("variant", ["full", "one_hop_attention"])
    def test_finite_differences_density(self, toy_graph, variant):
        g, h = toy_graph
        cfg = EncoderConfig(4, 2, backend="density", noise_p=0.05)
        check_fd(g, h, init_params(cfg, variant, seed=12, angle_scale=1.0), cfg)

    def test_tanh_fusion(self, toy_graph):
        g, h = toy_graph
        check_fd(g, h, init_params(CFG, "full", seed=13, activation="tanh", angle_scale=1.0), CFG)

    def test_edgeless_node_wise_has_no_attention_gradient(self, toy_graph):
        g, _ = toy_graph
        e = FlowGraph(g.features, g.labels, np.zeros_like(g.adjacency), g.node_ids)
        grads = loss_gradients(e, hop_operators(e), init_params(CFG, "node_wise_qnn", seed=1), CFG)
        for name in ("attn.w1", "attn.b1", "attn.w2", "attn.b2"):
            assert not grads.to_dict()[name].any()

    def test_duplicated_graph_node_wise(self, toy_graph):
        g, h = toy_graph
        p = init_params(CFG, "node_wise_qnn", seed=3, angle_scale=1.0)
        d = duplicated(g)
        single = loss_gradients(g, h, p, CFG).to_dict()
        double = loss_gradients(d, hop_operators(d), p, CFG).to_dict()
        for name in p.trainable():
            np.testing.assert_allclose(double[name], single[name], atol=1e-10)

    def test_duplicated_graph_uniform_attention_is_size_dependent(self, toy_graph):
        # alpha = 1/N halves when N doubles, so copies do not reproduce the single-graph gradient
        g, h = toy_graph
        p = init_params(CFG, "pqc_no_attention", seed=3, angle_scale=1.0)
        d = duplicated(g)
        single = loss_gradients(g, h, p, CFG).to_dict()
        double = loss_gradients(d, hop_operators(d), p, CFG).to_dict()
        assert np.abs(double["theta"] - single["theta"]).max() > 1e-6

    def test_sampled_backend_rejected(self, toy_graph):
        from qagnn.feature_map import UnsupportedBackend
        g, h = toy_graph
        cfg = EncoderConfig(backend="sampled")
        with pytest.raises(UnsupportedBackend):
            loss_gradients(g, h, init_params(cfg, seed=0), cfg)


class TestAdam:
    def test_zero_gradient_no_decay(self):
        p = init_params(CFG, seed=0)
        zeros = p.with_arrays({k: np.zeros_like(v) for k, v in p.to_dict().items()})
        new, state = adam_step(p, zeros, AdamState(), TrainConfig(weight_decay=0.0))
        for k, v in p.to_dict().items():
            np.testing.assert_array_equal(new.to_dict()[k], v)
        assert state.step == 1

    def test_first_step_is_signed_learning_rate(self, rng):
        p = init_params(CFG, seed=0)
        g = p.with_arrays({k: rng.normal(size=v.shape) for k, v in p.to_dict().items()})
        new, _ = adam_step(p, g, AdamState(), TrainConfig(learning_rate=0.01, weight_decay=0.0))
        for k in p.trainable():
            step = new.to_dict()[k] - p.to_dict()[k]
            gk = g.to_dict()[k]
            np.testing.assert_allclose(step, -0.01 * gk / (np.abs(gk) + 1e-8), atol=1e-14)
            big = np.abs(gk) > 1e-3
            np.testing.assert_allclose(step[big], -0.01 * np.sign(gk[big]), atol=1e-7)

    def test_quadratic_descent(self):
        # f(w) = w^2 on the output bias alone; every other gradient is zero
        p = init_params(CFG, seed=0)
        p = p.with_arrays({"mlp.b_o": np.array([1.0])})
        zero = {k: np.zeros_like(v) for k, v in p.to_dict().items()}
        state, cfg = AdamState(), TrainConfig(learning_rate=0.1, weight_decay=0.0)
        prev = 1.0
        for _ in range(10):
            w = p.mlp.b_o
            p, state = adam_step(p, p.with_arrays({**zero, "mlp.b_o": np.array([2 * w])}), state, cfg)
            assert abs(p.mlp.b_o) < prev
            prev = abs(p.mlp.b_o)

    def test_coupled_weight_decay(self):
        p = init_params(CFG, seed=0)
        zero = p.with_arrays({k: np.zeros_like(v) for k, v in p.to_dict().items()})
        new, _ = adam_step(p, zero, AdamState(), TrainConfig(weight_decay=0.1))
        # decay enters the raw gradient, so the first step is again lr * sign(w)
        w = p.to_dict()["mlp.W_h"]
        np.testing.assert_allclose(new.to_dict()["mlp.W_h"], w - 0.01 * np.sign(w), atol=1e-7)

    def test_angles_exempt_when_requested(self):
        p = init_params(CFG, seed=0)
        zero = p.with_arrays({k: np.zeros_like(v) for k, v in p.to_dict().items()})
        new, _ = adam_step(p, zero, AdamState(), TrainConfig(weight_decay=0.1, decay_angles=False))
        np.testing.assert_array_equal(new.theta, p.theta)


@pytest.fixture
def small_split():
    ids, X, y = make_clusters(n_nodes=40, seed=2)
    tr, va = slice(0, 28), slice(28, 40)
    g_tr = build_graph(X[tr], y[tr], ids[tr])
    g_va = build_graph(X[va], y[va], ids[va])
    return g_tr, g_va


class TestTrain:
    def test_patience_one_stops_at_epoch_two(self, small_split, monkeypatch):
        values = iter([0.5, 0.7, 0.9, 1.1])
        monkeypatch.setattr(training, "validation_loss", lambda *a: next(values))
        g_tr, g_va = small_split
        rep = train(g_tr, g_va, init_params(CFG, "node_wise_qnn"), TrainConfig(patience=1), CFG)
        assert rep.epochs_run == 2 and rep.best_epoch == 1
        assert rep.stop_reason == "early_stopping"

    def test_single_epoch(self, small_split):
        g_tr, g_va = small_split
        rep = train(g_tr, g_va, init_params(CFG), TrainConfig(max_epochs=1), CFG)
        assert rep.epochs_run == 1 and len(rep.val_losses) == 1
        assert rep.stop_reason == "max_epochs"

    def test_returns_best_validation_parameters(self, small_split, monkeypatch):
        values = iter([0.9, 0.3, 0.4, 0.5])
        seen = []

        def fake(graph, hops, params, cfg):
            seen.append(params)
            return next(values)

        monkeypatch.setattr(training, "validation_loss", fake)
        g_tr, g_va = small_split
        rep = train(g_tr, g_va, init_params(CFG, "mlp_attention"), TrainConfig(patience=2), CFG)
        assert rep.best_epoch == 2 and rep.params is seen[1]

    def test_nan_aborts(self, small_split, monkeypatch):
        monkeypatch.setattr(training, "validation_loss", lambda *a: float("nan"))
        g_tr, g_va = small_split
        with pytest.raises(TrainingError, match="epoch 1"):
            train(g_tr, g_va, init_params(CFG), TrainConfig(), CFG)

    def test_sampled_backend_rejected(self, small_split):
        g_tr, g_va = small_split
        cfg = EncoderConfig(backend="sampled")
        with pytest.raises(ValueError):
            train(g_tr, g_va, init_params(cfg), TrainConfig(), cfg)

    def test_separable_data_and_report_invariants(self, small_split):
        g_tr, g_va = small_split
        cfg = TrainConfig(max_epochs=200, patience=30)
        rep = train(g_tr, g_va, init_params(CFG, "full", seed=0), cfg, CFG)
        assert rep.train_losses[rep.best_epoch - 1] < 0.1
        assert all(rep.val_losses[rep.best_epoch - 1] <= v for v in rep.val_losses)
        assert rep.epochs_run - rep.best_epoch <= cfg.patience
        again = train(g_tr, g_va, init_params(CFG, "full", seed=0), cfg, CFG)
        assert again.train_losses == rep.train_losses and again.val_losses == rep.val_losses

    def test_report_outputs(self, small_split, tmp_path):
        g_tr, g_va = small_split
        rep = train(g_tr, g_va, init_params(CFG, "mlp_no_attention"), TrainConfig(max_epochs=3), CFG)
        rep.write_loss_csv(tmp_path / "loss.csv")
        lines = (tmp_path / "loss.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_loss,val_loss" and len(lines) == 4
        js = rep.to_json()
        assert js["best_epoch"] == rep.best_epoch and js["stop_reason"] == "max_epochs"
