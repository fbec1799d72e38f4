import math

import numpy as np
import pytest
from scipy.special import expit

from localcodes import (
    ActivationRecord,
    CodeSpec,
    ConfigError,
    NetworkConfig,
    TrainedNetwork,
    TrainingError,
    UsageError,
    accuracy,
    forward,
    forward_batch,
    generate_dataset,
    gradient_check,
    train,
)
from localcodes.network import dropout_mask, load_network, save_network

DESK_SPEC = CodeSpec(codeword_length=100, num_classes=5, num_codewords=100,
                     random_weight=30, seed=101)
DESK_NET = NetworkConfig(input_size=100, hidden_size=100, output_size=50,
                         epochs=5000, optimizer="sgd", loss="mse",
                         learning_rate=5.0, dtype="float32", init_seed=202)


def zero_net(d, h, o, activation="sigmoid"):
    cfg = NetworkConfig(input_size=d, hidden_size=h, output_size=o,
                        hidden_activation=activation, epochs=0)
    return TrainedNetwork(config=cfg,
                          W1=np.zeros((d, h)), b1=np.zeros(h),
                          W2=np.zeros((h, o)), b2=np.zeros(o),
                          final_loss=math.nan, reached_full_accuracy=False,
                          epochs_run=0)


class TestForward:
    def test_zero_weights_sigmoid_gives_half_everywhere(self):
        net = zero_net(4, 3, 2)
        hidden, output = forward(net, np.ones(4))
        assert np.allclose(hidden, 0.5)
        assert np.allclose(output, 0.5)

    def test_zero_weights_relu_hidden_zero_output_half(self):
        net = zero_net(4, 3, 2, activation="relu")
        hidden, output = forward(net, np.ones(4))
        assert np.allclose(hidden, 0.0)
        assert np.allclose(output, 0.5)

    def test_matches_hand_rolled_matrix_products(self):
        # straight-line reimplementation, no shared code path
        rng = np.random.default_rng(8)
        cfg = NetworkConfig(input_size=5, hidden_size=3, output_size=2, epochs=0)
        W1 = rng.normal(size=(5, 3))
        b1 = rng.normal(size=3)
        W2 = rng.normal(size=(3, 2))
        b2 = rng.normal(size=2)
        net = TrainedNetwork(config=cfg, W1=W1, b1=b1, W2=W2, b2=b2,
                             final_loss=0.0, reached_full_accuracy=False, epochs_run=0)
        x = rng.random(5)
        hidden, output = forward(net, x)
        h_expect = np.array([1.0 / (1.0 + math.exp(-(sum(x[i] * W1[i, j] for i in range(5)) + b1[j])))
                             for j in range(3)])
        o_expect = np.array([1.0 / (1.0 + math.exp(-(sum(h_expect[j] * W2[j, k] for j in range(3)) + b2[k])))
                             for k in range(2)])
        np.testing.assert_allclose(hidden, h_expect, atol=1e-12)
        np.testing.assert_allclose(output, o_expect, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(UsageError):
            forward(zero_net(4, 3, 2), np.ones(5))


class TestTrain:
    def test_zero_epochs_returns_initialized_network(self):
        ds = generate_dataset(DESK_SPEC)
        cfg = NetworkConfig(input_size=100, hidden_size=10, output_size=50, epochs=0)
        net, record = train(ds, cfg)
        assert net.epochs_run == 0
        assert math.isnan(net.final_loss)
        assert net.reached_full_accuracy is False
        assert record.activations.shape == (100, 10)

    def test_desk_scale_reaches_full_accuracy(self):
        ds = generate_dataset(DESK_SPEC)
        net, _ = train(ds, DESK_NET)
        assert net.reached_full_accuracy
        assert accuracy(net, ds) == 1.0

    def test_training_is_deterministic(self):
        ds = generate_dataset(DESK_SPEC)
        cfg = NetworkConfig(input_size=100, hidden_size=20, output_size=50,
                            epochs=50, optimizer="adam", init_seed=7)
        n1, r1 = train(ds, cfg)
        n2, r2 = train(ds, cfg)
        assert np.array_equal(n1.W1, n2.W1)
        assert np.array_equal(n1.W2, n2.W2)
        assert np.array_equal(r1.activations, r2.activations)
        assert n1.final_loss == n2.final_loss

    def test_seed_changes_outcome(self):
        ds = generate_dataset(DESK_SPEC)
        cfg = NetworkConfig(input_size=100, hidden_size=20, output_size=50,
                            epochs=5, init_seed=7)
        n1, _ = train(ds, cfg)
        n2, _ = train(ds, NetworkConfig(**{**cfg.to_dict(), "init_seed": 8}))
        assert not np.array_equal(n1.W1, n2.W1)

    def test_divergence_raises_with_epoch(self):
        # a step size at the float ceiling overflows the logits within epochs
        ds = generate_dataset(DESK_SPEC)
        cfg = NetworkConfig(input_size=100, hidden_size=10, output_size=50,
                            epochs=100, optimizer="sgd", loss="bce",
                            learning_rate=1e308, init_seed=1)
        with pytest.raises(TrainingError) as err:
            with np.errstate(all="ignore"):
                train(ds, cfg)
        assert err.value.epoch is not None

    def test_loss_history_finite_and_windows_non_increasing(self):
        ds = generate_dataset(DESK_SPEC)
        net, _ = train(ds, DESK_NET)
        losses = net.loss_history
        assert np.all(np.isfinite(losses))
        window = 500
        # adaptive/stochastic phases may wobble; allow a small transient rise
        for start in range(0, len(losses) - window, window):
            assert losses[start + window] <= losses[start] * 1.05

    def test_minibatch_path_runs_and_is_deterministic(self):
        ds = generate_dataset(DESK_SPEC)
        cfg = NetworkConfig(input_size=100, hidden_size=15, output_size=50,
                            epochs=30, batch_size=32, optimizer="adam", init_seed=3)
        n1, _ = train(ds, cfg)
        n2, _ = train(ds, cfg)
        assert np.array_equal(n1.W1, n2.W1)
        assert np.isfinite(n1.final_loss)

    def test_shape_mismatch_rejected(self):
        ds = generate_dataset(DESK_SPEC)
        cfg = NetworkConfig(input_size=99, hidden_size=10, output_size=50, epochs=1)
        with pytest.raises(UsageError):
            train(ds, cfg)
        cfg = NetworkConfig(input_size=100, hidden_size=10, output_size=10, epochs=1)
        with pytest.raises(UsageError):
            train(ds, cfg)

    def test_relu_record_non_negative(self):
        ds = generate_dataset(DESK_SPEC)
        cfg = NetworkConfig(input_size=100, hidden_size=20, output_size=50,
                            hidden_activation="relu", epochs=100, init_seed=5)
        _, record = train(ds, cfg)
        assert record.activations.min() >= 0.0


class TestAccuracy:
    def _single_class_dataset(self):
        spec = CodeSpec(codeword_length=20, num_classes=1, num_codewords=10,
                        random_weight=0, perturbation_rate=0.5, seed=4)
        return generate_dataset(spec)

    def test_saturated_net_scores_one(self):
        ds = self._single_class_dataset()
        target = ds.class_targets[0].astype(np.float64)
        cfg = NetworkConfig(input_size=20, hidden_size=2, output_size=ds.target_length,
                            epochs=0)
        net = TrainedNetwork(config=cfg, W1=np.zeros((20, 2)), b1=np.zeros(2),
                             W2=np.zeros((2, ds.target_length)),
                             b2=(target - 0.5) * 100.0,
                             final_loss=0.0, reached_full_accuracy=False, epochs_run=0)
        assert accuracy(net, ds) == 1.0

    def test_output_at_half_is_incorrect(self):
        ds = self._single_class_dataset()
        net = zero_net(20, 2, ds.target_length)
        assert accuracy(net, ds) == 0.0

    def test_margin_is_strict(self):
        # outputs exactly at the 0.9 / 0.1 margins do not count
        ds = self._single_class_dataset()
        target = ds.class_targets[0].astype(np.float64)
        logit = math.log(0.9 / 0.1)
        cfg = NetworkConfig(input_size=20, hidden_size=2, output_size=ds.target_length,
                            epochs=0)
        net = TrainedNetwork(config=cfg, W1=np.zeros((20, 2)), b1=np.zeros(2),
                             W2=np.zeros((2, ds.target_length)),
                             b2=np.where(target == 1, logit, -logit),
                             final_loss=0.0, reached_full_accuracy=False, epochs_run=0)
        assert accuracy(net, ds) == 0.0


class TestGradientCheck:
    def test_zero_parameters(self):
        cfg = NetworkConfig(input_size=5, hidden_size=3, output_size=2, epochs=1)
        rng = np.random.default_rng(0)
        X = rng.integers(0, 2, (4, 5)).astype(float)
        T = rng.integers(0, 2, (4, 2)).astype(float)
        params = [np.zeros((5, 3)), np.zeros(3), np.zeros((3, 2)), np.zeros(2)]
        assert gradient_check(cfg, X, T, params=params) < 1e-6

    @pytest.mark.parametrize("loss", ["bce", "mse"])
    def test_random_sigmoid_net(self, loss):
        cfg = NetworkConfig(input_size=5, hidden_size=3, output_size=2, epochs=1,
                            loss=loss, init_seed=12)
        rng = np.random.default_rng(30)
        X = rng.random((6, 5))
        T = rng.integers(0, 2, (6, 2)).astype(float)
        assert gradient_check(cfg, X, T) < 1e-4

    def test_random_relu_net_away_from_kinks(self):
        cfg = NetworkConfig(input_size=5, hidden_size=3, output_size=2, epochs=1,
                            hidden_activation="relu", init_seed=13)
        rng = np.random.default_rng(31)
        X = rng.random((6, 5)) + 0.5  # keeps pre-activations clear of zero
        T = rng.integers(0, 2, (6, 2)).astype(float)
        assert gradient_check(cfg, X, T) < 1e-4


class TestDropoutMask:
    def test_inverted_scaling_preserves_expectation(self):
        rng = np.random.default_rng(77)
        rate = 0.4
        total = np.zeros(50)
        n_masks = 10_000
        for _ in range(n_masks):
            total += dropout_mask(rng, 50, rate, np.float64)
        mean = total / n_masks
        assert np.all(np.abs(mean - 1.0) < 0.02)

    def test_mask_values(self):
        rng = np.random.default_rng(1)
        mask = dropout_mask(rng, 1000, 0.5, np.float64)
        assert set(np.unique(mask)) <= {0.0, 2.0}


class TestConfigValidation:
    def test_rejects_bad_values(self):
        good = dict(input_size=4, hidden_size=2, output_size=2)
        with pytest.raises(ConfigError):
            NetworkConfig(**{**good, "dropout_rate": 1.0})
        with pytest.raises(ConfigError):
            NetworkConfig(**{**good, "hidden_activation": "tanh"})
        with pytest.raises(ConfigError):
            NetworkConfig(**{**good, "optimizer": "rmsprop"})
        with pytest.raises(ConfigError):
            NetworkConfig(**{**good, "learning_rate": 0.0})
        with pytest.raises(ConfigError):
            NetworkConfig(**{**good, "hidden_size": 0})


class TestSerialization:
    def test_checkpoint_round_trip(self, tmp_path):
        ds = generate_dataset(DESK_SPEC)
        cfg = NetworkConfig(input_size=100, hidden_size=8, output_size=50,
                            epochs=20, init_seed=9)
        net, record = train(ds, cfg)
        path = tmp_path / "model.bin"
        save_network(net, path)
        back = load_network(path)
        assert back.config == net.config
        assert np.array_equal(back.W1, net.W1)
        assert np.array_equal(back.b2, net.b2)
        assert back.final_loss == net.final_loss
        assert back.reached_full_accuracy == net.reached_full_accuracy

    def test_activation_record_round_trip(self, tmp_path):
        ds = generate_dataset(DESK_SPEC)
        cfg = NetworkConfig(input_size=100, hidden_size=8, output_size=50,
                            epochs=5, init_seed=9)
        _, record = train(ds, cfg)
        path = tmp_path / "acts.bin"
        record.save(path)
        back = ActivationRecord.load(path)
        assert np.array_equal(back.activations, record.activations)
        assert np.array_equal(back.class_ids, record.class_ids)

    def test_record_rejects_out_of_range_sigmoid(self):
        with pytest.raises(ConfigError):
            ActivationRecord(activations=np.array([[1.2]]), class_ids=np.array([0]))

    def test_record_rejects_non_finite(self):
        with pytest.raises(ConfigError):
            ActivationRecord(activations=np.array([[np.nan]]), class_ids=np.array([0]))


class TestBatchForward:
    def test_batch_matches_single(self):
        rng = np.random.default_rng(2)
        cfg = NetworkConfig(input_size=6, hidden_size=4, output_size=3, epochs=0)
        net = TrainedNetwork(config=cfg,
                             W1=rng.normal(size=(6, 4)), b1=rng.normal(size=4),
                             W2=rng.normal(size=(4, 3)), b2=rng.normal(size=3),
                             final_loss=0.0, reached_full_accuracy=False, epochs_run=0)
        X = rng.random((5, 6))
        H, Y = forward_batch(net, X)
        for i in range(5):
            h, y = forward(net, X[i])
            np.testing.assert_allclose(H[i], h, atol=1e-12)
            np.testing.assert_allclose(Y[i], y, atol=1e-12)
