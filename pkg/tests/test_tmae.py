import json

import numpy as np
import pytest

from ecdtransfer import nn
from ecdtransfer.data import DataError, SchemaError, Standardizer, fit_standardizer
from ecdtransfer.tmae import (
    EncoderCheckpoint,
    PretrainConfig,
    apply_mask,
    embed,
    loss_trend_decreasing,
    n_masked,
    pretrain,
    random_checkpoint,
    reconstruct,
    sample_mask,
    sample_mask_matrix,
)

NAMES6 = tuple(f"f{i}" for i in range(6))


class TestMasks:
    def test_count_at_default_ratio(self):
        assert n_masked(11, 0.70) == 8
        rng = np.random.default_rng(0)
        assert sample_mask(11, 0.70, rng).size == 8

    def test_small_ratio(self):
        assert n_masked(11, 0.05) == 1

    @pytest.mark.parametrize("ratio", [0.01, 0.97])
    def test_degenerate_ratio(self, ratio):
        with pytest.raises(ValueError):
            n_masked(11, ratio)

    def test_matrix_exact_per_row(self):
        m = sample_mask_matrix(500, 11, 0.7, np.random.default_rng(1))
        assert np.all(m.sum(axis=1) == 8)

    def test_frequency_uniform(self):
        m = sample_mask_matrix(10_000, 11, 0.7, np.random.default_rng(2))
        np.testing.assert_allclose(m.mean(axis=0), 8 / 11, atol=0.02)

    def test_single_row_draws_uniform(self):
        rng = np.random.default_rng(3)
        counts = np.zeros(11)
        for _ in range(10_000):
            counts[sample_mask(11, 0.7, rng)] += 1
        np.testing.assert_allclose(counts / 10_000, 8 / 11, atol=0.02)

    def test_apply_mask_examples(self):
        np.testing.assert_array_equal(apply_mask(np.array([1.0, 2.0]), [1], np.array([9.0, 9.0])), [1, 9])
        row = np.array([3.0, -1.0, 4.0])
        np.testing.assert_array_equal(apply_mask(row, np.zeros(3, bool), np.ones(3)), row)
        np.testing.assert_array_equal(apply_mask(row, np.ones(3, bool), np.zeros(3)), np.zeros(3))

    def test_apply_mask_matrix(self):
        rows = np.arange(6.0).reshape(2, 3)
        mask = np.array([[True, False, False], [False, False, True]])
        out = apply_mask(rows, mask, np.array([-1.0, -2.0, -3.0]))
        np.testing.assert_array_equal(out, [[-1, 1, 2], [3, 4, -3]])


class TestConfig:
    def test_defaults(self):
        cfg = PretrainConfig()
        assert (cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.mask_ratio) == (100, 512, 0.001, 0.70)
        assert cfg.hidden_dims == (256, 64)

    @pytest.mark.parametrize("kw", [{"mask_ratio": 0.0}, {"mask_ratio": 1.0}, {"epochs": 0}, {"batch_size": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            PretrainConfig(**kw)


def identity_standardizer(d):
    names = tuple(f"f{i}" for i in range(d))
    return Standardizer(np.zeros(d), np.ones(d), names)


class TestPretrain:
    def test_constant_data_memorized(self):
        X = np.tile(np.array([0.5, -1.0, 2.0, 0.0, 1.5, -0.5]), (64, 1))
        cfg = PretrainConfig(epochs=50, batch_size=16, hidden_dims=(32, 8), learning_rate=0.01, mask_ratio=0.5, seed=1)
        ckpt = pretrain(X, cfg, NAMES6, standardizer=identity_standardizer(6))
        assert ckpt.pretrain_meta["final_loss"] < 1e-3
        assert loss_trend_decreasing(ckpt.pretrain_meta["loss_history"])

    def test_duplicated_feature_recovered(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((2000, 6))
        X[:, 5] = X[:, 0]
        cfg = PretrainConfig(epochs=40, batch_size=128, hidden_dims=(64, 16), learning_rate=0.003, mask_ratio=0.35, seed=2)
        ckpt = pretrain(X[:1500], cfg, NAMES6)
        held = X[1500:]
        mask = np.zeros(held.shape, bool)
        mask[:, 5] = True
        _, mse = reconstruct(ckpt, held, mask)
        Z = ckpt.standardizer.transform(held)[:, 5]
        baseline = np.mean(Z**2)  # column-mean predictor in standardized units
        assert mse < 0.2 * baseline

    def test_metadata_and_shapes(self, small_ckpt, small_data):
        meta = small_ckpt.pretrain_meta
        assert len(meta["loss_history"]) == meta["epochs"] == 5
        assert meta["final_loss"] == meta["loss_history"][-1]
        assert "final_unmasked_loss" in meta
        assert small_ckpt.encoder.layer_dims == [11, 32, 8]
        assert small_ckpt.decoder.layer_dims == [8, 32, 11]

    def test_seeded(self):
        X = np.random.default_rng(4).standard_normal((100, 6))
        cfg = PretrainConfig(epochs=2, batch_size=32, hidden_dims=(16, 4), seed=5)
        a, b = pretrain(X, cfg, NAMES6), pretrain(X, cfg, NAMES6)
        assert a.digest() == b.digest()

    def test_width_mismatch(self):
        with pytest.raises(SchemaError):
            pretrain(np.zeros((10, 5)), PretrainConfig(epochs=1), NAMES6)

    def test_non_finite_aborts(self):
        X = np.random.default_rng(0).standard_normal((40, 6))
        X[3, 2] = np.nan
        std = identity_standardizer(6)
        with pytest.raises(nn.NumericalError, match="epoch 0"):
            pretrain(X, PretrainConfig(epochs=1, batch_size=8, hidden_dims=(8, 4)), std.feature_names, std)


class TestEmbedAndReconstruct:
    def test_paper_width(self, small_data):
        std = fit_standardizer(small_data.X, small_data.feature_names)
        ckpt = random_checkpoint(small_data.feature_names, std, seed=0)
        Z = embed(ckpt, small_data.X[:20])
        assert Z.shape == (20, 64)
        assert np.all(Z >= 0)

    def test_deterministic(self, small_ckpt, small_data):
        np.testing.assert_array_equal(embed(small_ckpt, small_data.X[:50]), embed(small_ckpt, small_data.X[:50]))

    def test_round_trip_bit_identical(self, small_ckpt, small_data, tmp_path):
        p = small_ckpt.save(tmp_path / "ck.json")
        back = EncoderCheckpoint.load(p)
        a, b = embed(small_ckpt, small_data.X), embed(back, small_data.X)
        assert a.tobytes() == b.tobytes()
        assert back.digest() == small_ckpt.digest()

    def test_zero_std_rejected_on_load(self, small_ckpt):
        d = json.loads(json.dumps(small_ckpt.to_dict()))
        d["standardizer"]["std"][3] = 0.0
        with pytest.raises((DataError, SchemaError)):
            EncoderCheckpoint.from_dict(d)

    def test_wrong_format(self, small_ckpt):
        d = small_ckpt.to_dict()
        d["format_version"] = "other/9"
        with pytest.raises(SchemaError):
            EncoderCheckpoint.from_dict(d)

    def test_feature_count_mismatch(self, small_ckpt):
        with pytest.raises(SchemaError):
            embed(small_ckpt, np.zeros((3, 10)))

    def test_empty_mask_rejected(self, small_ckpt, small_data):
        with pytest.raises(Exception):
            reconstruct(small_ckpt, small_data.X[:5], np.zeros((5, 11), bool))

    def test_random_checkpoint_loss_near_one(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((4000, 11))
        names = tuple(f"x{i}" for i in range(11))
        std = fit_standardizer(X, names)
        mask = sample_mask_matrix(4000, 11, 0.7, rng)
        losses = [reconstruct(random_checkpoint(names, std, seed=s), X, mask)[1] for s in range(5)]
        assert all(0.7 <= v <= 1.3 for v in losses)

    def test_identity_autoencoder(self):
        # weights are (out, in); the net copies the visible feature into its masked twin
        d = 2
        names = ("a", "b")
        std = Standardizer(np.zeros(2), np.ones(2), names)
        enc = nn.MlpParams(
            [np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]), np.eye(4)],
            [np.zeros(4), np.zeros(4)],
        )
        dec = nn.MlpParams(
            [np.eye(4), np.array([[1.0, -1.0, 0.0, 0.0], [1.0, -1.0, 0.0, 0.0]])],
            [np.zeros(4), np.zeros(2)],
        )
        ckpt = EncoderCheckpoint(enc, dec, np.zeros(d), std, names)
        x = np.random.default_rng(0).standard_normal(200)
        rows = np.c_[x, x]
        mask = np.zeros(rows.shape, bool)
        mask[:, 1] = True
        _, mse = reconstruct(ckpt, rows, mask)
        assert mse < 1e-20
