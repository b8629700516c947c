"""训练循环的测试"""

import csv

import numpy as np
import pytest

from core.checkpoint import load_checkpoint
from core.config import TrainConfig
from core.datasets import synthesize_suite, write_dataset
from core.errors import ConfigError, DatasetError
from core.metrics import psnr
from core.optim import cosine_lr
from core.pipeline import infer
from core.trainer import LOSS_COLUMNS, train, train_from_directory

from .helpers import small_train_config


@pytest.fixture
def pairs():
    return [scene.pair() for scene in synthesize_suite(np.random.default_rng(1), 3, size=20)]


def test_same_seed_same_curve(pairs):
    first = train(pairs, small_train_config(steps=3, seed=4))
    second = train(pairs, small_train_config(steps=3, seed=4))
    np.testing.assert_array_equal(first.loss_curve(), second.loss_curve())
    assert len(first.history) == 3


def test_different_seed_different_curve(pairs):
    first = train(pairs, small_train_config(steps=2, seed=0))
    second = train(pairs, small_train_config(steps=2, seed=1))
    assert not np.array_equal(first.loss_curve(), second.loss_curve())


def test_learning_rate_schedule(pairs):
    result = train(pairs, small_train_config(steps=4))
    assert [row["lr"] for row in result.history] == [cosine_lr(s, 4, 1e-3, 1e-5) for s in range(4)]


def test_loss_rows_are_consistent(pairs):
    config = small_train_config(steps=2)
    for row in train(pairs, config).history:
        expected = row["l_int"] + row["l_grad"] + config.alpha * row["l_1"]
        assert row["l_total"] == pytest.approx(expected, rel=1e-5)
        assert min(row["l_int"], row["l_grad"], row["l_1"]) >= 0.0


def test_outputs_written(pairs, tmp_path):
    loss_csv = tmp_path / "loss.csv"
    ckpt = tmp_path / "model.irvc"
    result = train(pairs, small_train_config(steps=2), loss_csv=str(loss_csv), checkpoint_path=str(ckpt))

    with open(loss_csv, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == LOSS_COLUMNS
    assert len(rows) == 3
    assert [float(v) for v in rows[-1][1:]] == [result.history[-1][k] for k in LOSS_COLUMNS[1:]]

    checkpoint = load_checkpoint(str(ckpt))
    assert checkpoint.step == 2
    assert checkpoint.moments


def test_ablated_model_trains(pairs):
    result = train(pairs, small_train_config(steps=2, no_f_ir=True))
    assert np.all(np.isfinite(result.loss_curve()))


def test_missing_ground_truth(pairs):
    pairs[1].gt = None
    with pytest.raises(DatasetError):
        train(pairs, small_train_config())


def test_crop_larger_than_images(pairs):
    config = small_train_config()
    config.crop_size = 32
    with pytest.raises(ConfigError):
        train(pairs, config)


def test_empty_dataset():
    with pytest.raises(DatasetError):
        train([], small_train_config())


def test_train_from_directory(tmp_path):
    data = tmp_path / "data"
    write_dataset(str(data), synthesize_suite(np.random.default_rng(2), 2, size=16))
    train_from_directory(str(data), small_train_config(steps=1), str(tmp_path / "run"))
    assert (tmp_path / "run" / "loss_curve.csv").exists()
    assert (tmp_path / "run" / "model.irvc").exists()


def test_resume_continues_step_count(pairs, tmp_path):
    ckpt = tmp_path / "model.irvc"
    first = train(pairs, small_train_config(steps=2), checkpoint_path=str(ckpt))
    resumed = train(pairs, small_train_config(steps=2, seed=5), checkpoint_path=str(ckpt),
                    resume=load_checkpoint(str(ckpt)))
    assert [row["step"] for row in first.history] == [0, 1]
    assert [row["step"] for row in resumed.history] == [2, 3]
    assert load_checkpoint(str(ckpt)).step == 4


def test_resume_keeps_checkpoint_topology(pairs, tmp_path):
    ckpt = tmp_path / "model.irvc"
    train(pairs, small_train_config(steps=1, no_f_ir=True), checkpoint_path=str(ckpt))
    result = train(pairs, small_train_config(steps=1), resume=load_checkpoint(str(ckpt)))
    assert result.model.config.no_f_ir


@pytest.mark.slow
def test_small_model_overfits():
    scenes = synthesize_suite(np.random.default_rng(0), 4, size=64)
    config = small_train_config(steps=500)
    config.crop_size = 64
    config.batch_size = 4
    config.lr_init = 2e-3
    curve = train([s.pair() for s in scenes], config).loss_curve()
    assert curve[-10:].mean() < 0.3 * curve[:10].mean()


@pytest.mark.slow
def test_default_model_learns_toy_suite():
    # 默认网络 (C=16, batch 6, 余弦 2e-4 → 2e-6) 在 4 个 64×64 合成场景上训练 500 步
    pairs = [scene.pair() for scene in synthesize_suite(np.random.default_rng(0), 4, size=64)]
    result = train(pairs, TrainConfig(crop_size=64, max_steps=500, seed=0))
    curve = result.loss_curve()
    assert curve[-10:].mean() < 0.3 * curve[0]

    gains = [psnr(infer(result.model, pair.ir, pair.vis).dehazed, pair.gt) - psnr(pair.vis, pair.gt)
             for pair in pairs]
    assert np.mean(gains) >= 2.0
