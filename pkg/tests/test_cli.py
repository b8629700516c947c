"""命令行入口的测试: 退出码与端到端流程"""

import os
import shutil

import pytest

from cli.app import EXIT_IO, EXIT_OK, EXIT_VALIDATION, main

SMALL_CONFIG = """
channels = 4
encoder_blocks = 1
ffn_expansion = 2.0
pool_size = 8
dark_window_feature = 3
guided_radius = 2
crop_size = 16
batch_size = 1
"""


@pytest.fixture
def dataset(tmp_path):
    data = tmp_path / "data"
    assert main(["synthesize", "--scenes", "2", "--size", "16", "--out", str(data), "--no-log"]) == EXIT_OK
    return data


def test_synthesize_layout(dataset):
    for sub in ("ir", "vi", "gt", "depth"):
        assert len(os.listdir(dataset / sub)) == 2


def test_baseline_then_evaluate(dataset, tmp_path, capsys):
    out = tmp_path / "baseline"
    code = main(["baseline", "--ir", str(dataset / "ir"), "--vis", str(dataset / "vi"),
                 "--window", "7", "--out", str(out), "--no-log"])
    assert code == EXIT_OK
    assert sorted(os.listdir(out / "fused")) == ["scene_000.png", "scene_001.png"]

    shutil.copytree(dataset / "ir", out / "ir")
    shutil.copytree(dataset / "gt", out / "gt")
    assert main(["evaluate", "--data", str(out), "--no-log"]) == EXIT_OK
    for name in ("metrics.csv", "metrics.json", "metrics.xlsx"):
        assert (out / name).exists()
    assert "q_abf" in capsys.readouterr().out


def test_train_then_fuse(dataset, tmp_path):
    config = tmp_path / "small.cfg"
    config.write_text(SMALL_CONFIG, encoding="utf-8")
    run = tmp_path / "run"
    code = main(["train", "--data", str(dataset), "--config", str(config), "--steps", "2",
                 "--seed", "1", "--out", str(run), "--no-log"])
    assert code == EXIT_OK
    assert (run / "model.irvc").exists()

    result = tmp_path / "result"
    code = main(["fuse", "--ir", str(dataset / "ir" / "scene_000.png"), "--vis", str(dataset / "vi" / "scene_000.png"),
                 "--checkpoint", str(run / "model.irvc"), "--out", str(result), "--no-log"])
    assert code == EXIT_OK
    assert {"fused.png", "dehazed.png", "haze.png", "haze.irvf"} <= set(os.listdir(result))


def test_resume_then_batch_fuse(dataset, tmp_path):
    config = tmp_path / "small.cfg"
    config.write_text(SMALL_CONFIG, encoding="utf-8")
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["train", "--data", str(dataset), "--config", str(config), "--steps", "1",
                 "--out", str(first), "--no-log"]) == EXIT_OK
    assert main(["train", "--data", str(dataset), "--config", str(config), "--steps", "1",
                 "--resume", str(first / "model.irvc"), "--out", str(second), "--no-log"]) == EXIT_OK
    with open(second / "loss_curve.csv", encoding="utf-8") as handle:
        assert handle.read().splitlines()[1].startswith("1,")

    result = tmp_path / "batch"
    code = main(["fuse", "--ir", str(dataset / "ir"), "--vis", str(dataset / "vi"),
                 "--checkpoint", str(second / "model.irvc"), "--out", str(result), "--no-log"])
    assert code == EXIT_OK
    for kind in ("fused", "dehazed"):
        assert sorted(os.listdir(result / kind)) == ["scene_000.png", "scene_001.png"]
    assert sorted(os.listdir(result / "haze")) == ["scene_000.irvf", "scene_000.png", "scene_001.irvf", "scene_001.png"]


def test_missing_resume_checkpoint_exit_code(dataset, tmp_path):
    code = main(["train", "--data", str(dataset), "--resume", str(tmp_path / "absent.irvc"),
                 "--out", str(tmp_path / "run"), "--no-log"])
    assert code == EXIT_IO


def test_validation_error_exit_code(tmp_path, capsys):
    code = main(["synthesize", "--size", "2", "--out", str(tmp_path), "--no-log"])
    assert code == EXIT_VALIDATION
    assert "错误" in capsys.readouterr().err


def test_bad_config_exit_code(dataset, tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("no_hdee = true\n", encoding="utf-8")
    code = main(["train", "--data", str(dataset), "--config", str(config), "--out", str(tmp_path), "--no-log"])
    assert code == EXIT_VALIDATION


def test_missing_checkpoint_exit_code(dataset, tmp_path):
    code = main(["dehaze", "--ir", str(dataset / "ir"), "--vis", str(dataset / "vi"),
                 "--checkpoint", str(tmp_path / "absent.irvc"), "--out", str(tmp_path), "--no-log"])
    assert code == EXIT_IO


def test_corrupt_checkpoint_exit_code(dataset, tmp_path):
    ckpt = tmp_path / "broken.irvc"
    ckpt.write_bytes(b"not a checkpoint")
    code = main(["fuse", "--ir", str(dataset / "ir"), "--vis", str(dataset / "vi"),
                 "--checkpoint", str(ckpt), "--out", str(tmp_path), "--no-log"])
    assert code == EXIT_IO


def test_gradcheck_command(capsys):
    assert main(["gradcheck", "--seeds", "1", "--no-log"]) == EXIT_OK
    assert "total_loss" in capsys.readouterr().out


def test_log_file_written(dataset, tmp_path):
    logs = tmp_path / "logs"
    assert main(["synthesize", "--scenes", "1", "--size", "8", "--out", str(tmp_path / "d"),
                 "--log-dir", str(logs)]) == EXIT_OK
    assert any(name.startswith("irvfusion_") for name in os.listdir(logs))


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["sharpen"])
