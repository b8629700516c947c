"""
测试公共夹具

- rng: 固定种子的随机数生成器
- float64: 在 64 位精度下运行测试体
- tiny_config: 小规模网络配置，端到端测试使用
- --runslow: 默认跳过标记为 slow 的测试
"""

import logging

import numpy as np
import pytest

from core.tensor import precision

from .helpers import small_model_config


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="运行标记为 slow 的测试")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="需要 --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def restore_root_logger():
    # 命令行测试会改写根日志器（--no-log 或 setup_logging）
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in list(root.handlers):
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    for handler in handlers:
        if handler not in root.handlers:
            root.addHandler(handler)
    root.setLevel(level)
    root.disabled = False


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def float64():
    with precision(np.float64):
        yield


@pytest.fixture
def tiny_config():
    return small_model_config()
