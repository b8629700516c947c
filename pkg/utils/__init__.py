"""
工具函数模块

包含常量定义和通用工具函数。
"""

import os
import sys
from typing import Optional

import numpy as np

DEFAULT_LOG_DIR = "logs"


def make_rng(seed: Optional[int]) -> np.random.Generator:
    """每次运行使用一个按种子构造的生成器"""
    return np.random.default_rng(seed)


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def base_dir() -> str:
    """程序所在目录；打包后为可执行文件所在目录"""
    if getattr(sys, 'frozen', False):
        return os.path.dirname(sys.executable)
    return os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


__all__ = ['DEFAULT_LOG_DIR', 'make_rng', 'ensure_dir', 'base_dir']
