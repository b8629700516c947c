"""
命令行模块

包含参数解析、退出码映射和各子命令的处理函数。
"""

from .app import build_parser, main

__all__ = ['build_parser', 'main']
