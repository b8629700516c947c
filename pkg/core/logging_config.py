"""
日志配置模块

命令行每次运行都先调用 setup_logging，core 中的模块直接使用根日志器
（logging.debug/info/warning/error），不各自创建 logger。

日志文件:
- 位置: --log-dir 指定，默认 <程序目录>/logs
- 命名: irvfusion_YYYYMMDD.log，每天一个，启动时删除今天及以前的旧文件
- 内容: DEBUG 级别，"时间 - 级别 - 消息"；训练每步一行 DEBUG，每个 epoch 一行 INFO
- --no-log 时根日志器整体关闭，只保留标准错误上的一行错误提示

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import os
import logging
from datetime import datetime

LOG_PREFIX = "irvfusion_"
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def log_file_name(day: str) -> str:
    return f"{LOG_PREFIX}{day}.log"


def setup_logging(log_dir: str) -> str:
    """
    设置日志系统

    参数:
        log_dir (str): 日志文件存储目录的路径

    返回:
        str: 当前日志文件的完整路径

    处理流程:
        1. 检查并创建日志目录（如果不存在）
        2. 清理日期不晚于今天的 irvfusion_*.log
        3. 重新配置根日志器，写入今天的日志文件
        4. 返回日志文件路径

    错误处理:
        - 目录创建失败: 抛出 OSError，由命令行入口映射为退出码 2
        - 文件删除失败: 打印警告，不中断程序

    注意:
        根日志器已有处理器时（例如同一进程中多次运行命令）会先移除旧处理器，
        否则 basicConfig 不会生效。
    """
    # 步骤1: 创建日志目录（如果不存在）
    if not os.path.exists(log_dir):
        os.makedirs(log_dir)

    today = datetime.now().strftime("%Y%m%d")

    # 步骤2: 清理历史日志文件
    try:
        for name in os.listdir(log_dir):
            if name.startswith(LOG_PREFIX) and name.endswith(".log"):
                file_date = name[len(LOG_PREFIX):-len(".log")]
                if file_date <= today:
                    try:
                        os.remove(os.path.join(log_dir, name))
                    except Exception as e:
                        print(f"清理日志文件失败 {name}: {str(e)}")
    except Exception as e:
        print(f"清理历史日志时出错: {str(e)}")

    log_file = os.path.join(log_dir, log_file_name(today))

    # 步骤3: 配置日志系统
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    logging.basicConfig(
        filename=log_file,
        level=logging.DEBUG,
        format=LOG_FORMAT,
        encoding="utf-8",
    )
    root.disabled = False

    return log_file


def disable_logging() -> None:
    """关闭日志输出（--no-log）"""
    logging.getLogger().disabled = True
