"""
命令行应用

负责参数解析、日志初始化和退出码映射，具体工作交给 cli.commands。

退出码:
    0  成功
    1  输入校验失败（ValidationError 及其子类），或自检/梯度校验未通过
    2  读写失败（OSError，包括 FormatError）

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from core.errors import ValidationError
from core.logging_config import disable_logging, setup_logging
from utils import DEFAULT_LOG_DIR, base_dir

from . import commands

PROG = "irvfusion"
EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
DEFAULT_OUT = "."


def _common_parser() -> argparse.ArgumentParser:
    """各子命令共用的参数，可以写在子命令之后"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="配置文件路径（key = value）")
    common.add_argument("--seed", type=int, help="随机种子，覆盖配置文件中的 seed")
    common.add_argument("--out", default=None, help="输出目录，默认当前目录；evaluate 默认写入 --data")
    common.add_argument("--log-dir", default=None, help=f"日志目录，默认 <程序目录>/{DEFAULT_LOG_DIR}")
    common.add_argument("--no-log", action="store_true", help="不写日志文件")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog=PROG, description="雾天红外/可见光联合去雾融合")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", parents=[common], help="合成带真值的有雾数据集")
    p.add_argument("--scenes", type=int, default=8, help="场景数")
    p.add_argument("--size", type=int, default=64, help="场景边长")
    p.add_argument("--clear", help="单幅模式: 清晰可见光 PNG")
    p.add_argument("--depth", help="单幅模式: 深度张量文件 (.irvf)")
    p.add_argument("--beta", type=float, help="单幅模式: 散射系数，缺省时随机抽取")
    p.add_argument("--airlight", type=float, help="单幅模式: 大气光，缺省时随机抽取")
    p.set_defaults(handler=commands.cmd_synthesize)

    p = sub.add_parser("train", parents=[common], help="在数据集目录上训练")
    p.add_argument("--data", required=True, help="数据集根目录（ir/ vi/ gt/）")
    p.add_argument("--steps", type=int, help="总步数，覆盖由 epochs 推出的步数")
    p.add_argument("--resume", help="从该检查点继续训练")
    p.set_defaults(handler=commands.cmd_train)

    for name, handler, text in (("dehaze", commands.cmd_dehaze, "输出去雾图像与雾浓度"),
                                ("fuse", commands.cmd_fuse, "输出融合图像、去雾图像与雾浓度")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--ir", required=True, help="红外 PNG 或目录")
        p.add_argument("--vis", required=True, help="有雾可见光 PNG 或目录")
        p.add_argument("--checkpoint", required=True, help="检查点文件")
        p.set_defaults(handler=handler)

    p = sub.add_parser("baseline", parents=[common], help="暗通道去雾 + 平均融合")
    p.add_argument("--ir", required=True, help="红外 PNG 或目录")
    p.add_argument("--vis", required=True, help="有雾可见光 PNG 或目录")
    p.add_argument("--window", type=int, default=15, help="暗通道窗口")
    p.set_defaults(handler=commands.cmd_baseline)

    p = sub.add_parser("evaluate", parents=[common], help="计算融合指标并写出报告")
    p.add_argument("--data", required=True, help="评估目录（fused/ ir/ gt/ [dehazed/]）")
    p.set_defaults(handler=commands.cmd_evaluate)

    p = sub.add_parser("gradcheck", parents=[common], help="梯度校验")
    p.add_argument("--seeds", type=int, default=20, help="随机种子个数")
    p.set_defaults(handler=commands.cmd_gradcheck)

    p = sub.add_parser("selftest", parents=[common], help="运行全部自检")
    p.add_argument("--seeds", type=int, default=20, help="梯度校验的随机种子个数")
    p.set_defaults(handler=commands.cmd_selftest)
    return parser


def _init_logging(args) -> Optional[str]:
    if args.no_log:
        disable_logging()
        return None
    log_dir = args.log_dir or os.path.join(base_dir(), DEFAULT_LOG_DIR)
    return setup_logging(log_dir)


def main(argv: Optional[List[str]] = None) -> int:
    """
    命令行入口

    参数:
        argv: 参数列表，None 时使用 sys.argv[1:]

    返回:
        int: 进程退出码

    错误处理:
        ValidationError → 1，OSError → 2；两种情况都记录完整堆栈并打印一行错误信息
    """
    args = build_parser().parse_args(argv)
    if args.out is None and args.command != "evaluate":
        args.out = DEFAULT_OUT
    try:
        log_file = _init_logging(args)
    except OSError as e:
        print(f"错误: 无法初始化日志: {e}", file=sys.stderr)
        return EXIT_IO
    logging.info(f"执行命令: {args.command}, 参数: {vars(args)}, 日志: {log_file}")

    try:
        code = args.handler(args)
    except ValidationError as e:
        logging.error(f"{args.command} 输入校验失败: {str(e)}", exc_info=True)
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        logging.error(f"{args.command} 读写失败: {str(e)}", exc_info=True)
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_IO
    except Exception as e:
        logging.error(f"{args.command} 执行出错: {str(e)}", exc_info=True)
        raise
    logging.info(f"{args.command} 完成, 退出码 {code}")
    return code
