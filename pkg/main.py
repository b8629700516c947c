"""
irvfusion 雾天红外/可见光联合去雾融合系统

主入口文件

功能：
    合成带真值的有雾数据集，训练提示引导的去雾融合网络，
    对红外与有雾可见光图像做推理，并计算融合指标。

Version:
    1.0.0
"""

import sys

from cli import main


if __name__ == "__main__":
    sys.exit(main())
