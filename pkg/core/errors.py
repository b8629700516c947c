"""
异常定义模块

本模块定义了系统中使用的异常层次结构。
命令行入口根据异常类型决定退出码：

- ValidationError 及其子类: 输入、参数或配置校验失败，退出码 1
- OSError（包括 FormatError）: 文件读写失败或文件格式损坏，退出码 2

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

from typing import Optional


class IRVFusionError(Exception):
    """系统所有自定义异常的基类"""


class ValidationError(IRVFusionError, ValueError):
    """输入或参数校验失败"""


class DimensionError(ValidationError):
    """
    张量形状不匹配

    属性:
        axis (str): 出错的维度名称，例如 'channels'、'height'、'width'
    """

    def __init__(self, message: str, axis: Optional[str] = None):
        self.axis = axis
        if axis:
            message = f"{message} [维度: {axis}]"
        super().__init__(message)


class ParameterError(ValidationError):
    """物理或算法参数超出合法范围（如负的散射系数、偶数窗口）"""


class NumericError(ValidationError):
    """数值计算出现非有限值（NaN/Inf）"""


class ConfigError(ValidationError):
    """配置文件或配置项非法"""


class RegistrationError(ValidationError):
    """红外与可见光图像未配准（空间尺寸不一致）"""


class DatasetError(ValidationError):
    """数据集目录结构不完整，例如缺少对应的无雾真值图像"""


class FormatError(IRVFusionError, OSError):
    """张量文件或检查点文件格式损坏"""
