"""
数据模型定义模块

本模块定义了红外可见光去雾融合系统中使用的核心数据类。

主要功能:
- 定义图像对数据结构 (ImagePair)
- 定义雾霾合成参数 (HazeParams) 与雾浓度估计结果 (HazeEstimate)
- 定义复原阶段中间状态 (RestorationState)
- 定义评估报告结构 (MetricRow, MetricReport)
- 定义评估工作簿的单元格样式配置 (CellStyle, CellStyles)
- 定义自检结果 (CheckResult)

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from openpyxl.styles import Font, PatternFill

from .errors import ParameterError, RegistrationError
from .tensor import Tensor


@dataclass
class ImagePair:
    """
    配准的红外/可见光图像对

    属性:
        ir (np.ndarray): 红外图像，形状 (1, H, W)，取值 [0, 1]
        vis (np.ndarray): 有雾可见光图像，形状 (3, H, W)
        gt (np.ndarray | None): 无雾真值可见光图像，形状 (3, H, W)；推理时可以缺省
        name (str): 图像名称，来自文件名，用于报告和日志

    示例:
        >>> pair = ImagePair(np.zeros((1, 64, 64)), np.zeros((3, 64, 64)))
        >>> pair.size
        (64, 64)
    """

    ir: np.ndarray
    vis: np.ndarray
    gt: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        """
        校验通道数与空间尺寸

        说明:
            红外必须单通道、可见光必须三通道；三幅图像空间尺寸必须一致，
            否则视为未配准，抛出 RegistrationError。
        """
        if self.ir.ndim != 3 or self.ir.shape[0] != 1:
            raise RegistrationError(f"红外图像应为 (1, H, W)，实际 {self.ir.shape}")
        if self.vis.ndim != 3 or self.vis.shape[0] != 3:
            raise RegistrationError(f"可见光图像应为 (3, H, W)，实际 {self.vis.shape}")
        if self.ir.shape[1:] != self.vis.shape[1:]:
            raise RegistrationError(f"红外 {self.ir.shape[1:]} 与可见光 {self.vis.shape[1:]} 尺寸不一致")
        if self.gt is not None and self.gt.shape != self.vis.shape:
            raise RegistrationError(f"真值 {self.gt.shape} 与可见光 {self.vis.shape} 形状不一致")

    @property
    def size(self):
        return self.vis.shape[1], self.vis.shape[2]


@dataclass
class HazeParams:
    """
    大气散射模型参数

    属性:
        atmospheric_light (np.ndarray): 每个 RGB 通道的大气光 A，取值 (0, 1]
        beta (float): 散射系数 β ≥ 0
        depth (np.ndarray): 深度图 (1, H, W)，非负

    透射率 t = exp(−β·d) 恒在 (0, 1]，β = 0 时 t ≡ 1。
    """

    atmospheric_light: np.ndarray
    beta: float
    depth: np.ndarray

    def __post_init__(self):
        self.atmospheric_light = np.asarray(self.atmospheric_light, dtype=np.float64).reshape(-1)
        if self.beta < 0:
            raise ParameterError(f"散射系数不能为负: {self.beta}")
        if np.any(self.depth < 0):
            raise ParameterError("深度图含负值")
        if np.any(self.atmospheric_light <= 0) or np.any(self.atmospheric_light > 1):
            raise ParameterError(f"大气光必须在 (0, 1] 内: {self.atmospheric_light}")

    def transmission(self) -> np.ndarray:
        """真值透射率 t = exp(−β·d)"""
        return np.exp(-self.beta * np.asarray(self.depth, dtype=np.float64))


@dataclass
class HazeEstimate:
    """
    雾浓度估计结果

    属性:
        transmission (Tensor): 初始透射率 T，(1, H, W)，[0, 1]
        refined (Tensor): 导向滤波后的透射率 T′
        density (Tensor): 雾浓度 H = 1 − T′
        atmospheric_light (np.ndarray): 估计的大气光，每通道一个值
        omega (float): 去雾保留系数，固定 0.95
    """

    transmission: Tensor
    refined: Tensor
    density: Tensor
    atmospheric_light: np.ndarray
    omega: float = 0.95


@dataclass
class RestorationState:
    """
    红外辅助特征复原的输出

    属性:
        ir_compensated (Tensor): 提示嵌入后的红外特征 F̂_ir
        haze (HazeEstimate | None): 雾浓度估计；消融 "w/o F_ir" 或 "w/o HDE" 时为 None
        restored (Tensor): 复原后的可见光特征 F̂_vi
        dehazed_raw (Tensor): 去雾头的未截断输出，损失函数使用
    """

    ir_compensated: Optional[Tensor]
    haze: Optional[HazeEstimate]
    restored: Tensor
    dehazed_raw: Tensor

    @property
    def dehazed(self) -> np.ndarray:
        """去雾图像 Î_vi，截断到 [0, 1]"""
        return np.clip(self.dehazed_raw.data, 0.0, 1.0)


METRIC_NAMES = ["q_mi", "q_abf", "q_scd", "q_sf"]
EXCLUDED_METRICS = ["q_vif", "q_cv", "q_pi", "q_niqe"]


@dataclass
class MetricRow:
    """单幅图像的评估结果；psnr 仅在提供去雾中间结果时计算"""

    name: str
    q_mi: float
    q_abf: float
    q_scd: float
    q_sf: float
    psnr: Optional[float] = None

    def values(self) -> Dict[str, float]:
        data = {key: getattr(self, key) for key in METRIC_NAMES}
        if self.psnr is not None:
            data["psnr"] = self.psnr
        return data


@dataclass
class MetricReport:
    """
    评估报告

    属性:
        rows (List[MetricRow]): 每幅图像一行
        mean (Dict[str, float]): 各指标均值
        std (Dict[str, float]): 各指标标准差（总体标准差）
    """

    rows: List[MetricRow] = field(default_factory=list)
    mean: Dict[str, float] = field(default_factory=dict)
    std: Dict[str, float] = field(default_factory=dict)

    @property
    def columns(self) -> List[str]:
        extra = ["psnr"] if any(r.psnr is not None for r in self.rows) else []
        return METRIC_NAMES + extra

    def aggregate(self) -> None:
        """根据 rows 重新计算均值和标准差"""
        self.mean, self.std = {}, {}
        for column in self.columns:
            values = np.array([r.values().get(column, np.nan) for r in self.rows], dtype=np.float64)
            values = values[np.isfinite(values)]
            self.mean[column] = float(values.mean()) if values.size else float("nan")
            self.std[column] = float(values.std()) if values.size else float("nan")


@dataclass
class CheckResult:
    """自检或梯度校验的一项结果"""

    name: str
    passed: bool
    value: float = 0.0
    detail: str = ""


@dataclass
class CellStyle:
    """
    单元格样式配置类

    属性:
        fill_color (str): 填充颜色，十六进制颜色码
        font_color (str): 字体颜色，默认黑色
    """

    fill_color: str
    font_color: str = '000000'

    def to_pattern_fill(self) -> PatternFill:
        return PatternFill(start_color=self.fill_color, end_color=self.fill_color, fill_type='solid')

    def to_font(self) -> Font:
        return Font(color=self.font_color)


class CellStyles:
    """
    评估工作簿使用的预定义样式

    样式说明:
        GREEN (绿色): 该指标列中的最优值
        GREY (灰色): 未实现的感知类指标列（n/a）
        HEADER (深蓝 + 白字): 标题行
    """

    GREEN = CellStyle('90EE90')
    GREY = CellStyle('D9D9D9', '808080')
    HEADER = CellStyle('1F4E78', 'FFFFFF')
