"""
配置模块

定义模型拓扑配置 ModelConfig 与训练配置 TrainConfig，并解析扁平的
"key = value" 配置文件。

配置文件格式:
    - UTF-8 编码，每行一个 "键 = 值"
    - "#" 之后为注释，空行忽略
    - 布尔值接受 true/false/1/0/yes/no（不区分大小写）
    - 未知键视为错误，报告键名与行号（避免消融开关拼写错误被静默忽略）

示例:
    # 桌面规模训练
    epochs = 50
    channels = 16
    no_hde = true

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, Optional

from .errors import ConfigError

ABLATION_FLAGS = ("no_f_ir", "no_hde", "no_p_ir", "no_fr_peb", "no_p_vi", "no_fb_peb")

_TRUE = {"true", "1", "yes"}
_FALSE = {"false", "0", "no"}


@dataclass
class ModelConfig:
    """
    模型拓扑配置

    属性:
        channels (int): 特征通道数 C
        heads (int): 注意力头数，channels 必须能被整除
        ffn_expansion (float): 前馈网络扩展系数
        encoder_blocks (int): 每个模态编码器的 Transformer 块数
        pool_size (int): 提示池基准分辨率
        pool_init (float): 提示池均匀初始化范围
        num_stages (int): 融合阶段数，默认 5
        omega, dark_window_feature, dark_window_image, a_floor,
        guided_radius, guided_eps: 雾浓度估计参数
        share_encoder (bool): 两个模态共享编码器主干
        regenerate_stage_prompts (bool): 融合第 2-5 阶段由提示生成模块重新生成提示
        no_*: 六个消融开关
    """

    channels: int = 16
    heads: int = 1
    ffn_expansion: float = 2.66
    encoder_blocks: int = 2
    pool_size: int = 32
    pool_init: float = 0.02
    num_stages: int = 5
    omega: float = 0.95
    dark_window_feature: int = 7
    dark_window_image: int = 15
    a_floor: float = 0.05
    guided_radius: int = 8
    guided_eps: float = 1e-4
    share_encoder: bool = False
    regenerate_stage_prompts: bool = False
    no_f_ir: bool = False
    no_hde: bool = False
    no_p_ir: bool = False
    no_fr_peb: bool = False
    no_p_vi: bool = False
    no_fb_peb: bool = False

    def __post_init__(self):
        if self.channels < 1 or self.heads < 1:
            raise ConfigError(f"通道数与头数必须为正: channels={self.channels}, heads={self.heads}")
        if self.channels % self.heads != 0:
            raise ConfigError(f"通道数 {self.channels} 不能被注意力头数 {self.heads} 整除")
        if self.num_stages < 1:
            raise ConfigError(f"融合阶段数必须为正: {self.num_stages}")
        if self.encoder_blocks < 0:
            raise ConfigError(f"编码器块数不能为负: {self.encoder_blocks}")
        if self.ffn_expansion <= 0:
            raise ConfigError(f"前馈扩展系数必须为正: {self.ffn_expansion}")
        if self.pool_size < 1 or self.pool_init < 0:
            raise ConfigError(f"提示池参数无效: size={self.pool_size}, init={self.pool_init}")
        if not 0.0 <= self.omega <= 1.0:
            raise ConfigError(f"omega 必须在 [0, 1] 内: {self.omega}")
        for name in ("dark_window_feature", "dark_window_image"):
            window = getattr(self, name)
            if window < 1 or window % 2 == 0:
                raise ConfigError(f"{name} 必须是正奇数: {window}")
        if self.guided_radius < 1 or self.guided_eps < 0:
            raise ConfigError(f"导向滤波参数无效: radius={self.guided_radius}, eps={self.guided_eps}")

    def ablations(self) -> Dict[str, bool]:
        return {name: getattr(self, name) for name in ABLATION_FLAGS}


@dataclass
class TrainConfig:
    """
    训练配置

    属性:
        epochs (int): 训练轮数
        batch_size (int): 每步样本数
        lr_init, lr_final (float): 余弦退火的起止学习率
        crop_size (int): 随机裁剪边长
        hflip, vflip (bool): 水平/垂直翻转增强
        alpha (float): 总损失中 ℓ₁ 的权重
        weight_decay (float): AdamW 解耦权重衰减
        seed (int): 随机种子
        max_steps (int): 大于 0 时覆盖由 epochs 推出的总步数
        model (ModelConfig): 模型拓扑（含消融开关）
    """

    epochs: int = 300
    batch_size: int = 6
    lr_init: float = 2e-4
    lr_final: float = 2e-6
    crop_size: int = 64
    hflip: bool = True
    vflip: bool = True
    alpha: float = 1.0
    weight_decay: float = 0.01
    seed: int = 0
    max_steps: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError(f"epochs 与 batch_size 必须为正: {self.epochs}, {self.batch_size}")
        if self.lr_init <= 0 or self.lr_final < 0 or self.lr_final > self.lr_init:
            raise ConfigError(f"学习率必须满足 0 ≤ lr_final ≤ lr_init: {self.lr_final}, {self.lr_init}")
        if self.crop_size < 1:
            raise ConfigError(f"裁剪尺寸必须为正: {self.crop_size}")
        if self.alpha < 0:
            raise ConfigError(f"alpha 不能为负: {self.alpha}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay 不能为负: {self.weight_decay}")
        if self.max_steps < 0:
            raise ConfigError(f"max_steps 不能为负: {self.max_steps}")

    def total_steps(self, dataset_size: int) -> int:
        """总步数: max_steps > 0 时直接使用，否则为 epochs × ceil(样本数 / batch_size)"""
        if self.max_steps > 0:
            return self.max_steps
        per_epoch = max(1, -(-dataset_size // self.batch_size))
        return self.epochs * per_epoch

    def snapshot(self) -> Dict[str, Any]:
        """扁平化的配置快照，写入检查点头部"""
        data = asdict(self)
        data.update(data.pop("model"))
        return data


def full_scale() -> TrainConfig:
    """全尺寸训练预设: 256 裁剪、48 通道"""
    return TrainConfig(crop_size=256, model=ModelConfig(channels=48))


# ==================== 配置文件解析 ====================

_MODEL_FIELDS = {f.name: f for f in fields(ModelConfig)}
_TRAIN_FIELDS = {f.name: f for f in fields(TrainConfig) if f.name != "model"}


def _convert(raw: str, kind, key: str, line_no: int):
    text = raw.strip()
    if kind is bool or kind == "bool":
        lowered = text.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"第 {line_no} 行: {key} 需要布尔值，实际 '{text}'")
    try:
        if kind is int or kind == "int":
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError(f"第 {line_no} 行: {key} 的值 '{text}' 无法解析") from None


def parse_config_text(text: str, seed: Optional[int] = None) -> TrainConfig:
    """
    解析配置文本

    参数:
        text (str): 配置文件内容
        seed (int | None): 命令行 --seed 覆盖值

    返回:
        TrainConfig: 包含 ModelConfig 的训练配置

    错误处理:
        未知键、缺少 "="、重复键或值无法解析时抛出 ConfigError，消息包含行号
    """
    model_values: Dict[str, Any] = {}
    train_values: Dict[str, Any] = {}
    preset = False
    seen = set()

    for line_no, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"第 {line_no} 行缺少 '=': {line.strip()}")
        key, value = (part.strip() for part in content.split("=", 1))
        if key in seen:
            raise ConfigError(f"第 {line_no} 行: 重复的配置项 {key}")
        seen.add(key)

        if key == "full_scale":
            preset = _convert(value, bool, key, line_no)
        elif key in _MODEL_FIELDS:
            model_values[key] = _convert(value, _MODEL_FIELDS[key].type, key, line_no)
        elif key in _TRAIN_FIELDS:
            train_values[key] = _convert(value, _TRAIN_FIELDS[key].type, key, line_no)
        else:
            raise ConfigError(f"第 {line_no} 行: 未知配置项 '{key}'")

    if preset:
        train_values.setdefault("crop_size", 256)
        model_values.setdefault("channels", 48)
    if seed is not None:
        train_values["seed"] = seed

    config = TrainConfig(model=ModelConfig(**model_values), **train_values)
    logging.debug(f"解析配置: {config.snapshot()}")
    return config


def load_config(path: Optional[str] = None, seed: Optional[int] = None) -> TrainConfig:
    """读取配置文件；path 为 None 时使用默认配置"""
    if path is None:
        config = TrainConfig()
        if seed is not None:
            config.seed = seed
        return config
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    logging.info(f"读取配置文件: {path}")
    return parse_config_text(text, seed=seed)


def config_from_snapshot(snapshot: Dict[str, Any]) -> TrainConfig:
    """由检查点头部中的快照重建配置；忽略快照中已不存在的键"""
    model_values = {k: v for k, v in snapshot.items() if k in _MODEL_FIELDS}
    train_values = {k: v for k, v in snapshot.items() if k in _TRAIN_FIELDS}
    return TrainConfig(model=ModelConfig(**model_values), **train_values)
