"""
核心业务逻辑模块

包含张量引擎、雾霾物理模型、提示生成、红外辅助复原、多阶段融合、
损失函数、融合指标、训练与推理流程、评估报告和日志配置。
"""

from .baseline import average_fuse, dcp_dehaze, two_stage_baseline
from .checkpoint import Checkpoint, build_model, load_checkpoint, save_checkpoint
from .config import ModelConfig, TrainConfig, load_config, full_scale
from .data_models import (CellStyle, CellStyles, CheckResult, HazeEstimate, HazeParams,
                          ImagePair, MetricReport, MetricRow, RestorationState)
from .datasets import load_dataset, synthesize_scene, synthesize_suite, write_dataset
from .errors import (ConfigError, DatasetError, DimensionError, FormatError, IRVFusionError,
                     NumericError, ParameterError, RegistrationError, ValidationError)
from .gradcheck import finite_diff_check
from .haze_model import dark_channel, guided_filter, haze_density, synthesize_haze, transmission_map
from .logging_config import setup_logging
from .losses import LossConfig, compute_losses, total_loss
from .metrics import evaluate_triple, psnr, q_abf, q_abf_raw, q_mi, q_scd, q_sf
from .network import DehazeFusionNet, ModelOutput
from .optim import AdamW, adamw_step, cosine_lr
from .pipeline import run_pipeline
from .report import evaluate_directory, write_report
from .selftest import run_gradcheck_suite, run_selftest
from .tensor import Tensor, no_grad, precision
from .tensor_io import read_tensor, write_tensor
from .trainer import train, train_from_directory

__all__ = [
    'Tensor',
    'no_grad',
    'precision',
    'read_tensor',
    'write_tensor',
    'finite_diff_check',
    'HazeParams',
    'HazeEstimate',
    'ImagePair',
    'RestorationState',
    'MetricRow',
    'MetricReport',
    'CheckResult',
    'CellStyle',
    'CellStyles',
    'IRVFusionError',
    'ValidationError',
    'DimensionError',
    'ParameterError',
    'NumericError',
    'ConfigError',
    'RegistrationError',
    'DatasetError',
    'FormatError',
    'ModelConfig',
    'TrainConfig',
    'load_config',
    'full_scale',
    'synthesize_haze',
    'dark_channel',
    'transmission_map',
    'guided_filter',
    'haze_density',
    'DehazeFusionNet',
    'ModelOutput',
    'LossConfig',
    'compute_losses',
    'total_loss',
    'q_mi',
    'q_abf',
    'q_abf_raw',
    'q_scd',
    'q_sf',
    'psnr',
    'evaluate_triple',
    'AdamW',
    'adamw_step',
    'cosine_lr',
    'Checkpoint',
    'save_checkpoint',
    'load_checkpoint',
    'build_model',
    'synthesize_scene',
    'synthesize_suite',
    'write_dataset',
    'load_dataset',
    'train',
    'train_from_directory',
    'run_pipeline',
    'evaluate_directory',
    'write_report',
    'dcp_dehaze',
    'average_fuse',
    'two_stage_baseline',
    'run_gradcheck_suite',
    'run_selftest',
    'setup_logging',
]
