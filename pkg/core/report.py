"""
评估报告模块

evaluate 目录约定:
    root/fused/    融合图像 PNG
    root/ir/       红外图像 PNG
    root/gt/       无雾可见光参考 PNG
    root/dehazed/  可选，去雾中间结果；存在时报告额外给出 PSNR
文件按同名配对。

输出格式:
    CSV: name,q_mi,q_abf,q_scd,q_sf,q_vif,q_cv,q_pi,q_niqe[,psnr]，末尾为 mean、std 两行
    JSON: {"images": [...], "aggregate": {"mean": {...}, "std": {...}}, "excluded": [...], "notes": {...}}
    XLSX: 见 excel_processor

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import csv
import json
import logging
import math
import os
from typing import Dict, List, Optional

from .data_models import EXCLUDED_METRICS, METRIC_NAMES, MetricReport, MetricRow
from .errors import DatasetError
from .excel_processor import NOT_AVAILABLE, detail_columns, write_metric_workbook
from .image_io import read_ir, read_rgb
from .metrics import evaluate_triple

NOTES = {
    "q_mi": "未归一化的互信息之和 MI(F, IR) + MI(F, VIS)，8 位灰度，256 级直方图，自然对数",
    "q_abf": "基于 Sobel 梯度的边缘保持度，sigmoid 仿射归一化（完美融合为 1），取值 [0, 1]",
    "q_scd": "r(F − VIS, IR) + r(F − IR, VIS)，零方差项按 0 计",
    "q_sf": "0-255 灰度尺度上的空间频率",
    "excluded": "q_vif、q_cv、q_pi、q_niqe 需要感知模型数据，未实现",
    "reference": "以无雾清晰可见光图像作为参考",
}


def build_report(rows: List[MetricRow]) -> MetricReport:
    report = MetricReport(rows=list(rows))
    report.aggregate()
    return report


def evaluate_directory(root: str) -> MetricReport:
    """
    评估目录中的全部 (融合, 红外, 参考) 三元组

    错误处理:
        缺少 fused/、ir/、gt/ 目录或配对文件时抛出 DatasetError
    """
    dirs = {sub: os.path.join(root, sub) for sub in ("fused", "ir", "gt", "dehazed")}
    for sub in ("fused", "ir", "gt"):
        if not os.path.isdir(dirs[sub]):
            raise DatasetError(f"评估目录缺少子目录: {dirs[sub]}")
    names = sorted(n for n in os.listdir(dirs["fused"]) if n.lower().endswith(".png"))
    if not names:
        raise DatasetError(f"评估目录为空: {dirs['fused']}")
    has_dehazed = os.path.isdir(dirs["dehazed"])

    rows = []
    for name in names:
        for sub in ("ir", "gt"):
            if not os.path.exists(os.path.join(dirs[sub], name)):
                raise DatasetError(f"融合图像 {name} 缺少 {sub}/ 中的配对文件")
        dehazed: Optional[object] = None
        dehazed_path = os.path.join(dirs["dehazed"], name)
        if has_dehazed and os.path.exists(dehazed_path):
            dehazed = read_rgb(dehazed_path)
        rows.append(evaluate_triple(
            read_rgb(os.path.join(dirs["fused"], name)),
            read_ir(os.path.join(dirs["ir"], name)),
            read_rgb(os.path.join(dirs["gt"], name)),
            name=os.path.splitext(name)[0],
            dehazed=dehazed,
        ))
    report = build_report(rows)
    logging.info(f"评估完成: {len(rows)} 幅图像, 均值 {report.mean}")
    return report


def _csv_value(value) -> str:
    if value is None:
        return NOT_AVAILABLE
    return repr(float(value))


def write_csv(path: str, report: MetricReport) -> None:
    columns = detail_columns(report)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in report.rows:
            values = row.values()
            writer.writerow([row.name] + [_csv_value(values.get(key)) for key in columns[1:]])
        for label, stats in (("mean", report.mean), ("std", report.std)):
            writer.writerow([label] + [_csv_value(stats.get(key)) for key in columns[1:]])
    logging.info(f"写出评估 CSV: {path}")


def _json_value(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else str(value)


def report_to_dict(report: MetricReport) -> Dict:
    images = []
    for row in report.rows:
        entry = {"name": row.name}
        entry.update({key: _json_value(value) for key, value in row.values().items()})
        images.append(entry)
    return {
        "images": images,
        "aggregate": {
            "mean": {key: _json_value(v) for key, v in report.mean.items()},
            "std": {key: _json_value(v) for key, v in report.std.items()},
        },
        "metrics": list(METRIC_NAMES),
        "excluded": list(EXCLUDED_METRICS),
        "notes": NOTES,
    }


def write_json(path: str, report: MetricReport) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report_to_dict(report), handle, ensure_ascii=False, indent=2, sort_keys=True)
    logging.info(f"写出评估 JSON: {path}")


def write_report(out_dir: str, report: MetricReport, basename: str = "metrics") -> Dict[str, str]:
    """写出 CSV、JSON、XLSX 三种格式，返回各文件路径"""
    os.makedirs(out_dir, exist_ok=True)
    paths = {fmt: os.path.join(out_dir, f"{basename}.{fmt}") for fmt in ("csv", "json", "xlsx")}
    write_csv(paths["csv"], report)
    write_json(paths["json"], report)
    write_metric_workbook(paths["xlsx"], report)
    return paths
