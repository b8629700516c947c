"""
Excel处理模块

本模块把评估报告写成 Excel 工作簿，包括工作表初始化、标题行写入、
最优值高亮和未实现指标列的灰色标注。

工作簿结构:
- "指标明细": 每幅图像一行，最后两行为均值和标准差；
  每个指标列的最优值（按行，不含汇总行）填充绿色，n/a 列填充灰色
- "汇总": 每个指标一行，列为 指标 / 均值 / 标准差

依赖:
- openpyxl: 用于读写Excel文件

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
import math
from typing import List, Sequence

import openpyxl

from .data_models import EXCLUDED_METRICS, CellStyles, MetricReport

DETAIL_SHEET = "指标明细"
SUMMARY_SHEET = "汇总"
NOT_AVAILABLE = "n/a"


def clear_sheet(sheet) -> None:
    """
    清空工作表数据

    删除工作表中的所有数据行（保留标题行）。
    重新写入同一工作簿时先调用，避免残留上次评估的行。

    参数:
        sheet: openpyxl的工作表对象
    """
    if sheet.max_row > 1:
        sheet.delete_rows(2, sheet.max_row)


def write_title_row(sheet, titles: Sequence[str]) -> None:
    """
    写入标题行

    参数:
        sheet: 目标工作表
        titles: 列标题

    注意:
        标题单元格使用 CellStyles.HEADER 样式，第1行原有内容会被覆盖
    """
    fill = CellStyles.HEADER.to_pattern_fill()
    font = CellStyles.HEADER.to_font()
    for column, title in enumerate(titles, start=1):
        cell = sheet.cell(row=1, column=column, value=title)
        cell.fill = fill
        cell.font = font


def init_result_sheet(workbook, sheet_name: str):
    """
    初始化结果工作表

    工作表已存在时清空数据行，不存在时创建。

    参数:
        workbook: openpyxl的工作簿对象
        sheet_name (str): 工作表名称

    返回:
        openpyxl的工作表对象
    """
    if sheet_name in workbook.sheetnames:
        sheet = workbook[sheet_name]
        clear_sheet(sheet)
    else:
        sheet = workbook.create_sheet(sheet_name)
    return sheet


def _cell_value(value):
    if value is None:
        return NOT_AVAILABLE
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def detail_columns(report: MetricReport) -> List[str]:
    """明细表的列: 名称、已实现指标、n/a 指标、可选 PSNR"""
    extra = [c for c in report.columns if c not in EXCLUDED_METRICS and c != "psnr"]
    psnr = ["psnr"] if "psnr" in report.columns else []
    return ["name"] + extra + list(EXCLUDED_METRICS) + psnr


def highlight_best(sheet, column: int, first_row: int, last_row: int) -> None:
    """
    最优值高亮

    在 [first_row, last_row] 内找到该列数值最大的单元格并填充绿色；
    全部指标都是越大越好。并列时全部高亮。
    """
    values = []
    for row in range(first_row, last_row + 1):
        value = sheet.cell(row=row, column=column).value
        if isinstance(value, (int, float)) and math.isfinite(value):
            values.append((row, value))
    if not values:
        return
    best = max(v for _, v in values)
    fill = CellStyles.GREEN.to_pattern_fill()
    for row, value in values:
        if value == best:
            sheet.cell(row=row, column=column).fill = fill


def write_metric_workbook(path: str, report: MetricReport) -> None:
    """
    写出评估工作簿

    参数:
        path (str): 输出 .xlsx 路径
        report (MetricReport): 已完成汇总的评估报告

    处理流程:
        1. 新建工作簿，初始化 "指标明细" 与 "汇总" 两个工作表
        2. 明细表逐行写入图像指标，末尾追加均值、标准差行
        3. 逐列高亮最优值，n/a 列整列填充灰色
        4. 汇总表写入每个指标的均值与标准差
        5. 保存

    错误处理:
        写入失败时抛出 OSError，由调用方处理
    """
    workbook = openpyxl.Workbook()
    default = workbook.active
    detail = init_result_sheet(workbook, DETAIL_SHEET)
    summary = init_result_sheet(workbook, SUMMARY_SHEET)
    workbook.remove(default)

    columns = detail_columns(report)
    write_title_row(detail, columns)
    for index, row in enumerate(report.rows, start=2):
        values = row.values()
        for column, key in enumerate(columns, start=1):
            value = row.name if key == "name" else values.get(key)
            detail.cell(row=index, column=column, value=_cell_value(value))

    last_image_row = len(report.rows) + 1
    for offset, (label, stats) in enumerate((("mean", report.mean), ("std", report.std)), start=1):
        for column, key in enumerate(columns, start=1):
            value = label if key == "name" else stats.get(key)
            detail.cell(row=last_image_row + offset, column=column, value=_cell_value(value))

    grey_fill = CellStyles.GREY.to_pattern_fill()
    grey_font = CellStyles.GREY.to_font()
    for column, key in enumerate(columns, start=1):
        if key == "name":
            continue
        if key in EXCLUDED_METRICS:
            for row in range(2, last_image_row + 3):
                cell = detail.cell(row=row, column=column)
                cell.fill = grey_fill
                cell.font = grey_font
        else:
            highlight_best(detail, column, 2, last_image_row)

    write_title_row(summary, ["指标", "均值", "标准差"])
    for index, key in enumerate([c for c in columns if c != "name"], start=2):
        summary.cell(row=index, column=1, value=key)
        summary.cell(row=index, column=2, value=_cell_value(report.mean.get(key)))
        summary.cell(row=index, column=3, value=_cell_value(report.std.get(key)))

    workbook.save(path)
    logging.info(f"写出评估工作簿: {path}")
