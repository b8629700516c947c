"""评估报告（CSV / JSON / XLSX）的测试"""

import csv
import json

import numpy as np
import openpyxl
import pytest

from core.data_models import EXCLUDED_METRICS, MetricRow
from core.datasets import synthesize_suite
from core.errors import DatasetError
from core.excel_processor import DETAIL_SHEET, NOT_AVAILABLE, SUMMARY_SHEET, write_metric_workbook
from core.image_io import write_png
from core.report import build_report, evaluate_directory, report_to_dict, write_report

HEADER = ["name", "q_mi", "q_abf", "q_scd", "q_sf"] + EXCLUDED_METRICS


@pytest.fixture
def report():
    return build_report([
        MetricRow("a", q_mi=1.0, q_abf=0.4, q_scd=1.2, q_sf=10.0),
        MetricRow("b", q_mi=3.0, q_abf=0.6, q_scd=0.8, q_sf=30.0),
    ])


class TestAggregate:
    def test_mean_and_population_std(self, report):
        assert report.mean["q_mi"] == 2.0
        assert report.std["q_mi"] == 1.0
        assert report.mean["q_abf"] == pytest.approx(0.5)

    def test_psnr_column_only_when_present(self, report):
        assert "psnr" not in report.columns
        with_psnr = build_report([MetricRow("a", 1.0, 0.5, 1.0, 5.0, psnr=20.0),
                                  MetricRow("b", 1.0, 0.5, 1.0, 5.0, psnr=float("inf"))])
        assert with_psnr.columns[-1] == "psnr"
        # 无穷值不参与汇总
        assert with_psnr.mean["psnr"] == 20.0


class TestCsvAndJson:
    def test_csv_layout(self, report, tmp_path):
        paths = write_report(str(tmp_path), report)
        with open(paths["csv"], newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == HEADER
        assert [r[0] for r in rows[1:]] == ["a", "b", "mean", "std"]
        assert rows[3][1] == "2.0" and rows[4][1] == "1.0"
        assert rows[1][HEADER.index("q_vif")] == NOT_AVAILABLE

    def test_json_contents(self, report, tmp_path):
        paths = write_report(str(tmp_path), report)
        with open(paths["json"], encoding="utf-8") as handle:
            data = json.load(handle)
        assert set(data) == {"images", "aggregate", "metrics", "excluded", "notes"}
        assert [image["name"] for image in data["images"]] == ["a", "b"]
        assert data["aggregate"]["mean"]["q_sf"] == 20.0
        assert data["excluded"] == EXCLUDED_METRICS

    def test_infinite_values_are_strings(self):
        data = report_to_dict(build_report([MetricRow("a", 1.0, 0.5, 1.0, 5.0, psnr=float("inf"))]))
        assert data["images"][0]["psnr"] == "inf"


class TestWorkbook:
    def test_sheets_and_highlighting(self, report, tmp_path):
        path = str(tmp_path / "metrics.xlsx")
        write_metric_workbook(path, report)
        workbook = openpyxl.load_workbook(path)
        assert workbook.sheetnames == [DETAIL_SHEET, SUMMARY_SHEET]

        detail = workbook[DETAIL_SHEET]
        assert [cell.value for cell in detail[1]] == HEADER
        q_mi, q_scd, q_vif = (HEADER.index(key) + 1 for key in ("q_mi", "q_scd", "q_vif"))
        assert detail.cell(row=3, column=q_mi).fill.fgColor.rgb.endswith("90EE90")
        assert not detail.cell(row=2, column=q_mi).fill.fgColor.rgb.endswith("90EE90")
        assert detail.cell(row=2, column=q_scd).fill.fgColor.rgb.endswith("90EE90")
        assert detail.cell(row=2, column=q_vif).value == NOT_AVAILABLE
        assert detail.cell(row=2, column=q_vif).fill.fgColor.rgb.endswith("D9D9D9")
        assert detail.cell(row=4, column=1).value == "mean"

        summary = workbook[SUMMARY_SHEET]
        assert summary.cell(row=2, column=1).value == "q_mi"
        assert summary.cell(row=2, column=2).value == 2.0


class TestEvaluateDirectory:
    def _write(self, root, with_dehazed=False):
        scenes = synthesize_suite(np.random.default_rng(0), 2, size=16)
        for scene in scenes:
            write_png(str(root / "fused" / f"{scene.name}.png"), 0.5 * (scene.ir + scene.clear))
            write_png(str(root / "ir" / f"{scene.name}.png"), scene.ir)
            write_png(str(root / "gt" / f"{scene.name}.png"), scene.clear)
            if with_dehazed:
                write_png(str(root / "dehazed" / f"{scene.name}.png"), scene.hazy)

    def test_report_rows(self, tmp_path):
        self._write(tmp_path)
        report = evaluate_directory(str(tmp_path))
        assert [row.name for row in report.rows] == ["scene_000", "scene_001"]
        assert all(0.0 <= row.q_abf <= 1.0 for row in report.rows)
        assert "psnr" not in report.columns

    def test_dehazed_adds_psnr(self, tmp_path):
        self._write(tmp_path, with_dehazed=True)
        report = evaluate_directory(str(tmp_path))
        assert all(np.isfinite(row.psnr) for row in report.rows)

    def test_missing_pair(self, tmp_path):
        self._write(tmp_path)
        (tmp_path / "gt" / "scene_001.png").unlink()
        with pytest.raises(DatasetError):
            evaluate_directory(str(tmp_path))

    def test_missing_directory(self, tmp_path):
        with pytest.raises(DatasetError):
            evaluate_directory(str(tmp_path))
