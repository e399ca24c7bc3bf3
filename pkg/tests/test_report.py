"""
Unit tests for the report generator.
Tests number formatting, star legends, the published reference tables and
document output.
"""

import json
import os
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from modules.mlm import ModelSpec, fit_models
from modules.panel import PanelRow
from modules.report_generator import (
    RegressionColumn, ReportGenerator, build_published_report, build_report, correlation_rows,
    format_percent, format_r, published_columns, published_correlations, regression_rows,
    render_correlation_table, render_regression_table, run_metadata,
)


def _panel(seed=0, groups=6, months=10):
    rng = np.random.default_rng(seed)
    rows = []
    for g in range(groups):
        level = rng.normal()
        for m in range(months):
            gb = float(rng.uniform())
            rows.append(PanelRow(
                f"c{g}", f"2010-{m + 1:02d}",
                joiners=int(max(0, round(5 + 4 * gb + level + rng.normal()))),
                age=m + 1, size=10 * (m + 1) + g, launch_phase=int(m < 3),
                emotionality=float(rng.uniform(0, 0.5)), sentiment=float(rng.uniform(0.3, 0.8)),
                complexity=float(rng.uniform(8, 12)), past_activity=int(rng.integers(0, 40)),
                group_betweenness=gb, rotating_leadership=float(rng.uniform(0, 3)),
            ))
    return rows


class TestFormatting(unittest.TestCase):
    """Tests for cell formatting."""

    def test_format_r(self):
        """Test correlation formatting without a leading zero."""
        self.assertEqual(format_r(0.374), ".374")
        self.assertEqual(format_r(-0.17), "-.170")
        self.assertEqual(format_r(1.0), "1")
        self.assertEqual(format_r(None), "n/a")
        self.assertEqual(format_r(float("nan")), "n/a")

    def test_format_percent(self):
        """Test percentage formatting."""
        self.assertEqual(format_percent(-39.11), "-39.11%")
        self.assertEqual(format_percent(None), "")


class TestPublishedTables(unittest.TestCase):
    """Tests for the published reference values."""

    def test_correlation_stars(self):
        """Test stars in the correlation table."""
        rows = correlation_rows(published_correlations())
        betweenness = rows[8]
        self.assertEqual(betweenness[0], "9 Group Betweenness Centrality")
        self.assertEqual(betweenness[1], ".374**")
        emotionality = rows[4]
        self.assertEqual(emotionality[1], "-.080*")
        self.assertEqual(rows[5][1], ".063")
        self.assertEqual(rows[0][1], "1")

    def test_correlation_table_legend(self):
        """Test the correlation table legend and n footer."""
        text = render_correlation_table(published_correlations())
        self.assertTrue(text.startswith("Correlation coefficients (N=754)"))
        self.assertTrue(text.endswith("**p<0.01; *p<0.05."))

    def test_regression_table(self):
        """Test regression table rows."""
        columns = published_columns()
        rows = {row[0]: row[1:] for row in regression_rows(columns)}

        self.assertEqual(rows["ICC"][0], "10.61%")
        self.assertEqual(rows["ICC"][4], "")
        self.assertEqual(rows["Change in variance Lev. 2"][4], "-39.11%")
        self.assertEqual(rows["Change in variance Lev. 1"][4], "-19.82%")
        self.assertEqual(rows["Complexity"][4], "-0.846*")
        self.assertEqual(rows["N"], ["754"] * 5)
        self.assertEqual(rows["Groups"], ["16"] * 5)

        text = render_regression_table(columns)
        self.assertTrue(text.endswith("**p<0.01; *p<0.1."))

    def test_published_report_documents(self):
        """Test the published report in every format."""
        documents = build_published_report({"seed": 0})
        self.assertIn(".374**", documents.text)
        self.assertIn("| Variable |", documents.markdown)
        data = json.loads(documents.json)
        self.assertEqual(data["maturity"]["variance_explained"], 0.8)


class TestComputedReport(unittest.TestCase):
    """Tests for reports built from fitted models."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.panel = _panel()
        self.fits = fit_models(pd.DataFrame([r.__dict__ for r in self.panel]),
                               [ModelSpec("null"), ModelSpec("network", ("group_betweenness", "past_activity"))])

    def tearDown(self):
        import shutil
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_columns_from_fits_and_dicts_agree(self):
        """Test columns built from fits and from fit dictionaries agree."""
        direct = [RegressionColumn.from_fit(f) for f in self.fits]
        restored = [RegressionColumn.from_fit_dict(json.loads(json.dumps(f.to_dict(), sort_keys=True)))
                    for f in self.fits]
        self.assertEqual(regression_rows(direct), regression_rows(restored))
        self.assertEqual(list(restored[1].coefficients), ["const", "group_betweenness", "past_activity"])

    def test_change_computed_against_null(self):
        """Test variance change is taken against the null column."""
        rows = {row[0]: row[1:] for row in regression_rows([RegressionColumn.from_fit(f) for f in self.fits])}
        null, network = self.fits
        expected = 100.0 * (network.sigma2_e - null.sigma2_e) / null.sigma2_e
        self.assertEqual(rows["Change in variance Lev. 1"][1], f"{expected:.2f}%")
        self.assertEqual(rows["Change in variance Lev. 1"][0], "")

    def test_report_is_reproducible(self):
        """Test the report renders identically twice."""
        metadata = {"flags": {"models": "null,network"}, "seed": 1}
        first = build_report(self.panel, self.fits, metadata)
        second = build_report(self.panel, self.fits, metadata)
        self.assertEqual(first.text, second.text)
        self.assertEqual(first.json, second.json)

        data = json.loads(first.json)
        self.assertEqual([f["model"] for f in data["fits"]], ["null", "network"])
        self.assertEqual(data["regression_table"]["columns"], ["null", "network"])

    def test_write_documents(self):
        """Test writing the report files."""
        documents = build_report(self.panel, self.fits, {"seed": 1})
        written = ReportGenerator().write(documents, self.temp_dir)

        self.assertEqual(sorted(os.path.basename(p) for p in written), ["report.json", "report.md", "report.txt"])
        with open(os.path.join(self.temp_dir, "report.txt"), encoding="utf-8") as f:
            self.assertIn("MULTILEVEL MODELS", f.read())

    def test_run_metadata(self):
        """Test the run metadata fields."""
        path = os.path.join(self.temp_dir, "input.jsonl")
        with open(path, "w", encoding="utf-8") as f:
            f.write("{}\n")
        metadata = run_metadata({"b": 2, "a": 1}, seed=7, input_path=path)

        self.assertEqual(list(metadata["flags"]), ["a", "b"])
        self.assertEqual(len(metadata["input_sha256"]), 64)
        self.assertIn("numpy", metadata["versions"])
        self.assertEqual(metadata["seed"], 7)


if __name__ == '__main__':
    unittest.main()
