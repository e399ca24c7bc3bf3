"""
Integration tests for the command line.
Tests exit codes, the stage chain over a synthetic archive and rerun stability.
"""

import json
import os
import sys
import tempfile
import unittest
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from cli.app import build_parser, main
from modules.synth import CommunitySpec, specs_to_json


SPECS = [
    CommunitySpec(f"c{i}", members=80, months=8, posts_per_month=40,
                  centralization=0.2 + 0.2 * i, rotation=0.2, seed=10 + i)
    for i in range(4)
]


def _read(path):
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()


class TestExitCodes(unittest.TestCase):
    """Tests for usage and fatal error exit codes."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        import shutil
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_usage_errors(self):
        """Test argparse usage errors exit with status 2."""
        self.assertEqual(main([]), 2)
        self.assertEqual(main(["ingest", "x.jsonl", "--no-such-flag"]), 2)
        self.assertEqual(main(["synth", "--out", "a.jsonl"]), 2)
        self.assertEqual(main(["fit", "--criterion", "ols"]), 2)

    def test_version(self):
        """Test --version exits with status 0."""
        self.assertEqual(main(["--version"]), 0)

    def test_missing_input(self):
        """Test a missing archive file exits with status 1."""
        self.assertEqual(main(["ingest", os.path.join(self.temp_dir, "missing.jsonl"), "--quiet"]), 1)

    def test_missing_config_file(self):
        """Test a missing --config file exits with status 1."""
        path = os.path.join(self.temp_dir, "archive.jsonl")
        Path(path).write_text("", encoding="utf-8")
        self.assertEqual(main(["ingest", path, "--config", os.path.join(self.temp_dir, "nope.json")]), 1)

    def test_fit_without_panel(self):
        """Test fit without a panel exits with status 1."""
        self.assertEqual(main(["fit", "--out", self.temp_dir, "--quiet"]), 1)

    def test_invalid_flag_values(self):
        """Test out-of-range seasonal months and unknown models exit with status 1."""
        self.assertEqual(main(["fit", "--out", self.temp_dir, "--seasonal-months", "13", "--quiet"]), 1)
        self.assertEqual(main(["fit", "--out", self.temp_dir, "--models", "bogus", "--quiet"]), 1)

    def test_input_flag_usage_errors(self):
        """Test a missing archive or two different archives exit with status 2."""
        self.assertEqual(main(["metrics", "--out", self.temp_dir, "--quiet"]), 2)
        self.assertEqual(main(["ingest", "a.jsonl", "--input", "b.jsonl", "--quiet"]), 2)


    def test_parser_defaults_leave_config_alone(self):
        """Test unset flags parse as None so they never override the config file."""
        args = build_parser().parse_args(["pipeline", "in.jsonl"])
        self.assertIsNone(args.models)
        self.assertIsNone(args.out)
        self.assertIsNone(args.xlsx)


class TestStages(unittest.TestCase):
    """Tests for the stage chain on a small synthetic archive."""

    @classmethod
    def setUpClass(cls):
        cls.temp_dir = tempfile.mkdtemp()
        cls.spec_path = os.path.join(cls.temp_dir, "specs.json")
        with open(cls.spec_path, 'w', encoding='utf-8') as f:
            json.dump(specs_to_json(SPECS), f)
        cls.archive = os.path.join(cls.temp_dir, "archive.jsonl")
        cls.synth_code = main(["synth", "--spec", cls.spec_path, "--out", cls.archive, "--quiet"])

    @classmethod
    def tearDownClass(cls):
        import shutil
        shutil.rmtree(cls.temp_dir, ignore_errors=True)

    def _pipeline(self, name, *extra):
        out = os.path.join(self.temp_dir, name)
        code = main(["pipeline", self.archive, "--out", out, "--models", "null,network", "--quiet", *extra])
        return code, out

    def test_synth_writes_archive(self):
        """Test synth writes the same archive twice for the same specs."""
        self.assertEqual(self.synth_code, 0)
        first = _read(self.archive)
        self.assertTrue(first.endswith("\n"))

        again = os.path.join(self.temp_dir, "again.jsonl")
        self.assertEqual(main(["synth", "--spec", self.spec_path, "--out", again, "--quiet"]), 0)
        self.assertEqual(_read(again), first)

    def test_pipeline_artifacts(self):
        """Test the pipeline writes every stage artifact."""
        code, out = self._pipeline("run")
        self.assertEqual(code, 0)
        for name in ("metrics_network.csv", "metrics_dynamics.csv", "metrics_language.csv", "panel.csv",
                     "maturity.json", "fit_null.json", "fit_network.json", "fits.json", "fits.txt",
                     "report.txt", "report.md", "report.json"):
            self.assertTrue(os.path.isfile(os.path.join(out, name)), msg=name)

        fits = json.loads(_read(os.path.join(out, "fits.json")))
        self.assertEqual([f["model"] for f in fits], ["null", "network"])
        report = json.loads(_read(os.path.join(out, "report.json")))
        self.assertEqual(report["metadata"]["flags"]["model"]["models"], ["null", "network"])
        self.assertEqual(report["metadata"]["flags"]["command"], "pipeline")

        panel_lines = _read(os.path.join(out, "panel.csv")).splitlines()
        self.assertEqual(len(panel_lines), 1 + 4 * 8)

    def test_pipeline_is_reproducible(self):
        """Test two pipeline runs give byte-identical outputs."""
        _, first = self._pipeline("first")
        _, second = self._pipeline("second")
        for name in ("panel.csv", "fits.json", "metrics_network.csv", "metrics_language.csv"):
            self.assertEqual(_read(os.path.join(first, name)), _read(os.path.join(second, name)), msg=name)

        before = _read(os.path.join(first, "report.txt"))
        self.assertEqual(self._pipeline("first")[0], 0)
        self.assertEqual(_read(os.path.join(first, "report.txt")), before)

        reports = [json.loads(_read(os.path.join(first, "report.json")))]
        self.assertEqual(main(["report", "--out", first, "--quiet"]), 0)
        reports.append(json.loads(_read(os.path.join(first, "report.json"))))
        self.assertEqual(reports[0]["regression_table"], reports[1]["regression_table"])

    def test_stages_one_at_a_time(self):
        """Test running the stages separately matches the pipeline."""
        out = os.path.join(self.temp_dir, "stepwise")
        self.assertEqual(main(["metrics", self.archive, "--out", out, "--quiet"]), 0)
        self.assertEqual(main(["panel", "--out", out, "--xlsx", "--quiet"]), 0)
        self.assertTrue(os.path.isfile(os.path.join(out, "panel.xlsx")))
        self.assertEqual(main(["fit", "--out", out, "--models", "null,network", "--quiet"]), 0)
        self.assertEqual(main(["report", "--out", out, "--quiet"]), 0)

        _, piped = self._pipeline("piped")
        self.assertEqual(_read(os.path.join(out, "panel.csv")), _read(os.path.join(piped, "panel.csv")))
        self.assertEqual(_read(os.path.join(out, "fits.json")), _read(os.path.join(piped, "fits.json")))

    def test_config_file_overrides_defaults(self):
        """Test model settings and seed come from a config file."""
        config = os.path.join(self.temp_dir, "run.json")
        with open(config, 'w', encoding='utf-8') as f:
            json.dump({"model": {"models": ["null"], "criterion": "reml"}, "seed": 9}, f)
        out = os.path.join(self.temp_dir, "configured")

        self.assertEqual(main(["pipeline", self.archive, "--out", out, "--config", config, "--quiet"]), 0)
        fits = json.loads(_read(os.path.join(out, "fits.json")))
        self.assertEqual([f["model"] for f in fits], ["null"])
        self.assertEqual(fits[0]["criterion"], "reml")
        report = json.loads(_read(os.path.join(out, "report.json")))
        self.assertEqual(report["metadata"]["seed"], 9)

    def test_ingest_summary(self):
        """Test the ingest summary on standard output."""
        from io import StringIO
        from unittest import mock

        with mock.patch("sys.stdout", new=StringIO()) as stdout:
            self.assertEqual(main(["ingest", self.archive, "--quiet"]), 0)
        summary = json.loads(stdout.getvalue())
        self.assertEqual(summary, json.loads(json.dumps(summary, sort_keys=True)))
        self.assertEqual(summary["communities"], 4)
        self.assertEqual(sorted(summary["per_community"]), ["c0", "c1", "c2", "c3"])
        self.assertEqual(summary["diagnostics"], [])

    def test_ingest_input_flag(self):
        """Test --input PATH --format jsonl gives the same summary as the positional form."""
        from io import StringIO
        from unittest import mock

        with mock.patch("sys.stdout", new=StringIO()) as positional:
            self.assertEqual(main(["ingest", self.archive, "--quiet"]), 0)
        with mock.patch("sys.stdout", new=StringIO()) as flagged:
            self.assertEqual(main(["ingest", "--input", self.archive, "--format", "jsonl", "--quiet"]), 0)
        self.assertEqual(flagged.getvalue(), positional.getvalue())

    def test_unwritable_artifact_exits_1(self):
        """Test a failed fits.json or report.txt write makes the command fail."""
        out = os.path.join(self.temp_dir, "blocked")
        self.assertEqual(main(["panel", self.archive, "--out", out, "--quiet"]), 0)
        os.makedirs(os.path.join(out, "fits.json"))
        self.assertEqual(main(["fit", "--out", out, "--models", "null,network", "--quiet"]), 1)

        os.makedirs(os.path.join(out, "report.txt"))
        self.assertEqual(main(["report", "--out", out, "--quiet"]), 1)


    def test_published_report(self):
        """Test the published reference tables render with stars."""
        out = os.path.join(self.temp_dir, "published")
        self.assertEqual(main(["report", "--out", out, "--published", "--quiet"]), 0)
        self.assertIn(".374**", _read(os.path.join(out, "report.txt")))


if __name__ == '__main__':
    unittest.main()
