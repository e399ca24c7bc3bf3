"""
Unit tests for the ingest module.
Tests parsing, diagnostics, month windows and lossless serialization.
"""

import json
import os
import sys
import tempfile
import unittest
from datetime import datetime, timezone
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from core.errors import IngestError
from modules.ingest import (
    infer_format, month_range, months_between, parse_archive, parse_timestamp,
    read_archive, serialize_archive, shift_month, validation_report, window_by_month,
)


def _jsonl(*records) -> bytes:
    return ("\n".join(json.dumps(r) for r in records) + "\n").encode("utf-8")


def _post(post_id, community="c1", author="a", parent=None, ts="2010-01-05T10:00:00Z", text="hello"):
    return {
        "post_id": post_id,
        "community_id": community,
        "author_id": author,
        "parent_post_id": parent,
        "timestamp": ts,
        "text": text,
    }


class TestMonthHelpers(unittest.TestCase):
    """Tests for calendar month arithmetic."""

    def test_shift_month_across_years(self):
        """Test shifting months across year boundaries."""
        self.assertEqual(shift_month("2010-12", 1), "2011-01")
        self.assertEqual(shift_month("2010-01", -1), "2009-12")
        self.assertEqual(shift_month("2010-03", 24), "2012-03")

    def test_months_between_inclusive(self):
        """Test month distance between labels."""
        self.assertEqual(months_between("2010-01", "2010-01"), 1)
        self.assertEqual(months_between("2010-11", "2011-02"), 4)

    def test_month_range(self):
        """Test the inclusive month range."""
        self.assertEqual(month_range("2010-11", "2011-01"), ["2010-11", "2010-12", "2011-01"])

    def test_parse_timestamp_normalizes_to_utc(self):
        """Test offset timestamps are converted to UTC."""
        ts = parse_timestamp("2010-01-31T23:30:00-02:00")
        self.assertEqual(ts, datetime(2010, 2, 1, 1, 30, tzinfo=timezone.utc))

    def test_parse_timestamp_naive_is_utc(self):
        """Test naive timestamps are read as UTC."""
        ts = parse_timestamp("2010-01-05T10:00:00.750")
        self.assertEqual(ts, datetime(2010, 1, 5, 10, 0, 0, tzinfo=timezone.utc))


class TestParseArchive(unittest.TestCase):
    """Tests for parse_archive."""

    def test_parse_valid_jsonl(self):
        """Test parsing a well-formed JSONL archive."""
        data = _jsonl(
            _post("p2", ts="2010-01-06T10:00:00Z", parent="p1", author="b"),
            _post("p1"),
        )
        archive = parse_archive(data, "jsonl")

        self.assertEqual(len(archive), 2)
        self.assertEqual([p.post_id for p in archive.posts], ["p1", "p2"])
        self.assertEqual(archive.communities, frozenset({"c1"}))
        self.assertEqual(archive.posts[1].parent_post_id, "p1")
        self.assertEqual(archive.diagnostics, ())

    def test_malformed_line_is_reported_not_fatal(self):
        """Test a malformed line becomes a diagnostic."""
        data = _jsonl(_post("p1")) + b"{not json\n" + _jsonl(_post("p2"))
        archive = parse_archive(data, "jsonl")

        self.assertEqual(len(archive), 2)
        self.assertEqual(len(archive.diagnostics), 1)
        self.assertEqual(archive.diagnostics[0].line, 2)

    def test_missing_field_diagnostic(self):
        """Test a record without a required field is skipped with a diagnostic."""
        record = _post("p2")
        del record["author_id"]
        archive = parse_archive(_jsonl(_post("p1"), record), "jsonl")

        self.assertEqual(len(archive), 1)
        self.assertIn("missing field: author_id", archive.diagnostics[0].formatted())
        self.assertTrue(archive.diagnostics[0].formatted().endswith("line 2"))

    def test_invalid_timestamp_diagnostic(self):
        """Test an unparseable timestamp is skipped with a diagnostic."""
        archive = parse_archive(_jsonl(_post("p1"), _post("p2", ts="yesterday")), "jsonl")
        self.assertEqual(len(archive), 1)
        self.assertIn("invalid timestamp", archive.diagnostics[0].message)

    def test_duplicate_post_id_keeps_first(self):
        """Test the first of two records with one post id is kept."""
        archive = parse_archive(_jsonl(_post("p1", text="first"), _post("p1", text="second")), "jsonl")
        self.assertEqual(len(archive), 1)
        self.assertEqual(archive.posts[0].text, "first")
        self.assertIn("duplicate post_id", archive.diagnostics[0].message)

    def test_unresolved_parent_becomes_thread_start(self):
        """Test a reply to an unknown post becomes a thread start."""
        archive = parse_archive(_jsonl(_post("p1", parent="ghost")), "jsonl")
        self.assertIsNone(archive.posts[0].parent_post_id)
        self.assertIn("unresolved parent_post_id", archive.diagnostics[0].message)

    def test_empty_archive_raises(self):
        """Test an archive without valid records raises IngestError."""
        with self.assertRaises(IngestError) as ctx:
            parse_archive(b"{broken\n", "jsonl")
        self.assertIn("empty archive", str(ctx.exception))
        self.assertIn("line 1", str(ctx.exception))

    def test_invalid_utf8_raises(self):
        """Test undecodable bytes raise IngestError."""
        with self.assertRaises(IngestError):
            parse_archive(b"\xff\xfe\xfa", "jsonl")

    def test_unknown_format_raises(self):
        """Test an unknown format name raises IngestError."""
        with self.assertRaises(IngestError):
            parse_archive(_jsonl(_post("p1")), "xml")

    def test_parse_csv(self):
        """Test parsing a CSV archive."""
        data = (
            "post_id,community_id,author_id,parent_post_id,timestamp,text\n"
            "p1,c1,a,,2010-01-05T10:00:00Z,hello\n"
            "p2,c1,b,p1,2010-01-06T10:00:00Z,\"hi, there\"\n"
        ).encode("utf-8")
        archive = parse_archive(data, "csv")

        self.assertEqual(len(archive), 2)
        self.assertIsNone(archive.posts[0].parent_post_id)
        self.assertEqual(archive.posts[1].text, "hi, there")

    def test_csv_missing_column_raises(self):
        """Test a CSV header without a required column raises IngestError."""
        with self.assertRaises(IngestError):
            parse_archive(b"post_id,community_id\np1,c1\n", "csv")


class TestWindows(unittest.TestCase):
    """Tests for window_by_month."""

    def test_silent_months_get_windows(self):
        """Test months without posts still get a window."""
        archive = parse_archive(_jsonl(
            _post("p1", ts="2010-01-05T10:00:00Z"),
            _post("p2", ts="2010-04-05T10:00:00Z"),
            _post("q1", community="c0", ts="2011-02-01T00:00:00Z"),
        ), "jsonl")
        windows = window_by_month(archive)

        self.assertEqual([(w.community_id, w.month) for w in windows], [
            ("c0", "2011-02"),
            ("c1", "2010-01"), ("c1", "2010-02"), ("c1", "2010-03"), ("c1", "2010-04"),
        ])
        self.assertEqual(len(windows[2].posts), 0)

    def test_every_post_in_exactly_one_window(self):
        """Test each post falls in exactly one window."""
        archive = parse_archive(_jsonl(*[
            _post(f"p{k}", author=f"a{k % 3}", ts=f"2010-{k % 12 + 1:02d}-01T00:00:00Z") for k in range(30)
        ]), "jsonl")
        windows = window_by_month(archive)
        ids = [p.post_id for w in windows for p in w.posts]

        self.assertEqual(sorted(ids), sorted(p.post_id for p in archive.posts))
        for w in windows:
            for p in w.posts:
                self.assertTrue(w.start <= p.timestamp < w.end)

    def test_month_boundary_is_utc(self):
        """Test month boundaries are taken in UTC."""
        archive = parse_archive(_jsonl(_post("p1", ts="2010-01-31T23:59:59Z"),
                                       _post("p2", ts="2010-02-01T00:00:00Z")), "jsonl")
        windows = window_by_month(archive)
        self.assertEqual([len(w.posts) for w in windows], [1, 1])


class TestSerialization(unittest.TestCase):
    """Tests for serialize_archive and read_archive."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        import shutil
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_serialize_then_parse_is_lossless(self):
        """Test serializing and parsing again keeps every post."""
        archive = parse_archive(_jsonl(
            _post("p1", text="naïve café, \"quoted\""),
            _post("p2", parent="p1", author="b", ts="2010-02-01T08:00:00Z", text="line\nbreak"),
        ), "jsonl")
        for fmt in ("jsonl", "csv"):
            again = parse_archive(serialize_archive(archive, fmt).encode("utf-8"), fmt)
            self.assertEqual(again.posts, archive.posts)

    def test_line_separators_inside_text_survive(self):
        """Test U+2028, U+2029, U+0085 and bare carriage returns round-trip in both formats."""
        archive = parse_archive(_jsonl(
            _post("p1", text="para graph end\u0085tail"),
            _post("p2", parent="p1", author="b", text="line one\rline two"),
            _post("p3", parent="p1", author="c", text="crlf\r\ninside"),
        ), "jsonl")
        self.assertEqual(archive.diagnostics, ())
        for fmt in ("jsonl", "csv"):
            again = parse_archive(serialize_archive(archive, fmt).encode("utf-8"), fmt)
            self.assertEqual(again.diagnostics, ())
            self.assertEqual(again.posts, archive.posts)

    def test_jsonl_with_crlf_line_ends(self):
        """Test Windows line endings between JSONL records."""
        data = _jsonl(_post("p1"), _post("p2", parent="p1", author="b")).replace(b"\n", b"\r\n")
        archive = parse_archive(data, "jsonl")
        self.assertEqual(len(archive), 2)
        self.assertEqual(archive.diagnostics, ())


    def test_read_archive_infers_format(self):
        """Test the format is inferred from the file extension."""
        path = os.path.join(self.temp_dir, "dump.jsonl")
        with open(path, "wb") as f:
            f.write(_jsonl(_post("p1")))
        self.assertEqual(len(read_archive(path)), 1)

    def test_infer_format_unknown_extension(self):
        """Test extension matching and unknown extensions."""
        self.assertEqual(infer_format("x.CSV"), "csv")
        with self.assertRaises(IngestError):
            infer_format("x.txt")

    def test_read_missing_file_raises(self):
        """Test a missing archive file raises IngestError."""
        with self.assertRaises(IngestError):
            read_archive(os.path.join(self.temp_dir, "missing.jsonl"))

    def test_validation_report(self):
        """Test the validation report counts."""
        archive = parse_archive(_jsonl(_post("p1"), _post("p2", parent="p1", author="b")), "jsonl")
        report = validation_report(archive)
        self.assertEqual(report["posts"], 2)
        self.assertEqual(report["per_community"]["c1"]["replies"], 1)
        self.assertEqual(report["windows"], 1)


if __name__ == '__main__':
    unittest.main()
