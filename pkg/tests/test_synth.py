"""
Unit tests for the synthetic archive module.
Tests determinism, structural limits of the dials and spec validation.
"""

import json
import os
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from core.errors import SynthError
from modules.ingest import parse_archive, post_index, serialize_archive, window_by_month
from modules.netgraph import graph_metrics
from modules.synth import (
    CommunitySpec, generate_archive, generate_community, load_specs, full_scale_specs,
    spec_from_dict, specs_to_json,
)


def _monthly_gb(archive):
    index = post_index(archive)
    values = {}
    for window in window_by_month(archive):
        row, _ = graph_metrics(window, index)
        if row.group_betweenness is not None:
            values.setdefault(window.community_id, []).append(row.group_betweenness)
    return values


class TestGenerate(unittest.TestCase):
    """Tests for generate_community and generate_archive."""

    def test_deterministic_for_a_seed(self):
        """Test the same seed gives the same archive."""
        specs = [CommunitySpec("a", members=40, months=3, seed=5), CommunitySpec("b", members=20, months=2, seed=6)]
        first = serialize_archive(generate_archive(specs), "jsonl")
        again = serialize_archive(generate_archive(specs, jobs=2), "jsonl")
        other = serialize_archive(generate_archive([CommunitySpec("a", members=40, months=3, seed=7)]), "jsonl")

        self.assertEqual(first, again)
        same_seed = serialize_archive(generate_archive([CommunitySpec("a", members=40, months=3, seed=5)]), "jsonl")
        self.assertNotEqual(other, same_seed)

    def test_output_is_a_valid_archive(self):
        """Test generated archives parse without diagnostics."""
        archive = generate_archive([CommunitySpec("a", members=60, months=4, seed=1)])
        parsed = parse_archive(serialize_archive(archive, "jsonl").encode("utf-8"), "jsonl")

        self.assertEqual(parsed.posts, archive.posts)
        self.assertEqual(parsed.diagnostics, ())
        self.assertEqual([w.month for w in window_by_month(parsed)], ["2010-01", "2010-02", "2010-03", "2010-04"])

    def test_member_budget(self):
        """Test authors stay within the member budget."""
        posts = generate_community(CommunitySpec("a", members=25, months=6, posts_per_month=40, seed=2))
        authors = {p.author_id for p in posts}
        self.assertLessEqual(len(authors), 25)
        self.assertTrue(all(a.startswith("a-m") for a in authors))

    def test_star_limit(self):
        """Test full centralization without rotation gives group betweenness one every month."""
        archive = generate_archive([CommunitySpec("s", members=30, months=2, posts_per_month=50,
                                                  centralization=1.0, rotation=0.0, seed=3)])
        for value in _monthly_gb(archive)["s"]:
            self.assertAlmostEqual(value, 1.0)

    def test_centralization_orders_group_betweenness(self):
        """Test higher centralization gives higher group betweenness."""
        archive = generate_archive([
            CommunitySpec("low", members=120, months=6, posts_per_month=40, centralization=0.1, seed=4),
            CommunitySpec("high", members=120, months=6, posts_per_month=40, centralization=0.9, seed=4),
        ])
        values = _monthly_gb(archive)
        self.assertGreater(np.mean(values["high"]), np.mean(values["low"]))

    def test_sentiment_bias_uses_lexicon_polarity(self):
        """Test the sentiment bias moves the lexicon score."""
        positive = generate_community(CommunitySpec("p", members=30, months=1, sentiment_bias=1.0, seed=8))
        text = " ".join(p.text for p in positive)
        self.assertNotIn(" awful ", f" {text} ")


class TestSpecs(unittest.TestCase):
    """Tests for spec validation and spec files."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        import shutil
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_invalid_specs(self):
        """Test infeasible specs raise SynthError."""
        with self.assertRaises(SynthError):
            CommunitySpec("x", centralization=1.5)
        with self.assertRaises(SynthError):
            CommunitySpec("x", rotation=-0.1)
        with self.assertRaises(SynthError):
            CommunitySpec("x", members=0, posts_per_month=5)
        with self.assertRaises(SynthError):
            CommunitySpec("x", months=0)
        with self.assertRaises(SynthError):
            CommunitySpec("x", start="2010-13")

    def test_archive_errors(self):
        """Test empty and duplicate community lists raise SynthError."""
        with self.assertRaises(SynthError):
            generate_archive([])
        with self.assertRaises(SynthError):
            generate_archive([CommunitySpec("x"), CommunitySpec("x")])

    def test_spec_from_dict(self):
        """Test building a spec from a dictionary."""
        spec = spec_from_dict({"community_id": "x", "members": 10})
        self.assertEqual(spec.members, 10)
        with self.assertRaises(SynthError):
            spec_from_dict({"community_id": "x", "colour": "red"})
        with self.assertRaises(SynthError):
            spec_from_dict({"members": 10})

    def test_load_specs_file(self):
        """Test loading specs from a file."""
        specs = [CommunitySpec("x", seed=1), CommunitySpec("y", centralization=0.8)]
        path = os.path.join(self.temp_dir, "specs.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(specs_to_json(specs), f)
        self.assertEqual(load_specs(path), specs)

        with open(path, "w", encoding="utf-8") as f:
            json.dump([{"community_id": "z"}], f)
        self.assertEqual(load_specs(path), [CommunitySpec("z")])

        with open(path, "w", encoding="utf-8") as f:
            f.write("{\"communities\": 3}")
        with self.assertRaises(SynthError):
            load_specs(path)

    def test_full_scale_specs(self):
        """Test the full-scale preset totals."""
        specs = full_scale_specs(seed=2)
        self.assertEqual(len(specs), 16)
        self.assertEqual(len({s.community_id for s in specs}), 16)
        self.assertTrue(all(s.months == 47 for s in specs))
        self.assertEqual(specs, full_scale_specs(seed=2))
        self.assertNotEqual([s.seed for s in specs], [s.seed for s in full_scale_specs(seed=3)])


if __name__ == '__main__':
    unittest.main()
