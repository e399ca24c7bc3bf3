#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
CommunityPulse v1.0 - Growth analytics for online communities of practice
Main entry point for the application.

Usage:
    python main.py pipeline archive.jsonl --out out
    python main.py synth --full-scale --out synthetic.jsonl
    python main.py --help
"""

import os
import sys

os.environ.setdefault('PYTHONIOENCODING', 'utf-8')

# ========== PATH SETUP ==========
base_path = os.path.dirname(os.path.abspath(__file__))

src_path = os.path.join(base_path, 'src')
if src_path not in sys.path:
    sys.path.insert(0, src_path)


def main() -> None:
    """Main entry point."""
    from cli.app import main as run

    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
