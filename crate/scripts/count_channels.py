#!/usr/bin/env python3
"""Counts fixture records per channel by scanning raw dataset lines.

Writes fixtures/oracles/fixture_channel_counts.json.
"""
import collections
import json
import pathlib
import re

ROOT = pathlib.Path(__file__).resolve().parent.parent
PATTERN = re.compile(r'"channel_id":\s*"([^"]+)"')


def main():
    counts = collections.Counter()
    with open(ROOT / "fixtures" / "corpus" / "dataset.jsonl", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                counts[PATTERN.search(line).group(1)] += 1
    out = ROOT / "fixtures" / "oracles" / "fixture_channel_counts.json"
    out.write_text(json.dumps(dict(sorted(counts.items())), indent=2) + "\n")


if __name__ == "__main__":
    main()
