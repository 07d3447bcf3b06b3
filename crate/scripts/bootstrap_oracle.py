#!/usr/bin/env python3
"""Percentile summaries from exported bootstrap replicates.

Reads fixtures/oracles/fixture_bootstrap_<model>_replicates.csv (long format:
rep,term,estimate) and writes fixture_bootstrap_<model>.json with the mean and
nearest-rank 2.5th/97.5th percentiles per term.
"""
import csv
import json
import math
import pathlib
import sys
from collections import defaultdict
from fractions import Fraction

ROOT = pathlib.Path(__file__).resolve().parent.parent
ORACLES = ROOT / "fixtures" / "oracles"


def nearest_rank(sorted_values, pct):
    n = len(sorted_values)
    rank = math.ceil(Fraction(pct) / 100 * n)
    return sorted_values[min(max(rank, 1), n) - 1]


def summarize(path):
    by_term = defaultdict(list)
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            by_term[row["term"]].append(float(row["estimate"]))
    out = {}
    for term, values in by_term.items():
        values.sort()
        out[term] = {
            "mean_estimate": math.fsum(values) / len(values),
            "ci_low": nearest_rank(values, "2.5"),
            "ci_high": nearest_rank(values, "97.5"),
            "n_converged": len(values),
        }
    return out


def main():
    models = sys.argv[1:] or ["views"]
    for model in models:
        src = ORACLES / f"fixture_bootstrap_{model}_replicates.csv"
        dst = ORACLES / f"fixture_bootstrap_{model}.json"
        dst.write_text(json.dumps(summarize(src), indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
