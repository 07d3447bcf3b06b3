#!/usr/bin/env python3
"""Generates the bundled 200-record synthetic corpus under fixtures/corpus.

Outputs: registry.jsonl, dataset.jsonl, scores.jsonl, growth.jsonl,
clusters.csv, labels.json, manifest.json. The pipeline config lives next to
them and is written by hand.
"""
import datetime as dt
import json
import pathlib

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures" / "corpus"

TOKENS = [
    "other_condemning",
    "other_praising",
    "other_suffering",
    "self_conscious",
    "neutral",
    "non_moral",
]
EFFECTS = np.array([1.1, 0.4, 0.3, 0.0, -0.5, 0.0])
CHANNELS = [
    # id, name, country, leaning, videos, baseline offset
    ("UCkorea01", "Hanbit News", "KO", "center", 30, 0.2),
    ("UCus01", "Metro Daily", "US", "left", 70, 0.0),
    ("UCus02", "Plains Report", "US", "right", 50, 0.5),
    ("UCus03", "Harbor Wire", "US", "center", 38, -0.4),
    ("UCus04", "Small Town Ledger", "US", "unspecified", 12, -0.8),
]
ALPHA = 0.7
CHOICES = TOKENS + ["hard_to_tell"]


def nb2(rng, mu):
    return int(rng.poisson(rng.gamma(1.0 / ALPHA, ALPHA * mu)))


def main():
    rng = np.random.default_rng(20250301)
    OUT.mkdir(parents=True, exist_ok=True)
    start = dt.date(2024, 1, 1)
    retrieved = dt.date(2024, 6, 30)

    registry = []
    for cid, name, country, leaning, n, _ in CHANNELS:
        registry.append(
            {
                "channel_id": cid,
                "name": name,
                "country": country,
                "political_leaning": leaning,
                "creation_date": "2012-05-01",
                "subscribers": int(rng.integers(10_000, 2_000_000)),
                "total_videos": n * 40,
                "total_views": int(rng.integers(10**6, 10**9)),
            }
        )

    records, scores = [], []
    for cid, _, country, _, n, offset in CHANNELS:
        for k in range(n):
            vid = f"{cid}-v{k:03d}"
            probs = np.round(rng.random(6), 4)
            upload = start + dt.timedelta(days=int(rng.integers(0, 91)))
            duration = int(rng.integers(60, 2400))
            eta = 5.5 + offset + probs @ EFFECTS + 0.15 * np.log(duration + 1)
            views = nb2(rng, np.exp(eta))
            likes = nb2(rng, np.exp(eta - 3.0))
            comments = nb2(rng, np.exp(eta - 4.5))
            # A few videos have likes or comments disabled.
            if k % 17 == 5:
                likes = None
            if k % 23 == 7:
                comments = None
            records.append(
                {
                    "video_id": vid,
                    "channel_id": cid,
                    "country": country,
                    "title": f"{'뉴스' if country == 'KO' else 'News'} item {k} from {cid}",
                    "thumbnail_ref": f"thumbs/{vid}.jpg",
                    "duration_seconds": duration,
                    "upload_date": upload.isoformat(),
                    "retrieved_at": retrieved.isoformat(),
                    "views": views,
                    "likes": likes,
                    "comments": comments,
                }
            )
            scores.append({"video_id": vid, "scores": dict(zip(TOKENS, probs.tolist()))})

    def jsonl(name, rows):
        text = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)
        (OUT / name).write_text(text, encoding="utf-8")

    jsonl("registry.jsonl", registry)
    jsonl("dataset.jsonl", records)
    jsonl("scores.jsonl", sorted(scores, key=lambda s: s["video_id"]))

    growth = []
    for i in range(12):
        days = 60 - 5 * (i % 3)
        total = int(rng.integers(500, 5000))
        series = [total]
        for d in range(1, days):
            rate = 0.08 * np.exp(-d / 6.0) + 0.0004
            total += int(round(total * rate * rng.uniform(0.5, 1.5)))
            series.append(total)
        growth.append({"video_id": f"UCus01-v{i:03d}", "daily_views": series})
    jsonl("growth.jsonl", growth)

    us = [r for r in records if r["country"] == "US"]
    lines = ["video_id,cluster"] + [f"{r['video_id']},c{i % 8}" for i, r in enumerate(us) if i % 5]
    (OUT / "clusters.csv").write_text("\n".join(lines) + "\n")

    # Three raters over 60 items; rater r3 disagrees on a third of them.
    items = [r["video_id"] for r in us[:60]]
    cells = []
    for i, _ in enumerate(items):
        base = CHOICES[int(rng.integers(0, 6))]
        row = [base, base if i % 4 else CHOICES[int(rng.integers(0, 7))]]
        row.append(base if i % 3 else CHOICES[int(rng.integers(0, 7))])
        cells.append(row)
    labels = {"item_ids": items, "raters": ["r1", "r2", "r3"], "cells": cells}
    (OUT / "labels.json").write_text(json.dumps(labels, indent=1) + "\n")

    counts = {cid: n for cid, _, _, _, n, _ in sorted(CHANNELS)}
    manifest = {"records": len(records), "channel_counts": counts}
    (OUT / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
