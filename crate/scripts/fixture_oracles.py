#!/usr/bin/env python3
"""Reference values for the bundled fixture, computed from its raw files.

Writes fixtures/oracles/fixture_describe.json (scipy moments per country and
metric, engagement ratios) and fixtures/oracles/fixture_fit.json (statsmodels
NB2 and Poisson fits for every model in the fixture config).
"""
import datetime as dt
import json
import math
import pathlib

import numpy as np
import pandas as pd
import statsmodels.api as sm
from scipy import stats

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "fixtures" / "corpus"
OUT = ROOT / "fixtures" / "oracles"
WEEKDAYS = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"]


def read_jsonl(path):
    return [json.loads(l) for l in path.read_text(encoding="utf-8").splitlines() if l.strip()]


def describe(records):
    out = {"stats": {}, "ratios": {}}
    for country in ["KO", "US"]:
        rows = [r for r in records if r["country"] == country]
        for metric in ["views", "likes", "comments"]:
            v = np.array([r[metric] for r in rows if r[metric] is not None], dtype=float)
            out["stats"][f"{country}/{metric}"] = {
                "n": int(v.size),
                "mean": float(np.mean(v)),
                "median": float(np.median(v)),
                "sd": float(np.std(v, ddof=1)),
                "min": float(v.min()),
                "max": float(v.max()),
                "skewness": float(stats.skew(v, bias=False)),
                "kurtosis": float(stats.kurtosis(v, fisher=True, bias=False)),
            }
        views = np.array([r["views"] for r in rows], dtype=float)
        both = [r for r in rows if r["comments"] is not None]
        out["ratios"][country] = {
            "median_to_mean_views": float(np.median(views) / np.mean(views)),
            "comment_intensity": sum(r["comments"] for r in both) / sum(r["views"] for r in both),
        }
    return out


def dummies(frame, values, label):
    levels = sorted(set(values))
    for lv in levels[1:]:
        frame[label(lv)] = [1.0 if v == lv else 0.0 for v in values]


def design(records, scores, model):
    rows = sorted(
        (r for r in records if r["country"] == "US" and r[model["response"]] is not None),
        key=lambda r: r["video_id"],
    )
    y = np.array([r[model["response"]] for r in rows], dtype=float)
    X = pd.DataFrame({"intercept": np.ones(len(rows))})
    for e in model["emotion_predictors"]:
        X[e] = [scores[r["video_id"]][e] for r in rows]
    c = model["controls"]
    assert c["duration"] == "log"
    X["log_duration"] = [math.log(r["duration_seconds"] + 1.0) for r in rows]
    dates = [dt.date.fromisoformat(r["upload_date"]) for r in rows]
    if c["channel_fe"]:
        dummies(X, [r["channel_id"] for r in rows], lambda v: f"channel[{v}]")
    if c["month_fe"]:
        dummies(X, [d.month for d in dates], lambda v: f"month[{v}]")
    if c["weekday_fe"]:
        dummies(X, [d.weekday() for d in dates], lambda v: f"weekday[{WEEKDAYS[v]}]")
    return y, X


def fit(y, X):
    nb = sm.NegativeBinomial(y, X, loglike_method="nb2").fit(
        method="newton", maxiter=1000, tol=1e-14, disp=0
    )
    pois = sm.GLM(y, X, family=sm.families.Poisson()).fit(tol=1e-14)
    names = list(X.columns)
    return {
        "n": int(len(y)),
        "nb": {
            "coefficients": dict(zip(names, nb.params[:-1].tolist())),
            "std_errors": dict(zip(names, nb.bse[:-1].tolist())),
            "alpha": float(nb.params.iloc[-1]),
            "log_likelihood": float(nb.llf),
            "converged": bool(nb.mle_retvals["converged"]),
        },
        "poisson": {
            "coefficients": dict(zip(names, pois.params.tolist())),
            "log_likelihood": float(pois.llf),
        },
    }


def main():
    records = read_jsonl(CORPUS / "dataset.jsonl")
    scores = {s["video_id"]: s["scores"] for s in read_jsonl(CORPUS / "scores.jsonl")}
    config = tomllib.loads((CORPUS / "config.toml").read_text())
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "fixture_describe.json").write_text(json.dumps(describe(records), indent=2, sort_keys=True) + "\n")
    fits = {m["label"]: fit(*design(records, scores, m)) for m in config["model_specs"]}
    (OUT / "fixture_fit.json").write_text(json.dumps(fits, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
