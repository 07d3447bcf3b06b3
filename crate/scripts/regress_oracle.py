#!/usr/bin/env python3
"""Reference NB2 and Poisson fits for a numpy-generated design.

Writes fixtures/oracles/nb_design.csv and fixtures/oracles/nb_fit.json.
"""
import json
import pathlib

import numpy as np
import pandas as pd
import statsmodels.api as sm

ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures" / "oracles"


def main():
    rng = np.random.default_rng(20240611)
    n = 3000
    p1 = rng.random(n)
    p2 = rng.random(n)
    z = rng.standard_normal(n)
    level = rng.integers(0, 3, n)
    X = pd.DataFrame(
        {
            "intercept": 1.0,
            "p1": p1,
            "p2": p2,
            "z": z,
            "level[b]": (level == 1).astype(float),
            "level[c]": (level == 2).astype(float),
        }
    )
    beta = np.array([2.0, 0.5, -0.4, 0.3, 0.2, -0.3])
    mu = np.exp(X.values @ beta)
    alpha = 0.6
    lam = rng.gamma(1.0 / alpha, alpha * mu)
    y = rng.poisson(lam)

    nb = sm.NegativeBinomial(y, X, loglike_method="nb2").fit(
        method="newton", maxiter=500, tol=1e-14, disp=0
    )
    pois = sm.GLM(y, X, family=sm.families.Poisson()).fit(tol=1e-14)

    OUT.mkdir(parents=True, exist_ok=True)
    frame = X.copy()
    frame.insert(0, "y", y)
    frame.to_csv(OUT / "nb_design.csv", index=False, float_format="%.17g")

    names = list(X.columns)
    result = {
        "nb": {
            "coefficients": dict(zip(names, nb.params[:-1].tolist())),
            "std_errors": dict(zip(names, nb.bse[:-1].tolist())),
            "alpha": float(nb.params.iloc[-1]),
            "log_likelihood": float(nb.llf),
        },
        "poisson": {
            "coefficients": dict(zip(names, pois.params.tolist())),
            "std_errors": dict(zip(names, pois.bse.tolist())),
            "log_likelihood": float(pois.llf),
        },
    }
    lr = 2.0 * (nb.llf - pois.llf)
    from scipy.stats import chi2

    result["overdispersion"] = {"statistic": lr, "p_value": 0.5 * chi2.sf(lr, 1)}
    (OUT / "nb_fit.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
