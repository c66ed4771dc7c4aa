"""Freeze scipy reference values for the t-test, t-distribution and skewness tests.

    python3 gen_stats_fixtures.py > stats_reference.json
"""
import json

import numpy as np
import scipy
from scipy import special, stats

rng = np.random.default_rng(20240611)


def paired_case(name, x, y):
    r = stats.ttest_rel(x, y)
    d = np.asarray(x) - np.asarray(y)
    return {
        "name": name,
        "x": list(map(float, x)),
        "y": list(map(float, y)),
        "t": float(r.statistic),
        "df": int(r.df),
        "p": float(r.pvalue),
        "skewness": float(stats.skew(d, bias=False)),
    }


def one_sample_case(name, x, mu0):
    r = stats.ttest_1samp(x, mu0)
    return {
        "name": name,
        "x": list(map(float, x)),
        "mu0": mu0,
        "t": float(r.statistic),
        "df": int(r.df),
        "p": float(r.pvalue),
        "skewness": float(stats.skew(x, bias=False)),
    }


paired = [
    paired_case("ten_pairs",
                [132, 118, 141, 97, 125, 150, 109, 138, 121, 130],
                [51, 47, 60, 44, 49, 66, 40, 58, 52, 50]),
    paired_case("small_effect",
                [70.2, 65.1, 80.3, 75.0, 68.8, 72.4, 77.9],
                [69.0, 66.3, 79.1, 74.2, 70.0, 71.1, 78.5]),
    paired_case("words_153",
                np.round(rng.normal(86.0, 18.0, 153)).tolist(),
                np.round(rng.normal(37.0, 9.0, 153)).tolist()),
    paired_case("fres_153",
                np.round(rng.normal(55.0, 12.0, 153), 3).tolist(),
                np.round(rng.normal(58.0, 11.0, 153), 3).tolist()),
    paired_case("skewed_30",
                np.round(rng.exponential(5.0, 30), 4).tolist(),
                np.zeros(30).tolist()),
]

one_sample = [
    one_sample_case("cosine_153", np.clip(rng.normal(0.88, 0.06, 153), 0, 1).round(6).tolist(), 0.85),
    one_sample_case("cosine_10", [0.91, 0.87, 0.95, 0.83, 0.9, 0.92, 0.86, 0.89, 0.94, 0.88], 0.9),
]

cdf = []
for df in (1, 2, 5, 10, 30, 152):
    for t in (-12.0, -3.5, -2.0, -0.7, 0.0, 0.25, 1.0, 1.96, 2.6, 4.0, 8.5):
        cdf.append({"t": t, "df": df, "cdf": float(stats.t.cdf(t, df)), "p": float(2 * stats.t.sf(abs(t), df))})

beta = []
for a, b in ((0.5, 0.5), (1.0, 1.0), (2.0, 3.0), (76.0, 0.5), (5.0, 0.5), (30.0, 12.5)):
    for x in (0.001, 0.1, 0.35, 0.5, 0.8, 0.999):
        beta.append({"a": a, "b": b, "x": x, "value": float(special.betainc(a, b, x))})

print(json.dumps({
    "tool": "scipy " + scipy.__version__,
    "paired": paired,
    "one_sample": one_sample,
    "t_distribution": cdf,
    "incomplete_beta": beta,
}, indent=1))
