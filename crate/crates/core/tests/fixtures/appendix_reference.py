"""Reference outputs for the OLS shrinking-window pipeline.

Reads a JSON array of Y series (X = 0..len-1) on stdin and writes, per series,
the raw costs, the no-intercept drift and the regularised costs computed with
numpy and scikit-learn. The functions below follow the original script; only
the data source changed.

    cargo run -q --example appendix_series | python3 appendix_reference.py > appendix_reference.json
"""
import json
import sys

import numpy as np
from sklearn import linear_model


def fitDataViaOlsGetBetaAndLine(X, Y):
    beta_hat = np.dot(X.T, X) ** -1. * np.dot(X.T, Y)
    Y = [beta_hat * X[i] for i in range(len(X))]
    return Y


def getSSE(Y, Yhat, p=1, normed=False):
    error = (Y - Yhat) ** 2.
    obj = np.sum(error)
    if normed:
        obj = 1 / float(len(Y) - p) * np.sum(error)
    return obj


def shrinking_costs(X, Y):
    _sse, _ssen = [], []
    for i in range(len(X) - 10):
        xBatch = X[i:-1]
        yBatch = Y[i:-1]
        YhatBatch = fitDataViaOlsGetBetaAndLine(xBatch, yBatch)
        _sse.append(getSSE(yBatch, YhatBatch, normed=False))
        _ssen.append(getSSE(yBatch, YhatBatch, normed=True))
    return _sse, _ssen


def calculate_slope_of_normed_cost(sse):
    regr = linear_model.LinearRegression(fit_intercept=False)
    x_sse = np.arange(len(sse)).reshape(len(sse), 1)
    return regr.fit(x_sse, sse).coef_


def regularised(X, Y, slope):
    out = []
    for i in range(len(X) - 10):
        xBatch = X[i:-1]
        yBatch = Y[i:-1]
        Yhat = fitDataViaOlsGetBetaAndLine(xBatch, yBatch)
        out.append(getSSE(yBatch, Yhat, normed=True) - slope * len(yBatch))
    return out


def main():
    series = json.load(sys.stdin)
    out = []
    for seed, ys in enumerate(series):
        Y = np.array(ys)
        X = np.arange(0, len(Y), 1)
        sse, ssen = shrinking_costs(X, Y)
        slope = calculate_slope_of_normed_cost(ssen)[0]
        out.append({
            "seed": seed,
            "chi2": [float(v) for v in sse],
            "chi2_np": [float(v) for v in ssen],
            "lambda": float(slope),
            "chi2_lambda": [float(v) for v in regularised(X, Y, slope)],
        })
    json.dump(out, sys.stdout, separators=(",", ":"))


if __name__ == "__main__":
    main()
