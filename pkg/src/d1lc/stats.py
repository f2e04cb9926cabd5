import numpy as np
from scipy.stats import beta


def clopper_pearson_lower(k, n, confidence=0.99):
    """One-sided lower confidence bound on a binomial success rate."""
    if n == 0 or k == 0:
        return 0.0
    return float(beta.ppf(1 - confidence, k, n - k + 1))


def clopper_pearson_upper(k, n, confidence=0.99):
    if n == 0 or k == n:
        return 1.0
    return float(beta.ppf(confidence, k + 1, n - k))


def quantiles(values, qs=(0.0, 0.1, 0.5, 0.9, 1.0)):
    v = np.asarray(values, float)
    if not len(v):
        return [float("nan")] * len(qs)
    return [float(x) for x in np.quantile(v, qs)]
