import numpy as np
from scipy.optimize import linear_sum_assignment


def spectrum_mismatch(a, b):
    """Largest distance between two eigenvalue sets under the best one-to-one matching."""
    a, b = np.asarray(a), np.asarray(b)
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())
