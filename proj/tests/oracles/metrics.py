"""Brute-force KID and closed-form FID oracles.

Run: python3 tests/oracles/metrics.py
Frozen into tests/unit/test_metrics.cpp and tests/acceptance/acceptance.cpp.
"""
import math

import numpy as np
from scipy import linalg


def kid_x(i, j):
    return round(math.sin(0.7 * i + 1.3 * j) + 0.1 * j, 6)


def kid_y(i, j):
    return round(math.cos(0.5 * i - 0.9 * j) * 1.2 + 0.05 * i, 6)


def poly(u, v):
    d = len(u)
    return (math.fsum(a * b for a, b in zip(u, v)) / d + 1.0) ** 3


def mmd2_unbiased(x, y):
    m, n = len(x), len(y)
    sxx = math.fsum(poly(x[i], x[j]) for i in range(m) for j in range(m) if i != j)
    syy = math.fsum(poly(y[i], y[j]) for i in range(n) for j in range(n) if i != j)
    sxy = math.fsum(poly(x[i], y[j]) for i in range(m) for j in range(n))
    return sxx / (m * (m - 1)) + syy / (n * (n - 1)) - 2 * sxy / (m * n)


def fid_closed_diag(mu1, var1, mu2, var2):
    return sum((a - b) ** 2 for a, b in zip(mu1, mu2)) + sum(
        s1 + s2 - 2 * math.sqrt(s1 * s2) for s1, s2 in zip(var1, var2))


def fid_general(mu1, c1, mu2, c2):
    covmean = linalg.sqrtm(c1 @ c2).real
    return float(np.sum((mu1 - mu2) ** 2) + np.trace(c1 + c2 - 2 * covmean))


if __name__ == "__main__":
    x = [[kid_x(i, j) for j in range(4)] for i in range(8)]
    y = [[kid_y(i, j) for j in range(4)] for i in range(8)]
    print("kid 8x4 mmd2:", repr(mmd2_unbiased(x, y)))

    mu1, var1 = [0.5, -1.0, 2.0, 0.0], [1.0, 0.5, 2.0, 1.5]
    mu2, var2 = [1.0, 0.0, 1.5, -0.5], [2.0, 0.25, 1.0, 1.5]
    print("diag 4-d closed form:", repr(fid_closed_diag(mu1, var1, mu2, var2)))

    a = np.array([[2.0, 0.3, 0.1], [0.3, 1.0, -0.2], [0.1, -0.2, 0.5]])
    b = np.array([[1.0, -0.4, 0.0], [-0.4, 1.5, 0.3], [0.0, 0.3, 0.8]])
    m1 = np.array([0.1, 0.2, -0.3])
    m2 = np.array([-0.2, 0.4, 0.0])
    print("general 3-d:", repr(fid_general(m1, a, m2, b)))
