"""Shared test utilities: residuals, integer instances, dense expansions."""

import numpy as np

from skewltl import SkewMatrixLower, compose_permutation, reconstruct
from skewltl.oracle import exact_from_int


def residual(x, result):
    """|| P X P^T - L T L^T ||_F / ||X||_F via the reconstruction helper."""
    rec = reconstruct(result.l, result.t, result.p).dense()
    ref = x.dense()
    den = np.linalg.norm(ref)
    return np.linalg.norm(rec - ref) / (den if den else 1.0)


def random_int_skew(rng, m, lo=-9, hi=9):
    """Exact (Fraction-valued) skew matrix with integer entries."""
    ints = rng.integers(lo, hi + 1, size=m * (m - 1) // 2)
    return exact_from_int(ints, m)


def worked_example():
    x = SkewMatrixLower.zeros(4)
    x.data[1, 0], x.data[2, 0], x.data[3, 0] = 2.0, 1.0, 3.0
    x.data[2, 1], x.data[3, 1] = 4.0, 1.0
    x.data[3, 2] = 5.0
    return x


def permute_dense(dense, p):
    """P X P^T for a PermutationVector (forward orientation)."""
    perm = compose_permutation(p)
    return dense[np.ix_(perm, perm)]
