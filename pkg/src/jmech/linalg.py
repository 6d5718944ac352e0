"""Dense matrix exponential by scaling and squaring."""

from __future__ import annotations

import math

import numpy as np

# Taylor degree for ||A / 2**s||_1 <= 1/2: remainder < 0.5**19 / 19! ~ 1.6e-23
_THETA = 0.5
_DEGREE = 18


def expm(A) -> np.ndarray:
    """``exp(A)`` for a square real or complex matrix.

    The matrix is scaled by ``2**-s`` until its 1-norm is at most 1/2, a
    degree-18 Taylor polynomial is evaluated by Horner's rule, and the result
    is squared ``s`` times.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expm needs a square matrix")
    n = A.shape[0]
    dtype = np.result_type(A.dtype, np.float64)
    if n == 0:
        return np.zeros((0, 0), dtype=dtype)
    norm = np.abs(A).sum(axis=0).max()
    if not np.isfinite(norm):
        raise ValueError("expm of a non-finite matrix")
    s = 0 if norm <= _THETA else int(math.ceil(math.log2(norm / _THETA)))
    B = A.astype(dtype) / (2.0**s)
    eye = np.eye(n, dtype=dtype)
    E = eye.copy()
    for k in range(_DEGREE, 0, -1):
        E = eye + (B @ E) / k
    for _ in range(s):
        E = E @ E
    return E
