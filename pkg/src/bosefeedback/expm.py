"""Dense matrix exponential by scaling and squaring with diagonal Pade approximants.

Follows Higham (2005), "The scaling and squaring method for the matrix
exponential revisited". Intended for the small (n <= 8) matrices of this package.
"""

from __future__ import annotations

import math

import numpy as np

# (order, 1-norm bound) pairs from Higham (2005), Table 2.3.
_THETA = (
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
)


def _pade_coefficients(m: int) -> list[float]:
    f = math.factorial
    return [f(2 * m - j) * f(m) / (f(2 * m) * f(j) * f(m - j)) for j in range(m + 1)]


_COEFFS = {m: _pade_coefficients(m) for m, _ in _THETA}


def _pade(a: np.ndarray, m: int) -> np.ndarray:
    c = _COEFFS[m]
    n = a.shape[0]
    ident = np.eye(n)
    a2 = a @ a
    if m == 13:
        a4 = a2 @ a2
        a6 = a4 @ a2
        u = a @ (a6 @ (c[13] * a6 + c[11] * a4 + c[9] * a2)
                 + c[7] * a6 + c[5] * a4 + c[3] * a2 + c[1] * ident)
        v = (a6 @ (c[12] * a6 + c[10] * a4 + c[8] * a2)
             + c[6] * a6 + c[4] * a4 + c[2] * a2 + c[0] * ident)
    else:
        powers = [ident, a2]
        for _ in range(2, (m + 1) // 2):
            powers.append(powers[-1] @ a2)
        u = sum(c[j] * powers[j // 2] for j in range(m, 0, -2))
        u = a @ u
        v = sum(c[j] * powers[j // 2] for j in range(m - 1, -1, -2))
    return np.linalg.solve(v - u, v + u)


def matrix_exponential(a) -> np.ndarray:
    """Return ``exp(a)`` for a real square matrix.

    Parameters
    ----------
    a : array_like, shape (n, n)

    Returns
    -------
    ndarray, shape (n, n)
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    norm = np.linalg.norm(a, 1)
    if norm == 0:
        return np.eye(a.shape[0])
    for m, theta in _THETA[:-1]:
        if norm <= theta:
            return _pade(a, m)
    theta13 = _THETA[-1][1]
    s = max(0, int(math.ceil(math.log2(norm / theta13))))
    f = _pade(a / 2.0 ** s, 13)
    for _ in range(s):
        f = f @ f
    return f
