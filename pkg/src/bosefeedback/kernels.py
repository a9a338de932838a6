"""Backend selection for the time-stepping loops.

The compiled extension ``_core.recursion`` is used when it has been built and
``BOSEFEEDBACK_PURE_PYTHON`` is unset (or ``0``); otherwise the numpy
implementation is used. Both compute

    z[s+1] = F @ z[s] + G @ u[s] + c[s]

for a batch of trajectories and return the full path including ``z[0]``.
Results agree to rounding, not bit-for-bit.
"""

import os

import numpy as np

from ._core import recursion_py

_pure = os.environ.get("BOSEFEEDBACK_PURE_PYTHON", "0") not in ("", "0")

if _pure:
    _impl = recursion_py
    BACKEND = "python"
else:
    try:
        from ._core import recursion as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = recursion_py
        BACKEND = "python"


def linear_recursion(F, G, z0, u, c=None, backend=None):
    """Iterate an affine map over a batch of input sequences.

    Parameters
    ----------
    F : (n, n) array
    G : (n, k) array
    z0 : (n_traj, n) array
    u : (n_traj, n_steps, k) array
    c : (n_steps, n) array, optional
        Deterministic per-step offset shared by all trajectories.
    backend : {"cython", "python"}, optional
        Override the import-time choice.

    Returns
    -------
    (n_traj, n_steps + 1, n) array
    """
    impl = _impl
    if backend == "python":
        impl = recursion_py
    elif backend == "cython":
        from ._core import recursion as impl
    elif backend is not None:
        raise ValueError(f"unknown backend {backend!r}")
    F = np.ascontiguousarray(F, dtype=float)
    G = np.ascontiguousarray(G, dtype=float)
    z0 = np.ascontiguousarray(np.atleast_2d(z0), dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    if u.ndim != 3 or u.shape[0] != z0.shape[0] or u.shape[2] != G.shape[1]:
        raise ValueError(f"input shape {u.shape} does not match z0 {z0.shape} / G {G.shape}")
    if c is not None:
        c = np.ascontiguousarray(c, dtype=float)
        if c.shape != (u.shape[1], F.shape[0]):
            raise ValueError(f"offset shape {c.shape} does not match ({u.shape[1]}, {F.shape[0]})")
    return impl.linear_recursion(F, G, z0, u, c)
