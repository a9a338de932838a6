"""Batched affine recursion z[s+1] = F z[s] + G u[s] + c[s] in numpy."""

import numpy as np


def linear_recursion(F, G, z0, u, c=None):
    n_traj, n_steps, _ = u.shape
    out = np.empty((n_traj, n_steps + 1, F.shape[0]))
    out[:, 0] = z0
    ft, gt = F.T, G.T
    z = out[:, 0]
    for s in range(n_steps):
        z = z @ ft + u[:, s] @ gt
        if c is not None:
            z = z + c[s]
        out[:, s + 1] = z
    return out
