"""Four-dimensional linear model of a single particle and the (quasi) center of mass.

State ordering is fixed to ``(x, p, X, P)`` everywhere. The model is the linear
Ito SDE ``dz = A z dt + B dW`` with two independent Wiener channels
``W = (xi1, xi2)``; its Fokker-Planck equation has drift matrix ``A`` and
diffusion matrix ``D = B B^T`` (with the convention ``d cov/dt = A cov + cov A^T + D``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .expm import matrix_exponential
from .params import DerivedParams, ModelParams, derive_params

IX, IP, IXX, IPP = 0, 1, 2, 3
STATE_LABELS = ("x", "p", "X", "P")

HURWITZ_THRESHOLD = -1e-12


class NotHurwitzError(ValueError):
    """The drift matrix has an eigenvalue with non-negative real part."""

    def __init__(self, eigenvalues):
        self.eigenvalues = np.asarray(eigenvalues)
        listing = ", ".join(f"{z.real + 0.0:.6g}{z.imag + 0.0:+.6g}j" for z in self.eigenvalues)
        super().__init__(f"drift matrix is not Hurwitz; eigenvalues: {listing}")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LinearSystem:
    drift: np.ndarray
    noise_gain: np.ndarray
    diffusion: np.ndarray
    params: Optional[ModelParams] = None
    decoupled: bool = False

    def __post_init__(self):
        object.__setattr__(self, "drift", _frozen(self.drift))
        object.__setattr__(self, "noise_gain", _frozen(self.noise_gain))
        object.__setattr__(self, "diffusion", _frozen(self.diffusion))
        n = self.drift.shape[0]
        if self.drift.shape != (n, n) or self.diffusion.shape != (n, n):
            raise ValueError("drift and diffusion must be square and of equal size")
        if self.noise_gain.shape[0] != n:
            raise ValueError("noise_gain must have one row per state component")
        d = self.diffusion
        if not np.allclose(d, d.T, rtol=0, atol=1e-14 * max(1.0, np.abs(d).max())):
            raise ValueError("diffusion matrix is not symmetric")
        scale = np.linalg.norm(d, 2)
        if scale > 0 and np.linalg.eigvalsh(d).min() < -1e-12 * scale:
            raise ValueError("diffusion matrix is not positive semi-definite")

    @property
    def dim(self) -> int:
        return self.drift.shape[0]


def build_system(
    p: ModelParams, d: Optional[DerivedParams] = None, decoupled: bool = False
) -> LinearSystem:
    """Drift and noise gain of the coupled single-particle / center-of-mass SDEs.

    With ``decoupled=True`` the back-action of the single particle on the
    center of mass (the ``x / <N>`` term in the X equation) is dropped. For
    ``zeta = 0`` both noise channels vanish: without feedback there is no
    measurement, so the model reduces to two free oscillators.
    """
    if d is None:
        d = derive_params(p)
    zeta, theta, nbar = p.zeta, d.theta_n, p.n_mean
    mass, big_m = p.m, d.total_mass
    a = np.zeros((4, 4))
    a[IX, IX] = -zeta / nbar
    a[IX, IP] = 1 / mass
    a[IX, IXX] = -zeta
    a[IP, IX] = -mass * p.omega0 ** 2
    a[IXX, IX] = 0.0 if decoupled else -zeta * theta / nbar
    a[IXX, IXX] = -zeta * theta
    a[IXX, IPP] = 1 / big_m
    a[IPP, IXX] = -big_m * p.omega0 ** 2

    b = np.zeros((4, 2))
    if zeta == 0:
        # no feedback loop: the measurement (and its back-action) is switched off too
        return LinearSystem(drift=a, noise_gain=b, diffusion=b @ b.T, params=p, decoupled=decoupled)
    b[IX, 0] = zeta * p.sigma
    b[IP, 1] = p.hbar / (2 * p.sigma * nbar)
    b[IXX, 0] = theta * zeta * p.sigma
    b[IPP, 1] = p.hbar * theta / (2 * p.sigma)
    return LinearSystem(drift=a, noise_gain=b, diffusion=b @ b.T, params=p, decoupled=decoupled)


def macroscopic_block(sys: LinearSystem) -> LinearSystem:
    """Restrict a decoupled system to its (X, P) block."""
    if not sys.decoupled:
        raise ValueError("the (X, P) block is closed only for a decoupled system")
    idx = [IXX, IPP]
    b = sys.noise_gain[idx, :]
    return LinearSystem(drift=sys.drift[np.ix_(idx, idx)], noise_gain=b, diffusion=b @ b.T,
                        params=sys.params, decoupled=True)


@dataclass(frozen=True, eq=False)
class GaussianMoments:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _frozen(self.mean)
        cov = _frozen(self.cov)
        n = mean.shape[0]
        if mean.shape != (n,) or cov.shape != (n, n):
            raise ValueError("mean must be a vector and cov a matching square matrix")
        scale = max(np.abs(cov).max(), np.finfo(float).tiny)
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * scale):
            raise ValueError("covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-10 * np.linalg.norm(cov, 2):
            raise ValueError("covariance is not positive semi-definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def point(cls, z) -> "GaussianMoments":
        z = np.asarray(z, dtype=float)
        return cls(z, np.zeros((z.size, z.size)))


def ground_state_moments(p: ModelParams) -> GaussianMoments:
    """Product of single-particle and center-of-mass oscillator ground states."""
    big_m = p.m * p.n_mean
    var = [
        p.hbar / (2 * p.m * p.omega0),
        p.hbar * p.m * p.omega0 / 2,
        p.hbar / (2 * big_m * p.omega0),
        p.hbar * big_m * p.omega0 / 2,
    ]
    return GaussianMoments(np.zeros(4), np.diag(var))


def _van_loan(a: np.ndarray, d: np.ndarray, h: float):
    n = a.shape[0]
    c = np.zeros((2 * n, 2 * n))
    c[:n, :n] = -a * h
    c[:n, n:] = d * h
    c[n:, n:] = a.T * h
    f = matrix_exponential(c)
    phi = f[n:, n:].T
    q = phi @ f[:n, n:]
    return phi, 0.5 * (q + q.T)


def transition(sys: LinearSystem, t: float):
    """Exact transition of the linear SDE over a horizon ``t``.

    Returns ``(phi, q)`` with ``phi = exp(A t)`` and
    ``q = int_0^t exp(A s) D exp(A s)^T ds``.

    The augmented exponential is evaluated on a short sub-step and then
    doubled, which avoids the exp(-A t) blow-up of a single long-horizon call.
    """
    if t < 0:
        raise ValueError(f"time must be >= 0 (got {t})")
    a, d = sys.drift, sys.diffusion
    n = a.shape[0]
    if t == 0:
        return np.eye(n), np.zeros((n, n))
    norm = np.linalg.norm(a, 1) * t
    k = max(0, int(np.ceil(np.log2(norm)))) if norm > 1 else 0
    phi, q = _van_loan(a, d, t / 2 ** k)
    for _ in range(k):
        q = phi @ q @ phi.T + q
        q = 0.5 * (q + q.T)
        phi = phi @ phi
    return phi, q


def propagate_moments(sys: LinearSystem, g0: GaussianMoments, t: float) -> GaussianMoments:
    """Mean and covariance after time ``t`` (exact for the linear model)."""
    phi, q = transition(sys, t)
    cov = phi @ g0.cov @ phi.T + q
    return GaussianMoments(phi @ g0.mean, 0.5 * (cov + cov.T))


def check_hurwitz(a: np.ndarray) -> np.ndarray:
    eig = np.linalg.eigvals(a)
    if np.any(eig.real >= HURWITZ_THRESHOLD):
        raise NotHurwitzError(eig)
    return eig


def solve_lyapunov(a: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Solve ``a S + S a^T + d = 0`` for symmetric ``S`` on its n(n+1)/2 free entries."""
    n = a.shape[0]
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    op = np.empty((len(pairs), len(pairs)))
    for col, (k, l) in enumerate(pairs):
        e = np.zeros((n, n))
        e[k, l] = e[l, k] = 1.0
        image = a @ e + e @ a.T
        op[:, col] = [image[i, j] for i, j in pairs]
    rhs = -np.array([d[i, j] for i, j in pairs])
    sol = np.linalg.solve(op, rhs)
    s = np.zeros((n, n))
    for (i, j), v in zip(pairs, sol):
        s[i, j] = s[j, i] = v
    return s


def stationary_covariance(sys: LinearSystem) -> np.ndarray:
    """Stationary covariance of a Hurwitz linear system.

    Raises
    ------
    NotHurwitzError
        If any drift eigenvalue has real part >= -1e-12. The fully coupled
        four-dimensional model is always in this class: with
        ``Y = x/<N> + X`` the x-equation reads ``dx = (p/m - zeta Y) dt + ...``,
        so ``+-i omega0`` are exact eigenvalues.
    """
    check_hurwitz(sys.drift)
    s = solve_lyapunov(sys.drift, sys.diffusion)
    scale = np.linalg.norm(s, 2)
    if np.linalg.eigvalsh(s).min() < -1e-10 * scale:
        raise ArithmeticError("Lyapunov solution is not positive semi-definite")
    return s
