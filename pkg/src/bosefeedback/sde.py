"""Monte Carlo integration of the linear SDEs with reproducible per-trajectory noise.

Random streams
--------------
Trajectory ``i`` of a run with seed ``s`` draws all of its Gaussian variates
from ``numpy.random.Generator(Philox(SeedSequence(s, spawn_key=(i,))))``:
Philox-4x64 is counter based and the seed sequence hashes ``(s, i)`` into an
independent key per trajectory. Each trajectory first consumes the variates
for its initial state (if the initial condition is random), then, step by
step, the variates for its increments. Draws are chunked in time but the
stream a trajectory sees does not depend on the chunk size.

Streams are reproducible within a build; bit-exactness across platforms or
numpy versions is not promised.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .kernels import linear_recursion
from .linear_model import GaussianMoments, LinearSystem, ground_state_moments, transition

SCHEMES = ("euler_maruyama", "exact_gaussian")
RECORD_MODES = ("full_paths", "moments_only", "noise_streams")
DEFAULT_MEMORY_CAP = 2 * 1024 ** 3
_CHUNK_BYTES = 96 * 1024 ** 2


class MemoryCapError(MemoryError):
    """Requested path storage exceeds the configured memory cap."""


def rng_stream(seed: int, traj_index: int) -> np.random.Generator:
    """Independent Gaussian-capable generator for one trajectory."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(traj_index),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SimConfig:
    dt: float
    n_steps: int
    n_traj: int
    seed: int
    # GaussianMoments (sampled per trajectory), one state, or one state per trajectory
    initial: Union[GaussianMoments, np.ndarray, None] = None
    scheme: str = "euler_maruyama"
    record: str = "moments_only"
    memory_cap: int = DEFAULT_MEMORY_CAP

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0 (got {self.dt})")
        if self.n_steps < 1 or self.n_traj < 1:
            raise ValueError("n_steps and n_traj must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.record not in RECORD_MODES:
            raise ValueError(f"record must be one of {RECORD_MODES}")


@dataclass(eq=False)
class TrajectoryEnsemble:
    times: np.ndarray
    sample_mean: np.ndarray
    sample_cov: np.ndarray
    paths: Optional[np.ndarray] = None
    noise: Optional[np.ndarray] = None
    n_traj: int = 0
    labels: tuple = ("x", "p", "X", "P")


def step_em(sys: LinearSystem, z, dw, dt: float) -> np.ndarray:
    """One Euler-Maruyama step ``z + A z dt + B dw``."""
    z = np.asarray(z, dtype=float)
    return z + sys.drift @ z * dt + sys.noise_gain @ np.asarray(dw, dtype=float)


@dataclass(frozen=True, eq=False)
class ExactStep:
    """Precomputed exact one-step transition of a linear SDE."""

    dt: float
    phi: np.ndarray
    cov: np.ndarray
    chol: np.ndarray

    def correlated_increment(self, normals) -> np.ndarray:
        return np.asarray(normals) @ self.chol.T


def _psd_factor(q: np.ndarray) -> np.ndarray:
    tr = np.trace(q)
    if tr == 0:
        return np.zeros_like(q)
    jitter = 0.0
    for _ in range(8):
        try:
            return np.linalg.cholesky(q + jitter * np.eye(q.shape[0]))
        except np.linalg.LinAlgError:
            jitter = 1e-14 * tr if jitter == 0 else jitter * 10
    raise np.linalg.LinAlgError("step covariance is not positive semi-definite")


def exact_step(sys: LinearSystem, dt: float) -> ExactStep:
    phi, q = transition(sys, dt)
    return ExactStep(dt=dt, phi=phi, cov=q, chol=_psd_factor(q))


def step_exact(step: ExactStep, z, dw_correlated) -> np.ndarray:
    """Exact step ``exp(A dt) z + dw_correlated``; see :meth:`ExactStep.correlated_increment`."""
    return step.phi @ np.asarray(z, dtype=float) + np.asarray(dw_correlated)


def _sample_initial(initial, n: int, gens) -> np.ndarray:
    if isinstance(initial, GaussianMoments):
        w, v = np.linalg.eigh(initial.cov)
        root = v * np.sqrt(np.clip(w, 0, None))
        if not np.any(root):
            return np.tile(initial.mean, (len(gens), 1))
        draws = np.stack([g.standard_normal(n) for g in gens])
        return initial.mean + draws @ root.T
    z = np.asarray(initial, dtype=float)
    if z.shape == (len(gens), n):
        return z.copy()
    if z.shape != (n,):
        raise ValueError(f"initial state must have shape ({n},) or ({len(gens)}, {n})")
    return np.tile(z, (len(gens), 1))


def _moments(chunk: np.ndarray):
    """Mean and unbiased covariance over the trajectory axis with pairwise summation."""
    n_traj, n_t, n = chunk.shape
    data = np.ascontiguousarray(chunk.transpose(1, 2, 0))  # (time, comp, traj)
    mean = data.sum(axis=-1) / n_traj
    centered = data - mean[..., None]
    cov = np.zeros((n_t, n, n))
    if n_traj > 1:
        for i in range(n):
            for j in range(i, n):
                c = (centered[:, i, :] * centered[:, j, :]).sum(axis=-1) / (n_traj - 1)
                cov[:, i, j] = cov[:, j, i] = c
    return mean, cov


def path_storage_bytes(n_traj: int, n_steps: int, dim: int = 4) -> int:
    return n_traj * (n_steps + 1) * dim * 8


def simulate_ensemble(
    sys: LinearSystem, cfg: SimConfig, noise: Optional[np.ndarray] = None
) -> TrajectoryEnsemble:
    """Integrate ``cfg.n_traj`` independent trajectories.

    Parameters
    ----------
    sys : LinearSystem
    cfg : SimConfig
    noise : ndarray, shape (n_traj, n_steps, 2), optional
        Wiener increments to use instead of the seeded streams
        (Euler-Maruyama only). The initial state is then still drawn from the
        seeded streams.

    Returns
    -------
    TrajectoryEnsemble
    """
    n = sys.dim
    k = sys.noise_gain.shape[1]
    if cfg.record == "full_paths":
        need = path_storage_bytes(cfg.n_traj, cfg.n_steps, n)
        if need > cfg.memory_cap:
            raise MemoryCapError(
                f"full path storage needs {need / 1024 ** 3:.2f} GiB, cap is "
                f"{cfg.memory_cap / 1024 ** 3:.2f} GiB"
            )
    if cfg.record == "noise_streams":
        need = cfg.n_traj * cfg.n_steps * (k if cfg.scheme == "euler_maruyama" else n) * 8
        if need > cfg.memory_cap:
            raise MemoryCapError(f"noise storage needs {need / 1024 ** 3:.2f} GiB")
    if noise is not None:
        if cfg.scheme != "euler_maruyama":
            raise ValueError("external noise is only supported for euler_maruyama")
        noise = np.asarray(noise, dtype=float)
        if noise.shape != (cfg.n_traj, cfg.n_steps, k):
            raise ValueError(f"noise must have shape {(cfg.n_traj, cfg.n_steps, k)}")

    gens = [rng_stream(cfg.seed, i) for i in range(cfg.n_traj)]
    initial = cfg.initial
    if initial is None:
        if sys.params is None:
            raise ValueError("an initial condition is required for systems without params")
        initial = ground_state_moments(sys.params)
    z = _sample_initial(initial, n, gens)

    dt = cfg.dt
    if cfg.scheme == "euler_maruyama":
        F = np.eye(n) + sys.drift * dt
        G = sys.noise_gain
        n_draw = k
        scale = np.sqrt(dt)
    else:
        step = exact_step(sys, dt)
        F, G = step.phi, step.chol
        n_draw = n
        scale = 1.0

    times = dt * np.arange(cfg.n_steps + 1)
    mean = np.empty((cfg.n_steps + 1, n))
    cov = np.empty((cfg.n_steps + 1, n, n))
    paths = np.empty((cfg.n_traj, cfg.n_steps + 1, n)) if cfg.record == "full_paths" else None
    recorded = (np.empty((cfg.n_traj, cfg.n_steps, n_draw))
                if cfg.record == "noise_streams" else None)
    m0, c0 = _moments(z[:, None, :])
    mean[0], cov[0] = m0[0], c0[0]
    if paths is not None:
        paths[:, 0] = z

    chunk = max(1, _CHUNK_BYTES // (cfg.n_traj * max(n, n_draw) * 8))
    s0 = 0
    while s0 < cfg.n_steps:
        s1 = min(cfg.n_steps, s0 + chunk)
        if noise is not None:
            u = noise[:, s0:s1]
        else:
            u = np.stack([g.standard_normal((s1 - s0, n_draw)) for g in gens]) * scale
        if recorded is not None:
            recorded[:, s0:s1] = u
        seg = linear_recursion(F, G, z, u)
        m, c = _moments(seg[:, 1:])
        mean[s0 + 1:s1 + 1], cov[s0 + 1:s1 + 1] = m, c
        if paths is not None:
            paths[:, s0 + 1:s1 + 1] = seg[:, 1:]
        z = seg[:, -1]
        s0 = s1

    return TrajectoryEnsemble(times=times, sample_mean=mean, sample_cov=cov, paths=paths,
                              noise=recorded, n_traj=cfg.n_traj)


def covariance_standard_error(cov: np.ndarray, n_traj: int) -> np.ndarray:
    """Standard error of sample covariance entries for a Gaussian population with covariance ``cov``."""
    var = np.diag(cov)
    return np.sqrt((np.outer(var, var) + cov ** 2) / n_traj)


def mean_standard_error(cov: np.ndarray, n_traj: int) -> np.ndarray:
    return np.sqrt(np.diag(cov) / n_traj)


def em_moments(sys: LinearSystem, g0: GaussianMoments, dt: float, n_steps: int):
    """Exact mean and covariance of the Euler-Maruyama chain (no sampling).

    Returns arrays of shape ``(n_steps + 1, n)`` and ``(n_steps + 1, n, n)``.
    """
    n = sys.dim
    F = np.eye(n) + sys.drift * dt
    Q = sys.diffusion * dt
    mean = np.empty((n_steps + 1, n))
    cov = np.empty((n_steps + 1, n, n))
    mean[0], cov[0] = g0.mean, g0.cov
    for s in range(n_steps):
        mean[s + 1] = F @ mean[s]
        c = F @ cov[s] @ F.T + Q
        cov[s + 1] = 0.5 * (c + c.T)
    return mean, cov
