"""Elimination of the center of mass for large particle numbers.

Once the ``x / <N>`` back-action on the center of mass is dropped, (X, P) is a
damped oscillator driven by the same two Wiener channels as the particle. Its
stochastic part enters the particle's x-equation through ``-zeta X dt``. Folding
that term into the white channel xi1 gives the effective noise

    d xi_N = d xi1 - (X_stoch / sigma) dt,

whose memory kernel is the impulse response of the (X, P) block. Here that
kernel is realized recursively by the 2x2 block itself, which is valid for the
under-, critically- and over-damped regimes alike. The closed trigonometric
form of the kernel is used only in :func:`convolution_oracle`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .expm import matrix_exponential
from .kernels import linear_recursion
from .linear_model import GaussianMoments, ground_state_moments
from .params import ModelParams, derive_params, from_dimensionless
from .sde import SimConfig, TrajectoryEnsemble, _moments, _sample_initial, rng_stream


@dataclass(frozen=True, eq=False)
class KernelStateSpace:
    """Decoupled (X, P) dynamics seen as a filter from (xi1, xi2) to the x-equation.

    Attributes
    ----------
    a_mac : (2, 2) drift of (X, P)
    input_map : (2, 2) gains of (d xi1, d xi2) into (X, P)
    readout : (2,) row giving the feedback term ``-zeta X`` of the x-equation
    gain : gain ``zeta sigma`` of d xi1 in the x-equation
    """

    a_mac: np.ndarray
    input_map: np.ndarray
    readout: np.ndarray
    gain: float
    gamma_n: float
    omega0: float
    params: Optional[ModelParams] = None

    @property
    def passthrough(self) -> bool:
        return self.gamma_n == 0 or self.gain == 0


def kernel_state_space(p: ModelParams) -> KernelStateSpace:
    d = derive_params(p)
    big_m = d.total_mass
    a_mac = np.array([[-p.zeta * d.theta_n, 1 / big_m],
                      [-big_m * p.omega0 ** 2, 0.0]])
    input_map = np.array([[d.theta_n * p.zeta * p.sigma, 0.0],
                          [0.0, p.hbar * d.theta_n / (2 * p.sigma)]])
    readout = np.array([-p.zeta, 0.0])
    return KernelStateSpace(a_mac=a_mac, input_map=input_map, readout=readout,
                            gain=p.zeta * p.sigma, gamma_n=d.gamma_n, omega0=p.omega0, params=p)


def kernel_from_dimensionless(alpha_n: float, eta: float, omega0: float = 1.0) -> KernelStateSpace:
    """Kernel for a dimensionless pair, realized with n_mean = 1, n_cond = 2 (Theta_N = 1).

    ``alpha_n = 0`` gives the feedback-free pass-through kernel.
    """
    if alpha_n == 0:
        return kernel_state_space(ModelParams(omega0=omega0, zeta=0.0))
    return kernel_state_space(from_dimensionless(alpha_n, eta, n_mean=1, n_cond=2, omega0=omega0))


@dataclass(eq=False)
class ColoredNoisePath:
    """Effective-noise increments and the Wiener increments they were built from.

    Arrays have shape ``(n,)`` for one path or ``(n_paths, n)`` for a batch.
    """

    dt: float
    increments: np.ndarray
    source_w1: np.ndarray
    source_w2: np.ndarray

    def __post_init__(self):
        if not (self.increments.shape == self.source_w1.shape == self.source_w2.shape):
            raise ValueError("increment and source sequences must have equal shapes")

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.increments.shape[-1])


def _check_pair(w1, w2):
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    if w1.shape != w2.shape:
        raise ValueError(f"w1 and w2 lengths differ: {w1.shape} vs {w2.shape}")
    return w1, w2


def kernel_recursion(ks: KernelStateSpace, dt: float):
    """One-step propagator of the kernel state and the input gain after one step."""
    e = matrix_exponential(ks.a_mac * dt)
    return e, e @ ks.input_map


def generate_xi_n(ks: KernelStateSpace, w1, w2, dt: float,
                  state0: Optional[np.ndarray] = None) -> ColoredNoisePath:
    """Effective noise increments from Wiener increments, O(n) per path.

    Increment ``k`` is ``w1[k] + dt * readout @ Z[k] / gain``, where the kernel
    state ``Z[k]`` has seen the inputs of steps ``0..k-1`` only and starts at
    zero (or ``state0`` to continue a previous block).
    """
    w1, w2 = _check_pair(w1, w2)
    if ks.passthrough:
        return ColoredNoisePath(dt, w1.copy(), w1, w2)
    single = w1.ndim == 1
    a1 = np.atleast_2d(w1)
    a2 = np.atleast_2d(w2)
    e, g = kernel_recursion(ks, dt)
    z0 = np.zeros((a1.shape[0], 2)) if state0 is None else np.atleast_2d(state0)
    z = linear_recursion(e, g, z0, np.stack([a1, a2], axis=-1))
    inc = a1 + dt * (z[:, :-1] @ ks.readout) / ks.gain
    if single:
        inc = inc[0]
    return ColoredNoisePath(dt, inc, w1, w2)


def convolution_oracle(w1, w2, dt: float, gamma_n: float, omega0: float,
                       eta: Optional[float]) -> ColoredNoisePath:
    """Direct O(n**2) evaluation of the effective noise from its closed-form kernel.

    Uses the trigonometric kernel for alpha < 1 and its hyperbolic continuation
    for alpha > 1; the history sum runs over earlier steps only.
    """
    w1, w2 = _check_pair(w1, w2)
    if w1.ndim != 1:
        raise ValueError("oracle handles one path at a time")
    if gamma_n == 0:
        return ColoredNoisePath(dt, w1.copy(), w1, w2)
    alpha = gamma_n / omega0
    if alpha == 1:
        raise ValueError("alpha_N = 1 has no closed trigonometric form")
    n = w1.size
    tau = dt * np.arange(1, n)
    env = np.exp(-gamma_n * tau)
    if alpha < 1:
        freq = omega0 * math.sqrt(1 - alpha ** 2)
        c = np.cos(freq * tau)
        s = np.sin(freq * tau) / math.sqrt(1 - alpha ** 2)
    else:
        freq = omega0 * math.sqrt(alpha ** 2 - 1)
        c = np.cosh(freq * tau)
        s = np.sinh(freq * tau) / math.sqrt(alpha ** 2 - 1)
    h1 = (c - alpha * s) * env
    h2 = eta * s * env
    # np.convolve evaluates the double sum directly.
    hist = np.convolve(w1, h1)[: n - 1] + np.convolve(w2, h2)[: n - 1]
    inc = w1.copy()
    inc[1:] -= 2 * gamma_n * dt * hist
    return ColoredNoisePath(dt, inc, w1, w2)


def x_deterministic(ks: KernelStateSpace, X0, t) -> np.ndarray:
    """Mean (X, P) of the decoupled center of mass at time(s) ``t``."""
    X0 = np.asarray(X0, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.array([matrix_exponential(ks.a_mac * ti) @ X0 for ti in t.ravel()])
    return out.reshape(t.shape + (2,))


def sample_xi_n(ks: KernelStateSpace, dt: float, n_steps: int, n_paths: int, seed: int,
                burn_in_steps: int = 0, first_index: int = 0) -> ColoredNoisePath:
    """Draw ``n_paths`` effective-noise paths from the seeded per-path streams.

    The first ``burn_in_steps`` increments (kernel transient from the zero
    initial state) are generated and discarded.
    """
    total = n_steps + burn_in_steps
    draws = np.stack([rng_stream(seed, first_index + i).standard_normal((total, 2))
                      for i in range(n_paths)]) * math.sqrt(dt)
    path = generate_xi_n(ks, draws[..., 0], draws[..., 1], dt)
    sl = slice(burn_in_steps, None)
    return ColoredNoisePath(dt, path.increments[:, sl], path.source_w1[:, sl],
                            path.source_w2[:, sl])


def reduced_noise_gain(p: ModelParams) -> np.ndarray:
    """Gains of (d xi_N, d xi2, X_det dt) in the reduced (x, p) equations."""
    if p.zeta == 0:
        return np.zeros((2, 3))
    return np.array([[p.zeta * p.sigma, 0.0, -p.zeta],
                     [0.0, p.hbar / (2 * p.sigma * p.n_mean), 0.0]])


def reduced_drift(p: ModelParams) -> np.ndarray:
    return np.array([[-p.zeta / p.n_mean, 1 / p.m],
                     [-p.m * p.omega0 ** 2, 0.0]])


def simulate_reduced(p: ModelParams, cfg: SimConfig,
                     noise: Optional[np.ndarray] = None) -> TrajectoryEnsemble:
    """Euler-Maruyama integration of the reduced single-particle model.

    ``cfg.initial`` is a four-dimensional (x, p, X, P) initial condition (the
    default is the product ground state) and is consumed from the streams in
    the same way as :func:`bosefeedback.sde.simulate_ensemble`; with equal
    seeds both runs therefore see the same Wiener increments. The macroscopic
    part of each trajectory's initial state sets its deterministic drive.

    Parameters
    ----------
    p : ModelParams
    cfg : SimConfig
        Only ``euler_maruyama`` is supported.
    noise : ndarray, shape (n_traj, n_steps, 2), optional
        Explicit Wiener increments.
    """
    if cfg.scheme != "euler_maruyama":
        raise ValueError("the reduced model is integrated with euler_maruyama only")
    ks = kernel_state_space(p)
    n_traj, n_steps, dt = cfg.n_traj, cfg.n_steps, cfg.dt
    if noise is not None:
        noise = np.asarray(noise, dtype=float)
        if noise.shape != (n_traj, n_steps, 2):
            raise ValueError(f"noise must have shape {(n_traj, n_steps, 2)}")
    if cfg.record == "full_paths":
        from .sde import MemoryCapError, path_storage_bytes
        need = path_storage_bytes(n_traj, n_steps, 2)
        if need > cfg.memory_cap:
            raise MemoryCapError(f"full path storage needs {need / 1024 ** 3:.2f} GiB")

    gens = [rng_stream(cfg.seed, i) for i in range(n_traj)]
    initial = cfg.initial if cfg.initial is not None else ground_state_moments(p)
    z4 = _sample_initial(initial, 4, gens)
    xp = z4[:, :2].copy()
    e, g = kernel_recursion(ks, dt)
    z_stoch = np.zeros((n_traj, 2))
    z_det = z4[:, 2:].copy()

    F = np.eye(2) + reduced_drift(p) * dt
    G = reduced_noise_gain(p)
    times = dt * np.arange(n_steps + 1)
    mean = np.empty((n_steps + 1, 2))
    cov = np.empty((n_steps + 1, 2, 2))
    paths = np.empty((n_traj, n_steps + 1, 2)) if cfg.record == "full_paths" else None
    recorded = np.empty((n_traj, n_steps, 3)) if cfg.record == "noise_streams" else None
    m0, c0 = _moments(xp[:, None, :])
    mean[0], cov[0] = m0[0], c0[0]
    if paths is not None:
        paths[:, 0] = xp

    chunk = max(1, (64 * 1024 ** 2) // (n_traj * 8 * 8))
    s0 = 0
    while s0 < n_steps:
        s1 = min(n_steps, s0 + chunk)
        if noise is not None:
            w = noise[:, s0:s1]
        else:
            w = np.stack([gen.standard_normal((s1 - s0, 2)) for gen in gens]) * math.sqrt(dt)
        if ks.passthrough:
            dxi = w[..., 0]
        else:
            zs = linear_recursion(e, g, z_stoch, w)
            dxi = w[..., 0] + dt * (zs[:, :-1] @ ks.readout) / ks.gain
            z_stoch = zs[:, -1]
        zd = linear_recursion(e, np.zeros((2, 1)), z_det, np.zeros((n_traj, s1 - s0, 1)))
        drive = zd[:, :-1, 0] * dt
        z_det = zd[:, -1]
        u = np.stack([dxi, w[..., 1], drive], axis=-1)
        seg = linear_recursion(F, G, xp, u)
        m, c = _moments(seg[:, 1:])
        mean[s0 + 1:s1 + 1], cov[s0 + 1:s1 + 1] = m, c
        if paths is not None:
            paths[:, s0 + 1:s1 + 1] = seg[:, 1:]
        if recorded is not None:
            recorded[:, s0:s1] = np.stack([dxi, w[..., 0], w[..., 1]], axis=-1)
        xp = seg[:, -1]
        s0 = s1

    return TrajectoryEnsemble(times=times, sample_mean=mean, sample_cov=cov, paths=paths,
                              noise=recorded, n_traj=n_traj, labels=("x", "p"))


def pathwise_comparison(p: ModelParams, dt: float, t_final: float, n_paths: int, seed: int,
                        levels: int = 3) -> dict:
    """Compare reduced and decoupled full x-paths driven by the same Wiener paths.

    The finest increments (step ``dt / 2**(levels-1)``) come from the seeded
    streams and are summed pairwise for the coarser steps. Returns the
    maximum ``|x_reduced - x_full|`` per step size and the fitted order of
    its decay in ``dt``.
    """
    from .linear_model import build_system
    from .sde import simulate_ensemble

    fine = dt / 2 ** (levels - 1)
    n_fine = int(round(t_final / fine))
    n_fine -= n_fine % 2 ** (levels - 1)
    gens = [rng_stream(seed, i) for i in range(n_paths)]
    z0 = _sample_initial(ground_state_moments(p), 4, gens)
    w_fine = np.stack([g.standard_normal((n_fine, 2)) for g in gens]) * math.sqrt(fine)
    sysd = build_system(p, decoupled=True)
    dts, errors = [], []
    for level in range(levels):
        factor = 2 ** (levels - 1 - level)
        w = w_fine.reshape(n_paths, n_fine // factor, factor, 2).sum(axis=2)
        cfg = SimConfig(dt=fine * factor, n_steps=n_fine // factor, n_traj=n_paths, seed=seed,
                        initial=z0, record="full_paths")
        full = simulate_ensemble(sysd, cfg, noise=w)
        red = simulate_reduced(p, cfg, noise=w)
        dts.append(cfg.dt)
        errors.append(float(np.abs(full.paths[..., 0] - red.paths[..., 0]).max()))
    order = float(np.polyfit(np.log(dts), np.log(errors), 1)[0]) if min(errors) > 0 else float("inf")
    return {"dt": dts, "max_abs_dx": errors, "fitted_order": order, "t_final": n_fine * fine,
            "n_paths": n_paths, "seed": seed}

