"""Spectrum of the effective noise: analytic evaluation, Welch estimation, extrema.

Convention: two-sided spectral density of the rate d xi_N / dt with angular
frequency, ``S(w) = int dtau exp(i w tau) <xi'(t + tau) xi'(t)>``, so that
white noise of unit intensity has ``S = 1``. Frequencies are in units of omega0.

The filter from the white channels (xi1, xi2) to xi_N' has transfer functions

    T1 = 1 - 2 G s / (s**2 + 2 G s + w0**2),   T2 = -2 G eta w0 / (s**2 + 2 G s + w0**2)

with ``s = i w`` and ``G = Gamma_N``, which yields the closed form in
:func:`closed_form_spectrum`. :func:`analytic_spectrum` evaluates the same
quantity from the resolvent of the kernel state space instead.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Union

import numpy as np
from scipy.signal import get_window

from .colored_noise import (ColoredNoisePath, KernelStateSpace, kernel_from_dimensionless,
                            kernel_state_space, sample_xi_n)
from .params import ModelParams, derive_params

SINC_BAND = 0.18  # max reported omega * dt
MIN_SEGMENTS = 16
DEFAULT_GRID = (0.0, 5.0, 2048)


class EstimatorError(ValueError):
    """Welch estimator preconditions are violated."""


class GridTooCoarseError(ValueError):
    pass


@dataclass(eq=False)
class SpectrumCurve:
    omegas: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    meta: dict = field(default_factory=dict)


def default_grid(omega_max: float = 5.0, points: int = 2048) -> np.ndarray:
    return np.linspace(0.0, omega_max, points)


def closed_form_spectrum(alpha_n: float, eta: float, omegas) -> np.ndarray:
    """``[(1 - w**2)**2 + 4 a**2 eta**2] / [(1 - w**2)**2 + 4 a**2 w**2]`` with w in units of omega0."""
    w2 = np.asarray(omegas, dtype=float) ** 2
    a2 = alpha_n ** 2
    det = (1 - w2) ** 2
    return (det + 4 * a2 * eta ** 2) / (det + 4 * a2 * w2)


def transfer_functions(ks: KernelStateSpace, omegas) -> np.ndarray:
    """Complex gains from (xi1', xi2') to xi_N' at angular frequencies ``omegas`` (physical units)."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    out = np.zeros(omegas.shape + (2,), dtype=complex)
    out[..., 0] = 1.0
    if ks.passthrough:
        return out
    mats = 1j * omegas[..., None, None] * np.eye(2) - ks.a_mac
    res = np.linalg.solve(mats, np.broadcast_to(ks.input_map, mats.shape))
    out += np.einsum("i,...ij->...j", ks.readout, res) / ks.gain
    return out


def analytic_spectrum(source: Union[ModelParams, KernelStateSpace, tuple], omegas=None) -> SpectrumCurve:
    """Noise spectrum on a grid of ``omega / omega0`` values.

    Parameters
    ----------
    source : ModelParams, KernelStateSpace or (alpha_n, eta)
    omegas : array_like, optional
        Grid in units of omega0; defaults to 2048 points on [0, 5].
    """
    if isinstance(source, tuple):
        alpha_n, eta = source
        ks = kernel_from_dimensionless(alpha_n, eta)
    elif isinstance(source, ModelParams):
        ks = kernel_state_space(source)
    else:
        ks = source
    omegas = default_grid() if omegas is None else np.asarray(omegas, dtype=float)
    t = transfer_functions(ks, omegas * ks.omega0)
    values = (np.abs(t) ** 2).sum(axis=-1)
    meta = {"provenance": "analytic", "alpha_n": ks.gamma_n / ks.omega0}
    if ks.params is not None and ks.params.zeta > 0:
        meta["eta"] = derive_params(ks.params).eta
    return SpectrumCurve(omegas, values, np.zeros_like(values), meta)


def _overlap_inflation(window: np.ndarray, step: int) -> float:
    """Variance inflation of a Welch average caused by overlapping segments.

    ``1 + 2 sum_k rho(k step)**2`` with ``rho`` the normalized window overlap.
    """
    norm = np.dot(window, window)
    total = 1.0
    shift = step
    while shift < window.size:
        rho = np.dot(window[:-shift], window[shift:]) / norm
        total += 2 * rho ** 2
        shift += step
    return total


def estimate_spectrum(
    paths: Iterable[Union[ColoredNoisePath, np.ndarray]],
    dt: Optional[float] = None,
    segment_length: int = 4096,
    overlap: float = 0.5,
    window: str = "hann",
    omega_max: Optional[float] = None,
    omega0: float = 1.0,
) -> SpectrumCurve:
    """Welch estimate of the spectrum of the increment rate d xi / dt.

    Segments are cut from each path separately (never across path
    boundaries), windowed, and their two-sided periodograms
    ``dt |FFT(w y)|**2 / sum(w**2)`` averaged; white increments of variance
    dt therefore give 1. Standard errors come from the segment scatter,
    inflated for the correlation between overlapping segments. No detrending
    is applied.

    Parameters
    ----------
    paths : iterable of ColoredNoisePath or arrays of increments
        Arrays may be 1-D (one path) or 2-D (a batch of paths). Paths should
        be stationary, i.e. with any transient already removed.
    dt : float, optional
        Step; taken from the paths when they are ColoredNoisePath objects.
    omega_max : float, optional
        Upper edge of the reported band in units of omega0. Must satisfy
        ``omega_max * omega0 * dt <= 0.18``; defaults to that limit.
    """
    if not 0 <= overlap < 1:
        raise EstimatorError("overlap must be in [0, 1)")
    win = get_window(window, segment_length, fftbins=True)
    step = max(1, int(round(segment_length * (1 - overlap))))
    sum_p = None
    sum_p2 = None
    n_seg = 0
    for item in paths:
        if isinstance(item, ColoredNoisePath):
            data, item_dt = item.increments, item.dt
            if dt is None:
                dt = item_dt
            elif not math.isclose(dt, item_dt):
                raise EstimatorError("paths have different time steps")
        else:
            data = np.asarray(item, dtype=float)
        if dt is None:
            raise EstimatorError("dt is required for raw increment arrays")
        for row in np.atleast_2d(data):
            if row.size < segment_length:
                continue
            segs = np.lib.stride_tricks.sliding_window_view(row, segment_length)[::step]
            spec = np.fft.rfft(segs * (win / dt), axis=1)
            p = (spec.real ** 2 + spec.imag ** 2) * (dt / np.dot(win, win))
            if sum_p is None:
                sum_p = np.zeros(p.shape[1])
                sum_p2 = np.zeros(p.shape[1])
            sum_p += p.sum(axis=0)
            sum_p2 += (p ** 2).sum(axis=0)
            n_seg += p.shape[0]
    if n_seg < MIN_SEGMENTS:
        raise EstimatorError(f"only {n_seg} segments available, need at least {MIN_SEGMENTS}")
    band_limit = SINC_BAND / (dt * omega0)
    if omega_max is None:
        omega_max = band_limit
    elif omega_max > band_limit * (1 + 1e-12):
        raise EstimatorError(
            f"omega_max = {omega_max:g} omega0 exceeds the band limit 0.18/dt = {band_limit:g} omega0"
        )
    omegas = 2 * np.pi * np.fft.rfftfreq(segment_length, dt) / omega0
    mean = sum_p / n_seg
    var = np.clip(sum_p2 / n_seg - mean ** 2, 0, None) * n_seg / max(n_seg - 1, 1)
    stderr = np.sqrt(var / n_seg * _overlap_inflation(win, step))
    keep = omegas <= omega_max * (1 + 1e-12)
    meta = {"provenance": "estimated", "segments": n_seg, "segment_length": segment_length,
            "overlap": overlap, "window": window, "dt": dt}
    return SpectrumCurve(omegas[keep], mean[keep], stderr[keep], meta)


def estimate_from_kernel(
    ks: KernelStateSpace,
    dt: float,
    n_segments: int,
    seed: int,
    segment_length: int = 4096,
    overlap: float = 0.5,
    window: str = "hann",
    omega_max: Optional[float] = None,
    segments_per_path: int = 25,
    burn_in: Optional[float] = None,
    paths_per_batch: int = 4,
) -> SpectrumCurve:
    """Simulate effective-noise paths for a kernel and Welch-estimate their spectrum.

    Path ``i`` uses stream ``(seed, i)``. Each path is long enough for
    ``segments_per_path`` overlapping segments after a burn-in of
    ``burn_in`` time units (default ``10 / Gamma_N``) that removes the
    transient of the zero initial kernel state. The segment count is
    rounded up to a whole number of paths.
    """
    if n_segments < 1:
        raise EstimatorError("n_segments must be >= 1")
    segments_per_path = min(segments_per_path, n_segments)
    if omega_max is not None and omega_max * ks.omega0 * dt > SINC_BAND * (1 + 1e-12):
        raise EstimatorError(
            f"omega_max = {omega_max:g} omega0 exceeds the band limit 0.18/dt = "
            f"{SINC_BAND / (dt * ks.omega0):g} omega0"
        )
    step = max(1, int(round(segment_length * (1 - overlap))))
    per_path = segment_length + (segments_per_path - 1) * step
    n_paths = -(-n_segments // segments_per_path)
    if burn_in is None:
        burn_in = 10 / ks.gamma_n if ks.gamma_n > 0 else 0.0
    burn_steps = int(math.ceil(burn_in / dt))

    def batches():
        for first in range(0, n_paths, paths_per_batch):
            count = min(paths_per_batch, n_paths - first)
            yield sample_xi_n(ks, dt, per_path, count, seed, burn_in_steps=burn_steps,
                              first_index=first)

    curve = estimate_spectrum(batches(), segment_length=segment_length, overlap=overlap,
                              window=window, omega_max=omega_max, omega0=ks.omega0)
    curve.meta.update({"alpha_n": ks.gamma_n / ks.omega0, "seed": seed, "burn_in": burn_in,
                       "paths": n_paths})
    if ks.params is not None and ks.params.zeta > 0:
        curve.meta["eta"] = derive_params(ks.params).eta
    return curve


@dataclass
class Extremum:
    omega: float
    value: float
    kind: str


@dataclass
class ExtremaReport:
    extrema: list
    two_sided_peaks_resolved: bool
    has_subunity_minima: bool
    min_location: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def _refine(x, y, i):
    """Vertex of the parabola through points i-1, i, i+1 (uniform or not)."""
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 ** 2 * (y0 - y1) + x1 ** 2 * (y2 - y0) + x0 ** 2 * (y1 - y2)) / denom
    if a == 0:
        return x1, y1
    xv = -b / (2 * a)
    if not x0 <= xv <= x2:
        return x1, y1
    c = y1 - a * x1 ** 2 - b * x1
    return xv, a * xv ** 2 + b * xv + c


def find_extrema(curve: SpectrumCurve, min_points: int = 512) -> ExtremaReport:
    """Locate local extrema of a spectrum sampled on ``omega >= 0``.

    ``omega = 0`` counts as an extremum by the symmetry S(-w) = S(w).
    Peaks are "resolved" when the largest value on the grid sits at a strict
    interior local maximum away from ``omega = 0``.
    """
    w = np.asarray(curve.omegas, dtype=float)
    s = np.asarray(curve.values, dtype=float)
    se = np.asarray(curve.stderr, dtype=float) if curve.stderr is not None else np.zeros_like(s)
    if w.size < 3 or np.any(np.diff(w) <= 0):
        raise GridTooCoarseError("grid must be increasing with at least 3 points")
    if np.count_nonzero(w <= 5.0) < min_points:
        raise GridTooCoarseError(f"need at least {min_points} grid points on [0, 5 omega0]")

    sign = np.sign(np.diff(s))
    # carry the last nonzero slope across flat stretches
    for i in range(1, sign.size):
        if sign[i] == 0:
            sign[i] = sign[i - 1]
    extrema = []
    if w[0] == 0 and sign[0] != 0:
        extrema.append(Extremum(0.0, float(s[0]), "max" if sign[0] < 0 else "min"))
    for i in range(1, sign.size):
        if sign[i - 1] > 0 and sign[i] < 0:
            kind = "max"
        elif sign[i - 1] < 0 and sign[i] > 0:
            kind = "min"
        else:
            continue
        xv, yv = _refine(w, s, i)
        extrema.append(Extremum(float(xv), float(yv), kind))

    top = int(np.argmax(s))
    resolved = bool(0 < top < s.size - 1 and s[top] > s[top - 1] and s[top] > s[top + 1])

    subunity = False
    lowest = None
    for e in extrema:
        if e.kind != "min":
            continue
        j = int(np.argmin(np.abs(w - e.omega)))
        if e.value < 1 - 3 * se[j]:
            subunity = True
        if lowest is None or e.value < lowest.value:
            lowest = e
    return ExtremaReport(extrema=extrema, two_sided_peaks_resolved=resolved,
                         has_subunity_minima=subunity,
                         min_location=None if lowest is None else lowest.omega)
