"""Physical inputs of the feedback-controlled gas and the symbols derived from them.

Unit convention
---------------
Defaults are hbar = m = omega0 = 1. The measurement resolution ``sigma`` is
taken in units of length * time**(1/2), so that ``zeta * sigma**2`` is a
squared length and ``eta = dx0**2 / (zeta * sigma**2)`` is dimensionless.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional


class InvalidParameterError(ValueError):
    """A physical parameter violates its admissible range."""


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs.

    Attributes
    ----------
    m : particle mass
    omega0 : trap angular frequency
    zeta : feedback kick strength (1/time)
    sigma : effective measurement resolution
    n_mean : expected particle number <N>, real >= 1
    n_cond : conditioning particle number N, integer >= 1
    hbar : action constant
    """

    m: float = 1.0
    omega0: float = 1.0
    zeta: float = 0.0
    sigma: float = 1.0
    n_mean: float = 1.0
    n_cond: int = 1
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("m", "omega0", "sigma", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be > 0 (got {value!r})")
        if not (math.isfinite(self.zeta) and self.zeta >= 0):
            raise InvalidParameterError(f"zeta must be >= 0 (got {self.zeta!r})")
        if not (math.isfinite(self.n_mean) and self.n_mean >= 1):
            raise InvalidParameterError(f"n_mean must be >= 1 (got {self.n_mean!r})")
        if isinstance(self.n_cond, bool) or int(self.n_cond) != self.n_cond:
            raise InvalidParameterError(f"n_cond must be an integer (got {self.n_cond!r})")
        if self.n_cond < 1:
            raise InvalidParameterError(f"n_cond must be >= 1 (got {self.n_cond!r})")
        object.__setattr__(self, "n_cond", int(self.n_cond))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DerivedParams:
    theta_n: float
    gamma_n: float
    omega_n_sq: float
    alpha_n: float
    eta: Optional[float]  # None when zeta == 0
    total_mass: float
    dx0: float

    def to_dict(self) -> dict:
        return asdict(self)


def derive_params(p: ModelParams) -> DerivedParams:
    """Compute Theta_N, Gamma_N, Omega_N**2, alpha_N, eta, M and the ground-state width."""
    theta_n = (p.n_cond - 1) / p.n_mean
    gamma_n = p.zeta * theta_n / 2
    total_mass = p.m * p.n_mean
    dx0 = math.sqrt(p.hbar / (2 * total_mass * p.omega0))
    eta = dx0 ** 2 / (p.zeta * p.sigma ** 2) if p.zeta > 0 else None
    return DerivedParams(
        theta_n=theta_n,
        gamma_n=gamma_n,
        omega_n_sq=p.omega0 ** 2 - gamma_n ** 2,
        alpha_n=gamma_n / p.omega0,
        eta=eta,
        total_mass=total_mass,
        dx0=dx0,
    )


def from_dimensionless(
    alpha_n: float,
    eta: float,
    n_mean: float,
    n_cond: int,
    m: float = 1.0,
    omega0: float = 1.0,
    hbar: float = 1.0,
) -> ModelParams:
    """Realize a dimensionless pair (alpha_N, eta) as physical parameters.

    The kick strength follows from ``alpha_N = zeta * Theta_N / (2 omega0)`` and
    the resolution from ``eta = dx0**2 / (zeta sigma**2)``.
    """
    if not (math.isfinite(alpha_n) and alpha_n >= 0):
        raise InvalidParameterError(f"alpha_n must be >= 0 (got {alpha_n!r})")
    if not (math.isfinite(eta) and eta > 0):
        raise InvalidParameterError(f"eta must be > 0 (got {eta!r})")
    if n_mean < 1:
        raise InvalidParameterError(f"n_mean must be >= 1 (got {n_mean!r})")
    theta_n = (n_cond - 1) / n_mean
    if theta_n <= 0:
        raise InvalidParameterError(
            "theta_n = (n_cond - 1)/n_mean must be > 0 to realize a feedback strength"
        )
    if alpha_n == 0:
        raise InvalidParameterError("alpha_n = 0 means zeta = 0, for which eta is undefined")
    zeta = 2 * alpha_n * omega0 / theta_n
    dx0_sq = hbar / (2 * m * n_mean * omega0)
    sigma = math.sqrt(dx0_sq / (zeta * eta))
    return ModelParams(
        m=m, omega0=omega0, zeta=zeta, sigma=sigma, n_mean=n_mean, n_cond=n_cond, hbar=hbar
    )


def peaks_resolvable(alpha_n: float, eta: float) -> bool:
    """Whether the noise spectrum shows separate maxima away from zero frequency."""
    if alpha_n < 0 or eta <= 0:
        raise InvalidParameterError("need alpha_n >= 0 and eta > 0")
    if alpha_n >= 1 / math.sqrt(2):
        return False
    return eta > 1 / math.sqrt(2 - 4 * alpha_n ** 2)


def stationary_width_prediction(dx0: float, eta: float) -> float:
    """Closed-form stationary center-of-mass rms width ``dx0 * sqrt((eta + 1/eta)/2)``."""
    return dx0 * math.sqrt((eta + 1 / eta) / 2)
