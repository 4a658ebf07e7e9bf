"""Fluid limit of the scaled tail-fraction hierarchy.

The K coupled levels evolve as

    u1' = exp(-u1) - 1 + lam
    uk' = lam * u(k-1) - uk          for k >= 2

with a unique, globally stable fixed point (lam^(k-1) * ln(1/(1-lam)))_k.
The canonical solver is fixed-step classical RK4 with linear interpolation
between grid points; the level-1 closed form is kept as an independent
cross-check, not as the primary path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from lqfsim import _backend
from lqfsim.engine import _write_rows
from lqfsim.errors import (BranchUnsupportedError, ConfigurationError,
                           NumericalDomainError)

#: Default RK4 step on the fluid time scale.
DEFAULT_DT = 1e-3

#: Worst admissible negative excursion before we call it a solver bug.
NONNEGATIVITY_TOLERANCE = -1e-12


@dataclass(frozen=True)
class FluidConfig:
    """Levels K, rate lam, initial condition v (length K), horizon T, step dt."""

    lam: float
    K: int
    v: tuple
    T: float
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ConfigurationError(f"lam must be in (0, 1), got {self.lam}")
        if self.K < 1:
            raise ConfigurationError(f"K must be >= 1, got {self.K}")
        if len(self.v) != self.K:
            raise ConfigurationError(
                f"initial condition has length {len(self.v)}, expected K={self.K}")
        if any(x < 0 for x in self.v):
            raise ConfigurationError("initial condition must be nonnegative")
        if self.T < 0:
            raise ConfigurationError(f"T must be >= 0, got {self.T}")
        if self.dt <= 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt}")


@dataclass(frozen=True)
class FluidSolution:
    """Dense-output solution: values[:, k-1] holds level k on the grid."""

    grid: np.ndarray
    values: np.ndarray
    lam: float
    K: int

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def level(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.K:
            raise ConfigurationError(f"level {k} outside 1..{self.K}")
        return self.values[:, k - 1]

    def level_at(self, k: int, t):
        """Level k at time(s) t by linear interpolation between grid points."""
        t_arr = np.asarray(t, dtype=np.float64)
        if np.any(t_arr < -1e-12) or np.any(t_arr > self.horizon + 1e-9):
            raise NumericalDomainError(
                f"requested time outside solved range [0, {self.horizon}]")
        out = np.interp(t_arr, self.grid, self.level(k))
        return float(out) if np.isscalar(t) else out

    def at(self, t) -> np.ndarray:
        """All K levels at time t."""
        return np.array([self.level_at(k, t) for k in range(1, self.K + 1)])

    def to_csv(self, target, comment: Optional[str] = None) -> None:
        """Write as ``t,u1,...,uK``."""
        _write_rows(
            target, comment,
            "t," + ",".join(f"u{k}" for k in range(1, self.K + 1)),
            ([t] + list(row) for t, row in zip(self.grid, self.values)),
        )


def fluid_rhs(u: Sequence[float], lam: float) -> np.ndarray:
    """Right-hand side of the K-level fluid system."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1 or u.size < 1:
        raise ConfigurationError("u must be a vector with K >= 1 entries")
    out = np.empty_like(u)
    out[0] = math.exp(-u[0]) - 1.0 + lam
    if u.size > 1:
        out[1:] = lam * u[:-1] - u[1:]
    return out


def fixed_point(lam: float, K: int) -> np.ndarray:
    """The stable critical point (lam^(k-1) * ln(1/(1-lam)))_{k=1..K}."""
    if not 0.0 < lam < 1.0:
        raise ConfigurationError(f"lam must be in (0, 1), got {lam}")
    if K < 1:
        raise ConfigurationError(f"K must be >= 1, got {K}")
    base = math.log(1.0 / (1.0 - lam))
    return base * lam ** np.arange(K)


def grid_steps(T: float, dt: float):
    """Uniform-step grid covering [0, T]: all steps dt except a final short
    one landing exactly on T.  Returns (nsteps, last_h, grid)."""
    if T < 0 or dt <= 0:
        raise ConfigurationError("need T >= 0 and dt > 0")
    if T == 0:
        return 0, dt, np.zeros(1)
    nsteps = int(math.ceil(T / dt - 1e-9))
    last_h = T - (nsteps - 1) * dt
    grid = np.empty(nsteps + 1)
    grid[:nsteps] = np.arange(nsteps) * dt
    grid[nsteps] = T
    return nsteps, last_h, grid


def solve_fluid(config: FluidConfig, backend: Optional[str] = None) -> FluidSolution:
    """Integrate the fluid system with fixed-step RK4 on [0, T]."""
    kern = _backend.get_kernel(backend)
    nsteps, last_h, grid = grid_steps(config.T, config.dt)
    values = kern.rk4_fluid(config.lam, np.asarray(config.v, dtype=np.float64),
                            config.dt, nsteps, last_h)
    low = float(values.min())
    if low < NONNEGATIVITY_TOLERANCE:
        raise NumericalDomainError(
            f"fluid solution went negative ({low}); this indicates a solver bug")
    return FluidSolution(grid, values, config.lam, config.K)


def u1_closed_form(v1: float, lam: float, t: float) -> float:
    """Exact level-1 trajectory on the branch v1 < ln(1/(1-lam)).

    Evaluated in a form that is stable for large t:
        u1(t) = -ln(1-lam) + ln(1 - exp(-(1-lam) t) / C1),
        C1 = 1 / (1 - (1-lam) exp(v1)).
    The complementary branch is not covered; use solve_fluid there.
    """
    if not 0.0 < lam < 1.0:
        raise ConfigurationError(f"lam must be in (0, 1), got {lam}")
    if t < 0:
        raise NumericalDomainError(f"t must be >= 0, got {t}")
    ceiling = math.log(1.0 / (1.0 - lam))
    if v1 >= ceiling:
        raise BranchUnsupportedError(
            f"closed form requires v1 < ln(1/(1-lam)) = {ceiling}; "
            "use solve_fluid for this initial condition")
    c1 = 1.0 / (1.0 - (1.0 - lam) * math.exp(v1))
    return -math.log(1.0 - lam) + math.log1p(-math.exp(-(1.0 - lam) * t) / c1)
