"""Second-order objects: fluctuation SDEs, the variance ODE, and the normal
approximations to the fraction of nonempty buffers.

The level-1 fluctuation process Z is an Ornstein-Uhlenbeck-type Gaussian
process driven by two independent Wiener terms (arrival noise with intensity
lam and service noise with intensity 1 - exp(-u1)), with mean-reversion rate
exp(-u1(t)).  Its variance satisfies a scalar linear ODE, which is the
canonical source of var[Z(t)] for the approximations; Euler-Maruyama path
sampling exists for validation and path functionals.

Two normal approximations of the busy fraction (fraction of nonempty
buffers) at unscaled time t are provided for a system with n buffers and
sample size d:

    plain:    mean u1(d t) / d,                    variance sigma^2(d t) / (n d)
    modified: mean u1(d t) / d - u2(d t) / d^2,    same variance

The level-k (k >= 2) fluctuation sampler implements a conjectured limit and
is flagged as such in its output.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from lqfsim import _backend
from lqfsim.engine import _write_rows
from lqfsim.errors import ConfigurationError, NumericalDomainError
from lqfsim.fluid import (DEFAULT_DT, FluidConfig, FluidSolution, grid_steps,
                          solve_fluid)

APPROX_KINDS = ("diffusion", "modified")


@dataclass(frozen=True)
class ApproxDistribution:
    """Normal approximation of the busy fraction at one (n, d, lam, t)."""

    mean: float
    variance: float
    kind: str
    n: int
    d: int
    lam: float
    t: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def cdf(self, x):
        from lqfsim.stats import normal_cdf
        return normal_cdf(x, self.mean, self.std)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        z = (x - self.mean) / self.std
        out = np.exp(-0.5 * z * z) / (self.std * math.sqrt(2.0 * math.pi))
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class VarianceCurve:
    """var[Z(t)] on a uniform grid, with linear interpolation between nodes."""

    grid: np.ndarray
    values: np.ndarray
    lam: float

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def at(self, t):
        t_arr = np.asarray(t, dtype=np.float64)
        if np.any(t_arr < -1e-12) or np.any(t_arr > self.horizon + 1e-9):
            raise NumericalDomainError(
                f"requested time outside solved range [0, {self.horizon}]")
        out = np.interp(t_arr, self.grid, self.values)
        return float(out) if np.isscalar(t) else out

    def to_csv(self, target, comment: Optional[str] = None) -> None:
        _write_rows(target, comment, "t,value",
                    zip(self.grid, self.values))


@dataclass(frozen=True)
class SdePath:
    """One sampled fluctuation path.  ``level`` is 1 for the proven limit and
    k >= 2 for the conjectured higher-level limits (then ``conjectural`` is
    set)."""

    grid: np.ndarray
    values: np.ndarray
    level: int
    seed: int
    conjectural: bool

    def to_csv(self, target, comment: Optional[str] = None) -> None:
        _write_rows(target, comment, "t,value", zip(self.grid, self.values))


def _check_coverage(solution, T: float, what: str) -> None:
    if solution.horizon < T - 1e-9:
        raise NumericalDomainError(
            f"{what} covers [0, {solution.horizon}] but [0, {T}] is required")


def solve_variance_ode(u1: FluidSolution, lam: float, T: float,
                       dt: float = DEFAULT_DT,
                       backend: Optional[str] = None) -> VarianceCurve:
    """Integrate d(sigma^2)/dt = -2 e^{-u1} sigma^2 + lam + (1 - e^{-u1}),
    sigma^2(0) = 0, with fixed-step RK4 on [0, T]."""
    _check_coverage(u1, T, "fluid solution")
    kern = _backend.get_kernel(backend)
    nsteps, last_h, grid = grid_steps(T, dt)
    if nsteps == 0:
        return VarianceCurve(grid, np.zeros(1), lam)
    widths = np.diff(grid)
    a_start = np.exp(-np.interp(grid[:-1], u1.grid, u1.level(1)))
    a_mid = np.exp(-np.interp(grid[:-1] + 0.5 * widths, u1.grid, u1.level(1)))
    a_end = np.exp(-np.interp(grid[1:], u1.grid, u1.level(1)))
    values = kern.rk4_linear_variance(lam, a_start, a_mid, a_end,
                                      dt, nsteps, last_h)
    if float(values.min()) < -1e-12:
        raise NumericalDomainError("variance ODE produced a negative value")
    return VarianceCurve(grid, values, lam)


def sample_z_path(u1: FluidSolution, lam: float, T: float,
                  dt: float = DEFAULT_DT, seed: int = 0) -> SdePath:
    """Euler-Maruyama path of the level-1 fluctuation process, Z(0) = 0.

    Per step of width h:
        Z <- Z - e^{-u1(t)} Z h + sqrt(lam h) xi1 - sqrt((1 - e^{-u1(t)}) h) xi2
    with independent standard normals xi1, xi2.
    """
    _check_coverage(u1, T, "fluid solution")
    nsteps, _, grid = grid_steps(T, dt)
    rng = np.random.default_rng(seed)
    values = np.empty(nsteps + 1)
    values[0] = 0.0
    if nsteps == 0:
        return SdePath(grid, values, 1, seed, False)
    widths = np.diff(grid)
    decay = np.exp(-np.interp(grid[:-1], u1.grid, u1.level(1)))
    noise = rng.standard_normal((nsteps, 2))
    arr_amp = np.sqrt(lam * widths)
    svc_amp = np.sqrt((1.0 - decay) * widths)
    z = 0.0
    for i in range(nsteps):
        z = (z - decay[i] * z * widths[i]
             + arr_amp[i] * noise[i, 0] - svc_amp[i] * noise[i, 1])
        values[i + 1] = z
    return SdePath(grid, values, 1, seed, False)


def sample_z_terminal(u1: FluidSolution, lam: float, T: float, npaths: int,
                      dt: float = DEFAULT_DT, seed: int = 0) -> np.ndarray:
    """Terminal values Z(T) of ``npaths`` independent Euler-Maruyama paths.

    Vectorized across paths; one generator drives the whole batch.
    """
    _check_coverage(u1, T, "fluid solution")
    nsteps, _, grid = grid_steps(T, dt)
    rng = np.random.default_rng(seed)
    z = np.zeros(npaths)
    if nsteps == 0:
        return z
    widths = np.diff(grid)
    decay = np.exp(-np.interp(grid[:-1], u1.grid, u1.level(1)))
    arr_amp = np.sqrt(lam * widths)
    svc_amp = np.sqrt((1.0 - decay) * widths)
    for i in range(nsteps):
        z += (-decay[i] * widths[i]) * z
        z += arr_amp[i] * rng.standard_normal(npaths)
        z -= svc_amp[i] * rng.standard_normal(npaths)
    return z


def _zk_coefficients(k: int, fluid: FluidSolution, grid: np.ndarray):
    if k < 2:
        raise ConfigurationError("levels below 2 are covered by sample_z_path")
    if fluid.K < k:
        raise ConfigurationError(
            f"fluid solution has K={fluid.K}, need levels {k - 1} and {k}")
    lower = np.interp(grid, fluid.grid, fluid.level(k - 1))
    upper = np.interp(grid, fluid.grid, fluid.level(k))
    if float(lower.min()) < -1e-12 or float(upper.min()) < -1e-12:
        raise NumericalDomainError("fluid levels must be nonnegative")
    return np.clip(lower, 0.0, None), np.clip(upper, 0.0, None)


def sample_zk_path(k: int, fluid: FluidSolution, vk_star: float,
                   T: float, dt: float = DEFAULT_DT, seed: int = 0) -> SdePath:
    """Euler-Maruyama path of the conjectured level-k fluctuation process.

    Drift -Z_k, diffusion terms sqrt(lam * u_{k-1}(t)) and sqrt(u_k(t))
    taken from the supplied fluid solution, started at vk_star.  Output is
    flagged ``conjectural``.
    """
    lam = fluid.lam
    _check_coverage(fluid, T, "fluid solution")
    nsteps, _, grid = grid_steps(T, dt)
    rng = np.random.default_rng(seed)
    values = np.empty(nsteps + 1)
    values[0] = float(vk_star)
    if nsteps == 0:
        return SdePath(grid, values, k, seed, True)
    widths = np.diff(grid)
    lower, upper = _zk_coefficients(k, fluid, grid[:-1])
    amp1 = np.sqrt(lam * lower * widths)
    amp2 = np.sqrt(upper * widths)
    noise = rng.standard_normal((nsteps, 2))
    z = float(vk_star)
    for i in range(nsteps):
        z = z - z * widths[i] + amp1[i] * noise[i, 0] - amp2[i] * noise[i, 1]
        values[i + 1] = z
    return SdePath(grid, values, k, seed, True)


def sample_zk_terminal(k: int, fluid: FluidSolution, vk_star: float,
                       T: float, npaths: int, dt: float = DEFAULT_DT,
                       seed: int = 0) -> np.ndarray:
    """Terminal values of ``npaths`` conjectured level-k paths (validation aid)."""
    lam = fluid.lam
    _check_coverage(fluid, T, "fluid solution")
    nsteps, _, grid = grid_steps(T, dt)
    rng = np.random.default_rng(seed)
    z = np.full(npaths, float(vk_star))
    if nsteps == 0:
        return z
    widths = np.diff(grid)
    lower, upper = _zk_coefficients(k, fluid, grid[:-1])
    amp1 = np.sqrt(lam * lower * widths)
    amp2 = np.sqrt(upper * widths)
    for i in range(nsteps):
        z -= widths[i] * z
        z += amp1[i] * rng.standard_normal(npaths)
        z -= amp2[i] * rng.standard_normal(npaths)
    return z


@functools.lru_cache(maxsize=16)
def _empty_start_solutions(lam: float, T: float, dt: float):
    """Fluid levels 1..2 and the variance curve on [0, T] from an empty start."""
    fl = solve_fluid(FluidConfig(lam=lam, K=2, v=(0.0, 0.0), T=T, dt=dt))
    var = solve_variance_ode(fl, lam, T, dt)
    return fl, var


def approx_f1_distribution(n: int, d: int, lam: float, t: float,
                           kind: str = "modified",
                           dt: float = DEFAULT_DT) -> ApproxDistribution:
    """Normal approximation of the busy fraction F_{n,1}(t), empty start.

    ``t`` is unscaled simulator time; the fluid and variance solutions are
    computed on the fluid-scale window [0, d t].  Both kinds share the same
    variance; only their means differ.
    """
    if kind not in APPROX_KINDS:
        raise ConfigurationError(
            f"kind must be one of {APPROX_KINDS}, got {kind!r}")
    if t < 0:
        raise NumericalDomainError(f"t must be >= 0, got {t}")
    T = d * t
    fl, var = _empty_start_solutions(lam, T, dt)
    u1_T = fl.level_at(1, T)
    mean = u1_T / d
    if kind == "modified":
        mean -= fl.level_at(2, T) / d ** 2
    variance = var.at(T) / (n * d)
    return ApproxDistribution(mean, variance, kind, n, d, lam, t)


def stationary_mu_sigma(n: int, d: int, lam: float,
                        ode_consistent: bool = False):
    """Stationary mean and standard deviation of the busy fraction under the
    modified approximation.

    The default reproduces the published closed forms:
        mu    = (1/d - lam/d^2) * ln(1/(1-lam))
        sigma = lam / ((1-lam) * sqrt(n d))
    With ``ode_consistent=True`` sigma is instead derived from the stationary
    point of the variance ODE, sigma = sqrt(lam/(1-lam)) / sqrt(n d); the two
    disagree and both are kept available.
    """
    if not 0.0 < lam < 1.0:
        raise ConfigurationError(f"lam must be in (0, 1), got {lam}")
    mu = (1.0 / d - lam / d ** 2) * math.log(1.0 / (1.0 - lam))
    if ode_consistent:
        sigma = math.sqrt(lam / (1.0 - lam)) / math.sqrt(n * d)
    else:
        sigma = lam / (1.0 - lam) / math.sqrt(n * d)
    return mu, sigma


def ks_region_accepts(mu: float, sigma: float) -> bool:
    """Empirical accuracy region of the modified approximation in the
    (mu, sigma) plane: sigma < mu/3 and sigma > 2(mu - 1/4)/3, both strict."""
    if mu < 0 or sigma < 0:
        raise NumericalDomainError("mu and sigma must be nonnegative")
    return sigma < mu / 3.0 and sigma > 2.0 * (mu - 0.25) / 3.0
