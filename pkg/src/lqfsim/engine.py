"""Exact simulation of the n-buffer randomized longest-queue-first system.

The simulator works on the exchangeable count representation: buffers are
indistinguishable under the policy, so the vector of occupancy counts
(number of buffers at each queue length) is a sufficient statistic of the
continuous-time Markov chain.  Tie-breaking among equally long sampled
buffers is then a no-op, and one event costs a short scan instead of work
proportional to the sample size d.

Events fire on a single aggregate exponential clock with rate (1 + lam) * n,
thinned into arrivals and service attempts; a service attempt whose d
sampled buffers are all empty is wasted and leaves the state unchanged,
which is statistically identical to the server backing off for an
exponential time before resampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from lqfsim import _backend
from lqfsim.errors import ConfigurationError, InterpolationError

#: Formatting used by every CSV writer in the package: full double precision.
CSV_FLOAT_FORMAT = "%.17g"


def format_float(x: float) -> str:
    return CSV_FLOAT_FORMAT % (x,)


@dataclass(frozen=True)
class SystemConfig:
    """Full parameterization of one simulated system.

    n: number of buffers; d: buffers sampled per service attempt (with
    replacement, may exceed n); lam: per-buffer Poisson arrival rate in
    (0, 1); horizon: simulated time on the unscaled clock; seed: generator
    seed.
    """

    n: int
    d: int
    lam: float
    horizon: float
    seed: int

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if self.d < 1:
            raise ConfigurationError(f"d must be >= 1, got {self.d}")
        if not 0.0 < self.lam < 1.0:
            raise ConfigurationError(f"lam must be in (0, 1), got {self.lam}")
        if self.horizon < 0.0:
            raise ConfigurationError(f"horizon must be >= 0, got {self.horizon}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigurationError("seed must fit in 64 bits")


class CountState:
    """Occupancy counts: ``counts[l]`` buffers hold exactly l tasks.

    Counts are stored trimmed (no trailing zeros) and always sum to n.
    """

    __slots__ = ("counts", "n")

    def __init__(self, counts: Sequence[int], n: int):
        counts = [int(c) for c in counts]
        while len(counts) > 1 and counts[-1] == 0:
            counts.pop()
        if any(c < 0 for c in counts):
            raise ConfigurationError("counts must be nonnegative")
        total = sum(counts)
        if total != n:
            raise ConfigurationError(
                f"counts sum to {total}, expected n={n}")
        self.counts = tuple(counts)
        self.n = int(n)

    def __eq__(self, other):
        return (isinstance(other, CountState)
                and self.counts == other.counts and self.n == other.n)

    def __hash__(self):
        return hash((self.counts, self.n))

    def __repr__(self):
        return f"CountState(counts={list(self.counts)}, n={self.n})"

    @property
    def max_length(self) -> int:
        return len(self.counts) - 1

    def tail_counts(self) -> np.ndarray:
        """Suffix counts tail[m] = #buffers with length >= m, plus a trailing 0."""
        rev = np.cumsum(self.counts[::-1])[::-1]
        return np.concatenate([rev, [0]]).astype(np.int64)

    def tail_fractions(self, k_max: int) -> np.ndarray:
        """F_0..F_{k_max}: fraction of buffers with length >= k."""
        tail = self.tail_counts()
        out = np.zeros(k_max + 1, dtype=np.float64)
        upto = min(k_max + 1, len(tail))
        out[:upto] = tail[:upto] / self.n
        return out

    def total_tasks(self) -> int:
        return sum(l * c for l, c in enumerate(self.counts))

    def mean_queue_length(self) -> float:
        return self.total_tasks() / self.n


@dataclass(frozen=True)
class EventRecord:
    """One simulated event.  ``affected_length`` is the queue length acted
    upon (the pre-event length for arrivals, the served length for services)
    and None for wasted service attempts."""

    kind: str  # 'arrival' | 'service' | 'wasted'
    time: float
    affected_length: Optional[int]


@dataclass(frozen=True)
class TailFractionPath:
    """Tail fractions F_0..F_{k_max} sampled at the recorded times.

    Each row is the state of the last event at or before the record time, so
    the path follows the right-continuous-with-left-limits convention.
    """

    record_times: np.ndarray
    fractions: np.ndarray  # shape (len(record_times), k_max + 1)
    k_max: int
    n: int

    def to_csv(self, target, comment: Optional[str] = None) -> None:
        """Write as ``t,F0,F1,...,Fk`` with full double precision."""
        _write_rows(
            target, comment,
            "t," + ",".join(f"F{k}" for k in range(self.k_max + 1)),
            ([t] + list(row) for t, row in zip(self.record_times, self.fractions)),
        )


def _write_rows(target, comment, header, rows) -> None:
    """Shared CSV writer: floats at 17 significant digits, ints as ints."""

    def render(value):
        if isinstance(value, str):
            return value
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        return format_float(float(value))

    def emit(fh):
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(render(v) for v in row) + "\n")

    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            emit(fh)
    else:
        emit(target)


def initial_state(n: int, initial_counts: Optional[Sequence[int]] = None) -> CountState:
    """All-empty state by default, or a state built from explicit counts."""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    if initial_counts is None:
        return CountState([n], n)
    return CountState(initial_counts, n)


def step(state: CountState, config: SystemConfig, rng: np.random.Generator,
         t0: float = 0.0):
    """Advance the chain by one event.

    Returns ``(record, new_state, dt)`` where dt is exponential with rate
    (1 + lam) * n.  Consumes variates in the same order as the simulation
    kernels, so a chain of steps reproduces a kernel trajectory exactly.
    """
    n = config.n
    rate = (1.0 + config.lam) * n
    p_arrival = config.lam / (1.0 + config.lam)
    dt = rng.standard_exponential() / rate
    u = rng.random()
    counts = list(state.counts)

    if u < p_arrival:
        r = rng.random() * n
        ell = 0
        cum = counts[0]
        while cum <= r:
            ell += 1
            cum += counts[ell]
        counts[ell] -= 1
        if ell + 1 >= len(counts):
            counts.append(0)
        counts[ell + 1] += 1
        record = EventRecord("arrival", t0 + dt, ell)
    else:
        tail = state.tail_counts()
        u2 = rng.random()
        m = _scan_max(u2, tail, n, config.d)
        if m == 0:
            record = EventRecord("wasted", t0 + dt, None)
        else:
            counts[m] -= 1
            counts[m - 1] += 1
            record = EventRecord("service", t0 + dt, m)
    return record, CountState(counts, n), dt


def _scan_max(u: float, tail: np.ndarray, n: int, d: int) -> int:
    """Inverse-CDF scan shared with the kernels: P(M <= m) = (1 - F_{m+1})^d."""
    m = 0
    while math.pow((n - int(tail[m + 1])) / n, d) <= u:
        m += 1
    return m


def sample_max_length(state: CountState, d: int, rng: np.random.Generator,
                      backend: Optional[str] = None) -> int:
    """Maximum queue length among d i.i.d. with-replacement buffer samples.

    Uses one uniform variate and a scan over the tail fractions rather than
    d individual draws.
    """
    if d < 1:
        raise ConfigurationError(f"d must be >= 1, got {d}")
    kern = _backend.get_kernel(backend)
    return int(kern.sample_max(rng, state.tail_counts(), state.n, d))


def max_length_pmf(state: CountState, d: int) -> np.ndarray:
    """Exact pmf of the sampled maximum: P(M = m) = (1-F_{m+1})^d - (1-F_m)^d."""
    tail = state.tail_counts()
    not_tail = (state.n - tail) / state.n  # 1 - F_m for each level m
    cdf = not_tail ** d
    return np.diff(cdf)


def simulate(config: SystemConfig, record_times: Sequence[float], k_max: int,
             initial: Optional[CountState] = None, *,
             explicit_sampling: bool = False,
             backend: Optional[str] = None) -> TailFractionPath:
    """Simulate one trajectory, sampling tail fractions at the record times.

    Reproducible: equal (config, record_times, k_max, initial) give
    bit-identical output.
    """
    if k_max < 0:
        raise ConfigurationError(f"k_max must be >= 0, got {k_max}")
    if initial is None:
        initial = initial_state(config.n)
    if initial.n != config.n:
        raise ConfigurationError(
            f"initial state has n={initial.n}, config has n={config.n}")
    times = np.ascontiguousarray(record_times, dtype=np.float64)
    if times.size:
        if np.any(np.diff(times) < 0):
            raise ConfigurationError("record_times must be ascending")
        if times[0] < 0 or times[-1] > config.horizon:
            raise ConfigurationError(
                "record_times must lie within [0, horizon]")

    kern = _backend.get_kernel(backend)
    rng = np.random.default_rng(config.seed)
    fractions, _ = kern.simulate_events(
        rng, config.n, config.d, config.lam, initial.tail_counts(),
        config.horizon, times, k_max, explicit_sampling)
    return TailFractionPath(times, fractions, k_max, config.n)


def simulate_terminal(config: SystemConfig,
                      initial: Optional[CountState] = None, *,
                      explicit_sampling: bool = False,
                      rng: Optional[np.random.Generator] = None,
                      backend: Optional[str] = None) -> CountState:
    """State at the horizon without recording a path (replication workhorse)."""
    if initial is None:
        initial = initial_state(config.n)
    kern = _backend.get_kernel(backend)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    _, final_tail = kern.simulate_events(
        rng, config.n, config.d, config.lam, initial.tail_counts(),
        config.horizon, np.empty(0, dtype=np.float64), 0, explicit_sampling)
    counts = np.diff(-np.concatenate([final_tail, [0]]))
    return CountState(counts.tolist(), config.n)


def scaled_view(path: TailFractionPath, d: int, k: int,
                scaled_times: Optional[Sequence[float]] = None):
    """Series of the level-k scaled tail fraction d^k * F_k(t / d).

    The path must have been recorded at exactly the times ``t / d`` for every
    requested scaled time t; no interpolation is performed.  Returns
    ``(times, values)`` arrays.
    """
    if k > path.k_max:
        raise ConfigurationError(f"k={k} exceeds recorded k_max={path.k_max}")
    if scaled_times is None:
        times = np.asarray(path.record_times, dtype=np.float64) * d
        values = float(d) ** k * path.fractions[:, k]
        return times, values

    times = np.ascontiguousarray(scaled_times, dtype=np.float64)
    raw = times / d
    idx = np.searchsorted(path.record_times, raw)
    values = np.empty(times.shape[0], dtype=np.float64)
    for i, (t_raw, j) in enumerate(zip(raw, idx)):
        hit = None
        for cand in (j - 1, j, j + 1):
            if 0 <= cand < path.record_times.shape[0] and np.isclose(
                    path.record_times[cand], t_raw, rtol=1e-12, atol=1e-12):
                hit = cand
                break
        if hit is None:
            raise InterpolationError(
                f"record time {t_raw} (scaled {times[i]}) not on the recorded "
                "grid; re-simulate with record_times = scaled_times / d")
        values[i] = float(d) ** k * path.fractions[hit, k]
    return times, values


def mean_queue_length(state: CountState) -> float:
    """Average queue length per buffer, (1/n) * sum_l l * counts[l]."""
    return state.mean_queue_length()
