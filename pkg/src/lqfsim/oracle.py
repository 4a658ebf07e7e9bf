"""Exact transient analysis of small instances by uniformization.

The generator is assembled from the same transition law the simulator uses:
arrivals into a length-l buffer at rate lam * counts[l], a service completing
at level m >= 1 at rate n * ((1 - F_{m+1})^d - (1 - F_m)^d), and the wasted
remainder n * (1 - F_1)^d as a self-loop.  Those rates sum to (1 + lam) * n
for every state, so that constant is the uniformization rate and the
transition-probability matrix needs no extra damping.

The state space is truncated at a total task count; probability mass that
attempts to cross the boundary is routed to an absorbing overflow bucket and
reported inside ``truncation_error_bound`` together with the Poisson tail,
never redistributed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import sparse

from lqfsim.engine import CountState, SystemConfig, _write_rows, initial_state
from lqfsim.errors import ConfigurationError, NumericalDomainError, StateSpaceError

#: Hard cap on the truncated state space.
MAX_STATES = 1_000_000

#: Poisson series is truncated once this much cumulative weight is reached.
POISSON_TAIL = 1e-13

DEFAULT_MAX_TOTAL_TASKS = 20


@dataclass(frozen=True)
class OracleResult:
    """Transient distribution over count states at time t.

    Probabilities may sum to slightly less than one; the deficit is bounded
    by ``truncation_error_bound``.
    """

    states: Tuple[Tuple[int, ...], ...]
    probabilities: np.ndarray
    truncation_error_bound: float
    t: float
    n: int

    @property
    def state_probabilities(self) -> Dict[Tuple[int, ...], float]:
        return {s: float(p) for s, p in zip(self.states, self.probabilities)}

    def expected_tail_fraction(self, k: int) -> float:
        """E[F_k(t)] under the truncated distribution (bias <= the bound)."""
        total = 0.0
        for counts, p in zip(self.states, self.probabilities):
            ge_k = sum(counts[k:]) if k < len(counts) else 0
            total += p * (ge_k / self.n)
        return total

    def expected_mean_queue_length(self) -> float:
        total = 0.0
        for counts, p in zip(self.states, self.probabilities):
            total += p * sum(l * c for l, c in enumerate(counts)) / self.n
        return total

    def to_csv(self, target, comment: Optional[str] = None) -> None:
        """Write as ``state,probability`` with states encoded ``c0|c1|...``."""
        rows = (("|".join(str(c) for c in s), p)
                for s, p in zip(self.states, self.probabilities))
        _write_rows(target, comment, "state,probability", rows)


def _count_states(n: int, max_total: int) -> int:
    """Number of length-n multisets of queue lengths with total <= max_total.

    Equals the number of integer partitions of 0..max_total into at most n
    parts; computed by the standard partition recurrence so the size guard is
    cheap even when the space would be huge.
    """
    table = [[0] * (max_total + 1) for _ in range(n + 1)]
    table[0][0] = 1
    for parts in range(1, n + 1):
        for total in range(max_total + 1):
            table[parts][total] = table[parts - 1][total]
            if total >= parts:
                table[parts][total] += table[parts][total - parts]
    return sum(table[n])


def _enumerate_states(n: int, max_total: int):
    """All count vectors (trimmed tuples) of n buffers with total <= max_total."""
    states = []

    def rec(remaining_buffers, min_length, budget, lengths):
        if remaining_buffers == 0:
            counts = [0] * (max(lengths) + 1 if lengths else 1)
            for l in lengths:
                counts[l] += 1
            if len(lengths) < n:
                raise AssertionError
            state = tuple(_trim(counts))
            states.append(state)
            return
        for length in range(min_length, budget + 1):
            rec(remaining_buffers - 1, length, budget - length,
                lengths + [length])

    rec(n, 0, max_total, [])
    return states


def _trim(counts):
    counts = list(counts)
    while len(counts) > 1 and counts[-1] == 0:
        counts.pop()
    return counts


def _tail_fractions(counts, n):
    tail = np.concatenate([np.cumsum(counts[::-1])[::-1], [0]])
    return tail / n


def build_uniformized_matrix(n: int, d: int, lam: float, max_total: int):
    """Uniformized transition matrix over the truncated space plus overflow.

    Returns (states, P) where P has shape (S+1, S+1); row S is the absorbing
    overflow bucket.  Each row sums to one exactly up to rounding.
    """
    if _count_states(n, max_total) > MAX_STATES:
        raise StateSpaceError(
            f"truncated state space exceeds {MAX_STATES} states")
    states = _enumerate_states(n, max_total)
    index = {s: i for i, s in enumerate(states)}
    size = len(states)
    overflow = size
    big = (1.0 + lam) * n

    rows, cols, data = [], [], []

    def add(i, j, p):
        rows.append(i)
        cols.append(j)
        data.append(p)

    for i, counts in enumerate(states):
        total = sum(l * c for l, c in enumerate(counts))
        tail = _tail_fractions(counts, n)
        # arrivals: length l -> l + 1 at rate lam * counts[l]
        for l, c in enumerate(counts):
            if c == 0:
                continue
            if total + 1 > max_total:
                add(i, overflow, lam * c / big)
                continue
            nxt = list(counts) + [0] * (l + 2 - len(counts))
            nxt[l] -= 1
            nxt[l + 1] += 1
            add(i, index[tuple(_trim(nxt))], lam * c / big)
        # services: max-of-d sample hits level m with the exact pmf
        max_len = len(counts) - 1
        for m in range(1, max_len + 1):
            rate = n * ((1.0 - tail[m + 1]) ** d - (1.0 - tail[m]) ** d)
            if rate == 0.0:
                continue
            nxt = list(counts)
            nxt[m] -= 1
            nxt[m - 1] += 1
            add(i, index[tuple(_trim(nxt))], rate / big)
        # wasted service: all d sampled buffers empty, self-loop
        wasted = n * (1.0 - tail[1]) ** d
        add(i, i, wasted / big)
    add(overflow, overflow, 1.0)

    matrix = sparse.csr_matrix(
        (data, (rows, cols)), shape=(size + 1, size + 1))
    return states, matrix


def uniformization_oracle(config: SystemConfig, t: float,
                          max_total_tasks: int = DEFAULT_MAX_TOTAL_TASKS,
                          initial: Optional[CountState] = None) -> OracleResult:
    """Exact transient distribution of the count chain at time t."""
    if t < 0:
        raise NumericalDomainError(f"t must be >= 0, got {t}")
    if max_total_tasks < 0:
        raise ConfigurationError("max_total_tasks must be >= 0")
    if initial is None:
        initial = initial_state(config.n)
    if initial.total_tasks() > max_total_tasks:
        raise ConfigurationError(
            "initial state already exceeds max_total_tasks")

    states, matrix = build_uniformized_matrix(
        config.n, config.d, config.lam, max_total_tasks)
    index = {s: i for i, s in enumerate(states)}
    size = len(states)

    pi = np.zeros(size + 1)
    pi[index[tuple(initial.counts)]] = 1.0

    q = (1.0 + config.lam) * config.n * t
    if q > 700.0:
        raise NumericalDomainError(
            "uniformization constant * t too large for the direct Poisson "
            "series; reduce t")
    transposed = matrix.T.tocsr()
    if q == 0.0:
        result = pi
        cum = 1.0
    else:
        weight = math.exp(-q)
        cum = weight
        result = weight * pi
        k = 0
        while cum < 1.0 - POISSON_TAIL:
            k += 1
            pi = transposed.dot(pi)
            weight *= q / k
            cum += weight
            result = result + weight * pi

    bound = (1.0 - cum) + float(result[size])
    return OracleResult(tuple(states), result[:size], bound, t, config.n)
