"""Pure-Python event-loop and ODE kernels (fallback backend).

This module mirrors the compiled extension ``lqfsim._kernel`` operation for
operation.  Both backends consume random variates from the same numpy
``Generator`` in the same order and perform floating-point arithmetic in the
same order, so given equal seeds they produce bit-identical results.  The
cross-backend tests assert exactly that.
"""

import math

import numpy as np

BACKEND_NAME = "python"


def simulate_events(rng, n, d, lam, tail_init, t_end, record_times, k_max,
                    explicit_sampling=False):
    """Run the randomized longest-queue-first event loop up to ``t_end``.

    The state is kept as suffix counts ``tail[m]`` = number of buffers with
    queue length >= m (so ``tail[0] == n``).  Events fire on an aggregate
    exponential clock with rate ``(1 + lam) * n`` and are thinned into
    arrivals (probability ``lam / (1 + lam)``) and service attempts.  A
    service attempt on an all-empty sample is wasted and leaves the state
    unchanged.

    At each entry of ``record_times`` (ascending, within ``[0, t_end]``) the
    tail fractions ``tail[0..k_max] / n`` of the last event at or before that
    time are recorded.  When ``explicit_sampling`` is true, service attempts
    draw the d sampled buffers individually instead of using the one-uniform
    inverse-CDF shortcut; the resulting law is identical but the per-event
    cost is proportional to d, which is what the performance/complexity
    trade-off experiment measures.

    Returns ``(fractions, final_tail)`` where ``fractions`` has shape
    ``(len(record_times), k_max + 1)`` and ``final_tail`` is the int64 suffix
    count vector at ``t_end`` trimmed to the maximum occupied length.
    """
    rate = (1.0 + lam) * n
    p_arrival = lam / (1.0 + lam)
    rec_times = np.ascontiguousarray(record_times, dtype=np.float64)
    nrec = rec_times.shape[0]
    out = np.empty((nrec, k_max + 1), dtype=np.float64)

    tail = [int(x) for x in tail_init]
    lmax = len(tail) - 1
    while lmax > 0 and tail[lmax] == 0:
        lmax -= 1
    need = max(lmax + 2, k_max + 2)
    if len(tail) < need:
        tail.extend([0] * (need - len(tail)))

    exp_draw = rng.standard_exponential
    unif = rng.random
    t = 0.0
    rec = 0
    while True:
        t_next = t + exp_draw() / rate
        while rec < nrec and rec_times[rec] < t_next:
            for j in range(k_max + 1):
                out[rec, j] = tail[j] / n
            rec += 1
        if t_next > t_end:
            break
        u = unif()
        if u < p_arrival:
            r = unif() * n
            ell = 0
            while n - tail[ell + 1] <= r:
                ell += 1
            tail[ell + 1] += 1
            if ell + 1 > lmax:
                lmax = ell + 1
                if lmax + 2 > len(tail):
                    tail.extend([0] * len(tail))
        else:
            if explicit_sampling:
                m = 0
                for _ in range(d):
                    r = unif() * n
                    ell = 0
                    while n - tail[ell + 1] <= r:
                        ell += 1
                    if ell > m:
                        m = ell
            else:
                u2 = unif()
                m = 0
                while math.pow((n - tail[m + 1]) / n, d) <= u2:
                    m += 1
            if m > 0:
                tail[m] -= 1
                while lmax > 0 and tail[lmax] == 0:
                    lmax -= 1
        t = t_next

    final = np.array(tail[:lmax + 1], dtype=np.int64)
    return out, final


def simulate_per_buffer(rng, n, d, lam, t_end):
    """Event loop over an explicit per-buffer length array, empty start.

    Statistically identical to ``simulate_events`` (buffers are
    exchangeable), but arrivals index a buffer in O(1) and a service attempt
    reads the d sampled buffers individually, so the measured cost matches
    the real scheduling algorithm: O(1) per arrival, O(d) per service.
    Used by the performance/complexity trade-off experiment.

    Returns the int64 suffix-count vector (tail counts) at ``t_end``.
    """
    rate = (1.0 + lam) * n
    p_arrival = lam / (1.0 + lam)
    lengths = [0] * n
    exp_draw = rng.standard_exponential
    unif = rng.random
    t = 0.0
    while True:
        t_next = t + exp_draw() / rate
        if t_next > t_end:
            break
        u = unif()
        if u < p_arrival:
            idx = int(unif() * n)
            lengths[idx] += 1
        else:
            best_idx = 0
            best_len = -1
            for _ in range(d):
                idx = int(unif() * n)
                if lengths[idx] > best_len:
                    best_len = lengths[idx]
                    best_idx = idx
            if best_len > 0:
                lengths[best_idx] -= 1
        t = t_next

    counts = np.bincount(np.asarray(lengths, dtype=np.int64))
    tail = np.cumsum(counts[::-1])[::-1].astype(np.int64)
    return tail


def sample_max(rng, tail, n, d):
    """Maximum queue length among d with-replacement samples.

    Uses a single uniform variate and the tail identity
    ``P(M <= m) = ((n - tail[m+1]) / n) ** d``.  ``tail`` must carry a
    trailing zero entry past the maximum occupied length.
    """
    u = rng.random()
    m = 0
    while math.pow((n - tail[m + 1]) / n, d) <= u:
        m += 1
    return m


def rk4_fluid(lam, v, dt, nsteps, last_h):
    """Classical fixed-step RK4 for the fluid level hierarchy.

    Level 1 evolves as ``exp(-u1) - 1 + lam``; level k >= 2 evolves as
    ``lam * u[k-1] - u[k]``.  Steps 0..nsteps-1 all have width ``dt`` except
    the last, which has width ``last_h`` so the grid ends exactly on the
    requested horizon.  Returns an ``(nsteps + 1, K)`` array of states.
    """
    K = len(v)
    out = np.empty((nsteps + 1, K), dtype=np.float64)
    u = [float(x) for x in v]
    k1 = [0.0] * K
    k2 = [0.0] * K
    k3 = [0.0] * K
    k4 = [0.0] * K
    tmp = [0.0] * K
    for j in range(K):
        out[0, j] = u[j]

    def rhs(y, ky):
        ky[0] = math.exp(-y[0]) - 1.0 + lam
        for j in range(1, K):
            ky[j] = lam * y[j - 1] - y[j]

    for i in range(nsteps):
        h = dt if i < nsteps - 1 else last_h
        rhs(u, k1)
        for j in range(K):
            tmp[j] = u[j] + 0.5 * h * k1[j]
        rhs(tmp, k2)
        for j in range(K):
            tmp[j] = u[j] + 0.5 * h * k2[j]
        rhs(tmp, k3)
        for j in range(K):
            tmp[j] = u[j] + h * k3[j]
        rhs(tmp, k4)
        for j in range(K):
            u[j] = u[j] + (h / 6.0) * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j])
            out[i + 1, j] = u[j]
    return out


def rk4_linear_variance(lam, a_start, a_mid, a_end, dt, nsteps, last_h):
    """Fixed-step RK4 for ``s' = -2 a(t) s + lam + (1 - a(t))``, ``s(0) = 0``.

    ``a_start[i]``, ``a_mid[i]`` and ``a_end[i]`` supply ``a(t)`` at the left
    node, midpoint and right node of step i; the caller precomputes them from
    the dense fluid solution.
    """
    out = np.empty(nsteps + 1, dtype=np.float64)
    s = 0.0
    out[0] = s
    for i in range(nsteps):
        h = dt if i < nsteps - 1 else last_h
        a0 = float(a_start[i])
        am = float(a_mid[i])
        a1 = float(a_end[i])
        k1 = -2.0 * a0 * s + lam + (1.0 - a0)
        s2 = s + 0.5 * h * k1
        k2 = -2.0 * am * s2 + lam + (1.0 - am)
        s3 = s + 0.5 * h * k2
        k3 = -2.0 * am * s3 + lam + (1.0 - am)
        s4 = s + h * k3
        k4 = -2.0 * a1 * s4 + lam + (1.0 - a1)
        s = s + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        out[i + 1] = s
    return out
