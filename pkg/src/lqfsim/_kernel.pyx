# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled event-loop and ODE kernels.

Mirror of ``lqfsim._kernel_py``: identical variate consumption order and
identical floating-point expression order, so results are bit-identical with
the pure-Python backend for equal seeds.  Random variates are drawn straight
from the numpy Generator's bit stream via numpy's C distribution functions,
which are the same functions the Generator methods call.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, pow
from libc.stdint cimport int64_t

import numpy as np

cimport numpy as cnp
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_exponential,
    random_standard_uniform,
)

cnp.import_array()

BACKEND_NAME = "compiled"


cdef inline bitgen_t* _bitgen(object rng) except NULL:
    return <bitgen_t*>PyCapsule_GetPointer(rng.bit_generator.capsule, "BitGenerator")


def simulate_events(object rng, Py_ssize_t n, Py_ssize_t d, double lam,
                    object tail_init, double t_end, object record_times,
                    Py_ssize_t k_max, bint explicit_sampling=False):
    """See lqfsim._kernel_py.simulate_events."""
    cdef bitgen_t* bg = _bitgen(rng)
    cdef double rate = (1.0 + lam) * n
    cdef double p_arrival = lam / (1.0 + lam)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rec_times = \
        np.ascontiguousarray(record_times, dtype=np.float64)
    cdef Py_ssize_t nrec = rec_times.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = \
        np.empty((nrec, k_max + 1), dtype=np.float64)

    cdef cnp.ndarray[cnp.int64_t, ndim=1] tail_arr = \
        np.array(tail_init, dtype=np.int64)
    cdef Py_ssize_t lmax = tail_arr.shape[0] - 1
    while lmax > 0 and tail_arr[lmax] == 0:
        lmax -= 1
    cdef Py_ssize_t need = lmax + 2
    if k_max + 2 > need:
        need = k_max + 2
    if tail_arr.shape[0] < need:
        tail_arr = np.concatenate(
            [tail_arr, np.zeros(need - tail_arr.shape[0], dtype=np.int64)])
    cdef int64_t[::1] tail = tail_arr
    cdef Py_ssize_t cap = tail.shape[0]

    cdef double t = 0.0, t_next, u, r, u2
    cdef Py_ssize_t rec = 0, j, ell, m, i
    cdef cnp.ndarray[cnp.int64_t, ndim=1] grown

    while True:
        t_next = t + random_standard_exponential(bg) / rate
        while rec < nrec and rec_times[rec] < t_next:
            for j in range(k_max + 1):
                out[rec, j] = (<double>tail[j]) / (<double>n)
            rec += 1
        if t_next > t_end:
            break
        u = random_standard_uniform(bg)
        if u < p_arrival:
            r = random_standard_uniform(bg) * n
            ell = 0
            while (<double>(n - tail[ell + 1])) <= r:
                ell += 1
            tail[ell + 1] += 1
            if ell + 1 > lmax:
                lmax = ell + 1
                if lmax + 2 > cap:
                    grown = np.zeros(2 * cap, dtype=np.int64)
                    for j in range(cap):
                        grown[j] = tail[j]
                    tail_arr = grown
                    tail = tail_arr
                    cap = tail.shape[0]
        else:
            if explicit_sampling:
                m = 0
                for i in range(d):
                    r = random_standard_uniform(bg) * n
                    ell = 0
                    while (<double>(n - tail[ell + 1])) <= r:
                        ell += 1
                    if ell > m:
                        m = ell
            else:
                u2 = random_standard_uniform(bg)
                m = 0
                while pow((<double>(n - tail[m + 1])) / (<double>n), <double>d) <= u2:
                    m += 1
            if m > 0:
                tail[m] -= 1
                while lmax > 0 and tail[lmax] == 0:
                    lmax -= 1
        t = t_next

    final = np.empty(lmax + 1, dtype=np.int64)
    for j in range(lmax + 1):
        final[j] = tail[j]
    return out, final


def simulate_per_buffer(object rng, Py_ssize_t n, Py_ssize_t d, double lam,
                        double t_end):
    """See lqfsim._kernel_py.simulate_per_buffer."""
    cdef bitgen_t* bg = _bitgen(rng)
    cdef double rate = (1.0 + lam) * n
    cdef double p_arrival = lam / (1.0 + lam)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lengths_arr = \
        np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] lengths = lengths_arr
    cdef double t = 0.0, t_next, u
    cdef Py_ssize_t idx, best_idx, i
    cdef int64_t best_len

    while True:
        t_next = t + random_standard_exponential(bg) / rate
        if t_next > t_end:
            break
        u = random_standard_uniform(bg)
        if u < p_arrival:
            idx = <Py_ssize_t>(random_standard_uniform(bg) * n)
            lengths[idx] += 1
        else:
            best_idx = 0
            best_len = -1
            for i in range(d):
                idx = <Py_ssize_t>(random_standard_uniform(bg) * n)
                if lengths[idx] > best_len:
                    best_len = lengths[idx]
                    best_idx = idx
            if best_len > 0:
                lengths[best_idx] -= 1
        t = t_next

    counts = np.bincount(lengths_arr)
    tail = np.cumsum(counts[::-1])[::-1].astype(np.int64)
    return tail


def sample_max(object rng, object tail, Py_ssize_t n, Py_ssize_t d):
    """See lqfsim._kernel_py.sample_max."""
    cdef bitgen_t* bg = _bitgen(rng)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] tail_arr = \
        np.ascontiguousarray(tail, dtype=np.int64)
    cdef int64_t[::1] tv = tail_arr
    cdef double u = random_standard_uniform(bg)
    cdef Py_ssize_t m = 0
    while pow((<double>(n - tv[m + 1])) / (<double>n), <double>d) <= u:
        m += 1
    return m


def rk4_fluid(double lam, object v, double dt, Py_ssize_t nsteps, double last_h):
    """See lqfsim._kernel_py.rk4_fluid."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v_arr = \
        np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t K = v_arr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = \
        np.empty((nsteps + 1, K), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] work = np.empty(5 * K, dtype=np.float64)
    cdef double[::1] u = np.array(v_arr, dtype=np.float64)
    cdef double[::1] w = work
    cdef Py_ssize_t i, j
    cdef double h

    for j in range(K):
        out[0, j] = u[j]
    # work layout: k1 | k2 | k3 | k4 | tmp
    for i in range(nsteps):
        h = dt if i < nsteps - 1 else last_h
        _fluid_rhs(lam, u, w, 0, K)
        for j in range(K):
            w[4 * K + j] = u[j] + 0.5 * h * w[j]
        _fluid_rhs(lam, w[4 * K:], w, K, K)
        for j in range(K):
            w[4 * K + j] = u[j] + 0.5 * h * w[K + j]
        _fluid_rhs(lam, w[4 * K:], w, 2 * K, K)
        for j in range(K):
            w[4 * K + j] = u[j] + h * w[2 * K + j]
        _fluid_rhs(lam, w[4 * K:], w, 3 * K, K)
        for j in range(K):
            u[j] = u[j] + (h / 6.0) * (w[j] + 2.0 * (w[K + j] + w[2 * K + j]) + w[3 * K + j])
            out[i + 1, j] = u[j]
    return out


cdef inline void _fluid_rhs(double lam, double[::1] y, double[::1] ky,
                            Py_ssize_t off, Py_ssize_t K) noexcept:
    cdef Py_ssize_t j
    ky[off] = exp(-y[0]) - 1.0 + lam
    for j in range(1, K):
        ky[off + j] = lam * y[j - 1] - y[j]


def rk4_linear_variance(double lam, object a_start, object a_mid, object a_end,
                        double dt, Py_ssize_t nsteps, double last_h):
    """See lqfsim._kernel_py.rk4_linear_variance."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a0_arr = \
        np.ascontiguousarray(a_start, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] am_arr = \
        np.ascontiguousarray(a_mid, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a1_arr = \
        np.ascontiguousarray(a_end, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = \
        np.empty(nsteps + 1, dtype=np.float64)
    cdef double s = 0.0
    cdef double h, a0, am, a1, k1, k2, k3, k4, s2, s3, s4
    cdef Py_ssize_t i

    out[0] = s
    for i in range(nsteps):
        h = dt if i < nsteps - 1 else last_h
        a0 = a0_arr[i]
        am = am_arr[i]
        a1 = a1_arr[i]
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
