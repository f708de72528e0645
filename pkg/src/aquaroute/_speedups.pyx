# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled training kernel.

Statement-for-statement mirror of aquaroute._pykernel: same raw uint64
consumption, same float64 arithmetic, so runs are bit-identical across the
two kernels. Keep in sync with _pykernel.py.
"""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdint cimport int64_t, uint64_t

from numpy.random cimport bitgen_t

import numpy as np

cdef extern from *:
    ctypedef unsigned long long uint128 "unsigned __int128"

cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline double _min_out_q(double[::1] q, int64_t[::1] indptr,
                              int64_t node0) nogil:
    cdef int64_t lo = indptr[node0]
    cdef int64_t hi = indptr[node0 + 1]
    if lo == hi:
        return 0.0
    cdef double m = q[lo]
    cdef int64_t e
    for e in range(lo + 1, hi):
        if q[e] < m:
            m = q[e]
    return m


cdef inline void _apply(double[::1] q, double[::1] best, double[::1] recovery,
                        int64_t[::1] last_update, double[::1] qopt,
                        int64_t[::1] visits, int64_t[::1] indptr,
                        int64_t[::1] edge_target, int64_t e, double cost,
                        int64_t now, double alpha, double beta,
                        double gamma) nogil:
    cdef int64_t j0 = edge_target[e]
    cdef double minq = _min_out_q(q, indptr, j0)
    cdef double dq = cost + minq - q[e]
    cdef double qn = q[e] + alpha * dq
    q[e] = qn
    if qn < best[e]:
        best[e] = qn
    cdef int64_t dt = now - last_update[e]
    cdef int64_t d
    if dq < 0.0:
        d = dt if dt > 1 else 1
        recovery[e] = recovery[e] + beta * (dq / (<double> d))
    elif dq > 0.0:
        recovery[e] = gamma * recovery[e]
    last_update[e] = now
    cdef double qo = qn + (<double> dt) * recovery[e]
    cdef double b = best[e]
    qopt[e] = qo if qo > b else b
    visits[e] += 1


def apply_transition(q, best, recovery, last_update, qopt, visits,
                     indptr, edge_target, e, cost, now, alpha, beta, gamma):
    _apply(q, best, recovery, last_update, qopt, visits, indptr, edge_target,
           e, cost, now, alpha, beta, gamma)


def run_epochs(object st, object g, double[::1] rewards, object allowed_obj,
               long long goal0, long long n_epochs,
               double alpha, double beta, double gamma, double greedy_prob,
               long long step_cap, object bit_generator,
               bint record_trace=False):
    if record_trace and n_epochs != 1:
        raise ValueError("trace recording requires n_epochs == 1")

    cdef double[::1] q = st.q
    cdef double[::1] best = st.best
    cdef double[::1] recovery = st.recovery
    cdef int64_t[::1] last_update = st.last_update
    cdef double[::1] qopt = st.qopt
    cdef int64_t[::1] visits = st.visits
    cdef int64_t[::1] indptr = g.indptr
    cdef int64_t[::1] edge_target = g.edge_target

    cdef bint has_mask = allowed_obj is not None
    cdef unsigned char[::1] allowed
    if has_mask:
        allowed = allowed_obj
    else:
        allowed = np.ones(1, dtype=np.uint8)  # placeholder, unused

    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(
        bit_generator.capsule, "BitGenerator")

    cdef int64_t n = g.n_nodes
    cdef int64_t now = st.now
    cdef int64_t steps = 0, trapped = 0, truncated = 0
    cdef bint trapped_flag = False, truncated_flag = False

    cdef int64_t[::1] trace
    cdef int64_t trace_len = 0
    if record_trace:
        trace = np.zeros(step_cap + 2, dtype=np.int64)
    else:
        trace = np.zeros(1, dtype=np.int64)

    cdef uint64_t u
    cdef int64_t idx, s, lo, hi, k, e, pick, m, seen, epoch_steps, i
    cdef int64_t btgt, t
    cdef double x, bq, v

    with nogil:
        for i in range(n_epochs):
            u = rng.next_uint64(rng.state)
            idx = <int64_t> ((<uint128> u * <uint128> (n - 1)) >> 64)
            s = idx + 1 if idx >= goal0 else idx
            if record_trace:
                trace[0] = s + 1
                trace_len = 1
            epoch_steps = 0
            while s != goal0:
                lo = indptr[s]
                hi = indptr[s + 1]
                if not has_mask:
                    k = hi - lo
                else:
                    k = 0
                    for e in range(lo, hi):
                        if allowed[e]:
                            k += 1
                if k == 0:
                    trapped += 1
                    trapped_flag = True
                    break

                pick = -1
                if greedy_prob > 0.0:
                    u = rng.next_uint64(rng.state)
                    x = (<double> (u >> 11)) * INV_2_53
                    if x < greedy_prob:
                        bq = 0.0
                        btgt = -1
                        for e in range(lo, hi):
                            if has_mask and not allowed[e]:
                                continue
                            v = q[e]
                            t = edge_target[e]
                            if btgt < 0 or v < bq or (v == bq and t < btgt):
                                bq = v
                                btgt = t
                                pick = e
                if pick < 0:
                    u = rng.next_uint64(rng.state)
                    m = <int64_t> ((<uint128> u * <uint128> k) >> 64)
                    if not has_mask:
                        pick = lo + m
                    else:
                        seen = 0
                        for e in range(lo, hi):
                            if allowed[e]:
                                if seen == m:
                                    pick = e
                                    break
                                seen += 1

                now += 1
                _apply(q, best, recovery, last_update, qopt, visits,
                       indptr, edge_target, pick, rewards[pick], now,
                       alpha, beta, gamma)
                s = edge_target[pick]
                if record_trace:
                    trace[trace_len] = s + 1
                    trace_len += 1
                epoch_steps += 1
                steps += 1
                if s != goal0 and epoch_steps >= step_cap:
                    truncated += 1
                    truncated_flag = True
                    break

    st.now = int(now)
    out = {"steps": int(steps), "trapped": int(trapped),
           "truncated": int(truncated)}
    if record_trace:
        out["trace"] = [int(trace[i]) for i in range(trace_len)]
        out["trapped_flag"] = bool(trapped_flag)
        out["truncated_flag"] = bool(truncated_flag)
    return out
