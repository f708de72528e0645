"""Pure-Python training kernel.

Reference implementation of the per-transition update and the epoch loop.
``aquaroute._speedups`` mirrors this file statement-for-statement in C; both
consume the same raw uint64 stream from a numpy bit generator, so a run is
bit-identical whichever kernel is active. Keep the two in sync.
"""
from __future__ import annotations

_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def _min_out_q(q, indptr, edge_target, node0):
    # min over ALL actions of the node; empty action set counts as 0
    lo = int(indptr[node0])
    hi = int(indptr[node0 + 1])
    if lo == hi:
        return 0.0
    m = float(q[lo])
    for e in range(lo + 1, hi):
        v = float(q[e])
        if v < m:
            m = v
    return m


def apply_transition(q, best, recovery, last_update, qopt, visits,
                     indptr, edge_target, e, cost, now,
                     alpha, beta, gamma):
    """One Q/B/RR/U/Q_opt update on edge e, with the step clock already at
    ``now``. dt is measured before the update-time stamp is refreshed."""
    j0 = int(edge_target[e])
    minq = _min_out_q(q, indptr, edge_target, j0)
    dq = cost + minq - float(q[e])
    qn = float(q[e]) + alpha * dq
    q[e] = qn
    if qn < float(best[e]):
        best[e] = qn
    dt = now - int(last_update[e])
    if dq < 0.0:
        d = dt if dt > 1 else 1
        recovery[e] = float(recovery[e]) + beta * (dq / float(d))
    elif dq > 0.0:
        recovery[e] = gamma * float(recovery[e])
    last_update[e] = now
    qo = qn + float(dt) * float(recovery[e])
    b = float(best[e])
    qopt[e] = qo if qo > b else b
    visits[e] += 1


def run_epochs(st, g, rewards, allowed, goal0, n_epochs,
               alpha, beta, gamma, greedy_prob, step_cap,
               bit_generator, record_trace=False):
    """Run n_epochs random-start episodes toward goal0 (0-based).

    Each episode draws one uint64 for the start node and one per step for
    the action; an optional bernoulli draw precedes the action draw when
    greedy_prob > 0. Returns aggregate stats, plus the visited node trace
    (1-based) when record_trace is set (single epoch only).
    """
    if record_trace and n_epochs != 1:
        raise ValueError("trace recording requires n_epochs == 1")
    q, best, recovery = st.q, st.best, st.recovery
    last_update, qopt, visits = st.last_update, st.qopt, st.visits
    indptr, edge_target = g.indptr, g.edge_target
    n = g.n_nodes
    raw = bit_generator.random_raw

    now = st.now
    steps = 0
    trapped = 0
    truncated = 0
    trace = None
    trapped_flag = False
    truncated_flag = False

    for _ in range(n_epochs):
        u = int(raw())
        idx = (u * (n - 1)) >> 64
        s = idx + 1 if idx >= goal0 else idx
        if record_trace:
            trace = [s + 1]
        epoch_steps = 0
        while s != goal0:
            lo = int(indptr[s])
            hi = int(indptr[s + 1])
            if allowed is None:
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
                u = int(raw())
                x = float(u >> 11) * _INV_2_53
                if x < greedy_prob:
                    bq = 0.0
                    btgt = -1
                    for e in range(lo, hi):
                        if allowed is not None and not allowed[e]:
                            continue
                        v = float(q[e])
                        t = int(edge_target[e])
                        if btgt < 0 or v < bq or (v == bq and t < btgt):
                            bq = v
                            btgt = t
                            pick = e
            if pick < 0:
                u = int(raw())
                m = (u * k) >> 64
                if allowed is None:
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
            apply_transition(q, best, recovery, last_update, qopt, visits,
                             indptr, edge_target, pick, float(rewards[pick]),
                             now, alpha, beta, gamma)
            s = int(edge_target[pick])
            if record_trace:
                trace.append(s + 1)
            epoch_steps += 1
            steps += 1
            if s != goal0 and epoch_steps >= step_cap:
                truncated += 1
                truncated_flag = True
                break

    st.now = now
    out = {"steps": steps, "trapped": trapped, "truncated": truncated}
    if record_trace:
        out["trace"] = trace
        out["trapped_flag"] = trapped_flag
        out["truncated_flag"] = truncated_flag
    return out
