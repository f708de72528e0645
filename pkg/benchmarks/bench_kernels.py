"""Compare the compiled training kernel against the pure-Python fallback
on the same workload and verify they stay bit-identical.

Usage: python benchmarks/bench_kernels.py [n_nodes] [epochs]
"""
import sys
import time

import numpy as np

from aquaroute import _pykernel
from aquaroute.learning import LearningParams, init_learner
from aquaroute.topology import load_topology, synthetic_city_topology

try:
    from aquaroute import _speedups
except ImportError:
    _speedups = None


def bench(kernel, g, p, epochs, seed=11):
    st = init_learner(g, p)
    bg = np.random.PCG64(seed)
    started = time.perf_counter()
    out = kernel.run_epochs(st, g, g.base_cost, None, g.n_nodes - 1, epochs,
                            p.alpha, p.recovery_step, p.recovery_decay,
                            p.greedy_prob, 50 * g.n_nodes, bg, False)
    elapsed = time.perf_counter() - started
    return st, out["steps"], elapsed


def main():
    n_nodes = int(sys.argv[1]) if len(sys.argv) > 1 else 119
    epochs = int(sys.argv[2]) if len(sys.argv) > 2 else 2000
    g = load_topology(synthetic_city_topology(n_nodes, seed=3))
    p = LearningParams()
    print(f"graph: {g.n_nodes} nodes, {g.n_edges} edges; {epochs} epochs")

    st_py, steps, t_py = bench(_pykernel, g, p, epochs)
    print(f"python  : {steps:>10} steps in {t_py:8.3f}s "
          f"({steps / t_py / 1e6:6.2f} M steps/s)")

    if _speedups is None:
        print("compiled: not built (pip install -e . --no-build-isolation)")
        return

    st_c, steps_c, t_c = bench(_speedups, g, p, epochs)
    print(f"compiled: {steps_c:>10} steps in {t_c:8.3f}s "
          f"({steps_c / t_c / 1e6:6.2f} M steps/s)")
    print(f"speedup : {t_py / t_c:.1f}x")

    identical = steps == steps_c and all(
        np.array_equal(getattr(st_py, n), getattr(st_c, n))
        for n in ("q", "best", "recovery", "last_update", "qopt", "visits"))
    print(f"bit-identical results: {identical}")
    if not identical:
        sys.exit(1)


if __name__ == "__main__":
    main()
