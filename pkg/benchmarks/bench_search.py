"""Compiled versus pure-Python product search on the Travel Agency models.

Explores each fixture once, then times nested DFS and the SCC search
(fairness off and on) with both backends on the same CSR graph and
automaton. Results are checked to be identical before timings are shown.

    python3 benchmarks/bench_search.py [--repeat N] [--mode flags|scalar]
"""

from __future__ import annotations

import argparse
import statistics
import time
from pathlib import Path

import wfcheck
from wfcheck.checker import explore
from wfcheck.checker.search import accepting_scc, backend, ndfs
from wfcheck.dsl import compile_to_kernel, load_workflow
from wfcheck.ltl import Not, ltl_to_buchi, normalize_negation

FIXTURE_DIR = Path(wfcheck.__file__).parent / "fixtures"
FIXTURES = ("travel_agency.wf", "travel_agency_repaired.wf")
KERNELS = {
    "ndfs": lambda g, a, impl: ndfs(g, a, impl),
    "scc": lambda g, a, impl: accepting_scc(g, a, False, impl),
    "scc-fair": lambda g, a, impl: accepting_scc(g, a, True, impl),
}


def timed(fn, repeat: int):
    out, times = None, []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return out, statistics.median(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--mode", choices=("flags", "scalar"), default="flags")
    args = ap.parse_args(argv)

    try:
        compiled = backend("cython")
    except ImportError:
        print("compiled backend not built; nothing to compare")
        return 1
    pure = backend("python")

    print(f"{'model':28} {'property':10} {'kernel':9} {'states':>7} "
          f"{'python s':>9} {'cython s':>9} {'speedup':>8}")
    for name in FIXTURES:
        cw = compile_to_kernel(load_workflow(FIXTURE_DIR / name), mode=args.mode)
        graph = explore(cw.model)
        for prop, (f, table) in cw.properties.items():
            aut = ltl_to_buchi(normalize_negation(Not(f)))
            graph.label({n: cw.model.compile_prop(table[n]) for n in aut.propositions})
            enc = aut.encode()
            for kernel, run in KERNELS.items():
                r_py, t_py = timed(lambda: run(graph, enc, pure), args.repeat)
                r_cy, t_cy = timed(lambda: run(graph, enc, compiled), args.repeat)
                if r_py != r_cy:
                    raise SystemExit(f"backends disagree on {name}/{prop}/{kernel}")
                print(f"{name:28} {prop:10} {kernel:9} {len(graph.offsets) - 1:7d} "
                      f"{t_py:9.3f} {t_cy:9.4f} {t_py / max(t_cy, 1e-9):7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
