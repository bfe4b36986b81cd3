"""Time the compiled kernels against the plain-numpy fallback.

The backend is chosen at import time from MARKETFLOW_DISABLE_JIT, so each
measurement runs in its own subprocess and this orchestrator only compares.

    python3 benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys
import time
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def build_cases():
    import numpy as np
    import marketflow as mf

    cases = {}
    table1 = mf.load_scenario_file(REPO_ROOT / "scenarios" / "table1.scenario")
    cases["table1 (n=3, 100 steps)"] = (
        table1.panel, table1.initial_sizes, table1.behavior,
        table1.new_customers, table1.integrator)

    rng = np.random.default_rng(0)
    n, k = 40, 6
    panel = mf.AttributePanel(
        times=np.array([0.0, 50.0]),
        perf=rng.uniform(1.0, 10.0, (2, n, k)),
        imp=rng.uniform(1.0, 10.0, (2, n, k)),
        scale=mf.ScoreScale(1.0, 10.0),
        interpolation=mf.Interpolation.LINEAR)
    behavior = mf.BehaviorParams(
        wta=0.3, stickiness=0.3, decay=1.5, gamma=-1.0,
        allocator=mf.Allocator.SOFTMAX,
        refresh_mode=mf.RefreshMode.PAIRWISE_MATRIX)
    cases["dense (n=40, k=6, rk4, 2000 steps)"] = (
        panel, rng.uniform(50.0, 150.0, n), behavior,
        mf.NewCustomerSeries.constant(25.0),
        mf.IntegratorConfig(method=mf.IntegrationMethod.RK4,
                            dt=0.025, horizon=50.0))
    return cases


def measure(repeats: int):
    import marketflow as mf

    out = {"backend": mf.BACKEND, "timings": {}}
    for name, args in build_cases().items():
        mf.simulate(*args)  # warm: first call pays any compilation
        best = min(_timed(mf.simulate, args) for _ in range(repeats))
        out["timings"][name] = best
    json.dump(out, sys.stdout)


def _timed(fn, args):
    t0 = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t0


def compare(repeats: int):
    results = {}
    for backend, disable in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, MARKETFLOW_DISABLE_JIT=disable)
        proc = subprocess.run(
            [sys.executable, __file__, "--measure", "--repeats", str(repeats)],
            capture_output=True, text=True, env=env, check=True)
        payload = json.loads(proc.stdout)
        assert payload["backend"] == backend, payload["backend"]
        results[backend] = payload["timings"]

    width = max(len(name) for name in results["numba"])
    print(f"{'case':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name, fast in results["numba"].items():
        slow = results["numpy"][name]
        print(f"{name:<{width}}  {fast * 1e3:>8.2f}ms  {slow * 1e3:>8.2f}ms"
              f"  {slow / fast:>7.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--measure", action="store_true",
                        help="run the timings in this process and emit JSON")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    if args.measure:
        measure(args.repeats)
    else:
        compare(args.repeats)


if __name__ == "__main__":
    main()
