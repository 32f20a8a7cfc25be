"""Compare the compiled counter kernel against the pure-Python build.

Run with no arguments to get a side-by-side table; the script re-executes
itself once per build (HAMMERSIM_FORCE_PY pins the Python one) so each
measurement imports a fresh interpreter with the right kernel.

    python3 benchmarks/bench_kernel.py
    python3 benchmarks/bench_kernel.py --workload core --json
"""

import argparse
import json
import os
import subprocess
import sys
import time


def bench_core() -> dict:
    """Victim-side counting over a strided aggressor set."""
    from hammersim.kernel import VICTIM, CounterCore

    core = CounterCore(65536, 512, 2, 255)
    rows = [100 + 3 * i for i in range(128)]
    n = 400_000
    started = time.perf_counter()
    for i in range(n):
        core.act(rows[i % 128], VICTIM)
        if i % 1024 == 0:
            core.max_count()
    elapsed = time.perf_counter() - started
    return {"ops": n, "seconds": elapsed, "unit": "activations"}


def bench_queue() -> dict:
    """Insert-or-update churn with periodic drains of the hot set."""
    from hammersim.kernel import TopQueue

    q = TopQueue(20)
    n = 300_000
    state = 12345
    started = time.perf_counter()
    for i in range(n):
        state = (state * 1103515245 + 12345) & 0x7FFFFFFF
        q.update(state % 4096, state % 251)
        if i % 64 == 63:
            q.pop_max()
    elapsed = time.perf_counter() - started
    return {"ops": n, "seconds": elapsed, "unit": "queue updates"}


def bench_window() -> dict:
    """One full refresh window of a saturating strided attack."""
    from hammersim.attacks import RoundRobinSpec, gen_round_robin
    from hammersim.config import geometry_from, refresh_from
    from hammersim.engine import AboConfig, BankEngine
    from hammersim.schemes import preset

    config = preset("PVAC", n_bo=43, n_mit=4)
    geometry = geometry_from({})
    refresh = refresh_from({}, config)
    engine = BankEngine(config, geometry, refresh, AboConfig(),
                        collect_log=False)
    events = gen_round_robin(RoundRobinSpec(n=128, stride=3))
    started = time.perf_counter()
    metrics = engine.run_trace(events, refresh.window_ps)
    elapsed = time.perf_counter() - started
    return {"ops": metrics.acts_issued, "seconds": elapsed,
            "unit": "simulated activations"}


WORKLOADS = {"core": bench_core, "queue": bench_queue,
             "window": bench_window}


def run_one(workload: str, repeats: int) -> dict:
    from hammersim.kernel import KERNEL_BUILD

    best = None
    for _ in range(repeats):
        result = WORKLOADS[workload]()
        if best is None or result["seconds"] < best["seconds"]:
            best = result
    best["workload"] = workload
    best["build"] = KERNEL_BUILD
    best["rate"] = best["ops"] / best["seconds"]
    return best


def run_in_subprocess(workload: str, repeats: int, force_py: bool) -> dict:
    env = dict(os.environ)
    env["HAMMERSIM_FORCE_PY"] = "1" if force_py else "0"
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--workload", workload,
         "--repeats", str(repeats), "--json"],
        env=env, check=True, capture_output=True, text=True)
    return json.loads(out.stdout)


def compare(repeats: int) -> None:
    print(f"{'workload':<10} {'build':<10} {'seconds':>9} "
          f"{'rate':>14}  speedup")
    for workload in WORKLOADS:
        rows = [run_in_subprocess(workload, repeats, force_py)
                for force_py in (True, False)]
        base = rows[0]["rate"]
        for row in rows:
            speedup = row["rate"] / base
            print(f"{workload:<10} {row['build']:<10} "
                  f"{row['seconds']:>9.3f} {row['rate']:>11,.0f}/s "
                  f"{speedup:>8.2f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workload", choices=[*WORKLOADS, "all"],
                        default="all")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--json", action="store_true",
                        help="run in-process and print one JSON record")
    args = parser.parse_args()
    if args.json:
        if args.workload == "all":
            parser.error("--json needs a single --workload")
        print(json.dumps(run_one(args.workload, args.repeats)))
        return
    compare(args.repeats)


if __name__ == "__main__":
    main()
