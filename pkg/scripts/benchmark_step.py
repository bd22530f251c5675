#!/usr/bin/env python3
"""Time the engine at desk scale: 10^4 agents in 2D, grid neighbor search,
epsilon tuned for a mean neighborhood around 20.

Usage:
    python scripts/benchmark_step.py [steps]
"""

import sys
import time
from pathlib import Path

from lfmix import load_scenario, neighbors_grid, run
from lfmix.dynamics import step

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    steps = int(sys.argv[1]) if len(sys.argv) > 1 else 100
    scenario = load_scenario(ROOT / "scenarios" / "perf_10k.json")
    state = scenario.initial_state

    t0 = time.perf_counter()
    nbrs = neighbors_grid(state, scenario)
    t_nbrs = time.perf_counter() - t0
    sizes = [len(s) for s in nbrs.follower_sets.values()]
    print(f"grid query        {t_nbrs:7.3f} s   mean follower neighborhood {sum(sizes) / len(sizes):.1f}")

    t0 = time.perf_counter()
    step(state, scenario, 0, record_weights=False)
    print(f"single step       {time.perf_counter() - t0:7.3f} s")

    t0 = time.perf_counter()
    run(scenario, steps)
    wall = time.perf_counter() - t0
    print(f"{steps} steps        {wall:7.3f} s   ({wall / steps * 1000:.0f} ms per step)")


if __name__ == "__main__":
    main()
