"""Planner timing and optimality on seeded random STRIPS instances.

For each seed, breadth-first and greedy search are timed and their plan
lengths compared against the shortest length; prints a per-size summary.
"""

import argparse
import random
import statistics
import time
from collections import defaultdict

from maestrob.planner import solve
from maestrob.random_instances import random_instance


def bench(n: int, max_objects: int, max_schemas: int) -> None:
    rows = defaultdict(list)
    for seed in range(n):
        domain, problem = random_instance(random.Random(seed), max_objects, max_schemas)
        t0 = time.perf_counter()
        bfs = solve(domain, problem)
        t1 = time.perf_counter()
        greedy = solve(domain, problem, mode="greedy")
        t2 = time.perf_counter()
        rows[len(problem.objects)].append(
            (t1 - t0, t2 - t1, bfs.stats.expanded, greedy.stats.expanded, len(greedy) - len(bfs))
        )
    print(f"{'objects':>7} {'n':>4} {'bfs ms':>8} {'greedy ms':>10} {'bfs exp':>8} {'greedy exp':>11} {'greedy excess':>14}")
    for size in sorted(rows):
        r = rows[size]
        col = lambda i: statistics.mean(x[i] for x in r)
        print(f"{size:>7} {len(r):>4} {col(0) * 1e3:>8.2f} {col(1) * 1e3:>10.2f} "
              f"{col(2):>8.1f} {col(3):>11.1f} {col(4):>14.2f}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("-n", type=int, default=200)
    parser.add_argument("--max-objects", type=int, default=6)
    parser.add_argument("--max-schemas", type=int, default=4)
    args = parser.parse_args()
    bench(args.n, args.max_objects, args.max_schemas)
