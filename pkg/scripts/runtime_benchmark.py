#!/usr/bin/env python3
"""Runtime comparison between the exact matcher and the embedding-based query
path on a 200-node target across growing query sizes: the success-rate and
speedup data behind the crossover claim.

Needs a trained checkpoint (scripts/train_synthetic.py produces one).

Usage: python scripts/runtime_benchmark.py --checkpoint runs/synthetic/checkpoint.json
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from submatch.datasets import gen_er
from submatch.encoder import load_checkpoint
from submatch.evaluate import (
    BenchInstance,
    bench_exact,
    bench_neural,
    results_to_csv,
    summarize,
    _bfs_subgraph,
    _perturbed_query,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--checkpoint", required=True)
    parser.add_argument("--out", default="runs/bench")
    parser.add_argument("--target-nodes", type=int, default=200)
    parser.add_argument("--per-size", type=int, default=4)
    parser.add_argument("--timeout", type=float, default=20.0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    ckpt = load_checkpoint(args.checkpoint)
    rng = np.random.default_rng(args.seed)
    n = args.target_nodes
    target = gen_er(n, 5.0 / (n - 1), 1, seed=args.seed + 17)

    instances = []
    i = 0
    for size in (10, 20, 30, 40):
        for j in range(args.per_size):
            base = _bfs_subgraph(target, size, rng, keep_prob=0.9)
            query = base if j % 2 == 0 else _perturbed_query(base, rng, extra_edges=4)
            if not query.is_connected():
                continue
            label = True if j % 2 == 0 else None
            instances.append(BenchInstance(f"r{i:03d}", query, target, label))
            i += 1

    exact_rows = bench_exact(instances, timeout=args.timeout)
    neural_rows, offline = bench_neural(instances, ckpt)
    summary = summarize(exact_rows + neural_rows, {"neural": offline})

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rows.csv").write_text(results_to_csv(exact_rows + neural_rows))
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))

    for method in ("exact", "neural"):
        entry = summary["methods"][method]
        print(f"{method}: success {entry['success_rate']:.2f}, "
              f"mean {entry['mean_time_s']:.3f}s")
        for row in entry["by_query_size"]:
            print(f"  size {row['n_query']:>3}: success {row['success_rate']:.2f}, "
                  f"mean {row['mean_time_s']:.3f}s")
    print(f"offline index build: {offline['index_build_s']:.2f}s")
    print(f"artifacts in {out}/")


if __name__ == "__main__":
    main()
