"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--groups N] [--repeat R]

Times ``pair_weights`` on the full projection of a synthetic scenario and
the complete ``louvain`` run on its coordination graph, once per backend.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from botnet_detect import _pykernels, kernels
from botnet_detect.community import louvain
from botnet_detect.detect import CoordGraph, build_bipartite, project_coordination
from botnet_detect.ingest import group_tweets
from botnet_detect.synth import SynthConfig, generate

try:
    from botnet_detect import _kernels as _cykernels
except ImportError:
    _cykernels = None


def _best(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def _use(impl) -> None:
    kernels.pair_weights = impl.pair_weights
    kernels.louvain_local_moving = impl.louvain_local_moving
    kernels.BACKEND = impl.BACKEND


def _louvain_graph(n: int, seed: int) -> CoordGraph:
    # planted-partition graph: 20 blocks, dense inside, sparse across
    rng = np.random.default_rng(seed)
    block = rng.integers(0, 20, size=n)
    src, dst = np.triu_indices(n, 1)
    p = np.where(block[src] == block[dst], 0.08, 0.002)
    keep = rng.random(src.size) < p
    names = [f"a{i:05d}" for i in range(n)]
    return CoordGraph.from_edges((names[a], names[b], 1) for a, b in zip(src[keep].tolist(), dst[keep].tolist()))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--groups", type=int, default=20000)
    ap.add_argument("--nodes", type=int, default=3000, help="nodes in the Louvain benchmark graph")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    records, _ = generate(SynthConfig(n_humans=20000, n_groups=args.groups, human_retweets_per_group=(1, 27), seed=1))
    bip = build_bipartite(group_tweets(records))
    lg = _louvain_graph(args.nodes, 3)
    print(f"{len(records)} records, {len(bip.groups)} groups, {bip.n_edges} incidences; "
          f"louvain graph {lg.n_nodes} nodes / {lg.n_edges} edges")

    backends = [_pykernels] + ([_cykernels] if _cykernels is not None else [])
    results = {}
    for impl in backends:
        _use(impl)
        t_pair, g = _best(lambda: project_coordination(bip), args.repeat)
        t_louv, ca = _best(lambda: louvain(lg, seed=0), args.repeat)
        results[impl.BACKEND] = (t_pair, t_louv, g.weights(), ca)
        print(f"{impl.BACKEND:>7}: pair_weights {t_pair:8.3f}s ({g.n_edges} pairs)   "
              f"louvain {t_louv:8.3f}s (Q={ca.modularity:.6f}, {ca.n_communities} communities)")

    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        assert py[2] == cy[2] and py[3] == cy[3], "backends disagree"
        print(f"speedup: pair_weights x{py[0] / cy[0]:.1f}, louvain x{py[1] / cy[1]:.1f}; outputs identical")


if __name__ == "__main__":
    main()
