"""Wall time of the hot kernels on each available backend.

    python3 benchmarks/bench_kernels.py [--shape 361x616] [--repeats 3]

Reports one GMM update and one block-matching frame pair at the given
frame size, plus the direct versus correlation-stack objective.
"""
import argparse
import time

import numpy as np

from mlspeed import kernels
from mlspeed.background import gmm_init, gmm_update, train
from mlspeed.baseline import BlockMatchConfig, block_match_pair, scaled_block_size
from mlspeed.evaluation import measure_speedup


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--shape", default="361x616")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    shape = tuple(int(x) for x in args.shape.lower().split("x"))
    rng = np.random.default_rng(0)
    frames = np.clip(0.3 + 0.1 * rng.standard_normal((12,) + shape), 0, 1)
    moved = np.roll(frames[0], (2, -1), axis=(0, 1))
    cfg = BlockMatchConfig(scaled_block_size(shape), 8)

    rows = {}
    for name in kernels.available_backends():
        model = gmm_init(shape)
        train(model, frames[:10], name)
        gmm = best_of(lambda: gmm_update(model.copy(), frames[10], name), args.repeats)
        bm = best_of(lambda: block_match_pair(frames[0], moved, cfg, name), args.repeats)
        rows[name] = (gmm, bm)

    print(f"frame {shape[0]}x{shape[1]}, block {cfg.block_size}, search range {cfg.search_range}")
    print(f"{'backend':>10} {'gmm_update s':>13} {'block_match s':>14}")
    for name, (gmm, bm) in rows.items():
        print(f"{name:>10} {gmm:>13.4f} {bm:>14.4f}")
    if "compiled" in rows and "python" in rows:
        c, p = rows["compiled"], rows["python"]
        print(f"{'speedup':>10} {p[0] / c[0]:>12.1f}x {p[1] / c[1]:>13.1f}x")
    s = measure_speedup()
    print(f"objective 64x64 N=20 v_max=8: direct {s['direct_s']:.3f} s, fast {s['fast_s']:.4f} s, "
          f"{s['speedup']:.0f}x")


if __name__ == "__main__":
    main()
