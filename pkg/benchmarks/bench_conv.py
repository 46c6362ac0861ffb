"""Time conv2d and one training step under the compiled and numpy backends.

    python benchmarks/bench_conv.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from alanet import kernels
from alanet import tensor as T
from alanet.config import NetworkConfig
from alanet.network import ALANet, frozen_perception
from alanet.tensor import Parameter, Tensor
from alanet.train import Adam, loss_terms

SHAPES = [  # (c_in, c_out, size, k, stride)
    (3, 8, 32, 3, 1),
    (8, 8, 32, 7, 1),
    (16, 16, 16, 3, 1),
    (16, 16, 16, 3, 2),
    (64, 64, 16, 3, 1),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def conv_case(rng, c_in, c_out, size, k, stride):
    x = Parameter(rng.standard_normal((c_in, size, size)))
    w = Parameter(rng.standard_normal((c_out, c_in, k, k)))

    def run():
        y = T.conv2d(x, w, stride=stride)
        T.sum_(y).backward()
    return run


def train_step_case(rng):
    model = ALANet(NetworkConfig())
    stub = frozen_perception()
    opt = Adam(model.parameters(), lr=1e-3)
    img, t_gt, r_gt = (Tensor(rng.random((3, 32, 32))) for _ in range(3))

    def run():
        model.zero_grad()
        loss_terms(model(img, "a red car", "a lamp"), t_gt, r_gt, model.config.loss_weights, stub).total.backward()
        opt.step()
    return run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["python"]
    try:
        kernels.use_backend("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled backend unavailable; timing the numpy fallback only")

    cases = [(f"conv {ci}->{co} {s}x{s} k{k} s{st} fwd+bwd", (ci, co, s, k, st)) for ci, co, s, k, st in SHAPES]
    cases.append(("train step, toy config, 32x32", None))
    print(f"{'case':40s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for label, shape in cases:
        row = []
        for b in backends:
            kernels.use_backend(b)
            rng = np.random.default_rng(0)
            fn = train_step_case(rng) if shape is None else conv_case(rng, *shape)
            fn()  # warm-up
            row.append(best_of(fn, args.repeat))
        line = f"{label:40s}" + "".join(f"{t * 1e3:10.2f}ms" for t in row)
        if len(row) == 2:
            line += f"{row[1] / row[0]:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
