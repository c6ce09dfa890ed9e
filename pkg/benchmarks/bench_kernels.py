"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from entropy_rag import _pykernels

try:
    from entropy_rag import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    matrix = rng.normal(size=(10_000, 64))
    matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
    query = matrix[123].copy()
    probs = rng.dirichlet(np.ones(50_000))
    tokens = [f"token{i % 997}".encode() for i in range(20_000)]
    return {
        "topk 10000x64, k=3": lambda m: m.topk_inner_product(matrix, query, 3),
        "entropy |V|=50000": lambda m: m.entropy(probs),
        "hash_counts 20000 tokens": lambda m: m.hash_counts(tokens, 64),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _pykernels}
    if _kernels is not None:
        backends["compiled"] = _kernels
    else:
        print("compiled extension not built; timing the fallback only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    for label, fn in cases(rng).items():
        times = {}
        for name, mod in backends.items():
            fn(mod)  # warm up
            times[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        speedup = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        row = "".join(f"{times[n] * 1e3:>12.2f}ms" for n in backends)
        print(f"{label:<28}{row}{speedup:>9.1f}x")


if __name__ == "__main__":
    main()
