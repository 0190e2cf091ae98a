"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--pairs 200] [--repeat 2000] [--sessions 300]

Reports kernel calls per second on a stack of ``--pairs`` singlets and
full honest sessions per second at the default configuration.
"""
import argparse
import time

import numpy as np

from qct import kernels
from qct.protocol import ProtocolConfig, run_session, session_rng
from qct.qsim import Side, singlet


def rate(fn, repeat):
    fn()
    start = time.perf_counter()
    for _ in range(repeat):
        fn()
    return repeat / (time.perf_counter() - start)


def bench(backend, pairs, repeat, sessions):
    rng = np.random.default_rng(0)
    rho = np.broadcast_to(singlet().rho, (pairs, 4, 4)).copy()
    idx = np.arange(pairs)
    ops = rng.integers(4, size=pairs).astype(np.int8)
    axes = rng.normal(size=(pairs, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    u = rng.random(pairs)
    cfg = ProtocolConfig()
    with kernels.use_backend(backend):
        out = {
            "apply_pauli": rate(lambda: kernels.apply_pauli(rho, idx, Side.ALICE, ops), repeat),
            "measure": rate(lambda: kernels.measure(rho.copy(), idx, Side.BOB, axes, u), repeat),
            "depolarize": rate(lambda: kernels.depolarize(rho, idx, Side.BOB, 0.1), repeat),
        }
        counter = iter(range(10 ** 9))
        out["session"] = rate(lambda: run_session(cfg, session_rng(1, next(counter)), bit=0), sessions)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--sessions", type=int, default=300)
    args = ap.parse_args()
    names = kernels.available()
    results = {name: bench(name, args.pairs, args.repeat, args.sessions) for name in names}
    ops = list(next(iter(results.values())))
    print(f"{'operation':<12}" + "".join(f"{n + ' /s':>16}" for n in names)
          + (f"{'speedup':>10}" if len(names) == 2 else ""))
    for op in ops:
        row = f"{op:<12}" + "".join(f"{results[n][op]:>16,.0f}" for n in names)
        if len(names) == 2:
            row += f"{results['cython'][op] / results['python'][op]:>9.1f}x"
        print(row)
    if len(names) < 2:
        print("compiled kernels not built; only the numpy backend was measured")


if __name__ == "__main__":
    main()
