"""Compare the compiled and pure-Python kernels on the same inputs.

    python benchmarks/bench_kernels.py [--m 20] [--n 14] [--repeat 3]

Both backends must return identical results; the script exits non-zero if
they disagree.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from coreaudit import kernels
from coreaudit.core_general import QUANT
from coreaudit.oracles import _size_tables


def _best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_scan(impls, m, n, repeat, rng):
    U = (rng.random((n, m)) < 0.4).astype(np.int64)
    thresh = np.maximum(1, U.sum(axis=1) // 3).astype(np.int64)
    h = m // 2
    lo, hi = _size_tables(np.ones(m), h)
    return {name: _best_time(lambda mod=mod: mod.scan_committees(U, thresh, lo, hi, h, 0, 1 << m), repeat)
            for name, mod in impls.items()}


def bench_kc(impls, length, max_u, voters, repeat, rng):
    cases = []
    for _ in range(voters):
        util = rng.integers(1, max_u + 1, size=length).astype(np.int64)
        yq = (rng.random(length) * QUANT).astype(np.int64)
        cases.append((util, yq, int(QUANT), int(util.sum() // 2 + 1)))

    def run(mod):
        return [mod.kc_separate(u, [int(v) for v in y], z, cap) for u, y, z, cap in cases]

    return {name: _best_time(lambda mod=mod: run(mod), repeat) for name, mod in impls.items()}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=20, help="candidates in the committee scan")
    ap.add_argument("--n", type=int, default=14, help="voters in the committee scan")
    ap.add_argument("--kc-length", type=int, default=10, help="approval-set size for separation")
    ap.add_argument("--kc-voters", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    impls = kernels.implementations()
    if "cython" not in impls:
        print("compiled extension not built; only the Python backend is available")
    rng = np.random.default_rng(args.seed)
    ok = True
    for label, res in (
        (f"scan m={args.m} n={args.n}", bench_scan(impls, args.m, args.n, args.repeat, rng)),
        (f"kc-separate |A|={args.kc_length} x{args.kc_voters}",
         bench_kc(impls, args.kc_length, 5, args.kc_voters, args.repeat, rng)),
    ):
        outs = [out for _, out in res.values()]
        same = all(_equal(outs[0], o) for o in outs[1:])
        ok &= same
        base = res["python"][0]
        for name, (t, _) in res.items():
            print(f"{label:<32} {name:<7} {t * 1e3:10.2f} ms  x{base / t:6.1f}")
        print(f"{label:<32} results {'agree' if same else 'DISAGREE'}")
    return 0 if ok else 1


def _equal(a, b):
    return repr(_plain(a)) == repr(_plain(b))


def _plain(x):
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


if __name__ == "__main__":
    sys.exit(main())
