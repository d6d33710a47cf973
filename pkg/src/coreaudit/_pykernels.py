"""Pure-Python/numpy versions of the hot kernels.

Same contracts as the compiled ``_kernels`` module; results are bitwise equal.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_CHUNK = 1 << 15


def scan_committees(U, thresh, size_lo, size_hi, h, start, stop):
    """Best committee over Gray-code indices ``start <= g < stop``.

    A committee ``T`` (bitmask ``g ^ (g >> 1)``) satisfies voter ``i`` when
    ``U[i] @ bits(T) >= thresh[i]``. Its size is ``size_lo[T & (2^h - 1)] +
    size_hi[T >> h]``. Committees are compared by ``size / count`` (cross
    multiplied), ties to the smaller mask. Returns ``(mask, count, size)``
    with ``mask = -1`` when nothing in range satisfies anybody.
    """
    U = np.asarray(U, dtype=np.float64)
    thresh = np.asarray(thresh, dtype=np.float64)
    m = U.shape[1]
    lo_mask = (1 << h) - 1
    shifts = np.arange(m, dtype=np.int64)
    best_mask, best_count, best_size = -1, 0, 0.0
    for a in range(start, stop, _CHUNK):
        g = np.arange(a, min(stop, a + _CHUNK), dtype=np.int64)
        masks = g ^ (g >> 1)
        bits = ((masks[:, None] >> shifts) & 1).astype(np.float64)
        counts = ((U @ bits.T) >= thresh[:, None]).sum(axis=0)
        sizes = size_lo[masks & lo_mask] + size_hi[masks >> h]
        ok = (counts > 0) & (masks != 0)
        if not ok.any():
            continue
        masks, counts, sizes = masks[ok], counts[ok], sizes[ok]
        # narrow down by float ratio, then settle exactly by cross multiplication
        ratio = sizes / counts
        near = np.flatnonzero(ratio <= ratio.min() * (1 + 1e-9))
        for t in near[np.argsort(masks[near], kind="stable")].tolist():
            mk, c, s = int(masks[t]), int(counts[t]), float(sizes[t])
            if best_mask < 0:
                best_mask, best_count, best_size = mk, c, s
                continue
            lhs = s * best_count
            rhs = best_size * c
            if lhs < rhs or (lhs == rhs and mk < best_mask):
                best_mask, best_count, best_size = mk, c, s
    return best_mask, best_count, best_size


def kc_separate(util, yq, zq, cap):
    """Most violated knapsack-cover cut for one voter, in integer units.

    ``util`` holds positive integer utilities of the voter's approved items,
    ``yq``/``zq`` the quantized LP values. For every residual demand
    ``D`` in ``1..cap`` and every ``S`` with ``util(S) = cap - D`` the cut reads
    ``sum_{j not in S} min(u_j, D) y_j >= z D``. Returns ``(violation, mask, D)``
    of the best cut under the order (violation desc, |S| asc, S lexicographic).
    """
    util = [int(u) for u in util]
    yq = [int(v) for v in yq]
    zq = int(zq)
    L = len(util)
    # (payoff, -|S|, revmask) packed into one integer; the order is additive
    M2 = 1 << L
    M1 = 1 << (L + L.bit_length() + 2)
    neg = None
    best = None  # (violation, -size, revmask, D)
    for D in range(1, cap + 1):
        target = cap - D
        dp = [neg] * (target + 1)
        dp[0] = 0
        for j in range(L):
            u = util[j]
            if u > target:
                continue
            step = min(u, D) * yq[j] * M1 - M2 + (1 << (L - 1 - j))
            for t in range(target, u - 1, -1):
                prev = dp[t - u]
                if prev is not None:
                    cand = prev + step
                    if dp[t] is None or cand > dp[t]:
                        dp[t] = cand
        key = dp[target]
        if key is None:
            continue
        payoff, rest = divmod(key + (M1 >> 1), M1)
        rest -= M1 >> 1
        negsize, rev = divmod(rest, M2)
        total = sum(min(u, D) * y for u, y in zip(util, yq))
        viol = zq * D - (total - payoff)
        cand = (viol, negsize, rev, D)
        if best is None or cand[:3] > best[:3]:
            best = cand
    viol, _, rev, D = best
    mask = 0
    for j in range(L):
        if rev >> (L - 1 - j) & 1:
            mask |= 1 << j
    return viol, mask, D
