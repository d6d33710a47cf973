import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coreaudit import kernels
from coreaudit.oracles import _size_tables

IMPLS = kernels.implementations()


def brute_scan(U, thresh, sizes):
    n, m = U.shape
    best = None
    for mask in range(1, 1 << m):
        t = np.array([(mask >> j) & 1 for j in range(m)])
        count = int((U @ t >= thresh).sum())
        if count == 0:
            continue
        size = float(sizes @ t)
        if best is None or size * best[1] < best[2] * count or (size * best[1] == best[2] * count and mask < best[0]):
            best = (mask, count, size)
    return best


def brute_cut(util, yq, zq, cap):
    """Largest ``zq*D - sum_{j not in S} min(u_j, D) yq_j`` over every ``S`` with ``D = cap - u(S) >= 1``."""
    best = None
    L = len(util)
    for r in range(L + 1):
        for S in itertools.combinations(range(L), r):
            D = cap - sum(util[j] for j in S)
            if D < 1:
                continue
            viol = zq * D - sum(min(util[j], D) * yq[j] for j in range(L) if j not in S)
            if best is None or viol > best:
                best = viol
    return best


@st.composite
def scan_cases(draw):
    n = draw(st.integers(1, 5))
    m = draw(st.integers(1, 9))
    U = np.array(draw(st.lists(st.lists(st.integers(0, 3), min_size=m, max_size=m), min_size=n, max_size=n)),
                 dtype=np.int64)
    thresh = np.array(draw(st.lists(st.integers(1, 6), min_size=n, max_size=n)), dtype=np.int64)
    sizes = np.array(draw(st.lists(st.sampled_from([0.25, 0.5, 1.0, 1.5]), min_size=m, max_size=m)))
    return U, thresh, sizes


@pytest.mark.parametrize("name", sorted(IMPLS))
@settings(max_examples=120, deadline=None)
@given(case=scan_cases())
def test_scan_matches_brute_force(name, case):
    U, thresh, sizes = case
    m = U.shape[1]
    h = m // 2
    lo, hi = _size_tables(sizes, h)
    mask, count, size = IMPLS[name].scan_committees(U, thresh, lo, hi, h, 0, 1 << m)
    ref = brute_scan(U, thresh, sizes)
    if ref is None:
        assert mask < 0
    else:
        assert (mask, count) == ref[:2]
        assert size == pytest.approx(ref[2])


@pytest.mark.parametrize("name", sorted(IMPLS))
@settings(max_examples=40, deadline=None)
@given(case=scan_cases(), cut=st.integers(0, 512))
def test_scan_split_ranges_merge(name, case, cut):
    U, thresh, sizes = case
    m = U.shape[1]
    h = m // 2
    lo, hi = _size_tables(sizes, h)
    impl = IMPLS[name]
    whole = impl.scan_committees(U, thresh, lo, hi, h, 0, 1 << m)
    cut = min(cut, 1 << m)
    parts = [impl.scan_committees(U, thresh, lo, hi, h, 0, cut), impl.scan_committees(U, thresh, lo, hi, h, cut, 1 << m)]
    parts = [p for p in parts if p[0] >= 0]
    if whole[0] < 0:
        assert not parts
        return
    best = min(parts, key=lambda p: (p[2] / p[1], p[0]))
    assert best[:2] == whole[:2]


@st.composite
def kc_cases(draw):
    L = draw(st.integers(0, 8))
    util = draw(st.lists(st.integers(1, 5), min_size=L, max_size=L))
    yq = draw(st.lists(st.integers(0, 2**32), min_size=L, max_size=L))
    zq = draw(st.integers(0, 2**32))
    cap = draw(st.integers(1, 20))
    return util, yq, zq, cap


@pytest.mark.parametrize("name", sorted(IMPLS))
@settings(max_examples=200, deadline=None)
@given(case=kc_cases())
def test_kc_matches_brute_force(name, case):
    util, yq, zq, cap = case
    viol, mask, D = IMPLS[name].kc_separate(util, yq, zq, cap)
    assert viol == brute_cut(util, yq, zq, cap)
    S = [j for j in range(len(util)) if mask >> j & 1]
    assert D == cap - sum(util[j] for j in S) >= 1
    assert viol == zq * D - sum(min(util[j], D) * yq[j] for j in range(len(util)) if j not in S)


@settings(max_examples=100, deadline=None)
@given(case=kc_cases())
def test_backends_agree_on_kc(case):
    outs = {name: impl.kc_separate(*case) for name, impl in IMPLS.items()}
    assert len(set(outs.values())) == 1


def test_backend_reported():
    assert kernels.BACKEND in IMPLS


def test_pure_fallback_selected_by_env():
    import os
    import subprocess
    import sys

    code = ("from coreaudit import kernels; from coreaudit.oracles import exact_theta_core;"
            "from coreaudit.generators import gen_gap; print(kernels.BACKEND, exact_theta_core(gen_gap(2))[0])")
    env = dict(os.environ, COREAUDIT_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout
    backend, theta = out.split()
    assert backend == "python" and float(theta) == pytest.approx(2 / 3)
