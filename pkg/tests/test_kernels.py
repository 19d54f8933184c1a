import numpy as np
import pytest

from stockrec import kernels
from stockrec.kernels import USING_COMPILED_KERNEL, best_split
from stockrec.kernels._split_py import best_split as best_split_py


def brute_force_split(X, y, idx, features, min_leaf):
    """Exhaustive oracle: try every midpoint threshold of every feature."""
    total_n = len(idx)
    base_sse = float(((y[idx] - y[idx].mean()) ** 2).sum())
    best = (-1, 0.0, 0.0)
    for f in features:
        vals = np.unique(X[idx, f])
        for a, b in zip(vals[:-1], vals[1:]):
            thr = 0.5 * (a + b)
            left = idx[X[idx, f] <= thr]
            right = idx[X[idx, f] > thr]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            sse = float(((y[left] - y[left].mean()) ** 2).sum()) + float(
                ((y[right] - y[right].mean()) ** 2).sum()
            )
            gain = base_sse - sse
            if gain > best[2]:
                best = (int(f), float(thr), gain)
    return best


def _random_case(rng, n, p, discrete=False):
    if discrete:
        X = rng.integers(0, 4, size=(n, p)).astype(float)
    else:
        X = rng.normal(size=(n, p))
    y = rng.normal(size=n)
    idx = np.sort(rng.choice(n, size=max(4, n // 2), replace=False)).astype(np.int64)
    features = np.arange(p, dtype=np.int64)
    return np.ascontiguousarray(X), y, idx, features


@pytest.mark.parametrize("discrete", [False, True])
def test_split_matches_bruteforce(discrete):
    rng = np.random.default_rng(11)
    for trial in range(25):
        X, y, idx, features = _random_case(rng, n=40, p=4, discrete=discrete)
        got = best_split(X, y, idx, features, 3)
        want = brute_force_split(X, y, idx, features, 3)
        assert got[0] == want[0], trial
        assert got[1] == pytest.approx(want[1], abs=1e-12)
        assert got[2] == pytest.approx(want[2], rel=1e-9, abs=1e-9)


def test_split_no_valid_split():
    X = np.ones((6, 2))
    y = np.arange(6.0)
    idx = np.arange(6, dtype=np.int64)
    f, thr, gain = best_split(X, y, idx, np.arange(2, dtype=np.int64), 1)
    assert f == -1


def test_split_min_leaf_respected():
    X = np.arange(10.0).reshape(-1, 1)
    y = np.arange(10.0)
    idx = np.arange(10, dtype=np.int64)
    f, thr, gain = best_split(X, y, idx, np.arange(1, dtype=np.int64), 5)
    # only the middle cut leaves 5 on each side
    assert f == 0
    assert thr == pytest.approx(4.5)


def test_split_tie_prefers_lowest_feature():
    # identical columns: the gain ties exactly; the lower index must win
    col = np.array([0.0, 0.0, 1.0, 1.0])
    X = np.column_stack([col, col])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    f, thr, gain = best_split(X, y, np.arange(4, dtype=np.int64), np.arange(2, dtype=np.int64), 1)
    assert f == 0
    assert thr == pytest.approx(0.5)


def test_compiled_and_fallback_agree():
    if not USING_COMPILED_KERNEL:
        pytest.skip("compiled kernel unavailable; fallback already under test")
    rng = np.random.default_rng(5)
    for _ in range(20):
        X, y, idx, features = _random_case(rng, n=60, p=5)
        a = kernels.best_split_cy(X, y, idx, features, 4)
        b = best_split_py(X, y, idx, features, 4)
        assert a[0] == b[0]
        assert a[1] == b[1]  # bit-identical, not approx
        assert a[2] == b[2]


def test_restricted_feature_set():
    rng = np.random.default_rng(9)
    X, y, idx, _ = _random_case(rng, n=30, p=6)
    features = np.array([2, 4], dtype=np.int64)
    f, thr, gain = best_split(X, y, idx, features, 2)
    assert f in (-1, 2, 4)
    want = brute_force_split(X, y, idx, features, 2)
    assert f == want[0]
