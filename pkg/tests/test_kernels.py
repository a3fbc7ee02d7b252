import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lowspeed import _kernels as K

backends = ["numpy"] + (["numba"] if K.njit is not None else [])


def splits(a, b):
    return any(x >= 0 and y >= 0 and x != y for x, y in zip(a, b))


rows = st.integers(1, 12).flatmap(
    lambda m: st.lists(st.lists(st.integers(-1, 2), min_size=5, max_size=5), min_size=m, max_size=m))


@settings(max_examples=60, deadline=None)
@given(rows, st.data())
@pytest.mark.parametrize("backend", backends)
def test_nonsplit_pairs_brute(backend, V, data):
    k = K.with_backend(backend)
    group = data.draw(st.lists(st.integers(0, 3), min_size=len(V), max_size=len(V)))
    count, first = k.nonsplit_pairs(np.array(V, dtype=np.int64), np.array(group), None, 100)
    ref = [(i, j) for i in range(len(V)) for j in range(i + 1, len(V))
           if group[i] != group[j] and not splits(V[i], V[j])]
    assert count == len(ref)
    assert first == ref


@settings(max_examples=60, deadline=None)
@given(rows)
def test_any_two_distinct(V):
    V = np.array(V, dtype=np.int64)
    ref = any(splits(V[i], V[j]) for i in range(len(V)) for j in range(i + 1, len(V)))
    assert K.any_two_distinct(V) == ref


def tree_inputs(depth, seed):
    rng = np.random.default_rng(seed)
    m = 1 << depth
    r = np.arange(m)
    anc = np.stack([(r >> (depth - l)) + (1 << l) for l in range(depth + 1)], axis=1)
    main = (rng.random(2 << depth) < 0.5)[anc]
    main[:, 0] = False
    V = rng.integers(-1, 2, size=(m, 4)).astype(np.int64)
    return V, anc, main


@pytest.mark.parametrize("seed", range(6))
def test_lifted_nonsplit_brute(seed):
    V, anc, main = tree_inputs(4, seed)
    ref_cov, ref_bad = 0, []
    for i in range(len(V)):
        for j in range(i + 1, len(V)):
            d = max(l for l in range(anc.shape[1]) if anc[i, l] == anc[j, l])
            if any(main[i, l] and main[j, l] for l in range(d + 1, anc.shape[1])):
                ref_cov += 1
                if not splits(V[i], V[j]):
                    ref_bad.append((i, j))
    for b in backends:
        count, covered, first = K.with_backend(b).lifted_nonsplit(V, anc, main, 1000)
        assert (count, covered, first) == (len(ref_bad), ref_cov, ref_bad)


@pytest.mark.parametrize("backend", backends)
def test_splits_all(backend):
    k = K.with_backend(backend)
    rows_ = np.array([[0, -1], [1, 1], [-1, 0]], dtype=np.int64)
    assert k.splits_all(rows_, 3, np.array([2, 2])) == (True, 3)
    ok, c = k.splits_all(rows_, 3, np.array([0, 1]))
    assert not ok and c == 1
    assert K.split_witness(np.array([0, 1]), np.array([-1, 0])) == 1


def test_benchmark_script_runs(capsys, monkeypatch):
    import runpy
    import sys
    from pathlib import Path
    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    monkeypatch.setattr(sys, "argv", [str(script), "--rows", "64", "--repeat", "1"])
    runpy.run_path(str(script), run_name="__main__")
    out = capsys.readouterr().out
    assert "lifted_nonsplit" in out and "speedup" in out
