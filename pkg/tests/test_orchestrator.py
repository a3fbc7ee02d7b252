import pytest

from lowspeed import labels as L
from lowspeed.functionals import we_prefix_check
from lowspeed.orchestrator import (A_path, TreeFamily, build_A, build_family,
                                   check_minimality_cases, key_name)
from lowspeed.scenario import bundled


def test_s1_dense_splits(s1):
    st, fam = s1
    assert st.complete
    assert st.pi[0] == L.INFTY
    assert check_minimality_cases(st, fam).ok
    assert any("path splitting" in n for n in check_minimality_cases(st, fam).notes)


def test_s2_finitary_outcome(s2):
    st, fam = s2
    assert st.pi[0] != L.INFTY
    case = st.steps[0].case
    assert case in ("no splits above",) or case.startswith("diverges")
    rep = check_minimality_cases(st, fam)
    assert rep.ok and rep.checked > 0


def test_s3_waits_then_takes_finitary_m1(s3):
    st, fam = s3
    assert st.complete
    assert st.pi[3] == "100"  # M1 finitary
    assert st.steps[3].requirement == "M1"


@pytest.mark.parametrize("name", ["S1", "S2", "S3"])
def test_A_on_every_tree_and_differs_from_W(name):
    from conftest import built
    st, fam = built(name)
    for A in (st.A, A_path(st, fam)):
        for k in st.tree_keys():
            assert fam.tree(k).has(A), (key_name(k), A)
    for e in range(len(st.pi) // 3):
        assert not we_prefix_check(fam.sc.requirements[e].P, st.A)


def test_corrupted_A_fails(s3):
    st, fam = s3
    A = st.A
    i = len(A) // 2
    flipped = A[:i] + ("1" if A[i] == "0" else "0") + A[i + 1:]
    rep = check_minimality_cases(st, fam, flipped)
    assert not rep.ok
    assert any("is not on" in v for v in rep.violations)


def test_lockstep_matches_lazy():
    sc = bundled("S3")
    B = 1200
    st, lazy = build_A(sc, B)
    keys = st.tree_keys()
    lock = build_family(sc, B, "lockstep", keys)
    for k in keys:
        lazy.tree(k)
    assert lock.snapshot() == {k: v for k, v in lazy.snapshot().items() if k in lock.snapshot()}
    assert set(lock.snapshot()) <= set(lazy.snapshot())


def test_unresolved_when_budget_too_small():
    st, _ = build_A(bundled("S1"), 20)
    assert not st.complete
    assert st.report_lines()[-1] == "complete\tFalse"


def test_family_memoizes():
    fam = TreeFamily(bundled("S2"))
    t = fam.tree((L.INFTY,))
    assert fam.tree((L.INFTY,)) is t
    assert fam.tree(("bogus-not-a-node",)) is None
