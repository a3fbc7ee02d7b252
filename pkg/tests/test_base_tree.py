import itertools

import pytest
from hypothesis import given, strategies as st

from lowspeed import base_tree as B


def brute_members(n):
    out = set()
    for bits in itertools.product("01", repeat=n):
        s = "".join(bits)
        ok = True
        k = 1
        while (1 << (k - 1)) - 1 < n:
            lo, hi = (1 << (k - 1)) - 1, min((1 << k) - 1, n)
            if len(set(s[lo:hi])) > 1:
                ok = False
            k += 1
        if ok:
            out.add(s)
    return out


@pytest.mark.parametrize("n", range(12))
def test_members_match_brute_force(n):
    assert set(B.members_of_length(n)) == brute_members(n)
    assert all(B.contains(s) for s in B.members_of_length(n))


def test_contains_rejects_non_members():
    for bits in itertools.product("01", repeat=7):
        s = "".join(bits)
        assert B.contains(s) == (s in brute_members(7))


@given(st.integers(0, 4000))
def test_polynomially_many_per_length(n):
    assert 2 ** B.blocks_touched(n) <= 2 * (n + 1)


@given(st.integers(0, 9).flatmap(lambda n: st.sampled_from(B.members_of_length(n))))
def test_member_children(sigma):
    kids = B.member_children(sigma)
    assert set(kids) == {t for t in B.members_of_length(len(sigma) + 1) if t.startswith(sigma)}


def test_structural_children_and_boundaries():
    assert B.structural_children("") == ["0", "1"]
    assert B.structural_children("1") == ["100", "111"]
    with pytest.raises(B.NotABoundary):
        B.structural_children("10")
    assert [B.boundary_level(n) for n in (0, 1, 2, 3, 7)] == [0, 1, None, 2, 3]
    assert B.block_count("1001111") == 3
    assert len(B.boundary_nodes(3)) == 8


def test_members_below_order():
    xs = B.members_below(5)
    assert xs == sorted(xs, key=lambda s: (len(s), s))
    assert all(len(x) < 5 for x in xs)
