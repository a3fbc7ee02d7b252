import itertools

import pytest
from hypothesis import given, strategies as st

from lowspeed import labels as L


def oracle_key(a):
    # T above everything; otherwise compare with end-of-string < i < f by padding
    if a == "T":
        return "9"
    return a.translate(str.maketrans("if", "12")).ljust(16, "0")


def all_labels(n):
    out = ["T"]
    for k in range(n + 1):
        out += ["".join(p) for p in itertools.product("fi", repeat=k)]
    return out


label_n = st.integers(0, 6).flatmap(lambda n: st.tuples(st.just(n), st.sampled_from(all_labels(n))))


def test_labels_2_chain():
    chain = list(reversed(L.sorted_labels(L.labels_n(2))))
    assert chain == ["T", "ff", "fi", "f", "if", "ii", "i", ""]
    assert " > ".join(L.render(x) for x in chain) == "⊤ > ff > f∞ > f > ∞f > ∞∞ > ∞ > ∅"


@pytest.mark.parametrize("n", range(7))
def test_labels_n_matches_oracle_order(n):
    assert L.labels_n(n) == sorted(all_labels(n), key=oracle_key)
    assert len(L.labels_n(n)) == 2 ** (n + 1)


@given(st.sampled_from(all_labels(5)), st.sampled_from(all_labels(5)))
def test_cmp_agrees_with_padding_oracle(a, b):
    ka, kb = oracle_key(a), oracle_key(b)
    assert L.label_cmp(a, b) == (ka > kb) - (ka < kb)
    assert L.lt(a, b) == (ka < kb)
    assert L.label_min(a, b) == (a if ka <= kb else b)


@given(label_n)
def test_pred_n_is_immediate_predecessor(p):
    n, eta = p
    if eta == "":
        with pytest.raises(L.LabelError):
            L.pred_n(eta, n)
        return
    below = [x for x in all_labels(n) if oracle_key(x) < oracle_key(eta)]
    assert L.pred_n(eta, n) == max(below, key=oracle_key)


@given(st.sampled_from(all_labels(6)), st.integers(0, 6))
def test_greatest_below(m, n):
    cands = [x for x in all_labels(n) if oracle_key(x) <= oracle_key(m)]
    assert L.greatest_below(m, n) == max(cands, key=oracle_key)


def test_pred_n_outside_raises():
    with pytest.raises(L.LabelError):
        L.pred_n("fff", 2)


def test_drop_first():
    assert L.drop_first("T") == "T"
    assert L.drop_first("fi") == "i"
    assert L.drop_first("f") == ""
    for bad in ("", "if"):
        with pytest.raises(L.LabelError):
            L.drop_first(bad)


def test_delta_and_watches():
    nu = ["inf", "inf", "0", "1", "inf", "10"]
    assert L.delta(nu) == "if"
    assert L.delta_gt(0, nu) == "f"
    assert L.outcome_of(nu, "L", 1) == "inf"
    # i < f, so the all-infinitary guess watches a finitary one
    assert L.watches(["inf"], ["0"])
    assert not L.watches(["0"], ["inf"])


def test_check_outcomes():
    L.check_outcomes(["inf", "inf", "0"])
    with pytest.raises(L.LabelError):
        L.check_outcomes(["inf", "inf", "inf"])
    with pytest.raises(L.LabelError):
        L.check_outcomes(["x"])
