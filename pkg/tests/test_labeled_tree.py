import pytest

from lowspeed import labels as L
from lowspeed.labeled_tree import (COMPACT, MAIN, PAPER, SECONDARY, BaseTree, LabeledTree,
                                   RelabeledTree, Schedule, ScheduleError, check_admissible,
                                   expansionary_level, restrict, to_dot, validate_schedule)


def test_default_levels():
    assert [expansionary_level(i) for i in (1, 2, 3)] == [0, 64, 192]


def test_compact_levels_from_label_counts():
    # gap i is |Labels_{i-1}| + |Labels_i| + 2, counting labels by enumeration
    levels = [0]
    for i in range(1, 5):
        levels.append(levels[-1] + len(L.labels_n(i - 1)) + len(L.labels_n(i)) + 2)
    assert [COMPACT.level(i) for i in range(1, 6)] == levels == [0, 8, 22, 48, 98]
    assert COMPACT.strip(7) == 1 and COMPACT.strip(8) == 2 and COMPACT.strip(21) == 2


def test_schedule_validation_boundary():
    validate_schedule([0, 8, 22])
    with pytest.raises(ScheduleError):
        validate_schedule([0, 7])
    with pytest.raises(ScheduleError):
        validate_schedule([0, 8, 21])
    with pytest.raises(ScheduleError):
        validate_schedule([1, 9])
    s = Schedule("compact", [0, 10])
    assert s.level(2) == 10 and s.level(3) == 10 + 14


def small_tree():
    t = LabeledTree("", 1, L.TOP)
    t.add_child("", "0", 1, L.TOP, MAIN, 1)
    t.add_child("", "1", 1, L.TOP, MAIN, 1)
    return t


def test_admissible_and_mutations():
    t = small_tree()
    assert check_admissible(t, cap=1).ok
    n = t.node("0")
    n.label = "fff"          # outside Labels_1 and below the parent
    rep = check_admissible(t, cap=1)
    assert not rep.ok
    n.label = L.TOP
    n.scope = 0
    assert not check_admissible(t, cap=1).ok
    n.scope = 1
    t.add_child("1", "10", 1, L.TOP, SECONDARY, 2)   # secondary must lower the label
    rep = check_admissible(t, depth=2, cap=1)
    assert any("secondary child label" in v for v in rep.violations)


def test_one_main_child_is_rejected():
    t = LabeledTree("", 1, L.TOP)
    t.add_child("", "0", 1, L.TOP, MAIN, 1)
    assert any("main children" in v for v in check_admissible(t, cap=1).violations)


def test_add_child_guards():
    t = small_tree()
    with pytest.raises(ValueError):
        t.add_child("0", "0", 1, L.TOP, MAIN, 2)
    with pytest.raises(ValueError):
        t.add_child("0", "1", 1, L.TOP, MAIN, 2)


def test_base_tree_view():
    b = BaseTree()
    assert b.children("", 0) == []
    assert b.children("", 1) == ["0", "1"]
    assert b.children("1", 2) == []
    assert b.children("1", 3) == ["100", "111"]
    assert b.scope("100") == 2 and b.label("100") == L.TOP
    assert b.get("10") is None and b.get("101") is None
    assert b.next_change(3) == 7 and b.next_change(6) == 7
    b.advance(15)
    assert check_admissible(b).ok


def test_restriction_and_relabeling():
    t = LabeledTree("", 1, L.TOP)
    t.add_child("", "0", 2, L.TOP, MAIN, 1)
    t.add_child("", "1", 2, L.TOP, MAIN, 1)
    t.add_child("0", "000", 2, "ff", SECONDARY, 3)
    t.add_child("0", "011", 2, "i", SECONDARY, 3)
    gt = restrict(t, "0", "gt", "f")
    assert gt.children("0") == ["000"] and gt.get("011") is None
    assert restrict(t, "0", "ge", "i").children("0") == ["000", "011"]
    r = RelabeledTree(t, "0")
    assert r.label("0") == L.TOP and r.scope("0") == 1
    assert r.label("000") == "f" and r.scope("000") == 1
    assert r.get("011") is None
    with pytest.raises(ValueError):
        RelabeledTree(t, "000")


def test_dot_has_every_node():
    t = small_tree()
    d = to_dot(t)
    assert d.startswith('digraph "T"') and '"root" -> "0"' in d and '"root" -> "1"' in d


def test_levels_and_paths():
    t = small_tree()
    t.add_child("0", "00", 1, "f", SECONDARY, 2)
    assert t.levels() == [[""], ["0", "1"], ["00"]]
    assert t.path("00") == ["", "0", "00"]
    assert t.children("0", 1) == [] and t.children("0", 2) == ["00"]
    assert t.next_change(1) == 2
