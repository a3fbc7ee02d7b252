"""Outcome labels and guess strings.

Labels are plain strings over ``{"T", "f", "i"}``: ``"T"`` is the top label,
``"i"`` stands for the infinitary outcome, ``"f"`` for a finitary one and
``""`` is the empty label.
"""

from __future__ import annotations

from functools import cmp_to_key
from itertools import product
from typing import Iterable, Sequence

TOP = "T"
INF = "i"
FIN = "f"
EMPTY = ""

# Outcome entry for the infinitary outcome; finitary entries are nodes (0/1 strings).
INFTY = "inf"

_RANK = {INF: 1, FIN: 2}


class LabelError(ValueError):
    pass


def is_label(x: str) -> bool:
    return x == TOP or all(c in _RANK for c in x)


def label_key(a: str) -> tuple:
    if a == TOP:
        return (3,)
    try:
        return tuple(_RANK[c] for c in a)
    except KeyError:
        raise LabelError(f"not a label: {a!r}") from None


def label_cmp(a: str, b: str) -> int:
    """Return -1, 0 or 1; end-of-string < ``i`` < ``f``, ``T`` greatest."""
    ka, kb = label_key(a), label_key(b)
    return (ka > kb) - (ka < kb)


def lt(a: str, b: str) -> bool:
    return label_key(a) < label_key(b)


def le(a: str, b: str) -> bool:
    return label_key(a) <= label_key(b)


def label_min(a: str, b: str) -> str:
    return a if le(a, b) else b


def labels_n(n: int) -> list[str]:
    """All of Labels_n in increasing order."""
    out = [TOP]
    for k in range(n + 1):
        out.extend("".join(p) for p in product((FIN, INF), repeat=k))
    return sorted(out, key=label_key)


def in_labels_n(a: str, n: int) -> bool:
    return a == TOP or (is_label(a) and len(a) <= n)


def pred_n(eta: str, n: int) -> str:
    """Immediate predecessor of ``eta`` inside Labels_n."""
    if not in_labels_n(eta, n):
        raise LabelError(f"{eta!r} is outside Labels_{n}")
    if eta == EMPTY:
        raise LabelError("the empty label has no predecessor")
    if eta == TOP:
        return FIN * n
    if eta[-1] == INF:
        return eta[:-1]
    return eta[:-1] + INF + FIN * (n - len(eta))


def greatest_below(m: str, n: int) -> str:
    """Greatest element of Labels_n that is <= ``m`` (``m`` any label)."""
    if m == TOP or len(m) <= n:
        return m
    return m[:n]


def drop_first(eta: str) -> str:
    """Relabeling used for finitary restrictions: ``T -> T`` and ``f+x -> x``."""
    if eta == TOP:
        return TOP
    if not eta or eta[0] != FIN:
        raise LabelError(f"label {eta!r} does not begin with f")
    return eta[1:]


# -- outcome strings ---------------------------------------------------------

def m_entries(nu: Sequence[str]) -> list[str]:
    return [nu[i] for i in range(0, len(nu), 3)]


def delta(nu: Sequence[str]) -> str:
    """Guess string of the M-entries: INFTY -> ``i``, any node -> ``f``."""
    return "".join(INF if x == INFTY else FIN for x in m_entries(nu))


def delta_gt(e: int, nu: Sequence[str]) -> str:
    return delta(nu)[e + 1:]


def guess_lt(a: str, b: str) -> bool:
    """Strict lexicographic order on guess strings with ``i < f``."""
    if a == TOP or b == TOP:
        raise LabelError("guess strings never contain T")
    return lt(a, b)


def watches(nu1: Sequence[str], nu2: Sequence[str]) -> bool:
    """L-instance guessing ``nu1`` watches the one guessing ``nu2``."""
    return guess_lt(delta(nu1), delta(nu2))


def requirement_index(kind: str, e: int) -> int:
    return 3 * e + {"M": 0, "L": 1, "P": 2}[kind]


def outcome_of(nu: Sequence[str], kind: str, e: int) -> str:
    return nu[requirement_index(kind, e)]


def check_outcomes(nu: Iterable[str]) -> None:
    for i, x in enumerate(nu):
        if i % 3 == 2 and x == INFTY:
            raise LabelError(f"P-entry {i} cannot be infinitary")
        if x != INFTY and any(c not in "01" for c in x):
            raise LabelError(f"entry {i} is neither INFTY nor a node: {x!r}")


def sorted_labels(xs: Iterable[str]) -> list[str]:
    return sorted(xs, key=cmp_to_key(label_cmp))


def render(eta: str) -> str:
    """Pretty form for DOT/report output."""
    if eta == TOP:
        return "⊤"
    if eta == EMPTY:
        return "∅"
    return eta.replace(INF, "∞")
