"""The ambient block-coded tree: block ``i`` has ``2**(i-1)`` equal bits."""

from __future__ import annotations

from functools import lru_cache
from itertools import product


class NotABoundary(ValueError):
    pass


def block_bounds(k: int) -> tuple[int, int]:
    """Half-open position range of block ``k`` (1-indexed)."""
    return (1 << (k - 1)) - 1, (1 << k) - 1


def boundary_level(n: int) -> int | None:
    """``k`` if ``n == 2**k - 1``, else ``None``."""
    k = (n + 1).bit_length() - 1
    return k if (1 << k) - 1 == n else None


def blocks_touched(n: int) -> int:
    """Number of (possibly partial) blocks covering a string of length ``n``."""
    return n.bit_length()


@lru_cache(maxsize=1 << 16)
def contains(sigma: str) -> bool:
    n = len(sigma)
    k = 1
    while True:
        lo, hi = block_bounds(k)
        if lo >= n:
            return True
        part = sigma[lo:min(hi, n)]
        if part.count(part[0]) != len(part):
            return False
        k += 1


def block_count(sigma: str) -> int:
    """Number of complete blocks; equals the level of a boundary node."""
    return (len(sigma) + 1).bit_length() - 1


def structural_children(sigma: str) -> list[str]:
    k = boundary_level(len(sigma))
    if k is None:
        raise NotABoundary(f"length {len(sigma)} is not of the form 2^k - 1")
    w = 1 << k
    return [sigma + "0" * w, sigma + "1" * w]


def member_children(sigma: str) -> list[str]:
    """One-bit extensions of a member that are members again."""
    if boundary_level(len(sigma)) is not None:
        return [sigma + "0", sigma + "1"]
    return [sigma + sigma[-1]]


def members_of_length(n: int) -> list[str]:
    out = []
    for bits in product("01", repeat=blocks_touched(n)):
        s = "".join(b * (1 << i) for i, b in enumerate(bits))[:n]
        out.append(s)
    return sorted(out)


def boundary_nodes(level: int) -> list[str]:
    return members_of_length((1 << level) - 1)


def members_below(max_len: int) -> list[str]:
    """All members with length ``< max_len``, by length then lexicographic."""
    out = []
    for n in range(max_len):
        out.extend(members_of_length(n))
    return out


def as_admissible_root(depth: int):
    """The base tree through ``depth`` block levels as a labeled tree."""
    from .labeled_tree import BaseTree
    tree = BaseTree()
    tree.advance((1 << depth) - 1)
    return tree
