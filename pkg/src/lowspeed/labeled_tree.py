"""Labeled trees, restriction views, expansionary schedules and admissibility.

Every tree exposes the same small read interface (``root``, ``get``,
``children``, ``label``, ``scope``, ``created_at``, ``determined_through``) so
that procedures, the simulation and the checkers do not care whether they
are looking at the base tree, a procedure output, a restriction or a
relabeled restriction.  ``stage`` arguments select the historical view made
of nodes whose ``created_at`` is at most that stage; ``None`` means
everything built so far.
"""

from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, NamedTuple, Optional, Sequence

from . import labels as L
from .base_tree import block_count, structural_children

ROOT, MAIN, SECONDARY = "root", "main", "secondary"
GROWING, STUCK, SEALED = "growing", "stuck", "sealed-at-budget"
INFINITE_STAGE = 1 << 62


class NodeAbsent(KeyError):
    pass


class Waiting(NamedTuple):
    star: str
    star2: str
    declared_at: int


@dataclass
class LabeledNode:
    value: str
    level: int
    scope: int
    label: str
    kind: str
    created_at: int
    parent: Optional[str] = None
    children: list = field(default_factory=list)
    waiting: Optional[Waiting] = None

    def as_row(self) -> str:
        return f"{self.value}|{self.scope}|{self.label or '-'}|{self.kind}"


def is_expansionary(node: LabeledNode, parent: LabeledNode) -> bool:
    return node.scope > parent.scope


# -- expansionary schedules --------------------------------------------------

class ScheduleError(ValueError):
    pass


def min_gap(i: int) -> int:
    """Smallest admissible ``e_{i+1} - e_i``."""
    return len(L.labels_n(i - 1)) + len(L.labels_n(i)) + 2 if i >= 1 else 1


class Schedule:
    """Expansionary levels ``e_1 < e_2 < ...``.

    ``kind="paper"`` uses gaps ``2**(i+5)``; ``kind="compact"`` uses the
    smallest gaps the counting argument tolerates.  An explicit ``levels``
    list overrides the first entries; later levels continue with compact gaps.
    """

    def __init__(self, kind: str = "paper", levels: Sequence[int] | None = None):
        if kind not in ("paper", "compact", "custom"):
            raise ScheduleError(f"unknown schedule {kind!r}")
        self.kind = kind
        self.explicit = list(levels) if levels is not None else []
        if self.explicit:
            self.kind = "custom" if kind == "paper" else kind
            validate_schedule(self.explicit)
        self._cache: list[int] = []

    def gap(self, i: int) -> int:
        return (1 << (i + 5)) if self.kind == "paper" else min_gap(i)

    def level(self, i: int) -> int:
        if i < 1:
            raise ScheduleError("expansionary levels are indexed from 1")
        if i <= len(self.explicit):
            return self.explicit[i - 1]
        while len(self._cache) < i:
            j = len(self._cache) + 1
            if j <= len(self.explicit):
                self._cache.append(self.explicit[j - 1])
            elif j == 1:
                self._cache.append(0)
            else:
                self._cache.append(self._cache[-1] + self.gap(j - 1))
        return self._cache[i - 1]

    def strip(self, n: int) -> int:
        """The ``t`` with ``e_t <= n < e_{t+1}``."""
        t = 1
        while self.level(t + 1) <= n:
            t += 1
        return t

    def levels_upto(self, depth: int) -> list[int]:
        out, i = [], 1
        while self.level(i) <= depth:
            out.append(self.level(i))
            i += 1
        return out

    def to_json(self):
        return {"kind": self.kind, "levels": self.explicit} if self.explicit else {"kind": self.kind}

    def __eq__(self, other):
        return isinstance(other, Schedule) and self.to_json() == other.to_json()

    def __repr__(self):
        return f"Schedule({self.kind!r}, {[self.level(i) for i in range(1, 5)]})"


def validate_schedule(levels: Sequence[int]) -> None:
    if not levels or levels[0] != 0:
        raise ScheduleError("the first expansionary level must be 0")
    for i in range(1, len(levels)):
        gap = levels[i] - levels[i - 1]
        need = len(L.labels_n(i - 1)) + len(L.labels_n(i)) + 1
        if gap <= need:
            raise ScheduleError(
                f"e_{i + 1} - e_{i} = {gap} must exceed |Labels_{i - 1}| + |Labels_{i}| + 1 = {need}")


PAPER = Schedule("paper")
COMPACT = Schedule("compact")


def expansionary_level(i: int, schedule: Schedule = PAPER) -> int:
    return schedule.level(i)


def strip_of_level(n: int, schedule: Schedule = PAPER) -> int:
    return schedule.strip(n)


# -- tree interface ----------------------------------------------------------

class TreeBase:
    root: str = ""
    status: str = GROWING
    provenance: str = ""

    def get(self, v: str) -> Optional[LabeledNode]:
        raise NotImplementedError

    def children(self, v: str, stage: Optional[int] = None) -> list[str]:
        raise NotImplementedError

    def determined_through(self, length: int, stage: int) -> bool:
        raise NotImplementedError

    def scope_cap(self, depth: int) -> int:
        return 1

    def next_change(self, stage: int) -> int:
        """Least stage after ``stage`` whose view may differ from it."""
        return stage + 1

    # derived helpers

    def node(self, v: str) -> LabeledNode:
        n = self.get(v)
        if n is None:
            raise NodeAbsent(v)
        return n

    def has(self, v: str, stage: Optional[int] = None) -> bool:
        n = self.get(v)
        return n is not None and (stage is None or n.created_at <= stage)

    def label(self, v: str) -> str:
        return self.node(v).label

    def scope(self, v: str) -> int:
        return self.node(v).scope

    def created_at(self, v: str) -> int:
        return self.node(v).created_at

    def parent(self, v: str) -> Optional[str]:
        return self.node(v).parent

    def path(self, v: str) -> list[str]:
        """Nodes from the root down to ``v`` inclusive."""
        out = [v]
        while out[-1] != self.root:
            p = self.parent(out[-1])
            if p is None:
                raise NodeAbsent(v)
            out.append(p)
        return out[::-1]

    def nodes(self, stage: Optional[int] = None, start: Optional[str] = None,
              max_len: Optional[int] = None) -> Iterator[str]:
        """Breadth-first from ``start`` (default root)."""
        q = deque([self.root if start is None else start])
        while q:
            v = q.popleft()
            yield v
            for c in self.children(v, stage):
                if max_len is None or len(c) <= max_len:
                    q.append(c)

    def leaves(self, stage: Optional[int] = None, start: Optional[str] = None) -> list[str]:
        return [v for v in self.nodes(stage, start) if not self.children(v, stage)]

    def levels(self, stage: Optional[int] = None) -> list[list[str]]:
        out = [[self.root]]
        while True:
            nxt = [c for v in out[-1] for c in self.children(v, stage)]
            if not nxt:
                return out
            out.append(nxt)

    def depth(self, stage: Optional[int] = None) -> int:
        """Index of the deepest level every branch reaches."""
        d, frontier = 0, [self.root]
        while frontier:
            nxt = []
            for v in frontier:
                cs = self.children(v, stage)
                if not cs:
                    return d
                nxt.extend(cs)
            frontier = nxt
            d += 1
        return d

    def main_children(self, v: str, stage: Optional[int] = None) -> list[str]:
        return [c for c in self.children(v, stage) if self.node(c).kind == MAIN]

    def on_tree(self, v: str, stage: Optional[int] = None) -> bool:
        return self.has(v, stage)


# -- explicit trees ----------------------------------------------------------

class LabeledTree(TreeBase):
    """Explicitly stored tree, written by one procedure."""

    def __init__(self, root: str, scope: int = 1, label: str = L.TOP, created_at: int = 0,
                 provenance: str = ""):
        self.root = root
        self.provenance = provenance
        self.status = GROWING
        self._nodes: dict[str, LabeledNode] = {
            root: LabeledNode(root, 0, scope, label, ROOT, created_at)}
        self._leaves: set[str] = {root}
        self._sorted_leaves: Optional[list[str]] = None
        self._created: list[int] = [created_at]
        # stages after this one may still add nodes; None means never
        self.complete_through: Optional[int] = None

    def get(self, v):
        return self._nodes.get(v)

    def children(self, v, stage=None):
        n = self._nodes.get(v)
        if n is None:
            return []
        if stage is None:
            return list(n.children)
        return [c for c in n.children if self._nodes[c].created_at <= stage]

    def add_child(self, parent: str, value: str, scope: int, label: str, kind: str,
                  created_at: int) -> LabeledNode:
        p = self._nodes[parent]
        if value in self._nodes:
            raise ValueError(f"duplicate node {value}")
        if not value.startswith(parent) or value == parent:
            raise ValueError(f"{value} does not properly extend {parent}")
        node = LabeledNode(value, p.level + 1, scope, label, kind, created_at, parent)
        self._nodes[value] = node
        p.children.append(value)
        p.children.sort()
        self._leaves.discard(parent)
        self._leaves.add(value)
        self._sorted_leaves = None
        if created_at > self._created[-1]:
            self._created.append(created_at)
        elif created_at < self._created[-1]:
            bisect.insort(self._created, created_at)
        return node

    def next_change(self, stage):
        i = bisect.bisect_right(self._created, stage)
        nxt = self._created[i] if i < len(self._created) else INFINITE_STAGE
        if self.complete_through is not None:
            nxt = min(nxt, max(stage, self.complete_through) + 1)
        return nxt

    def current_leaves(self) -> list[str]:
        """Leaves in lex order; the list is shared, do not mutate it."""
        if self._sorted_leaves is None:
            self._sorted_leaves = sorted(self._leaves)
        return self._sorted_leaves

    def determined_through(self, length, stage):
        # later nodes extend current leaves, so lengths up to the shortest
        # leaf in view are final
        for v in self.leaves(stage):
            if len(v) < length:
                return False
        return True

    def all_nodes(self) -> list[LabeledNode]:
        return list(self._nodes.values())

    def __len__(self):
        return len(self._nodes)


class BaseTree(TreeBase):
    """Block boundaries of the ambient tree; all labels top, scope = block count.

    A boundary node of length ``n`` is in the view at stage ``s`` when
    ``n <= s``.  Nodes are created on first access; ``advance`` only moves
    the horizon used when no stage is given.
    """

    def __init__(self):
        self.root = ""
        self.provenance = "base"
        self.status = GROWING
        self._nodes: dict[str, LabeledNode] = {"": LabeledNode("", 0, 0, L.TOP, ROOT, 0)}
        self._horizon = 0

    def advance(self, stage: int) -> None:
        self._horizon = max(self._horizon, stage)

    @property
    def horizon(self) -> int:
        return self._horizon

    def get(self, v):
        n = self._nodes.get(v)
        if n is not None:
            return n
        from .base_tree import boundary_level, contains
        k = boundary_level(len(v))
        if not v or k is None or not contains(v):
            return None
        parent = v[: (1 << (k - 1)) - 1]
        n = LabeledNode(v, k, k, L.TOP, MAIN, len(v), parent)
        self._nodes[v] = n
        return n

    def children(self, v, stage=None):
        limit = self._horizon if stage is None else stage
        if self.get(v) is None:
            return []
        kids = structural_children(v)
        if len(kids[0]) > limit:
            return []
        for c in kids:
            self.get(c)
        return kids

    def parent(self, v):
        return self.node(v).parent

    def determined_through(self, length, stage):
        return stage >= length

    def next_change(self, stage):
        # boundary lengths are 2^k - 1
        return (1 << (stage + 1).bit_length()) - 1

    def scope_cap(self, depth):
        return depth


# -- restrictions ------------------------------------------------------------

def _pred(kind: str, eta: str = "") -> Callable[[LabeledNode], bool]:
    if kind == "gt":
        k = L.label_key(eta)
        return lambda n: L.label_key(n.label) > k
    if kind == "ge":
        k = L.label_key(eta)
        return lambda n: L.label_key(n.label) >= k
    if kind == "main":
        return lambda n: n.kind == MAIN
    raise ValueError(f"unknown restriction {kind!r}")


class RestrictedView(TreeBase):
    """``tree`` above ``tau``, keeping children whose node satisfies the predicate."""

    def __init__(self, tree: TreeBase, tau: str, kind: str, eta: str = ""):
        if tree.get(tau) is None:
            raise NodeAbsent(tau)
        self.tree = tree
        self.root = tau
        self.kind, self.eta = kind, eta
        self.keep = _pred(kind, eta)
        self.provenance = f"{tree.provenance}|{tau}|{kind}{eta}"

    @property
    def status(self):
        return self.tree.status

    def get(self, v):
        n = self.tree.get(v)
        if n is None or not v.startswith(self.root):
            return None
        # walk up to the root checking the predicate
        u = n
        while u.value != self.root:
            if not self.keep(u):
                return None
            u = self.tree.get(u.parent)
            if u is None:
                return None
        return n

    def children(self, v, stage=None):
        return [c for c in self.tree.children(v, stage) if self.keep(self.tree.node(c))]

    def parent(self, v):
        return None if v == self.root else self.tree.parent(v)

    def determined_through(self, length, stage):
        return self.tree.determined_through(length, stage)

    def next_change(self, stage):
        return self.tree.next_change(stage)


def restrict(tree: TreeBase, tau: str, pred: str, eta: str = "") -> RestrictedView:
    """``pred`` is ``"gt"`` (label above ``eta``), ``"ge"`` or ``"main"``."""
    return RestrictedView(tree, tau, pred, eta)


class RelabeledTree(TreeBase):
    """``parent`` above ``sigma`` restricted to labels above ``f``, relabeled.

    The root gets scope 1 and label top; elsewhere top stays top, ``f+x``
    becomes ``x`` and scope drops by one (never below 1).
    """

    def __init__(self, parent: TreeBase, sigma: str, provenance: str = ""):
        pn = parent.get(sigma)
        if pn is None:
            raise NodeAbsent(sigma)
        if pn.label != L.TOP:
            raise ValueError(f"relabeling root {sigma!r} must carry the top label")
        self.parent_tree = parent
        self.view = RestrictedView(parent, sigma, "gt", L.FIN)
        self.root = sigma
        self.provenance = provenance or f"{parent.provenance}>{sigma}"
        self._cache: dict[str, LabeledNode] = {}

    @property
    def status(self):
        return self.parent_tree.status

    def _wrap(self, n: LabeledNode) -> LabeledNode:
        w = self._cache.get(n.value)
        if w is not None:
            return w
        if n.value == self.root:
            w = LabeledNode(n.value, 0, 1, L.TOP, ROOT, n.created_at)
        else:
            lvl = n.level - self.parent_tree.node(self.root).level
            w = LabeledNode(n.value, lvl, max(1, n.scope - 1), L.drop_first(n.label), n.kind,
                            n.created_at, n.parent, waiting=n.waiting)
        self._cache[n.value] = w
        return w

    def get(self, v):
        n = self.view.get(v)
        return None if n is None else self._wrap(n)

    def children(self, v, stage=None):
        return self.view.children(v, stage)

    def parent(self, v):
        return None if v == self.root else self.parent_tree.parent(v)

    def determined_through(self, length, stage):
        return self.parent_tree.determined_through(length, stage)

    def next_change(self, stage):
        return self.parent_tree.next_change(stage)

    def scope_cap(self, depth):
        return max(1, self.parent_tree.scope_cap(depth) - 1)


# -- admissibility -----------------------------------------------------------

@dataclass
class Report:
    name: str
    violations: list = field(default_factory=list)
    checked: int = 0
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str) -> None:
        if len(self.violations) < 50:
            self.violations.append(msg)
        elif len(self.violations) == 50:
            self.violations.append("... further violations suppressed")

    def summary(self) -> str:
        state = "pass" if self.ok else "FAIL"
        return f"{self.name}: {state} ({self.checked} checked, {len(self.violations)} violations)"


def check_admissible(tree: TreeBase, depth: Optional[int] = None, stage: Optional[int] = None,
                     cap: Optional[int] = None) -> Report:
    """Bounded admissibility check on the built portion.

    ``cap`` bounds the scopes demanded of every root-to-leaf path; it defaults
    to the tree's own ``scope_cap`` at the built depth.
    """
    rep = Report("admissible")
    d = tree.depth(stage) if depth is None else depth
    if cap is None:
        cap = tree.scope_cap(d)
    root = tree.node(tree.root)
    if root.kind != ROOT and not isinstance(tree, RestrictedView):
        rep.add(f"root {tree.root!r} has kind {root.kind}")
    # best[v] = largest scope of a top-labeled node on the path to v
    best = {tree.root: root.scope if root.label == L.TOP else -1}
    q = deque([(tree.root, 0)])
    while q:
        v, lvl = q.popleft()
        n = tree.node(v)
        rep.checked += 1
        if not L.in_labels_n(n.label, n.scope):
            rep.add(f"{v!r}: label {n.label!r} not in Labels_{n.scope}")
        kids = tree.children(v, stage)
        if lvl >= d or not kids:
            if best[v] < cap:
                rep.add(f"path to {v!r} lacks a top-labeled node of scope >= {cap}")
            continue
        mains = [c for c in kids if tree.node(c).kind == MAIN]
        if len(mains) != 2:
            rep.add(f"{v!r}: {len(mains)} main children")
        for c in kids:
            cn = tree.node(c)
            if cn.kind == ROOT:
                rep.add(f"{c!r}: non-root node of kind root")
            if cn.scope < n.scope:
                rep.add(f"{c!r}: scope {cn.scope} below parent scope {n.scope}")
            if cn.kind == MAIN and L.lt(cn.label, n.label):
                rep.add(f"{c!r}: main child label {cn.label!r} below parent {n.label!r}")
            if cn.kind == SECONDARY and not L.lt(cn.label, n.label):
                rep.add(f"{c!r}: secondary child label {cn.label!r} not below parent {n.label!r}")
            for c2 in kids:
                if c2 > c and (c2.startswith(c) or c.startswith(c2)):
                    rep.add(f"children {c!r} and {c2!r} are comparable")
            best[c] = max(best[v], cn.scope if cn.label == L.TOP else -1)
            q.append((c, lvl + 1))
    return rep


# -- export ------------------------------------------------------------------

def to_dot(tree: TreeBase, stage: Optional[int] = None, name: str = "T") -> str:
    lines = [f'digraph "{name}" {{', "  node [shape=circle, fontsize=9];"]
    for v in tree.nodes(stage):
        n = tree.node(v)
        shape = "doublecircle" if n.waiting else "circle"
        style = ", style=dashed" if n.kind == SECONDARY else ""
        lines.append(f'  "{v or "root"}" [label="{n.as_row()}", shape={shape}{style}];')
        for c in tree.children(v, stage):
            lines.append(f'  "{v or "root"}" -> "{c}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
