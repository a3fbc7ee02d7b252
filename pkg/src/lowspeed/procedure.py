"""The stage-by-stage splitting-tree procedure.

Each call to :meth:`ProcedureState.step` performs one stage.  A stage either
searches for pairwise splitting extensions of all current leaves, or waits
for the host tree, or emits the next level once the host is final enough.
Costs are abstract counts (node inspections, axiom lookups, row compares)
so they do not depend on the kernel backend.
"""

from __future__ import annotations

import bisect
import heapq
from dataclasses import dataclass, field
from typing import Optional

from . import labels as L
import numpy as np

from . import _kernels
from .functionals import (Counter, FunctionalTable, SearchWindow, SplitAssignment, _dfs,
                          find_pairwise_splits)
from .labeled_tree import (COMPACT, GROWING, MAIN, PAPER, SEALED, SECONDARY, STUCK, LabeledTree,
                           Schedule, TreeBase, Waiting)

SEARCHING = "searching"
WAITING = "waiting-for-host"


class InvalidRoot(ValueError):
    pass


@dataclass
class StageRecord:
    stage: int
    phase: str
    leaves: int
    event: str
    cost: int

    def line(self) -> str:
        return f"{self.stage}\t{self.phase}\t{self.leaves}\t{self.event}\t{self.cost}"


@dataclass
class Options:
    schedule: Schedule = PAPER
    next_strip: bool = False  # use the strip of level n+1 in the expansion test
    incremental: bool = True  # reuse candidate lists across stages with the same view


class ProcedureState:
    def __init__(self, e: int, F: FunctionalTable, host: TreeBase, rho: str,
                 options: Options | None = None, provenance: str = ""):
        hn = host.get(rho)
        if hn is None or hn.label != L.TOP:
            raise InvalidRoot(f"root {rho!r} must be a top-labeled node of the host")
        self.e = e
        self.F = F
        self.host = host
        self.rho = rho
        self.opts = options or Options()
        start = hn.created_at
        self.out = LabeledTree(rho, 1, L.TOP, created_at=start, provenance=provenance)
        self.stage = start
        self.phase = SEARCHING
        self.level = 0
        self.pending: Optional[SplitAssignment] = None
        self.declared_at: Optional[int] = None
        self.records: list[StageRecord] = []
        self.emitted_at: list[int] = [start]
        self.failed_streak = 0
        self._replay: Optional[tuple[int, int]] = None  # (failed stage, cost)
        self._search = _SplitSearch(self)

    # -- stage --------------------------------------------------------------

    def step(self) -> StageRecord:
        self.stage += 1
        s = self.stage
        self.out.complete_through = s
        cost = Counter()
        if self.phase == WAITING:
            if self.host.determined_through(self.declared_at, s):
                leaves = self.out.current_leaves()
                n_new = self._emit(s, cost)
                event = f"emit level={self.level} nodes={n_new}"
                self.phase = SEARCHING
                rec = StageRecord(s, "emit", len(leaves), event, cost.total)
            else:
                cost.nodes += 1
                rec = StageRecord(s, WAITING, len(self.out.current_leaves()), "-", cost.total)
        elif self._replay_valid(s):
            # same view, same axioms and no window bound was hit: the search
            # would repeat the previous failure step for step
            self.failed_streak += 1
            rec = StageRecord(s, SEARCHING, len(self.out.current_leaves()), "-", self._replay[1])
        else:
            self._replay = None
            leaves = self.out.current_leaves()
            if self.opts.incremental:
                found, limited = self._search.run(leaves, s, s * (len(leaves) + 1), cost)
            else:
                window = SearchWindow(lambda lf: self._candidates(lf, s, cost, window), s,
                                      s * (len(leaves) + 1))
                found = find_pairwise_splits(self.F, leaves, window, cost)
                limited = window.limited
            if found is None:
                self.failed_streak += 1
                rec = StageRecord(s, SEARCHING, len(leaves), "-", cost.total)
                if not limited:
                    self._replay = (s, cost.total)
            else:
                self.failed_streak = 0
                self.pending = found
                self.declared_at = s
                for lf in leaves:
                    _, a, b = found.choice[lf]
                    self.out.node(lf).waiting = Waiting(a, b, s)
                self.phase = WAITING
                rec = StageRecord(s, "declare", len(leaves), f"length={found.length}", cost.total)
        self.records.append(rec)
        return rec

    def _replay_valid(self, s: int) -> bool:
        if self._replay is None:
            return False
        s0 = self._replay[0]
        nxt = self.F.next_step_after(s0)
        return self.host.next_change(s0) > s and (nxt is None or nxt > s)

    def run(self, budget: int) -> LabeledTree:
        while self.stage < budget:
            self.step()
        self.finish()
        return self.out

    def finish(self) -> None:
        # a display status only: searching for over half the stages run
        if self.phase == SEARCHING and 2 * self.failed_streak > self.stage - self.emitted_at[0]:
            self.out.status = STUCK
        else:
            self.out.status = SEALED

    # -- search window -------------------------------------------------------

    def _candidates(self, sigma: str, s: int, cost: Counter, window=None):
        """First ``s`` pairs ``(node, via)`` above ``sigma``, by length then lex.

        ``via`` ranges over top-labeled host nodes reached from ``sigma``
        through main children only (``sigma`` itself included), and ``node``
        must lie above ``via`` through labels strictly above ``f``.
        """
        host = self.host
        cost.nodes += 1
        out: list[tuple[str, str]] = []
        heap = [(len(c), c) for c in host.children(sigma, s)]
        heapq.heapify(heap)
        while heap and len(out) < s:
            _, x = heapq.heappop(heap)
            cost.nodes += 1
            for via in self._vias(sigma, x):
                out.append((x, via))
                if len(out) >= s:
                    break
            for c in host.children(x, s):
                heapq.heappush(heap, (len(c), c))
        if len(out) >= s and window is not None:
            window.limited = True
        return out

    def _vias(self, sigma: str, x: str) -> list[str]:
        host = self.host
        chain = []
        v = x
        while v != sigma:
            chain.append(host.node(v))
            v = host.node(v).parent
        chain.reverse()  # chain[k] is at depth k+1 above sigma; chain[-1] is x
        fk = L.label_key(L.FIN)
        # above_f[k]: every node in chain[k+1:] has a label strictly above f
        above_f = [True] * (len(chain) + 1)
        for k in range(len(chain) - 1, 0, -1):
            above_f[k - 1] = above_f[k] and L.label_key(chain[k].label) > fk
        vias = []
        if above_f[0] and L.label_key(chain[0].label) > fk and host.label(sigma) == L.TOP:
            vias.append(sigma)
        for k in range(len(chain) - 1):
            n = chain[k]
            if n.kind != MAIN:
                break
            if n.label == L.TOP and above_f[k]:
                vias.append(n.value)
        return vias

    # -- emission -------------------------------------------------------------

    def _expands(self, sigma_scope: int) -> bool:
        n = self.level + 1 if self.opts.next_strip else self.level
        t = self.opts.schedule.strip(n)
        # scopes rise by one at each expansionary node and the root counts as
        # 1-expansionary, so "no predecessor is t-expansionary" is scope < t
        return sigma_scope < t

    def _emit(self, s: int, cost: Counter) -> int:
        host = self.host
        count = 0
        sd = self.declared_at
        for sigma in self.out.current_leaves():
            node = self.out.node(sigma)
            w = node.waiting
            if self._expands(node.scope):
                mscope, mlabel = node.scope + 1, L.TOP
            else:
                mscope, mlabel = node.scope, node.label
            for c in (w.star, w.star2):
                self.out.add_child(sigma, c, mscope, mlabel, MAIN, s)
                count += 1
            if node.label == L.EMPTY:
                continue
            for dag, m in self._frontier(sigma, sd, cost):
                if dag.startswith(w.star) or dag.startswith(w.star2):
                    continue
                lab = secondary_label(node.label, node.scope, m)
                self.out.add_child(sigma, dag, node.scope, lab, SECONDARY, s)
                count += 1
        self.level += 1
        self.emitted_at.append(s)
        self.pending = None
        self._search.reset()
        return count

    def _frontier(self, sigma: str, s: int, cost: Counter):
        """Maximal nodes of host above ``sigma`` (labels above empty) in view at ``s``,
        each with the least host label on its path from ``sigma``."""
        host = self.host
        stack = [(c, host.label(c)) for c in host.children(sigma, s)]
        out = []
        while stack:
            v, m = stack.pop()
            cost.nodes += 1
            if not L.lt(L.EMPTY, host.label(v)):
                continue
            kids = [c for c in host.children(v, s) if L.lt(L.EMPTY, host.label(c))]
            if not kids:
                out.append((v, m))
            for c in kids:
                stack.append((c, L.label_min(m, host.label(c))))
        out.sort()
        return out


class _Group:
    __slots__ = ("members", "lo", "hi", "good")

    def __init__(self, width: int):
        self.members: list[str] = []
        self.lo = np.full(width, np.iinfo(np.int64).max, dtype=np.int64)
        self.hi = np.full(width, np.iinfo(np.int64).min, dtype=np.int64)
        self.good = False

    def add(self, n: str, r: np.ndarray) -> None:
        self.members.append(n)
        d = r != _kernels.UNDEF
        np.minimum(self.lo, np.where(d, r, self.lo), out=self.lo)
        np.maximum(self.hi, np.where(d, r, self.hi), out=self.hi)
        if not self.good and len(self.members) > 1:
            self.good = bool((self.lo < self.hi).any())


class _LeafEnum:
    """The candidate sequence above one leaf, extended on demand.

    The sequence only depends on the host view, so while that view does not
    change the list at stage ``s`` is the first ``s`` entries of one fixed
    sequence.
    """

    def __init__(self, proc: "ProcedureState", leaf: str, s: int):
        self.proc = proc
        self.leaf = leaf
        self.out: list[tuple[str, str]] = []
        self.heap = [(len(c), c) for c in proc.host.children(leaf, s)]
        heapq.heapify(self.heap)
        self.spill: list[tuple[str, str]] = []  # vias of the last node not yet listed
        self.groups: dict[int, dict[str, _Group]] = {}
        self.good: set[int] = set()
        self.lengths: list[int] = []

    def extend(self, target: int, s: int, row, cost: Counter) -> None:
        host = self.proc.host
        while len(self.out) < target:
            if self.spill:
                self._push(self.spill.pop(0), row)
                continue
            if not self.heap:
                break
            _, x = heapq.heappop(self.heap)
            cost.nodes += 1
            self.spill = [(x, v) for v in self.proc._vias(self.leaf, x)]
            for c in host.children(x, s):
                heapq.heappush(self.heap, (len(c), c))

    def _push(self, item, row) -> None:
        n, via = item
        self.out.append(item)
        l = len(n)
        by_via = self.groups.get(l)
        if by_via is None:
            by_via = self.groups[l] = {}
            bisect.insort(self.lengths, l)
        g = by_via.get(via)
        if g is None:
            g = by_via[via] = _Group(len(self.proc.F.domain))
        if n in g.members:
            return
        g.add(n, row(n))
        if g.good:
            self.good.add(l)


class _SplitSearch:
    """Incremental form of the pairwise split search with identical results."""

    def __init__(self, proc: "ProcedureState"):
        self.proc = proc
        self.reset()

    def reset(self) -> None:
        self.enums: dict[str, _LeafEnum] = {}
        self.rows: dict[str, np.ndarray] = {}
        self.built_at: Optional[int] = None
        self.dfs_failed: dict[int, tuple] = {}

    def _valid(self, s: int) -> bool:
        s0 = self.built_at
        if s0 is None:
            return False
        nxt = self.proc.F.next_step_after(s0)
        return self.proc.host.next_change(s0) > s and (nxt is None or nxt > s)

    def run(self, leaves, s: int, budget: int, cost: Counter):
        F = self.proc.F
        if not leaves or not F.domain:
            return None, False
        if not self._valid(s):
            self.reset()
            self.built_at = s
        width = len(F.domain)
        rows = self.rows

        def row(n):
            r = rows.get(n)
            if r is None:
                # the view and the axioms are unchanged since built_at
                r = rows[n] = F.row(n, s)
                cost.lookups += width
            return r

        limited = False

        def enum(lf):
            nonlocal limited
            E = self.enums.get(lf)
            if E is None:
                E = self.enums[lf] = _LeafEnum(self.proc, lf, s)
            E.extend(s, s, row, cost)
            if len(E.out) >= s:
                limited = True
            return E

        first = enum(leaves[0])
        for l in list(first.lengths):
            es = []
            for lf in leaves:
                E = enum(lf)
                cost.compares += 1
                if l not in E.good:
                    break
                es.append(E)
            else:
                sig = tuple(len(g.members) for E in es for g in E.groups[l].values())
                if self.dfs_failed.get(l) == sig:
                    continue
                per_leaf = [self._pairs(E, l, row, cost) for E in es]
                window = SearchWindow({}, s, budget)
                found = _dfs(leaves, per_leaf, row, width, window, cost)
                if found is not None:
                    return SplitAssignment(l, found), limited
                if window.limited:
                    limited = True
                else:
                    self.dfs_failed[l] = sig
        return None, limited

    @staticmethod
    def _pairs(E: _LeafEnum, l: int, row, cost: Counter):
        found: dict[tuple[str, str], str] = {}
        for via, g in E.groups[l].items():
            if not g.good:
                continue
            ms = sorted(g.members)
            for i, a in enumerate(ms):
                ra = row(a)
                for b in ms[i + 1:]:
                    if (a, b) in found:
                        continue
                    cost.compares += 1
                    if _kernels.split_witness(ra, row(b)) >= 0:
                        found[(a, b)] = via
        return [(a, b, v) for (a, b), v in sorted(found.items())]


def secondary_label(parent_label: str, n: int, path_min: str) -> str:
    """Label of a secondary child of a node with ``parent_label`` and scope ``n``.

    ``path_min`` is the least host label strictly above the parent up to the
    child; the greatest label of ``Labels_n`` below it decides the case.
    """
    eta = L.greatest_below(path_min, n)
    p = L.pred_n(parent_label, n)
    if eta == L.TOP or eta.startswith(L.FIN):
        return p
    return L.label_min(p, eta[1:])


def run_procedure(e: int, F: FunctionalTable, host: TreeBase, rho: str, budget: int,
                  options: Options | None = None) -> ProcedureState:
    st = ProcedureState(e, F, host, rho, options)
    st.run(budget)
    return st


def per_stage_cost(st: ProcedureState) -> list[int]:
    return [r.cost for r in st.records]
