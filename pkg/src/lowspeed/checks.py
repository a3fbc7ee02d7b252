"""Structural checks on trees written by the splitting procedure.

Each check returns a :class:`Report` and inspects only what has been emitted
(emitted levels never change).  Checks needing computations evaluate the
procedure's functional on the emitted nodes at their emission stage.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import _kernels
from . import labels as L
from .labeled_tree import (MAIN, ROOT, SECONDARY, Report, Schedule, TreeBase, check_admissible)
from .procedure import ProcedureState


def _levels(tree: TreeBase) -> list[list[str]]:
    return tree.levels()


def expansionary_ancestors(tree: TreeBase, schedule: Schedule) -> Report:
    """Nodes at level ``e_{n+1}`` have an ``n``-expansionary predecessor, and
    every node in strip ``t`` has scope ``t-1`` or ``t``."""
    rep = Report("expansionary")
    lv = _levels(tree)
    depth = len(lv) - 1
    for lvl, nodes in enumerate(lv):
        t = schedule.strip(lvl)
        for v in nodes:
            rep.checked += 1
            sc = tree.scope(v)
            if sc not in (t - 1, t):
                rep.add(f"{v!r} at level {lvl} (strip {t}) has scope {sc}")
    n = 1
    while schedule.level(n + 1) <= depth:
        target = schedule.level(n + 1)
        for v in lv[target]:
            rep.checked += 1
            if not any(_is_n_expansionary(tree, u, n) for u in tree.path(v)):
                rep.add(f"{v!r} at level {target} has no {n}-expansionary predecessor")
        if n == 1:
            rep.notes.append("n=1 is witnessed by the root, which has scope 1")
        n += 1
    if n == 1:
        rep.notes.append(f"vacuous: depth {depth} does not reach e_2 = {schedule.level(2)}")
    return rep


def _is_n_expansionary(tree: TreeBase, v: str, n: int) -> bool:
    node = tree.node(v)
    if node.scope != n:
        return False
    if node.kind == ROOT or v == tree.root:
        return True
    return node.scope > tree.scope(node.parent)


def _row_matrix(F, nodes, stage_of):
    if not nodes:
        return np.zeros((0, len(F.domain)), dtype=np.int64)
    return np.stack([F.row(v, stage_of(v)) for v in nodes])


def splits_or_down(tree: TreeBase, F) -> Report:
    """Children of distinct nodes on a level: both main means they split;
    otherwise a secondary one keeps the scope and lowers the label.  The two
    main children of one node split as well."""
    rep = Report("splits-or-down")
    lv = _levels(tree)
    for lvl in range(len(lv) - 1):
        kids = lv[lvl + 1]
        mains = [c for c in kids if tree.node(c).kind == MAIN]
        for c in kids:
            cn = tree.node(c)
            if cn.kind == SECONDARY:
                rep.checked += 1
                pn = tree.node(cn.parent)
                if cn.scope != pn.scope or not L.lt(cn.label, pn.label):
                    rep.add(f"secondary {c!r}: scope {cn.scope}/{pn.scope}, "
                            f"label {cn.label!r} vs {pn.label!r}")
        if len(mains) < 2:
            continue
        V = _row_matrix(F, mains, tree.created_at)
        parents = {p: i for i, p in enumerate(sorted({tree.node(c).parent for c in mains}))}
        group = np.array([parents[tree.node(c).parent] for c in mains], dtype=np.int64)
        count, bad = _kernels.nonsplit_pairs(V, group, None, limit=8)
        rep.checked += len(mains) * (len(mains) - 1) // 2
        for i, j in bad:
            rep.add(f"main children {mains[i]!r} and {mains[j]!r} do not split")
        if count > len(bad):
            rep.add(f"... {count - len(bad)} more non-splitting main pairs at level {lvl + 1}")
        for p in parents:
            pm = [c for c in tree.children(p) if tree.node(c).kind == MAIN]
            if len(pm) == 2:
                a, b = (F.row(c, tree.created_at(c)) for c in pm)
                if _kernels.split_witness(a, b) < 0:
                    rep.add(f"main children of {p!r} do not split")
    return rep


def branches_split(tree: TreeBase, F, schedule: Schedule) -> Report:
    """Maximal branches of the emitted tree e-split.

    Three parts: the literal statement between consecutive expansionary
    levels; all pairs of deepest-level nodes whose branches take a main step
    together after diverging; and the per-strip step counts the argument
    relies on (at most one scope increase, at most ``|Labels_j| - 1`` label
    drops at scope ``j``).  Computations along each edge must also extend the
    parent's.
    """
    rep = Report("branches-split")
    lv = _levels(tree)
    depth = len(lv) - 1
    stage = tree.created_at

    # literal statement between consecutive expansionary levels
    n = 1
    literal = 0
    while schedule.level(n + 1) <= depth:
        lo, hi = schedule.level(n), schedule.level(n + 1)
        base = {v: i for i, v in enumerate(lv[lo])}
        if len(base) >= 2:
            top = lv[hi]
            group = np.array([base[_ancestor_at(tree, v, lo)] for v in top], dtype=np.int64)
            count, bad = _kernels.nonsplit_pairs(_row_matrix(F, top, stage), group, None, limit=8)
            literal += len(top) * (len(top) - 1) // 2
            for i, j in bad:
                rep.add(f"{top[i]!r} and {top[j]!r} (levels {lo}->{hi}) do not split")
        n += 1
    rep.checked += literal
    if literal == 0:
        rep.notes.append("literal form vacuous: no expansionary level pair with two base nodes")

    # computations are monotone along edges
    for nodes in lv[1:]:
        for v in nodes:
            rep.checked += 1
            a = F.row(tree.parent(v), stage(tree.parent(v)))
            b = F.row(v, stage(v))
            if np.any((a != _kernels.UNDEF) & (a != b)):
                rep.add(f"computations along {v!r} do not extend its parent's")

    # deepest level, pairs with a shared main step after divergence
    if depth >= 1:
        top = lv[depth]
        anc = np.zeros((len(top), depth + 1), dtype=np.int64)
        main = np.zeros((len(top), depth + 1), dtype=np.bool_)
        ids: dict[str, int] = {}
        for r, v in enumerate(top):
            path = tree.path(v)
            for l, u in enumerate(path):
                anc[r, l] = ids.setdefault(u, len(ids))
                if l:
                    main[r, l] = tree.node(u).kind == MAIN
        count, covered, bad = _kernels.lifted_nonsplit(_row_matrix(F, top, stage), anc, main, 8)
        rep.checked += covered
        rep.notes.append(f"{covered} deepest-level pairs share a main step")
        for i, j in bad:
            rep.add(f"branches to {top[i]!r} and {top[j]!r} do not split")
        if count > len(bad):
            rep.add(f"... {count - len(bad)} more non-splitting branch pairs")

    # step counts per strip
    for v in (lv[depth] if depth >= 1 else []):
        path = tree.path(v)
        ups: dict[int, int] = {}
        drops: dict[tuple[int, int], int] = {}
        for l in range(1, len(path)):
            a, b = tree.node(path[l - 1]), tree.node(path[l])
            t = schedule.strip(l - 1)
            if b.scope > a.scope:
                ups[t] = ups.get(t, 0) + 1
            elif L.lt(b.label, a.label):
                drops[(t, b.scope)] = drops.get((t, b.scope), 0) + 1
        rep.checked += 1
        for t, k in ups.items():
            if k > 1:
                rep.add(f"branch to {v!r}: {k} scope increases in strip {t}")
        for (t, j), k in drops.items():
            if k > len(L.labels_n(j)) - 1:
                rep.add(f"branch to {v!r}: {k} label drops at scope {j} in strip {t}")
    return rep


def _ancestor_at(tree: TreeBase, v: str, level: int) -> str:
    return tree.path(v)[level]


def _host_min(host: TreeBase, top: str, v: str) -> str:
    """Least host label on the host path from ``top`` (exclusive) to ``v``."""
    m = L.TOP
    u = v
    while u != top:
        n = host.node(u)
        m = L.label_min(m, n.label)
        u = n.parent
    return m


def label_projection(tree: TreeBase, host: TreeBase) -> Report:
    """Labels above ``eta`` on the tree lie above ``inf.eta`` on the host.

    For every tree node ``sigma`` with host label top and every descendant
    ``sigma*``, with ``m`` the least tree label on ``(sigma, sigma*]`` and
    ``h`` the least host label on the host path: ``m > eta`` forces
    ``h > i+eta``, and ``m >= eta`` forces ``h >= i+eta``, for every label
    ``eta`` other than top up to the largest scope in play.
    """
    rep = Report("label-projection")
    lv = _levels(tree)
    nodes = [v for lvl in lv for v in lvl]
    max_scope = max((tree.scope(v) for v in nodes), default=1)
    etas = [x for x in L.labels_n(max_scope + 1) if x != L.TOP]
    edge_min = {v: _host_min(host, tree.parent(v), v) for v in nodes if v != tree.root}
    memo: dict[tuple[str, str], Optional[str]] = {}

    def verdict(m: str, h: str) -> Optional[str]:
        key = (m, h)
        if key not in memo:
            memo[key] = None
            for eta in etas:
                ie = L.INF + eta
                if L.lt(eta, m) and not L.lt(ie, h):
                    memo[key] = f"tree min {m!r} > {eta!r} but host min {h!r} is not > {ie!r}"
                    break
                if L.le(eta, m) and not L.le(ie, h):
                    memo[key] = f"tree min {m!r} >= {eta!r} but host min {h!r} is not >= {ie!r}"
                    break
        return memo[key]

    for s in nodes:
        if host.label(s) != L.TOP:
            continue
        stack = [(c, tree.label(c), edge_min[c]) for c in tree.children(s)]
        while stack:
            v, m, h = stack.pop()
            rep.checked += 1
            msg = verdict(m, h)
            if msg:
                rep.add(f"{s!r} -> {v!r}: {msg}")
            for c in tree.children(v):
                stack.append((c, L.label_min(m, tree.label(c)), L.label_min(h, edge_min[c])))
    rep.notes.append(f"{len(memo)} distinct (tree, host) label pairs")
    return rep


def procedure_checks(st: ProcedureState) -> list[Report]:
    """All checks for one procedure's emitted tree."""
    tree, sched = st.out, st.opts.schedule
    return [
        expansionary_ancestors(tree, sched),
        splits_or_down(tree, st.F),
        branches_split(tree, st.F, sched),
        label_projection(tree, st.host),
        check_admissible(tree),
    ]
