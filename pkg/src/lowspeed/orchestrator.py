"""Tree family over outcome strings, true-path resolution and the set A.

Trees are keyed by outcome tuples.  The key of the tree for the ``e``-th
minimality requirement is the outcome string through the previous ``P`` entry
followed by that requirement's own outcome: ``INFTY`` selects the procedure
tree, a node ``sigma`` selects the relabeled restriction of the host at
``sigma``.  The empty key is the base tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import labels as L
from .functionals import FunctionalTable, we_prefix_check
from .labeled_tree import (BaseTree, RelabeledTree, Report, TreeBase, restrict)
from .procedure import InvalidRoot, Options, ProcedureState
from .scenario import Scenario

UNRESOLVED = "unresolved"


def key_e(key: tuple) -> int:
    return (len(key) - 1) // 3


def host_key(key: tuple) -> tuple:
    e = key_e(key)
    return key[: 3 * e - 2] if e > 0 else ()


def root_of(key: tuple) -> str:
    e = key_e(key)
    return key[3 * e - 1] if e > 0 else ""


def key_name(key: tuple) -> str:
    if not key:
        return "T_-1"
    return f"T_{key_e(key)}<" + ",".join("inf" if x == L.INFTY else (x or "()") for x in key) + ">"


class TreeFamily:
    """Lazily built, memoized trees.

    ``mode="lazy"`` runs each procedure to the budget when first requested
    (hosts first).  ``mode="lockstep"`` advances every procedure in
    :meth:`build_lockstep` one stage at a time on a shared clock.  Procedures
    only read host views at their own stage, so both give the same trees.
    """

    def __init__(self, scenario: Scenario, budget: Optional[int] = None, mode: str = "lazy"):
        self.sc = scenario
        self.budget = scenario.stage_budget if budget is None else int(budget)
        self.mode = mode
        self.base = BaseTree()
        self.base.advance(self.budget)
        self.trees: dict[tuple, TreeBase] = {(): self.base}
        self.procs: dict[tuple, ProcedureState] = {}
        self.errors: dict[tuple, str] = {}
        self.options = Options(scenario.schedule, scenario.next_strip)

    def functional(self, e: int) -> FunctionalTable:
        return self.sc.requirements[e].M

    def tree(self, key: tuple) -> Optional[TreeBase]:
        key = tuple(key)
        if key in self.trees:
            return self.trees[key]
        if key in self.errors:
            return None
        host = self.tree(host_key(key))
        if host is None:
            self.errors[key] = "host unavailable"
            return None
        e, o, rho = key_e(key), key[-1], root_of(key)
        try:
            if o == L.INFTY:
                st = ProcedureState(e, self.functional(e), host, rho, self.options,
                                    provenance=key_name(key))
                self.procs[key] = st
                if self.mode == "lazy":
                    st.run(self.budget)
                t = st.out
            else:
                t = RelabeledTree(host, o, provenance=key_name(key))
        except (InvalidRoot, ValueError, KeyError) as exc:
            self.errors[key] = str(exc)
            return None
        self.trees[key] = t
        return t

    def build_lockstep(self, keys) -> None:
        """Create the procedure states for ``keys`` (and hosts), then advance
        them together, hosts before dependents within each stage."""
        if self.mode != "lockstep":
            raise RuntimeError("family is not in lockstep mode")
        for k in sorted({tuple(k) for k in keys}, key=len):
            self.tree(k)
        order = sorted(self.procs, key=len)
        for s in range(1, self.budget + 1):
            for k in order:
                st = self.procs[k]
                if st.stage < s:
                    st.step()
        for k in order:
            self.procs[k].finish()

    def built_keys(self) -> list[tuple]:
        return sorted(self.trees, key=lambda k: (len(k), k))

    def procedure_keys(self) -> list[tuple]:
        return sorted(self.procs, key=lambda k: (len(k), k))

    def snapshot(self) -> dict:
        """Serializable picture of every procedure tree (for determinism checks)."""
        out = {}
        for k in self.procedure_keys():
            t = self.procs[k].out
            rows = []
            for v in t.nodes():
                n = t.node(v)
                w = "" if n.waiting is None else f"{n.waiting.star},{n.waiting.star2},{n.waiting.declared_at}"
                rows.append(f"{n.value}|{n.level}|{n.scope}|{n.label}|{n.kind}|{n.created_at}|{w}")
            out[key_name(k)] = {"status": t.status, "nodes": rows,
                                "trace": [r.line() for r in self.procs[k].records]}
        return out


def build_family(scenario: Scenario, stage_budget: Optional[int] = None, mode: str = "lazy",
                 keys=None) -> TreeFamily:
    fam = TreeFamily(scenario, stage_budget, mode)
    if mode == "lockstep":
        fam.build_lockstep(keys or [])
    elif keys:
        for k in keys:
            fam.tree(k)
    return fam


# -- resolution ----------------------------------------------------------------

@dataclass
class Resolution:
    requirement: str
    outcome: str  # INFTY, a node, or UNRESOLVED
    note: str = ""
    case: str = ""

    def line(self) -> str:
        out = "inf" if self.outcome == L.INFTY else (self.outcome if self.outcome != "" else "()")
        return f"{self.requirement}\t{out}\t{self.case or '-'}\t{self.note or '-'}"


def _pruned_nodes(tree: TreeBase, start: str, use: int, stage=None, need_top: bool = False):
    """Nodes above ``start`` in level-then-lex order, not descending past the
    first node of length >= ``use`` on each branch (deeper nodes see the same
    computations).  With ``need_top`` the cut happens at a top-labeled node."""
    level = [start]
    while level:
        yield from level
        nxt = []
        for v in level:
            if len(v) >= use and (not need_top or tree.label(v) == L.TOP):
                continue
            nxt.extend(tree.children(v, stage))
        level = sorted(nxt)


def _rows(F: FunctionalTable, nodes) -> np.ndarray:
    nodes = list(nodes)
    if not nodes:
        return np.zeros((0, len(F.domain)), dtype=np.int64)
    return np.vstack([F.row(v) for v in nodes])


def split_free(V: np.ndarray) -> bool:
    """No two rows converge to different values on a common input."""
    for j in range(V.shape[1]):
        col = V[:, j]
        vals = np.unique(col[col >= 0])
        if len(vals) > 1:
            return False
    return True


def divergent_input(F: FunctionalTable, V: np.ndarray) -> Optional[int]:
    for j, x in enumerate(F.domain):
        if V.shape[0] == 0 or np.all(V[:, j] < 0):
            return x
    return None


def resolve_M(e: int, pi: list, A: str, fam: TreeFamily) -> Resolution:
    name = f"M{e}"
    key = tuple(pi) + (L.INFTY,)
    t = fam.tree(key)
    if t is None:
        return Resolution(name, UNRESOLVED, fam.errors.get(key, "procedure root invalid"))
    depth = t.depth()
    if depth >= fam.sc.m_depth:
        return Resolution(name, L.INFTY, f"splitting tree sealed {depth} levels")
    host = fam.tree(host_key(key))
    rho = root_of(key)
    F = fam.functional(e)
    U = F.max_use
    if not host.determined_through(U, fam.budget):
        return Resolution(name, UNRESOLVED, f"host not final through length {U} at stage {fam.budget}")
    view = restrict(host, rho, "gt", L.EMPTY)
    for sigma in _pruned_nodes(view, rho, U):
        if host.label(sigma) != L.TOP:
            continue
        above = restrict(host, sigma, "gt", L.FIN)
        V = _rows(F, _pruned_nodes(above, sigma, U))
        x = divergent_input(F, V)
        if x is not None:
            return Resolution(name, sigma, f"splitting tree sealed {depth} levels", f"diverges at {x}")
        if split_free(V):
            return Resolution(name, sigma, f"splitting tree sealed {depth} levels", "no splits above")
    return Resolution(name, UNRESOLVED, "no certified witness in the built portion")


def resolve_L(e: int, pi: list, fam: TreeFamily) -> Resolution:
    name = f"L{e}"
    t = fam.tree(tuple(pi[: 3 * e + 1]))
    if t is None:
        return Resolution(name, UNRESOLVED, "tree unavailable")
    low = fam.sc.requirements[e].L
    psi, R = low.psi, low.R
    U = psi.max_use
    fallback = None
    for v in _pruned_nodes(t, t.root, U, need_top=True):
        row = psi.row(v)
        bad = None
        for j, x in enumerate(psi.domain):
            r = R.value(x)
            if row[j] >= 0 and r is not None and row[j] != r:
                bad = x
                break
        if bad is None:
            continue
        if t.label(v) == L.TOP:
            return Resolution(name, v, f"disagrees with R at {bad}")
        if fallback is None:
            fallback = (v, bad)
    if fallback is not None:
        return Resolution(name, fallback[0], f"disagrees with R at {fallback[1]} (no top-labeled witness)")
    if not t.determined_through(U, fam.budget):
        return Resolution(name, UNRESOLVED, f"tree not final through length {U}")
    return Resolution(name, L.INFTY, "no disagreement on the tree")


def resolve_P(e: int, pi: list, A: str, fam: TreeFamily) -> Resolution:
    name = f"P{e}"
    t = fam.tree(tuple(pi[: 3 * e + 1]))
    if t is None or not t.has(A):
        return Resolution(name, UNRESOLVED, "A is not on the tree")
    kids = t.main_children(A)
    if len(kids) != 2:
        return Resolution(name, UNRESOLVED, "main children of A not built yet")
    W = fam.sc.requirements[e].P
    good = [c for c in sorted(kids) if not we_prefix_check(W, c)]
    assert good, "two incompatible strings cannot both be initial segments of one set"
    return Resolution(name, good[0], "differs from W")


@dataclass
class TruePathState:
    pi: list = field(default_factory=list)
    A: str = ""
    history: list = field(default_factory=list)  # A after each resolved step
    steps: list = field(default_factory=list)    # Resolution per step
    complete: bool = True

    @property
    def resolved(self) -> int:
        return len(self.pi)

    def tree_keys(self) -> list[tuple]:
        return [tuple(self.pi[: 3 * e + 1]) for e in range(len(self.pi) // 3 + 1)
                if 3 * e < len(self.pi)]

    def report_lines(self) -> list[str]:
        out = [r.line() for r in self.steps]
        out.append(f"A\t{self.A or '()'}")
        out.append(f"complete\t{self.complete}")
        return out


def build_A(scenario: Scenario, budget: Optional[int] = None,
            fam: Optional[TreeFamily] = None) -> tuple[TruePathState, TreeFamily]:
    fam = fam or TreeFamily(scenario, budget)
    st = TruePathState()
    for e in range(len(scenario.requirements)):
        r = resolve_M(e, st.pi, st.A, fam)
        st.steps.append(r)
        if r.outcome == UNRESOLVED:
            st.complete = False
            break
        st.pi.append(r.outcome)
        if r.outcome != L.INFTY:
            st.A = r.outcome
        st.history.append(st.A)
        r = resolve_L(e, st.pi, fam)
        st.steps.append(r)
        if r.outcome == UNRESOLVED:
            st.complete = False
            break
        st.pi.append(r.outcome)
        if r.outcome != L.INFTY:
            st.A = r.outcome
        st.history.append(st.A)
        r = resolve_P(e, st.pi, st.A, fam)
        st.steps.append(r)
        if r.outcome == UNRESOLVED:
            st.complete = False
            break
        st.pi.append(r.outcome)
        st.A = r.outcome
        st.history.append(st.A)
    return st, fam


def A_path(st: TruePathState, fam: TreeFamily) -> str:
    """Final A extended through the last tree along leftmost main children."""
    keys = st.tree_keys()
    t = fam.tree(keys[-1]) if keys else fam.base
    v = st.A
    if t is None or not t.has(v):
        return v
    while True:
        kids = t.main_children(v)
        if not kids:
            return v
        v = min(kids)


def check_minimality_cases(st: TruePathState, fam: TreeFamily, A: Optional[str] = None) -> Report:
    rep = Report("minimality")
    A = st.A if A is None else A
    for e, key in enumerate(st.tree_keys()):
        t = fam.tree(key)
        rep.checked += 1
        if t is None or not t.has(A):
            rep.add(f"A={A!r} is not on {key_name(key)}")
            continue
        o = key[-1]
        F = fam.functional(e)
        if o != L.INFTY:
            nodes = list(_pruned_nodes(t, t.root, max(F.max_use, len(t.root))))
            V = _rows(F, nodes)
            rep.checked += 1
            case = next((s.case for s in st.steps if s.requirement == f"M{e}"), "")
            if case.startswith("no splits"):
                bad = _first_split(V)
                if bad is not None:
                    rep.add(f"{nodes[bad[0]]!r} and {nodes[bad[1]]!r} split on {key_name(key)}")
            elif divergent_input(F, V) is None:
                rep.add(f"M{e}: no input diverges on {key_name(key)}")
        else:
            rep.notes.append(_path_splitting(t, F, st.history[3 * e] if 3 * e < len(st.history) else t.root, rep))
    for e in range(len(st.pi) // 3):
        W = fam.sc.requirements[e].P
        rep.checked += 1
        if we_prefix_check(W, A):
            rep.add(f"A is an initial segment of W_{e}")
    return rep


def _first_split(V: np.ndarray):
    m = V.shape[0]
    for i in range(m):
        a = V[i]
        rest = V[i + 1:]
        hit = ((a >= 0) & (rest >= 0) & (a != rest)).any(axis=1)
        if hit.any():
            return i, i + 1 + int(np.argmax(hit))
    return None


def _path_splitting(t: TreeBase, F: FunctionalTable, start: str, rep: Report) -> str:
    from . import _kernels
    if not t.has(start):
        return "path splitting: start not on tree"
    level = [start]
    pairs = 0
    while True:
        nxt = [c for v in level for c in t.main_children(v)]
        if not nxt:
            break
        if len(nxt) >= 2:
            V = _rows(F, nxt)
            pairs += len(nxt) * (len(nxt) - 1) // 2
            rep.checked += 1
            if not _kernels.all_pairs_split(V):
                rep.add(f"main descendants of {start!r} at depth {len(nxt)} fail to split")
        level = nxt
    return f"path splitting below {start or '()'}: {pairs} pairs"
