"""The lowness simulation and its checks.

A :class:`Simulation` simulates one lowness requirement over one cover node.
At stage ``s`` it walks the base-tree members ``sigma`` above the cover node
with ``|sigma| < s`` in length-then-lex order and, for the trees
``T_0 .. T_e`` along the true path, asks whether ``sigma`` is on the stage-s
view inside the label restriction, or extends a view leaf inside it that is
not blocked by a waiting designation.  Passing members define ``Xi`` values
from their stage-s computations.

``naive_stage`` is an independent from-scratch evaluation of the same
predicate, used as the oracle for the incremental walk.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import labels as L
from .base_tree import member_children, members_below
from .functionals import UNDEF, Counter, compatible
from .labeled_tree import Report, RestrictedView, TreeBase

# outcome of the per-tree test for one member
PASS, FAIL, PRUNE = 0, 1, 2


class InsufficientDepth(RuntimeError):
    pass


@dataclass
class XiEntry:
    value: int
    stage: int
    witness: str
    cost: int  # cumulative cost when defined


@dataclass
class SimulationLedger:
    e: int
    cover: str
    eta: str
    xi: dict[int, XiEntry] = field(default_factory=dict)
    costs: list[int] = field(default_factory=list)  # costs[s-1] is stage s
    star_blocks: int = 0
    stage: int = 0
    passing: list[tuple[int, str]] = field(default_factory=list)  # (count, digest) per stage

    def rows(self) -> list[str]:
        out = []
        for r in sorted(self.xi):
            x = self.xi[r]
            out.append(f"{r}\t{x.value}\t{x.stage}\t{x.witness or '()'}\t{x.cost}")
        return out

    def values(self) -> dict[int, int]:
        return {r: x.value for r, x in self.xi.items()}

    def snapshot(self) -> dict:
        return {"e": self.e, "cover": self.cover, "eta": self.eta, "rows": self.rows(),
                "costs": list(self.costs), "star_blocks": self.star_blocks,
                "passing": [list(p) for p in self.passing]}


# -- setup -------------------------------------------------------------------

class SimContext:
    """Trees ``T_0 .. T_e`` along the true path and the guesses for ``L_e``."""

    def __init__(self, fam, pi, e: int):
        if len(pi) < 3 * e + 1:
            raise InsufficientDepth(f"true path does not reach M_{e}")
        self.fam = fam
        self.e = e
        self.keys = [tuple(pi[: 3 * i + 1]) for i in range(e + 1)]
        self.trees: list[TreeBase] = []
        for k in self.keys:
            t = fam.tree(k)
            if t is None:
                raise InsufficientDepth(f"tree {k} unavailable")
            self.trees.append(t)
        self.procedural = [k[-1] == L.INFTY for k in self.keys]
        guess = L.delta(pi[: 3 * e + 1])
        self.eta = guess
        self.eta_gt = [guess[i + 1:] for i in range(e + 1)]
        self.psi = fam.sc.requirements[e].L.psi
        self.R = fam.sc.requirements[e].L.R


def choose_cover(ctx: SimContext) -> list[str]:
    """First node on each branch of ``T_e`` with label top and scope at least
    ``e - e'`` in every ``T_e'``; raises when a built branch has none."""
    T = ctx.trees[-1]
    e = ctx.e
    out: list[str] = []

    def qualifies(v: str) -> bool:
        if T.label(v) != L.TOP:
            return False
        return all(ctx.trees[i].scope(v) >= e - i for i in range(e + 1))

    stack = [T.root]
    while stack:
        v = stack.pop()
        if qualifies(v):
            out.append(v)
            continue
        kids = T.children(v)
        if not kids:
            raise InsufficientDepth(f"built branch through {v!r} has no cover node")
        stack.extend(reversed(kids))
    return sorted(out, key=lambda x: (len(x), x))


# -- incremental walk --------------------------------------------------------

class _TreeCache:
    """Per-tree facts that do not depend on the stage."""

    def __init__(self, tree: TreeBase, rho: str, eta: str, procedural: bool):
        self.t = tree
        self.rho = rho
        self.key = L.label_key(eta)
        self.eta = eta
        self.procedural = procedural
        self._ok: dict[str, bool] = {}
        self._node: dict[str, object] = {}

    def node(self, v):
        if v not in self._node:
            self._node[v] = self.t.get(v)
        return self._node[v]

    def ok(self, v: str) -> bool:
        """``v`` lies in the restriction above ``rho`` (labels aside of stage)."""
        r = self._ok.get(v)
        if r is None:
            if v == self.rho:
                r = True
            elif not v.startswith(self.rho) or len(v) <= len(self.rho):
                r = False
            else:
                n = self.node(v)
                r = L.label_key(n.label) > self.key and self.ok(n.parent)
            self._ok[v] = r
        return r


class _Digest:
    """Order-sensitive fingerprint of the members passing at one stage."""

    def __init__(self):
        self.h = hashlib.sha1()
        self.n = 0

    def add(self, sigma: str) -> None:
        self.h.update(sigma.encode() + b"/")
        self.n += 1

    def value(self) -> tuple[int, str]:
        return self.n, self.h.hexdigest()[:16]


def _tree_prefixes(sigma: str):
    k = 1
    while (1 << k) - 1 <= len(sigma):
        yield sigma[: (1 << k) - 1]
        k += 1


class Simulation:
    def __init__(self, ctx: SimContext, cover: str):
        self.ctx = ctx
        self.led = SimulationLedger(ctx.e, cover, ctx.eta)
        self.caches = [_TreeCache(t, cover, ctx.eta_gt[i], ctx.procedural[i])
                       for i, t in enumerate(ctx.trees)]
        self.psi = ctx.psi
        self.domain = np.array(self.psi.domain, dtype=np.int64)

    def _deepest(self, c: _TreeCache, sigma: str, s: int, cost: Counter) -> Optional[str]:
        x = None
        for p in ["", *_tree_prefixes(sigma)]:
            cost.nodes += 1
            n = c.node(p)
            if n is not None and n.created_at <= s:
                x = p
        return x

    def _test(self, c: _TreeCache, sigma: str, s: int, cost: Counter) -> int:
        x = self._deepest(c, sigma, s, cost)
        if x is None or not x.startswith(c.rho):
            # the cover is not in view yet, so nothing above it is
            return PRUNE
        if x == sigma:
            return PASS if c.ok(sigma) else PRUNE
        kids = c.t.children(x, s)
        cost.nodes += 1
        if kids:
            return FAIL
        if not c.ok(x):
            return PRUNE
        if c.procedural:
            n = c.node(x)
            w = n.waiting
            if (w is not None and w.declared_at <= s
                    and L.pred_n(n.label, n.scope) == c.eta):
                if not (compatible(sigma, w.star) or compatible(sigma, w.star2)):
                    self.led.star_blocks += 1
                    return PRUNE
        return PASS

    def step(self) -> None:
        led = self.led
        led.stage += 1
        s = led.stage
        cost = Counter()
        queue = [led.cover]
        digest = _Digest()
        i = 0
        while i < len(queue):
            sigma = queue[i]
            i += 1
            if len(sigma) >= s:
                continue
            verdict = PASS
            for c in self.caches:
                v = self._test(c, sigma, s, cost)
                if v != PASS:
                    verdict = v
                    break
            if verdict == PRUNE:
                continue
            if verdict == PASS:
                digest.add(sigma)
                self._define(sigma, s, cost)
            queue.extend(member_children(sigma))
        led.costs.append(cost.total)
        led.passing.append(digest.value())

    def _define(self, sigma: str, s: int, cost: Counter) -> None:
        xi = self.led.xi
        pending = [k for k in self.psi.domain if k < s and k not in xi]
        if not pending:
            return
        cost.lookups += len(pending)
        total = sum(self.led.costs) + cost.total
        for k in pending:
            v = self.psi.eval(sigma, k, s)
            if v is not None:
                xi[k] = XiEntry(int(v), s, sigma, total)

    def run(self, S: int) -> SimulationLedger:
        while self.led.stage < S:
            self.step()
        return self.led


def sim_run(ctx: SimContext, cover: str, S: int) -> SimulationLedger:
    return Simulation(ctx, cover).run(S)


# -- brute-force oracle -------------------------------------------------------

def _view(t: TreeBase, s: int) -> set[str]:
    seen = {t.root} if t.created_at(t.root) <= s else set()
    stack = list(seen)
    while stack:
        v = stack.pop()
        for c in t.children(v, s):
            seen.add(c)
            stack.append(c)
    return seen


def naive_stage(ctx: SimContext, cover: str, s: int) -> list[str]:
    """Members passing at stage ``s``, in enumeration order, from scratch."""
    per_tree = []
    for i, t in enumerate(ctx.trees):
        view = _view(t, s)
        if cover not in view:
            per_tree.append(None)
            continue
        rv = RestrictedView(t, cover, "gt", ctx.eta_gt[i])
        inside = {v for v in view if rv.get(v) is not None}
        leaves = {v for v in view if not any(c in view for c in t.children(v))}
        per_tree.append((inside, leaves & inside, i))
    out = []
    for sigma in members_below(s):
        if not sigma.startswith(cover):
            continue
        if all(p is not None and _passes(ctx, p, sigma, s) for p in per_tree):
            out.append(sigma)
    return out


def _passes(ctx, p, sigma, s) -> bool:
    inside, leaves, i = p
    if sigma in inside:
        return True
    t = ctx.trees[i]
    for lf in leaves:
        if len(lf) < len(sigma) and sigma.startswith(lf):
            if ctx.procedural[i]:
                n = t.node(lf)
                w = n.waiting
                if (w is not None and w.declared_at <= s
                        and L.pred_n(n.label, n.scope) == ctx.eta_gt[i]
                        and not (compatible(sigma, w.star) or compatible(sigma, w.star2))):
                    continue
            return True
    return False


def naive_run(ctx: SimContext, cover: str, S: int):
    """``Xi`` and the per-stage passing digests, recomputed from scratch."""
    xi: dict[int, tuple[int, int, str]] = {}
    passing = []
    psi = ctx.psi
    for s in range(1, S + 1):
        d = _Digest()
        for sigma in naive_stage(ctx, cover, s):
            d.add(sigma)
            for k in psi.domain:
                if k < s and k not in xi:
                    v = psi.eval(sigma, k, s)
                    if v is not None:
                        xi[k] = (v, s, sigma)
        passing.append(d.value())
    return xi, passing


def compare_with_naive(led: SimulationLedger, ctx: SimContext) -> Report:
    rep = Report("simulation-oracle")
    ref, passing = naive_run(ctx, led.cover, led.stage)
    got = {r: (x.value, x.stage, x.witness) for r, x in led.xi.items()}
    for s, (a, b) in enumerate(zip(led.passing, passing), start=1):
        rep.checked += 1
        if a != b:
            rep.add(f"stage {s}: {a[0]} members pass incrementally, {b[0]} in the oracle"
                    + ("" if a[0] != b[0] else " (different members)"))
    for r in sorted(set(ref) | set(got)):
        rep.checked += 1
        if ref.get(r) != got.get(r):
            rep.add(f"Xi({r}): incremental {got.get(r)} vs oracle {ref.get(r)}")
    return rep


# -- checks ------------------------------------------------------------------

def verify_on_tree(led: SimulationLedger, ctx: SimContext) -> Report:
    """Every defined value is computed by some node of ``T_e`` above the cover."""
    rep = Report("on-tree")
    T = ctx.trees[-1]
    psi = ctx.psi
    nodes = [v for v in T.nodes() if v.startswith(led.cover)]
    for r in sorted(led.xi):
        x = led.xi[r]
        rep.checked += 1
        w = _witness(T, psi, r, x.value, x.witness, nodes)
        if w is None:
            rep.add(f"Xi({r}) = {x.value} (from {x.witness!r} at stage {x.stage}) "
                    f"has no witness on the tree above {led.cover!r}")
        else:
            rep.notes.append(f"Xi({r}) witnessed by {w!r}")
    return rep


def _witness(T, psi, r, value, start, nodes) -> Optional[str]:
    # first try the main-child chain above the simulated member
    v = start if T.has(start) else None
    if v is None:
        cands = [n for n in nodes if n.startswith(start)]
        v = min(cands, key=lambda n: (len(n), n)) if cands else None
    while v is not None:
        if psi.eval(v, r) == value:
            return v
        kids = T.main_children(v)
        v = min(kids) if kids else None
    for n in nodes:
        if psi.eval(n, r) == value:
            return n
    return None


def a_in_restrictions(ctx: SimContext, cover: str, A: str) -> Report:
    """Tree nodes along ``A`` above the cover stay inside each restriction."""
    rep = Report("A-watched")
    for i, t in enumerate(ctx.trees):
        rv = RestrictedView(t, cover, "gt", ctx.eta_gt[i])
        v = cover
        while True:
            rep.checked += 1
            if rv.get(v) is None:
                rep.add(f"{v!r} on A leaves T_{i} restricted above {ctx.eta_gt[i]!r}")
                break
            nxt = [c for c in t.children(v) if A.startswith(c)]
            if not nxt:
                break
            v = nxt[0]
    return rep


def verify_result_watched(led: SimulationLedger, ctx: SimContext, A: str, Cp: float) -> Report:
    """Values computed along ``A`` by stage ``s`` appear in ``Xi`` by ``Cp*s*s``."""
    rep = Report("result-watched")
    unchecked = 0
    for r in ctx.psi.domain:
        t = ctx.psi.trace(A, r)
        if t is None:
            continue
        s_r = max(t[1], r + 1)  # defined at stage s needs r < s
        bound = int(Cp * s_r * s_r)
        if bound > led.stage:
            unchecked += 1
            continue
        rep.checked += 1
        x = led.xi.get(r)
        if x is None or x.stage > bound:
            rep.add(f"Psi^A({r}) at stage {s_r} but Xi({r}) "
                    f"{'undefined' if x is None else f'at stage {x.stage}'} (bound {bound})")
    if unchecked:
        rep.notes.append(f"{unchecked} inputs past the simulated horizon")
    sub = a_in_restrictions(ctx, led.cover, A)
    rep.checked += sub.checked
    for v in sub.violations:
        rep.add(v)
    return rep


def measured_delay(led: SimulationLedger, ctx: SimContext, A: str) -> float:
    """Least ``Cp`` with every value along ``A`` defined by ``Cp*s*s``."""
    best = 0.0
    for r, x in led.xi.items():
        t = ctx.psi.trace(A, r)
        if t is None:
            continue
        s_r = max(t[1], r + 1)
        best = max(best, x.stage / (s_r * s_r))
    return best


def cost_constant(led: SimulationLedger) -> float:
    return max((c / s ** 3 for s, c in enumerate(led.costs, start=1)), default=0.0)


def check_cost(led: SimulationLedger, C: float) -> Report:
    rep = Report("sim-cost")
    for s, c in enumerate(led.costs, start=1):
        rep.checked += 1
        if c > C * s ** 3:
            rep.add(f"stage {s}: cost {c} exceeds {C}*s^3 = {C * s ** 3:.0f}")
    return rep


def low_for_speed(led: SimulationLedger, ctx: SimContext, A: str, l_outcome: str) -> Report:
    """If the outcome is infinitary and ``Psi^A`` agrees with ``R``, ``Xi`` does too."""
    rep = Report("low-for-speed")
    if l_outcome != L.INFTY:
        rep.notes.append("skipped: finitary outcome")
        return rep
    R = ctx.R
    for r in R.domain:
        a = ctx.psi.eval(A, r)
        if a is not None and a != R.value(r):
            rep.notes.append(f"skipped: Psi^A({r}) = {a} differs from R")
            return rep
    for r in sorted(led.xi):
        y = R.value(r)
        if y is None:
            continue
        rep.checked += 1
        if led.xi[r].value != y:
            rep.add(f"Xi({r}) = {led.xi[r].value} but R({r}) = {y}")
    return rep
