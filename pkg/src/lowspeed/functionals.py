"""Finite oracle functionals, partial functions and staged c.e. sets.

A functional is a finite set of axioms ``(use, input, output, step)``; it
converges on oracle ``tau`` at ``input`` by stage ``s`` when some axiom has
``use`` a prefix of ``tau`` and ``step <= s``.  Besides explicit axiom lists
there are two generated families whose axioms are implied by a rule (listing
them would take megabytes at the depths the fixtures need); they enumerate
their axioms on demand for validation and brute-force checks.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .base_tree import contains, members_of_length

UNDEF = _kernels.UNDEF


class Axiom(NamedTuple):
    use: str
    input: int
    output: int
    step: int


class TableError(ValueError):
    """Raised for malformed or inconsistent tables."""

    def __init__(self, msg, pair=None):
        super().__init__(msg)
        self.pair = pair


def compatible(a: str, b: str) -> bool:
    return a.startswith(b) or b.startswith(a)


@dataclass
class Validation:
    ok: bool
    pair: Optional[tuple[Axiom, Axiom]] = None
    reason: str = ""

    def __bool__(self):
        return self.ok


class FunctionalTable:
    """Base class; subclasses provide ``trace`` and ``axioms``."""

    name: str = ""
    domain: tuple[int, ...] = ()

    def trace(self, tau: str, x: int) -> Optional[tuple[int, int]]:
        """``(output, least step)`` of the axioms applying to ``tau`` at ``x``."""
        raise NotImplementedError

    def axioms(self) -> Iterator[Axiom]:
        raise NotImplementedError

    @property
    def max_use(self) -> int:
        raise NotImplementedError

    def steps(self) -> list[int]:
        """Sorted distinct axiom steps."""
        c = self.__dict__.get("_steps")
        if c is None:
            c = sorted({a.step for a in self.axioms()})
            self._steps = c
        return c

    def next_step_after(self, s: int) -> Optional[int]:
        st = self.steps()
        i = bisect.bisect_right(st, s)
        return st[i] if i < len(st) else None

    def eval(self, tau: str, x: int, s: Optional[int] = None) -> Optional[int]:
        t = self.trace(tau, x)
        if t is None or (s is not None and t[1] > s):
            return None
        return t[0]

    def row(self, tau: str, s: Optional[int] = None) -> np.ndarray:
        out = np.full(len(self.domain), UNDEF, dtype=np.int64)
        for j, x in enumerate(self.domain):
            v = self.eval(tau, x, s)
            if v is not None:
                out[j] = v
        return out

    def to_json(self) -> dict:
        raise NotImplementedError


class AxiomTable(FunctionalTable):
    def __init__(self, axioms: Iterable[Sequence], name: str = "", check: bool = True):
        self.name = name
        self._axioms = [Axiom(str(a[0]), int(a[1]), int(a[2]), int(a[3])) for a in axioms]
        if check:
            v = validate(self)
            if not v:
                raise TableError(v.reason, v.pair)
        self._index: dict[int, dict[str, tuple[int, int]]] = {}
        for a in self._axioms:
            d = self._index.setdefault(a.input, {})
            prev = d.get(a.use)
            if prev is None or a.step < prev[1]:
                d[a.use] = (a.output, a.step)
        self._lengths = {x: sorted({len(u) for u in d}) for x, d in self._index.items()}
        self.domain = tuple(sorted(self._index))

    def trace(self, tau, x):
        d = self._index.get(x)
        if d is None:
            return None
        best = None
        n = len(tau)
        for L in self._lengths[x]:
            if L > n:
                break
            hit = d.get(tau[:L])
            if hit is not None and (best is None or hit[1] < best[1]):
                best = hit
        return best

    def axioms(self):
        return iter(self._axioms)

    @property
    def max_use(self):
        return max((len(a.use) for a in self._axioms), default=0)

    def to_json(self):
        return {"name": self.name, "axioms": [list(a) for a in self._axioms]}


class BlockBitsTable(FunctionalTable):
    """Input ``k`` reads the first ``k+1`` blocks.

    With ``encode="bit"`` it returns the bit of block ``k+1``; with
    ``encode="prefix"`` it returns the binary number formed by the bits of
    blocks ``1..k+1``, so a removed input does not lose information for later
    inputs.  ``holes`` removes the axioms for input ``k`` whose use extends
    ``prefix``.
    """

    def __init__(self, depth: int, delay: int = 0, holes: Sequence[dict] = (), name: str = "",
                 encode: str = "bit"):
        if encode not in ("bit", "prefix"):
            raise TableError(f"unknown encoding {encode!r}")
        if encode == "prefix" and depth > 60:
            raise TableError("prefix encoding supports depth <= 60")
        self.encode = encode
        self.name = name
        self.depth = int(depth)
        self.delay = int(delay)
        if self.delay < 0:
            raise TableError("delay must be non-negative (a use is read within its step)")
        self.holes = [{"prefix": str(h["prefix"]), "inputs": sorted(int(i) for i in h["inputs"])}
                      for h in holes]
        self.domain = tuple(range(self.depth))
        self._use_len = [(1 << (k + 1)) - 1 for k in range(self.depth)]
        self._hole_at: dict[int, list[str]] = {}
        for h in self.holes:
            for k in h["inputs"]:
                self._hole_at.setdefault(k, []).append(h["prefix"])

    def _holed(self, use: str, k: int) -> bool:
        return any(len(p) <= len(use) and use.startswith(p) for p in self._hole_at.get(k, ()))

    def trace(self, tau, x):
        if not 0 <= x < self.depth:
            return None
        L = self._use_len[x]
        if len(tau) < L:
            return None
        u = tau[:L]
        if not contains(u) or self._holed(u, x):
            return None
        return self._value(u, x), L + self.delay

    def _value(self, u: str, k: int) -> int:
        if self.encode == "bit":
            return 1 if u[-1] == "1" else 0
        v = 0
        for j in range(k + 1):
            v = 2 * v + (1 if u[(1 << j) - 1] == "1" else 0)
        return v

    def row(self, tau, s=None):
        out = np.full(self.depth, UNDEF, dtype=np.int64)
        n = len(tau)
        member = None
        code = 0
        for k in range(self.depth):
            L = self._use_len[k]
            if L > n:
                break
            if member is None:
                top = max(j for j in range(self.depth) if self._use_len[j] <= n)
                member = contains(tau[: self._use_len[top]])
                if not member:
                    return self._row_slow(tau, s)
            bit = 1 if tau[L - 1] == "1" else 0
            code = 2 * code + bit
            if s is not None and L + self.delay > s:
                continue
            if k in self._hole_at and any(len(p) <= L and tau.startswith(p)
                                          for p in self._hole_at[k]):
                continue
            out[k] = bit if self.encode == "bit" else code
        return out

    def steps(self):
        return sorted({L + self.delay for L in self._use_len})

    def _row_slow(self, tau, s):
        return FunctionalTable.row(self, tau, s)

    def axioms(self):
        for k in range(self.depth):
            L = self._use_len[k]
            for u in members_of_length(L):
                if not self._holed(u, k):
                    yield Axiom(u, k, self._value(u, k), L + self.delay)

    @property
    def max_use(self):
        return self._use_len[-1] if self.depth else 0

    def to_json(self):
        return {"name": self.name, "generator": "block_bits", "depth": self.depth,
                "delay": self.delay, "holes": self.holes, "encode": self.encode}


class UniformTable(FunctionalTable):
    """Input ``k`` returns ``outputs[k]`` on every member of length ``use_lengths[k]``
    extending ``prefix``; step is use length plus ``delay``.

    ``exceptions`` entries ``{"prefix", "input", "output"}`` override the
    output of one input on uses extending their prefix (first match wins).
    """

    def __init__(self, outputs: Sequence[Optional[int]], use_lengths: Sequence[int] | None = None,
                 delay: int = 0, prefix: str = "", name: str = "",
                 exceptions: Sequence[dict] = ()):
        self.name = name
        self.outputs = [None if o is None else int(o) for o in outputs]
        self.use_lengths = list(range(len(self.outputs))) if use_lengths is None else [int(u) for u in use_lengths]
        if len(self.use_lengths) != len(self.outputs):
            raise TableError("outputs and use_lengths differ in length")
        self.delay = int(delay)
        if self.delay < 0:
            raise TableError("delay must be non-negative (a use is read within its step)")
        self.prefix = str(prefix)
        for k, L in enumerate(self.use_lengths):
            if self.outputs[k] is not None and L < len(self.prefix):
                raise TableError(f"use length {L} of input {k} is shorter than the prefix")
        self.exceptions = [{"prefix": str(x["prefix"]), "input": int(x["input"]),
                            "output": int(x["output"])} for x in exceptions]
        for x in self.exceptions:
            k = x["input"]
            if not 0 <= k < len(self.outputs) or self.outputs[k] is None:
                raise TableError(f"exception for undeclared input {k}")
            if len(x["prefix"]) > self.use_lengths[k]:
                raise TableError(f"exception prefix longer than the use of input {k}")
        self.domain = tuple(k for k, o in enumerate(self.outputs) if o is not None)

    def _output(self, use: str, k: int) -> int:
        for x in self.exceptions:
            if x["input"] == k and use.startswith(x["prefix"]):
                return x["output"]
        return self.outputs[k]

    def trace(self, tau, x):
        if not 0 <= x < len(self.outputs) or self.outputs[x] is None:
            return None
        L = self.use_lengths[x]
        if len(tau) < L or not tau.startswith(self.prefix):
            return None
        if not contains(tau[:L]):
            return None
        return self._output(tau[:L], x), L + self.delay

    def axioms(self):
        for k in self.domain:
            L = self.use_lengths[k]
            for u in members_of_length(L):
                if u.startswith(self.prefix):
                    yield Axiom(u, k, self._output(u, k), L + self.delay)

    def steps(self):
        return sorted({self.use_lengths[k] + self.delay for k in self.domain})

    @property
    def max_use(self):
        return max((self.use_lengths[k] for k in self.domain), default=0)

    def to_json(self):
        return {"name": self.name, "generator": "uniform", "outputs": self.outputs,
                "use_lengths": self.use_lengths, "delay": self.delay, "prefix": self.prefix,
                "exceptions": self.exceptions}


def table_from_json(d: dict) -> FunctionalTable:
    gen = d.get("generator")
    name = d.get("name", "")
    if gen is None:
        return AxiomTable(d.get("axioms", []), name=name)
    if gen == "block_bits":
        return BlockBitsTable(d["depth"], d.get("delay", 0), d.get("holes", ()), name=name,
                              encode=d.get("encode", "bit"))
    if gen == "uniform":
        return UniformTable(d["outputs"], d.get("use_lengths"), d.get("delay", 0),
                            d.get("prefix", ""), name=name, exceptions=d.get("exceptions", ()))
    raise TableError(f"unknown generator {gen!r}")


def validate(F) -> Validation:
    """Consistency: comparable uses at one input carry one output.

    Also rejects axioms whose use is longer than their step (a computation
    finishing by stage ``s`` reads at most ``s`` oracle bits).
    """
    axioms = list(F.axioms()) if isinstance(F, FunctionalTable) else [Axiom(*a) for a in F]
    by_input: dict[int, list[Axiom]] = {}
    for a in axioms:
        if a.step < 1:
            return Validation(False, (a, a), f"axiom {tuple(a)} has step < 1")
        if len(a.use) > a.step:
            return Validation(False, (a, a), f"axiom {tuple(a)} reads more bits than its step")
        if any(c not in "01" for c in a.use):
            return Validation(False, (a, a), f"axiom {tuple(a)} has a non-binary use")
        by_input.setdefault(a.input, []).append(a)
    for x, group in by_input.items():
        group.sort(key=lambda a: (a.use, a.step))
        # comparable uses sort adjacently in a chain walk: check each against its prefixes
        seen: dict[str, Axiom] = {}
        for a in group:
            for L in range(len(a.use) + 1):
                b = seen.get(a.use[:L])
                if b is not None and b.output != a.output:
                    return Validation(False, (b, a),
                                      f"axioms {tuple(b)} and {tuple(a)} have comparable uses "
                                      f"and differ at input {x}")
            prev = seen.get(a.use)
            if prev is None:
                seen[a.use] = a
    return Validation(True)


def esplits(F: FunctionalTable, t1: str, t2: str, s: Optional[int] = None) -> Optional[int]:
    """Least input on which ``t1`` and ``t2`` converge to different values."""
    if t1 == t2:
        return None
    for x in F.domain:
        a = F.eval(t1, x, s)
        if a is None:
            continue
        b = F.eval(t2, x, s)
        if b is not None and a != b:
            return x
    return None


# -- partial functions and c.e. sets ----------------------------------------

@dataclass
class PartialFunctionTable:
    values: dict[int, tuple[int, int]]
    name: str = ""

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], name: str = "") -> "PartialFunctionTable":
        vals: dict[int, tuple[int, int]] = {}
        for r in rows:
            x, y = int(r[0]), int(r[1])
            t = int(r[2]) if len(r) > 2 else 1
            if x in vals and vals[x][0] != y:
                raise TableError(f"{name or 'R'} is not single-valued at {x}")
            vals[x] = (y, t)
        return cls(vals, name)

    def value(self, x: int, s: Optional[int] = None) -> Optional[int]:
        v = self.values.get(x)
        if v is None or (s is not None and v[1] > s):
            return None
        return v[0]

    @property
    def domain(self) -> list[int]:
        return sorted(self.values)

    def to_json(self):
        return {"name": self.name, "values": [[x, y, t] for x, (y, t) in sorted(self.values.items())]}


@dataclass
class StagedCeSet:
    enumeration: list[tuple[int, int]] = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        self.enumeration = [(int(x), int(t)) for x, t in self.enumeration]
        stages = [t for _, t in self.enumeration]
        if stages != sorted(stages):
            raise TableError(f"{self.name or 'W'}: enumeration stages must be non-decreasing")

    def members(self, s: Optional[int] = None) -> set[int]:
        return {x for x, t in self.enumeration if s is None or t <= s}

    def characteristic(self, length: int, s: Optional[int] = None) -> str:
        m = self.members(s)
        return "".join("1" if i in m else "0" for i in range(length))

    def to_json(self):
        return {"name": self.name, "enumeration": [list(p) for p in self.enumeration]}


def we_prefix_check(W: StagedCeSet, tau: str, s: Optional[int] = None) -> bool:
    return W.characteristic(len(tau), s) == tau


# -- pairwise split search ---------------------------------------------------

class SearchWindow:
    """Candidate extensions per leaf, already cut to the stage's window.

    ``source(leaf)`` lists ``(node, via)`` pairs in enumeration order, where
    ``via`` is the top-labeled main descendant the node sits above.  Lists
    are computed on first use, so a search that fails early at the first
    leaf never enumerates the others.  ``limited`` is set when a source list
    was cut at the stage bound or the DFS ran out of budget, i.e. when a
    larger window could change the outcome.
    """

    def __init__(self, source, stage: int, dfs_budget: int):
        self._source = source if callable(source) else (lambda lf, d=source: d.get(lf, ()))
        self._cache: dict[str, list[tuple[str, str]]] = {}
        self.stage = stage
        self.dfs_budget = dfs_budget
        self.limited = False

    def candidates_for(self, leaf: str) -> list[tuple[str, str]]:
        c = self._cache.get(leaf)
        if c is None:
            c = list(self._source(leaf))
            self._cache[leaf] = c
        return c


@dataclass
class SplitAssignment:
    length: int
    choice: dict[str, tuple[str, str, str]]  # leaf -> (via, star, star2)


@dataclass
class Counter:
    nodes: int = 0
    lookups: int = 0
    compares: int = 0

    @property
    def total(self) -> int:
        return self.nodes + self.lookups + self.compares


def find_pairwise_splits(F: FunctionalTable, leaves: Sequence[str], window: SearchWindow,
                         cost: Counter | None = None) -> Optional[SplitAssignment]:
    """Pick two candidates per leaf so that all chosen nodes split pairwise.

    ``leaves`` must be in lex order.  Returns None when no assignment is found
    within the window's budget.
    """
    cost = cost if cost is not None else Counter()
    s = window.stage
    if not leaves or not F.domain:
        return None
    # a common length must occur among the first leaf's candidates
    lengths = sorted({len(n) for n, _ in window.candidates_for(leaves[0])})
    width = len(F.domain)
    rows_cache: dict[str, np.ndarray] = {}

    def row(n):
        r = rows_cache.get(n)
        if r is None:
            r = F.row(n, s)
            rows_cache[n] = r
            cost.lookups += width
        return r

    for l in lengths:
        per_leaf = []
        for lf in leaves:
            groups: dict[str, list[str]] = {}
            for n, via in window.candidates_for(lf):
                if len(n) == l:
                    g = groups.setdefault(via, [])
                    if n not in g:
                        g.append(n)
            found_pairs: dict[tuple[str, str], str] = {}
            for via, g in groups.items():
                if len(g) < 2:
                    continue
                g = sorted(g)
                # a split needs a column with two distinct defined values
                cost.compares += len(g)
                if not _kernels.any_two_distinct(np.stack([row(n) for n in g])):
                    continue
                for i, a in enumerate(g):
                    ra = row(a)
                    for b in g[i + 1:]:
                        if (a, b) in found_pairs:
                            continue
                        cost.compares += 1
                        if _kernels.split_witness(ra, row(b)) >= 0:
                            found_pairs[(a, b)] = via
            pairs = [(a, b, v) for (a, b), v in sorted(found_pairs.items())]
            if not pairs:
                per_leaf = None
                break
            per_leaf.append(pairs)
        if per_leaf is None:
            continue
        found = _dfs(leaves, per_leaf, row, width, window, cost)
        if found is not None:
            return SplitAssignment(l, found)
    return None


def _dfs(leaves, per_leaf, row, width, window, cost):
    budget = window.dfs_budget
    k = len(leaves)
    rows = np.empty((2 * k, width), dtype=np.int64)
    picks = [0] * k
    i = 0
    steps = 0
    while 0 <= i < k:
        pairs = per_leaf[i]
        j = picks[i]
        placed = False
        n = 2 * i
        while j < len(pairs):
            steps += 1
            if steps > budget:
                window.limited = True
                return None
            a, b, _ = pairs[j]
            ra, rb = row(a), row(b)
            ok, c = _kernels.splits_all(rows, n, ra)
            cost.compares += c
            if ok:
                ok, c = _kernels.splits_all(rows, n, rb)
                cost.compares += c
            if ok:
                rows[n] = ra
                rows[n + 1] = rb
                picks[i] = j
                placed = True
                break
            j += 1
        if placed:
            i += 1
            if i < k:
                picks[i] = 0
        else:
            picks[i] = 0
            i -= 1
            if i >= 0:
                picks[i] += 1
    if i < 0:
        return None
    out = {}
    for idx, lf in enumerate(leaves):
        a, b, via = per_leaf[idx][picks[idx]]
        out[lf] = (via, a, b)
    return out
