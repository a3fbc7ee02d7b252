"""Run orchestration: build a family, resolve the true path, simulate, check.

:func:`run_scenario` is what the ``lowspeed run`` command executes.  It
returns a :class:`RunResult` holding the reports of the selected suites, a
JSON-able results record (compared against a scenario's pinned ``expected``
block by :func:`verify_expected`) and the text artifacts (trace, report,
DOT files).

Trace format: one event per line, tab separated, first field is the event
kind::

    resolve  <requirement> <outcome> <case>
    proc     <tree> <stage> <phase> <leaves> <event> <cost>
    sim      <ledger> <stage> <cost> <passing> <digest>
    xi       <ledger> <input> <value> <stage> <witness> <cumulative cost>
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

from . import labels as L
from . import simulation as sim
from .checks import procedure_checks
from .labeled_tree import (PAPER, Report, Schedule, ScheduleError, check_admissible,
                           expansionary_level, to_dot, validate_schedule)
from .orchestrator import A_path, TreeFamily, build_A, check_minimality_cases, key_name
from .scenario import Scenario

SUITES = ("labels", "trees", "procedure", "truepath", "simulation")
# ``minimality`` is accepted as another name for the true-path suite
ALIASES = {"minimality": "truepath"}

EXPECTED_CHAIN = ["T", "ff", "fi", "f", "if", "ii", "i", ""]
DEFAULT_LEVELS = [0, 64, 192]


def normalize_checks(names) -> list[str]:
    out: list[str] = []
    for n in names:
        n = ALIASES.get(n, n)
        if n == "all":
            return list(SUITES)
        if n not in SUITES:
            raise ValueError(f"unknown check suite {n!r}")
        if n not in out:
            out.append(n)
    return out


# -- suites that do not need a scenario ---------------------------------------

def labels_suite(max_n: int = 6) -> Report:
    rep = Report("labels")
    chain = list(reversed(L.sorted_labels(L.labels_n(2))))
    rep.checked += 1
    if chain != EXPECTED_CHAIN:
        rep.add(f"Labels_2 order {chain} differs from {EXPECTED_CHAIN}")
    for n in range(1, max_n + 1):
        xs = L.sorted_labels(L.labels_n(n))
        for lo, hi in zip(xs, xs[1:]):
            rep.checked += 1
            if L.pred_n(hi, n) != lo:
                rep.add(f"pred_{n}({hi!r}) = {L.pred_n(hi, n)!r}, expected {lo!r}")
    return rep


def schedule_suite() -> Report:
    rep = Report("schedule")
    got = [expansionary_level(i, PAPER) for i in (1, 2, 3)]
    rep.checked += 1
    if got != DEFAULT_LEVELS:
        rep.add(f"expansionary levels {got} differ from {DEFAULT_LEVELS}")
    for bad in ([0, 3], [0, 4, 10], [0, 8, 21]):
        rep.checked += 1
        try:
            validate_schedule(bad)
            rep.add(f"schedule {bad} was accepted")
        except ScheduleError:
            pass
    return rep


# -- results ------------------------------------------------------------------

@dataclass
class RunResult:
    scenario: str
    checks: list[str]
    reports: list[Report] = field(default_factory=list)
    results: dict = field(default_factory=dict)
    trace: list[str] = field(default_factory=list)
    dots: dict[str, str] = field(default_factory=dict)
    expected: Optional[Report] = None

    @property
    def ok(self) -> bool:
        good = all(r.ok for r in self.reports)
        return good and (self.expected is None or self.expected.ok)

    def all_reports(self) -> list[Report]:
        return self.reports + ([self.expected] if self.expected is not None else [])

    def report_text(self) -> str:
        lines = [f"scenario {self.scenario}"]
        for r in self.all_reports():
            lines.append(r.summary())
            lines.extend(f"  violation: {v}" for v in r.violations)
            lines.extend(f"  note: {n}" for n in r.notes)
        lines.append("result: " + ("pass" if self.ok else "FAIL"))
        return "\n".join(lines) + "\n"

    def artifacts(self) -> dict:
        """Everything a determinism check compares."""
        return {"trace": self.trace, "report": self.report_text(),
                "results": json.dumps(self.results, sort_keys=True), "dots": self.dots}


def _digest(lines) -> str:
    h = hashlib.sha1()
    for x in lines:
        h.update(x.encode() + b"\n")
    return h.hexdigest()[:16]


def ledger_name(e: int, cover: str) -> str:
    return f"L{e}@{cover or '()'}"


def simulate(sc: Scenario, st, fam: TreeFamily, stages: Optional[int] = None):
    """One ledger per lowness requirement on the true path and cover node."""
    S = sc.sim_stages if stages is None else stages
    out = []
    e = 0
    while len(st.pi) >= 3 * e + 2:
        try:
            ctx = sim.SimContext(fam, st.pi, e)
            covers = sim.choose_cover(ctx)
        except sim.InsufficientDepth as exc:
            out.append((e, None, None, str(exc)))
            break
        for c in covers:
            out.append((e, ctx, sim.sim_run(ctx, c, S), ""))
        e += 1
    return out


def _pin(x: float) -> float:
    return math.ceil(x * 1000 - 1e-9) / 1000


def run_scenario(sc: Scenario, checks=("all",), budget: Optional[int] = None,
                 schedule: Optional[str] = None, emit=()) -> RunResult:
    if schedule is not None:
        sc = Scenario(sc.name, sc.requirements, Schedule(schedule), sc.next_strip,
                      sc.budgets, sc.description, sc.expected)
    checks = normalize_checks(checks)
    res = RunResult(sc.name, checks)
    if "labels" in checks:
        res.reports.append(labels_suite())

    st, fam = build_A(sc, budget)
    A = A_path(st, fam)
    res.results["pi"] = list(st.pi)
    res.results["A"] = st.A
    res.results["complete"] = st.complete
    res.trace.extend("resolve\t" + r.line() for r in st.steps)

    trees = {}
    for k in fam.built_keys():
        t = fam.trees[k]
        trees[key_name(k)] = {"nodes": sum(1 for _ in t.nodes()) if k else None,
                              "status": getattr(t, "status", "")}
    res.results["trees"] = trees
    for k in fam.procedure_keys():
        name = key_name(k)
        res.trace.extend(f"proc\t{name}\t{r.line()}" for r in fam.procs[k].records)
    if "dot" in emit:
        for k in fam.built_keys():
            if k:
                res.dots[key_name(k)] = to_dot(fam.trees[k], name=key_name(k))

    if "trees" in checks:
        res.reports.append(schedule_suite())
        for k in fam.built_keys():
            if not k or ("procedure" in checks and k in fam.procs):
                continue  # the procedure suite checks those
            r = check_admissible(fam.trees[k])
            r.name = f"admissible {key_name(k)}"
            res.reports.append(r)
    if "procedure" in checks:
        for k in fam.procedure_keys():
            for r in procedure_checks(fam.procs[k]):
                r.name = f"{r.name} {key_name(k)}"
                res.reports.append(r)
    if "truepath" in checks:
        r = Report("true path")
        r.checked = 1
        if not st.complete:
            r.add(f"true path unresolved after {st.resolved} steps")
        r.notes.extend(st.report_lines())
        res.reports.append(r)
        res.reports.append(check_minimality_cases(st, fam))
        res.reports.append(check_minimality_cases(st, fam, A))

    ledgers = {}
    if "simulation" in checks:
        pinned = (sc.expected or {})
        for e, ctx, led, err in simulate(sc, st, fam):
            if led is None:
                r = Report(f"simulation L{e}")
                r.add(err)
                res.reports.append(r)
                continue
            name = ledger_name(e, led.cover)
            outcome = st.pi[3 * e + 1]
            for s, (c, (n, d)) in enumerate(zip(led.costs, led.passing), start=1):
                res.trace.append(f"sim\t{name}\t{s}\t{c}\t{n}\t{d}")
            res.trace.extend(f"xi\t{name}\t{row}" for row in led.rows())
            ledgers[name] = {
                "xi_count": len(led.xi), "xi_digest": _digest(led.rows()),
                "cost_total": sum(led.costs), "star_blocks": led.star_blocks,
                "C": sim.cost_constant(led),
                "Cp": sim.measured_delay(led, ctx, A) if outcome == L.INFTY else None,
                "outcome": outcome,
            }
            for r in (sim.compare_with_naive(led, ctx), sim.verify_on_tree(led, ctx),
                      sim.low_for_speed(led, ctx, A, outcome)):
                r.name = f"{r.name} {name}"
                res.reports.append(r)
            if "C" in pinned:
                r = sim.check_cost(led, pinned["C"])
                r.name = f"{r.name} {name}"
                res.reports.append(r)
            if outcome == L.INFTY and "Cp" in pinned:
                r = sim.verify_result_watched(led, ctx, A, pinned["Cp"])
                r.name = f"{r.name} {name}"
                res.reports.append(r)
        if not ("C" in pinned and "Cp" in pinned):
            r = Report("pinned constants")
            r.notes.append("no pinned C/Cp: cost and delay bounds not asserted")
            res.reports.append(r)
    res.results["ledgers"] = ledgers

    if sc.expected is not None:
        res.expected = verify_expected(sc, res.results)
    return res


# -- calibration and pinned results -------------------------------------------

def calibrate(sc: Scenario, budget: Optional[int] = None) -> dict:
    """Measure constants and outcomes on a full run and return an expected block."""
    bare = Scenario(sc.name, sc.requirements, sc.schedule, sc.next_strip, sc.budgets,
                    sc.description, None)
    res = run_scenario(bare, ("truepath", "simulation"), budget)
    led = res.results["ledgers"]
    C = max((x["C"] for x in led.values()), default=0.0)
    cps = [x["Cp"] for x in led.values() if x["Cp"] is not None]
    return {
        "calibration": {"command": f"lowspeed calibrate {sc.name}",
                        "sim_stages": sc.sim_stages},
        "pi": res.results["pi"],
        "A": res.results["A"],
        "C": _pin(C),
        "Cp": _pin(max(cps)) if cps else 1.0,
        "ledgers": {k: {f: v[f] for f in ("xi_count", "xi_digest", "cost_total", "star_blocks")}
                    for k, v in led.items()},
    }


def verify_expected(sc: Scenario, results: dict) -> Report:
    rep = Report("expected")
    exp = sc.expected
    if exp is None:
        rep.notes.append("skipped: scenario has no pinned expected block")
        return rep
    for f in ("pi", "A"):
        if f in exp:
            rep.checked += 1
            if exp[f] != results.get(f):
                rep.add(f"{f}: pinned {exp[f]!r}, got {results.get(f)!r}")
    got = results.get("ledgers")
    if "ledgers" in exp:
        if not got:
            rep.notes.append("ledger comparison skipped: simulation suite not run")
        else:
            for name in sorted(set(exp["ledgers"]) | set(got)):
                rep.checked += 1
                a, b = exp["ledgers"].get(name), got.get(name)
                if a is None or b is None:
                    rep.add(f"ledger {name}: pinned {a is not None}, produced {b is not None}")
                    continue
                for f, v in a.items():
                    if b.get(f) != v:
                        rep.add(f"ledger {name} {f}: pinned {v!r}, got {b.get(f)!r}")
                if b["C"] > exp.get("C", math.inf):
                    rep.add(f"ledger {name}: cost constant {b['C']:.4f} above pinned {exp['C']}")
                if b["Cp"] is not None and b["Cp"] > exp.get("Cp", math.inf):
                    rep.add(f"ledger {name}: delay constant {b['Cp']:.4f} above pinned {exp['Cp']}")
    return rep
