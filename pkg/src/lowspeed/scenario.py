"""Scenario files: a versioned JSON schema for requirement lists and budgets.

Layout (``schema_version`` 1)::

    {
      "schema_version": 1,
      "name": "S1",
      "description": "...",
      "schedule": "paper" | "compact" | [0, 8, 22, ...],
      "next_strip": false,
      "budgets": {"stage": 512, "sim_stages": 64, "m_depth": 3},
      "requirements": [
        {"M": <table>, "L": {"psi": <table>, "R": {"values": [[x, y, t], ...]}},
         "P": {"enumeration": [[x, stage], ...]}},
        ...
      ],
      "expected": {...}            # optional, written by ``lowspeed calibrate``
    }

A ``<table>`` is either ``{"axioms": [[use, input, output, step], ...]}`` or a
generator record (``"generator": "block_bits"`` or ``"uniform"``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .functionals import (AxiomTable, FunctionalTable, PartialFunctionTable, StagedCeSet,
                          TableError, table_from_json, validate)
from .labeled_tree import Schedule, ScheduleError

SCHEMA_VERSION = 1
DEFAULT_BUDGETS = {"stage": 512, "sim_stages": 64, "m_depth": 3}


class ScenarioError(ValueError):
    def __init__(self, msg: str, location: str = ""):
        super().__init__(f"{location}: {msg}" if location else msg)
        self.location = location


@dataclass
class Lowness:
    psi: FunctionalTable
    R: PartialFunctionTable


@dataclass
class Triple:
    M: FunctionalTable
    L: Lowness
    P: StagedCeSet


@dataclass
class Scenario:
    name: str
    requirements: list[Triple]
    schedule: Schedule = field(default_factory=Schedule)
    next_strip: bool = False
    budgets: dict = field(default_factory=lambda: dict(DEFAULT_BUDGETS))
    description: str = ""
    expected: Optional[dict] = None

    @property
    def stage_budget(self) -> int:
        return int(self.budgets["stage"])

    @property
    def sim_stages(self) -> int:
        return int(self.budgets["sim_stages"])

    @property
    def m_depth(self) -> int:
        return int(self.budgets["m_depth"])

    def with_budget(self, stage: int) -> "Scenario":
        b = dict(self.budgets)
        b["stage"] = int(stage)
        return Scenario(self.name, self.requirements, self.schedule, self.next_strip, b,
                        self.description, self.expected)

    def to_json(self) -> dict:
        sched = self.schedule.to_json()
        d: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "description": self.description,
            "schedule": sched["levels"] if "levels" in sched else sched["kind"],
            "next_strip": self.next_strip,
            "budgets": dict(self.budgets),
            "requirements": [
                {"M": t.M.to_json(),
                 "L": {"psi": t.L.psi.to_json(), "R": t.L.R.to_json()},
                 "P": t.P.to_json()}
                for t in self.requirements],
        }
        if self.expected is not None:
            d["expected"] = self.expected
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=False) + "\n"

    def __eq__(self, other):
        return isinstance(other, Scenario) and self.to_json() == other.to_json()


def _table(d: Any, loc: str) -> FunctionalTable:
    if not isinstance(d, dict):
        raise ScenarioError("expected a table object", loc)
    try:
        t = table_from_json(d)
    except TableError as exc:
        raise ScenarioError(str(exc), loc) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed table ({exc})", loc) from None
    if not isinstance(t, AxiomTable):
        # generated tables are consistent by construction, but their axioms
        # must still respect the use/step rule
        v = validate(t) if _small(t) else None
        if v is not None and not v:
            raise ScenarioError(v.reason, loc)
    return t


def _small(t: FunctionalTable) -> bool:
    return t.max_use <= 255


def scenario_from_json(d: dict, where: str = "") -> Scenario:
    if not isinstance(d, dict):
        raise ScenarioError("top level must be an object", where)
    ver = d.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {ver!r}", f"{where}schema_version")
    name = d.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioError("missing name", f"{where}name")
    sched_raw = d.get("schedule", "paper")
    try:
        if isinstance(sched_raw, list):
            schedule = Schedule("custom", [int(x) for x in sched_raw])
        else:
            schedule = Schedule(str(sched_raw))
    except ScheduleError as exc:
        raise ScenarioError(str(exc), f"{where}schedule") from None
    budgets = dict(DEFAULT_BUDGETS)
    for k, v in (d.get("budgets") or {}).items():
        if k not in DEFAULT_BUDGETS:
            raise ScenarioError(f"unknown budget {k!r}", f"{where}budgets")
        if not isinstance(v, int) or v < 0:
            raise ScenarioError("budgets must be non-negative integers", f"{where}budgets.{k}")
        budgets[k] = v
    reqs = []
    names = set()
    for i, r in enumerate(d.get("requirements", [])):
        loc = f"{where}requirements[{i}]"
        if not isinstance(r, dict):
            raise ScenarioError("expected an object", loc)
        M = _table(r.get("M", {"axioms": []}), loc + ".M")
        Ld = r.get("L") or {}
        psi = _table(Ld.get("psi", {"axioms": []}), loc + ".L.psi")
        try:
            R = PartialFunctionTable.from_rows((Ld.get("R") or {}).get("values", []),
                                               (Ld.get("R") or {}).get("name", ""))
            P = StagedCeSet((r.get("P") or {}).get("enumeration", []),
                            (r.get("P") or {}).get("name", ""))
        except (TableError, TypeError, ValueError) as exc:
            raise ScenarioError(str(exc), loc) from None
        for t in (M, psi, R, P):
            if t.name:
                if t.name in names:
                    raise ScenarioError(f"duplicate table name {t.name!r}", loc)
                names.add(t.name)
        reqs.append(Triple(M, Lowness(psi, R), P))
    return Scenario(name, reqs, schedule, bool(d.get("next_strip", False)), budgets,
                    str(d.get("description", "")), d.get("expected"))


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    try:
        d = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error: {exc.msg} (line {exc.lineno}, column {exc.colno})",
                            str(p)) from None
    return scenario_from_json(d, where=f"{p.name}:")


def loads(text: str) -> Scenario:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error: {exc.msg} (line {exc.lineno})") from None
    return scenario_from_json(d)


def bundled_dir() -> Path:
    return Path(__file__).parent / "scenarios"


def bundled(name: str) -> Scenario:
    return load_scenario(bundled_dir() / f"{name}.json")
