#!/usr/bin/env python3

"""Line, condition and branch coverage collected during simulation."""

import collections
import json
from dataclasses import dataclass, field

from .verilog_ast import Case, COVERED_TYPES, If, Ternary, walk

CoverageSummary = collections.namedtuple("CoverageSummary",
                                         ["line_pct", "condition_pct", "branch_pct"])


@dataclass
class ConditionOutcome:
    saw_true: bool = False
    saw_false: bool = False

    @property
    def covered(self):
        return self.saw_true and self.saw_false


@dataclass
class CoverageReport:
    """Counters keyed by NodeId.

    Branch keys are ``(nid, arm)`` pairs where ``arm`` is ``"then"``/``"else"``
    for an If and ``"arm<k>"``/``"default"`` for a Case. Case arms count as
    conditions under the NodeId of the CaseArm node.
    """

    line_hits: dict = field(default_factory=dict)
    condition_outcomes: dict = field(default_factory=dict)
    branch_taken: dict = field(default_factory=dict)

    @classmethod
    def for_design(cls, module):
        report = cls()
        for node in walk(module):
            if isinstance(node, COVERED_TYPES):
                report.line_hits[node.nid] = 0
            if isinstance(node, (If, Ternary)):
                report.condition_outcomes[node.cond.nid] = ConditionOutcome()
            if isinstance(node, If):
                report.branch_taken[(node.nid, "then")] = 0
                report.branch_taken[(node.nid, "else")] = 0
            elif isinstance(node, Case):
                for k, arm in enumerate(node.arms):
                    report.condition_outcomes[arm.nid] = ConditionOutcome()
                    report.branch_taken[(node.nid, f"arm{k}")] = 0
                report.branch_taken[(node.nid, "default")] = 0
        return report

    def hit(self, nid):
        self.line_hits[nid] += 1

    def record_condition(self, nid, outcome):
        entry = self.condition_outcomes.get(nid)
        if entry is None:
            return
        if outcome:
            entry.saw_true = True
        else:
            entry.saw_false = True

    def take_branch(self, nid, arm):
        self.branch_taken[(nid, arm)] += 1

    def covered_points(self):
        """Number of covered lines, fully covered conditions and taken arms."""
        return (sum(1 for v in self.line_hits.values() if v)
                + sum(1 for c in self.condition_outcomes.values() if c.covered)
                + sum(1 for v in self.branch_taken.values() if v))


def _pct(covered, total):
    return 100.0 if total == 0 else 100.0 * covered / total


def coverage_summary(report):
    """Percentages of covered statements, conditions and branch arms.

    A condition counts only once both outcomes were seen; a design without
    any conditions or branches scores 100 on that metric.
    """
    lines = report.line_hits.values()
    conditions = report.condition_outcomes.values()
    branches = report.branch_taken.values()
    return CoverageSummary(
        _pct(sum(1 for v in lines if v), len(lines)),
        _pct(sum(1 for c in conditions if c.covered), len(conditions)),
        _pct(sum(1 for v in branches if v), len(branches)),
    )


def coverage_to_json(report):
    document = {
        "lines": [{"id": nid, "hits": hits} for nid, hits in sorted(report.line_hits.items())],
        "conditions": [{"id": nid, "saw_true": c.saw_true, "saw_false": c.saw_false}
                       for nid, c in sorted(report.condition_outcomes.items())],
        "branches": [{"id": nid, "arm": arm, "hits": hits}
                     for (nid, arm), hits in sorted(report.branch_taken.items())],
    }
    return json.dumps(document, indent=2)


def coverage_from_json(text):
    document = json.loads(text)
    return CoverageReport(
        {entry["id"]: entry["hits"] for entry in document["lines"]},
        {entry["id"]: ConditionOutcome(entry["saw_true"], entry["saw_false"])
         for entry in document["conditions"]},
        {(entry["id"], entry["arm"]): entry["hits"] for entry in document["branches"]},
    )
