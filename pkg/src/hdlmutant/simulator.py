#!/usr/bin/env python3

"""Event-driven two-state simulator for the Verilog subset.

Each schedule time is settled in delta rounds: processes sensitive to the
signals changed in the previous round run in module-item order, blocking
writes land at once and non-blocking writes are committed only when no
process is left to run. Outputs are sampled after settling.
"""

import collections
import logging
from dataclasses import dataclass

from .coverage import CoverageReport
from .errors import HdlMutantError
from .semantics import Evaluator, mask, split_value
from .verilog_ast import (AlwaysBlock, BeginEnd, Binary, BlockingAssign, Case, ContinuousAssign,
                          For, If, InitialBlock, NonBlockingAssign, Ref, names_read,
                          signal_table)


class SimulationError(HdlMutantError):
    """A design could not be simulated to completion."""


class CombinationalLoop(SimulationError):
    """Delta rounds at one time step did not reach a fixpoint."""

    def __init__(self, time, deltas):
        super().__init__(f"no fixpoint after {deltas} delta rounds at time {time}")
        self.time = time


class StepLimitExceeded(SimulationError):
    """Statement or loop-iteration budget exhausted."""


class ShapeMismatch(SimulationError):
    """Two traces do not share ports or sample times."""


StepLimit = collections.namedtuple("StepLimit",
                                   ["max_deltas", "max_statements", "max_loop_iterations"],
                                   defaults=(1000, 5_000_000, 65536))

Equivalent = collections.namedtuple("Equivalent", [])
Mismatch = collections.namedtuple("Mismatch",
                                  ["first_time", "port", "value_a", "value_b", "ports"])


@dataclass(frozen=True)
class Trace:
    sample_times: tuple
    outputs: dict
    final_time: int

    def to_dict(self):
        return {"sample_times": list(self.sample_times),
                "outputs": {k: list(v) for k, v in self.outputs.items()},
                "final_time": self.final_time}


Process = collections.namedtuple("Process", ["kind", "node", "reads", "edges"])


def _processes(module):
    procs = []
    for item in module.items:
        if isinstance(item, ContinuousAssign):
            procs.append(Process("assign", item, frozenset(names_read(item)), ()))
        elif isinstance(item, AlwaysBlock) and item.combinational:
            procs.append(Process("comb", item, frozenset(names_read(item.body)), ()))
        elif isinstance(item, AlwaysBlock):
            procs.append(Process("edge", item, frozenset(), tuple(item.edges)))
        elif isinstance(item, InitialBlock):
            procs.append(Process("initial", item, frozenset(), ()))
    return procs


class Simulator:
    """Owns the state of one simulation run."""

    def __init__(self, design, limits=None):
        self.design = design
        self.limits = limits or StepLimit()
        self.info = signal_table(design)
        self.values = {name: 0 for name in self.info}
        self.coverage = CoverageReport.for_design(design)
        self.evaluator = Evaluator(self.info, self.values.__getitem__,
                                   self.coverage.record_condition)
        self.processes = _processes(design)
        self.pending = []
        self.executed = 0
        self.now = 0
        self._old = {}

    def run(self, tb):
        port_names = [p.name for p in self.design.ports]
        if [p.name for p in tb.ports] != port_names:
            raise SimulationError("testbench ports do not match the design")
        steps = {step.time: step.values for step in tb.schedule}
        times = set(steps) | {0}
        if tb.clock is not None:
            times |= set(range(tb.clock_half_period, tb.finish_time + 1, tb.clock_half_period))
        outputs = {p.name: [] for p in tb.ports if p.direction == "output"}
        for time in sorted(times):
            self.now = time
            self._old = {}
            for name, value in steps.get(time, {}).items():
                self._write(name, 0, self.info[name].width, value)
            if tb.clock is not None:
                self._write(tb.clock, 0, 1, tb.clock_value(time))
            forced = ()
            if time == 0:
                forced = [i for i, p in enumerate(self.processes) if p.kind != "edge"]
            self._settle(self._changes(), forced)
            if time in steps:
                for name, samples in outputs.items():
                    samples.append(self.values[name])
        trace = Trace(tuple(tb.sample_times),
                      {name: tuple(samples) for name, samples in outputs.items()},
                      tb.finish_time)
        return trace, self.coverage

    def _write(self, name, offset, width, value):
        old = self.values[name]
        field_mask = mask(width) << offset
        new = ((old & ~field_mask) | ((value & mask(width)) << offset)) & mask(self.info[name].width)
        if new != old:
            self._old.setdefault(name, old)
            self.values[name] = new

    def _changes(self):
        changed = {n: o for n, o in self._old.items() if self.values[n] != o}
        self._old = {}
        return changed

    def _triggered(self, proc, changed):
        if proc.kind in ("assign", "comb"):
            return not proc.reads.isdisjoint(changed)
        if proc.kind == "edge":
            for edge in proc.edges:
                if edge.signal in changed:
                    before = changed[edge.signal] & 1
                    after = self.values[edge.signal] & 1
                    if edge.kind == "posedge" and (before, after) == (0, 1):
                        return True
                    if edge.kind == "negedge" and (before, after) == (1, 0):
                        return True
        return False

    def _settle(self, changed, forced=()):
        forced = set(forced)
        deltas = 0
        while True:
            active = [p for i, p in enumerate(self.processes)
                      if i in forced or self._triggered(p, changed)]
            forced = set()
            if not active:
                if not self.pending:
                    return
                pending, self.pending = self.pending, []
                for piece in pending:
                    self._write(*piece)
            else:
                for proc in active:
                    self._run(proc)
            deltas += 1
            if deltas > self.limits.max_deltas:
                logging.debug("Delta cap hit at time %d", self.now)
                raise CombinationalLoop(self.now, deltas)
            changed = self._changes()

    def _run(self, proc):
        if proc.kind == "assign":
            node = proc.node
            self._count(node)
            value = self.evaluator.assigned_value(node.target, node.value)
            for piece in split_value(self.evaluator.lvalue_pieces(node.target), value):
                self._write(*piece)
        else:
            self._exec(proc.node.body)

    def _count(self, node):
        self.executed += 1
        if self.executed > self.limits.max_statements:
            raise StepLimitExceeded(f"more than {self.limits.max_statements} statements")
        self.coverage.hit(node.nid)

    def _exec(self, stmt):
        self._count(stmt)
        ev = self.evaluator
        if isinstance(stmt, BlockingAssign):
            value = ev.assigned_value(stmt.target, stmt.value)
            for piece in split_value(ev.lvalue_pieces(stmt.target), value):
                self._write(*piece)
        elif isinstance(stmt, NonBlockingAssign):
            value = ev.assigned_value(stmt.target, stmt.value)
            self.pending.extend(split_value(ev.lvalue_pieces(stmt.target), value))
        elif isinstance(stmt, BeginEnd):
            for sub in stmt.stmts:
                self._exec(sub)
        elif isinstance(stmt, If):
            outcome = ev.truth(stmt.cond)
            self.coverage.record_condition(stmt.cond.nid, outcome)
            if outcome:
                self.coverage.take_branch(stmt.nid, "then")
                self._exec(stmt.then)
            else:
                self.coverage.take_branch(stmt.nid, "else")
                if stmt.other is not None:
                    self._exec(stmt.other)
        elif isinstance(stmt, Case):
            self._exec_case(stmt)
        elif isinstance(stmt, For):
            self._exec_for(stmt)
        else:
            raise SimulationError(f"cannot execute {type(stmt).__name__}")

    def _exec_case(self, stmt):
        ev = self.evaluator
        taken = None
        for k, arm in enumerate(stmt.arms):
            matched = False
            if taken is None:
                for label in arm.labels:
                    if ev.value(Binary("==", stmt.subject, label), 1, False):
                        matched = True
                        break
                self.coverage.record_condition(arm.nid, matched)
            if matched:
                taken = k
        if taken is not None:
            self.coverage.take_branch(stmt.nid, f"arm{taken}")
            self._exec(stmt.arms[taken].body)
        else:
            self.coverage.take_branch(stmt.nid, "default")
            if stmt.default is not None:
                self._exec(stmt.default)

    def _exec_for(self, stmt):
        ev = self.evaluator
        target = Ref(stmt.var)
        self._write(stmt.var, 0, self.info[stmt.var].width, ev.assigned_value(target, stmt.init))
        iterations = 0
        while ev.truth(stmt.cond):
            iterations += 1
            if iterations > self.limits.max_loop_iterations:
                raise StepLimitExceeded(f"for loop over {stmt.var} exceeded "
                                        f"{self.limits.max_loop_iterations} iterations")
            self._exec(stmt.body)
            self._write(stmt.var, 0, self.info[stmt.var].width,
                        ev.assigned_value(target, stmt.step))



def simulate(design, tb, limits=None):
    """Run ``design`` under ``tb``.

    .. Keyword Arguments:
    :param design: ModuleAst to simulate; registers start at zero.
    :param tb: TestbenchAst built for the same ports.
    :param limits: Optional StepLimit.

    .. Returns:
    :returns: ``(Trace, CoverageReport)``
    """
    return Simulator(design, limits).run(tb)


def compare_traces(a, b):
    """Compare two traces sample by sample.

    .. Returns:
    :returns: ``Equivalent()`` or a ``Mismatch`` naming the earliest
        diverging time, the first diverging port there (port order), both
        values and every port that ever diverges.
    """
    if tuple(a.sample_times) != tuple(b.sample_times) or list(a.outputs) != list(b.outputs):
        raise ShapeMismatch("traces differ in ports or sample times")
    for name in a.outputs:
        if len(a.outputs[name]) != len(b.outputs[name]):
            raise ShapeMismatch(f"port {name} has traces of different lengths")
    diverging = [name for name in a.outputs if a.outputs[name] != b.outputs[name]]
    if not diverging:
        return Equivalent()
    for index, time in enumerate(a.sample_times):
        for name in a.outputs:
            if a.outputs[name][index] != b.outputs[name][index]:
                return Mismatch(time, name, a.outputs[name][index], b.outputs[name][index],
                                tuple(sorted(diverging)))
    raise AssertionError("unreachable")
