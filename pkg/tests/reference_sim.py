"""Cycle-based reference interpreter used as an oracle for the simulator.

It only handles designs shaped like the ones ``design_gen`` produces:
latch-free acyclic combinational logic plus ``posedge clk`` blocks. At each
time the combinational logic is settled by full passes in item order, edge
blocks run with their non-blocking writes collected, the writes are
committed and the logic is settled again.
"""

from hdlmutant.semantics import Evaluator, mask, split_value
from hdlmutant.verilog_ast import (AlwaysBlock, BeginEnd, Binary, BlockingAssign, Case,
                                   ContinuousAssign, For, If, NonBlockingAssign, Ref,
                                   signal_table)

MAX_PASSES = 200


class ReferenceSimulator:
    def __init__(self, design):
        self.design = design
        self.info = signal_table(design)
        self.values = {name: 0 for name in self.info}
        self.ev = Evaluator(self.info, self.values.__getitem__)
        self.comb = [item for item in design.items
                     if isinstance(item, ContinuousAssign)
                     or (isinstance(item, AlwaysBlock) and item.combinational)]
        self.edge = [item for item in design.items
                     if isinstance(item, AlwaysBlock) and not item.combinational]
        self.nba = []

    def write(self, name, offset, width, value):
        field = mask(width) << offset
        old = self.values[name]
        self.values[name] = ((old & ~field) | ((value & mask(width)) << offset)) \
            & mask(self.info[name].width)

    def assign(self, target, expr):
        value = self.ev.assigned_value(target, expr)
        for piece in split_value(self.ev.lvalue_pieces(target), value):
            self.write(*piece)

    def settle(self):
        for _ in range(MAX_PASSES):
            before = dict(self.values)
            for item in self.comb:
                if isinstance(item, ContinuousAssign):
                    self.assign(item.target, item.value)
                else:
                    self.execute(item.body)
            if self.values == before:
                return
        raise RuntimeError("combinational logic did not settle")

    def execute(self, stmt):
        if isinstance(stmt, BlockingAssign):
            self.assign(stmt.target, stmt.value)
        elif isinstance(stmt, NonBlockingAssign):
            value = self.ev.assigned_value(stmt.target, stmt.value)
            self.nba.extend(split_value(self.ev.lvalue_pieces(stmt.target), value))
        elif isinstance(stmt, BeginEnd):
            for sub in stmt.stmts:
                self.execute(sub)
        elif isinstance(stmt, If):
            if self.ev.truth(stmt.cond):
                self.execute(stmt.then)
            elif stmt.other is not None:
                self.execute(stmt.other)
        elif isinstance(stmt, Case):
            for arm in stmt.arms:
                if any(self.ev.value(Binary("==", stmt.subject, label), 1, False)
                       for label in arm.labels):
                    self.execute(arm.body)
                    return
            if stmt.default is not None:
                self.execute(stmt.default)
        elif isinstance(stmt, For):
            self.assign(Ref(stmt.var), stmt.init)
            while self.ev.truth(stmt.cond):
                self.execute(stmt.body)
                self.assign(Ref(stmt.var), stmt.step)
        else:
            raise TypeError(type(stmt).__name__)

    def run(self, tb):
        steps = {step.time: step.values for step in tb.schedule}
        times = set(steps) | {0}
        if tb.clock is not None:
            times |= set(range(tb.clock_half_period, tb.finish_time + 1, tb.clock_half_period))
        outputs = {p.name: [] for p in tb.ports if p.direction == "output"}
        for time in sorted(times):
            for name, value in steps.get(time, {}).items():
                self.write(name, 0, self.info[name].width, value)
            rose = False
            if tb.clock is not None:
                level = tb.clock_value(time)
                rose = self.values[tb.clock] == 0 and level == 1
                self.values[tb.clock] = level
            self.settle()
            if rose:
                for item in self.edge:
                    if any(e.kind == "posedge" and e.signal == tb.clock for e in item.edges):
                        self.execute(item.body)
                pending, self.nba = self.nba, []
                for piece in pending:
                    self.write(*piece)
                self.settle()
            if time in steps:
                for name, samples in outputs.items():
                    samples.append(self.values[name])
        return {name: tuple(samples) for name, samples in outputs.items()}


def reference_outputs(design, tb):
    return ReferenceSimulator(design).run(tb)
