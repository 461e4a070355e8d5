#!/usr/bin/env python3

"""Zombie-logic marking.

A zombie is a statement subtree that never executed under the applied
stimulus. It is static when some guard on its path folds to constant false,
dynamic otherwise.
"""

import collections
from dataclasses import dataclass, field

from .errors import HdlMutantError
from .semantics import Evaluator, constant_value
from .verilog_ast import (COVERED_TYPES, STATEMENT_TYPES, Binary, CaseArm, Case, For, If, Ref,
                          child_statements, direct_reads, direct_writes, find_node,
                          parent_links, signal_table, walk)

STATIC = "static"
DYNAMIC = "dynamic"


class CoverageMismatch(HdlMutantError):
    """Coverage keys do not match the statements of the design."""


class NotZombie(HdlMutantError):
    """The node executed, or is not a statement at all."""

    def __init__(self, nid):
        super().__init__(f"node {nid} is not zombie logic")
        self.nid = nid


@dataclass(frozen=True)
class ZombieAnnotation:
    zombie_nodes: dict = field(default_factory=dict)
    protected_nodes: frozenset = frozenset()

    def is_site(self, nid, inside=False):
        """A mutation candidate: a zombie root, or any statement below one."""
        if nid in self.protected_nodes:
            return False
        return inside or nid in self.zombie_nodes


SignalUsage = collections.namedtuple("SignalUsage", ["writers", "readers"])


def signal_usage(module):
    """Which statement (or always block) writes and reads each signal."""
    writers = collections.defaultdict(set)
    readers = collections.defaultdict(set)
    for node in walk(module):
        for name in direct_writes(node):
            writers[name].add(node.nid)
        for name in direct_reads(node):
            readers[name].add(node.nid)
    return SignalUsage(writers, readers)


def subtree_ids(node):
    return {n.nid for n in walk(node)}


def protected_nodes(module, usage=None):
    """Statements whose removal would delete the last driver of a signal
    that is an output or is read elsewhere."""
    usage = usage or signal_usage(module)
    outputs = {p.name for p in module.ports if p.direction == "output"}
    protected = set()
    for node in walk(module):
        if not isinstance(node, COVERED_TYPES):
            continue
        inside = subtree_ids(node)
        written = set()
        for sub in walk(node):
            written |= direct_writes(sub)
        for name in written:
            if usage.writers[name] <= inside and (
                    name in outputs or usage.readers[name] - inside):
                protected.add(node.nid)
                break
    return frozenset(protected)


def zombie_local_signals(module, nid, usage=None):
    """Regs written and read only inside the subtree at ``nid``."""
    usage = usage or signal_usage(module)
    node = find_node(module, nid)
    inside = subtree_ids(node)
    outputs = {p.name for p in module.ports if p.direction == "output"}
    info = signal_table(module)
    local = []
    for name in sorted(set().union(*(direct_writes(n) for n in walk(node)))):
        if name in outputs or info[name].kind != "reg":
            continue
        if usage.writers[name] <= inside and usage.readers[name] <= inside:
            local.append(name)
    return local


def _all_zero(node, hits, cache):
    if node.nid in cache:
        return cache[node.nid]
    zero = hits.get(node.nid, 0) == 0 and all(
        _all_zero(child, hits, cache) for child in child_statements(node))
    cache[node.nid] = zero
    return zero


def mark_zombie(module, cov):
    """Annotate the zombie sites of ``module`` from its coverage.

    .. Keyword Arguments:
    :param module: The design the coverage was collected on.
    :param cov: CoverageReport from simulating exactly this design.

    .. Returns:
    :returns: ZombieAnnotation with maximal zero-hit, non-protected statements.
    """
    expected = {n.nid for n in walk(module) if isinstance(n, COVERED_TYPES)}
    if set(cov.line_hits) != expected:
        raise CoverageMismatch("coverage was not collected on this design")
    protected = protected_nodes(module)
    zombies = {}
    cache = {}

    def visit(node):
        if _all_zero(node, cov.line_hits, cache) and node.nid not in protected:
            zombies[node.nid] = classify_zombie(node.nid, module)
            return
        for child in child_statements(node):
            visit(child)

    for item in module.items:
        body = getattr(item, "body", item)
        visit(body)
    return ZombieAnnotation(zombies, protected)


def _guard_false(parent, field_name, info):
    """True when the guard from ``parent`` into its ``field_name`` slot folds to false."""
    if isinstance(parent, If):
        value = constant_value(parent.cond, info)
        if value is None:
            return False
        return (value == 0) if field_name == "then" else (value != 0)
    if isinstance(parent, For):
        if constant_value(parent.init, info) is None:
            return False
        start = Evaluator(info).assigned_value(Ref(parent.var), parent.init)
        return constant_value(parent.cond, info, {parent.var: start}) == 0
    return False


def _case_guard_false(case, arm_index, info):
    """Arm ``arm_index`` (None for default) can never be selected."""
    subject = constant_value(case.subject, info)
    if subject is None:
        return False
    for k, arm in enumerate(case.arms):
        if any(constant_value(Binary("==", case.subject, label), info) for label in arm.labels):
            return k != arm_index
    return arm_index is not None


def classify_zombie(nid, module, cov=None):
    """Static when a guard on the path to ``nid`` folds to false.

    .. Keyword Arguments:
    :param nid: NodeId of a zombie statement.
    :param module: The design.
    :param cov: Optional coverage; when given the node must have zero hits.

    .. Returns:
    :returns: ``"static"`` or ``"dynamic"``
    """
    node = find_node(module, nid)
    if not isinstance(node, STATEMENT_TYPES):
        raise NotZombie(nid)
    if cov is not None and cov.line_hits.get(nid, 0) != 0:
        raise NotZombie(nid)
    info = signal_table(module)
    links = parent_links(module)
    current = node
    while current.nid in links:
        parent, field_name, _ = links[current.nid]
        if isinstance(parent, CaseArm):
            case, _, arm_index = links[parent.nid]
            if _case_guard_false(case, arm_index, info):
                return STATIC
        elif isinstance(parent, Case) and field_name == "default":
            if _case_guard_false(parent, None, info):
                return STATIC
        elif _guard_false(parent, field_name, info):
            return STATIC
        current = parent
    return DYNAMIC
