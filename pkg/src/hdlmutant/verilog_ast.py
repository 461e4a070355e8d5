#!/usr/bin/env python3

"""Node taxonomy for the synthesizable Verilog subset.

Every node carries a NodeId (``nid``) and an optional source span. Neither
takes part in equality, so two trees compare equal when their structure is
the same regardless of where they came from.
"""

import collections
from dataclasses import dataclass, field
from typing import List, Optional

from .errors import HdlMutantError


class FrontendError(HdlMutantError):
    """Raised when a design cannot be read into the supported subset."""


class VerilogSyntaxError(FrontendError):
    """The source text violates the grammar of the subset."""

    def __init__(self, line, col, expected):
        super().__init__(f"line {line}, column {col}: expected {expected}")
        self.line = line
        self.col = col
        self.expected = expected


class UndeclaredIdentifier(VerilogSyntaxError):
    """An expression refers to a name that is neither a port nor a net."""

    def __init__(self, name, line=0, col=0):
        super().__init__(line, col, f"a declaration for '{name}'")
        self.name = name


class UnsupportedConstruct(FrontendError):
    """Recognised Verilog that lies outside the subset."""

    def __init__(self, name):
        super().__init__(f"unsupported construct: {name}")
        self.name = name


class UnknownNode(FrontendError):
    """A NodeId does not denote a suitable node of the tree."""

    def __init__(self, nid):
        super().__init__(f"unknown node id {nid}")
        self.nid = nid


SourceSpan = collections.namedtuple("SourceSpan", ["line", "col", "end_line", "end_col"])
Edge = collections.namedtuple("Edge", ["kind", "signal"])
SignalInfo = collections.namedtuple(
    "SignalInfo", ["name", "width", "signed", "kind", "direction", "msb", "lsb"])


UNARY_OPS = ("+", "-", "!", "~", "&", "|", "^", "~&", "~|", "~^")
ARITHMETIC_OPS = ("+", "-", "*", "/", "%")
BITWISE_OPS = ("&", "|", "^", "~^")
LOGICAL_OPS = ("&&", "||")
EQUALITY_OPS = ("==", "!=")
CASE_EQUALITY_OPS = ("===", "!==")
RELATIONAL_OPS = ("<", "<=", ">", ">=")
SHIFT_OPS = ("<<", ">>", "<<<", ">>>")
BINARY_OPS = (ARITHMETIC_OPS + BITWISE_OPS + LOGICAL_OPS + EQUALITY_OPS
              + CASE_EQUALITY_OPS + RELATIONAL_OPS + SHIFT_OPS)


@dataclass
class Node:
    nid: int = field(default=-1, compare=False, repr=False, kw_only=True)
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False, kw_only=True)


# Expressions

@dataclass
class Literal(Node):
    width: int
    value: int
    signed: bool = False
    sized: bool = True


@dataclass
class Ref(Node):
    name: str


@dataclass
class BitSelect(Node):
    name: str
    index: Node


@dataclass
class PartSelect(Node):
    name: str
    msb: int
    lsb: int


@dataclass
class Concat(Node):
    parts: List[Node]


@dataclass
class Unary(Node):
    op: str
    operand: Node


@dataclass
class Binary(Node):
    op: str
    left: Node
    right: Node


@dataclass
class Ternary(Node):
    cond: Node
    if_true: Node
    if_false: Node


@dataclass
class SignCast(Node):
    signed: bool
    operand: Node


# Statements

@dataclass
class BlockingAssign(Node):
    target: Node
    value: Node


@dataclass
class NonBlockingAssign(Node):
    target: Node
    value: Node


@dataclass
class BeginEnd(Node):
    stmts: List[Node]


@dataclass
class If(Node):
    cond: Node
    then: Node
    other: Optional[Node] = None


@dataclass
class CaseArm(Node):
    labels: List[Node]
    body: Node


@dataclass
class Case(Node):
    subject: Node
    arms: List[CaseArm]
    default: Optional[Node] = None


@dataclass
class For(Node):
    var: str
    init: Node
    cond: Node
    step: Node
    body: Node


# Module level

@dataclass
class PortDecl(Node):
    direction: str
    kind: str
    name: str
    msb: int = 0
    lsb: int = 0
    signed: bool = False

    @property
    def width(self):
        return self.msb - self.lsb + 1


@dataclass
class NetDecl(Node):
    kind: str
    name: str
    msb: int = 0
    lsb: int = 0
    signed: bool = False

    @property
    def width(self):
        return self.msb - self.lsb + 1


@dataclass
class ContinuousAssign(Node):
    target: Node
    value: Node


@dataclass
class AlwaysBlock(Node):
    edges: list
    body: Node

    @property
    def combinational(self):
        return not self.edges


@dataclass
class InitialBlock(Node):
    body: Node


@dataclass
class ModuleAst(Node):
    name: str
    ports: List[PortDecl]
    declarations: List[NetDecl]
    items: List[Node]


EXPRESSION_TYPES = (Literal, Ref, BitSelect, PartSelect, Concat, Unary, Binary, Ternary, SignCast)
STATEMENT_TYPES = (BlockingAssign, NonBlockingAssign, If, Case, For, BeginEnd)
ASSIGNMENT_TYPES = (BlockingAssign, NonBlockingAssign, ContinuousAssign)
# Everything that owns a line-coverage counter.
COVERED_TYPES = STATEMENT_TYPES + (ContinuousAssign,)

_NODE_FIELDS = {}


def _child_fields(cls):
    names = _NODE_FIELDS.get(cls)
    if names is None:
        names = tuple(f for f in cls.__dataclass_fields__ if f not in ("nid", "span"))
        _NODE_FIELDS[cls] = names
    return names


def children(node):
    """Yield the direct child nodes of ``node`` in source order."""
    for name in _child_fields(type(node)):
        value = getattr(node, name)
        if isinstance(value, Node):
            yield value
        elif isinstance(value, list):
            for item in value:
                if isinstance(item, Node):
                    yield item


def walk(node):
    """Pre-order traversal of ``node`` and all its descendants."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(list(children(current))))


def child_statements(node):
    """Statements nested directly below ``node`` (through case arms)."""
    for child in children(node):
        if isinstance(child, CaseArm):
            yield child.body
        elif isinstance(child, STATEMENT_TYPES):
            yield child


def statements(module):
    """All nodes of ``module`` that carry a line-coverage counter."""
    return [n for n in walk(module) if isinstance(n, COVERED_TYPES)]


def statement_count(module):
    """Assignments and control structures, begin-end wrappers excluded."""
    return sum(1 for n in walk(module)
               if isinstance(n, COVERED_TYPES) and not isinstance(n, BeginEnd))


def number_nodes(module, start=0):
    """Assign consecutive pre-order NodeIds to every node of ``module``."""
    nid = start
    for node in walk(module):
        node.nid = nid
        nid += 1
    return module


def next_nid(module):
    return max((n.nid for n in walk(module)), default=-1) + 1


def number_new_nodes(module):
    """Give every unnumbered node (nid -1) an id above all existing ones."""
    nid = next_nid(module)
    for node in walk(module):
        if node.nid < 0:
            node.nid = nid
            nid += 1
    return module


def node_index(module):
    return {n.nid: n for n in walk(module)}


def find_node(module, nid):
    for node in walk(module):
        if node.nid == nid:
            return node
    raise UnknownNode(nid)


def parent_links(module):
    """Map each NodeId to ``(parent, field name, list index or None)``."""
    links = {}
    for parent in walk(module):
        for name in _child_fields(type(parent)):
            value = getattr(parent, name)
            if isinstance(value, Node):
                links[value.nid] = (parent, name, None)
            elif isinstance(value, list):
                for idx, item in enumerate(value):
                    if isinstance(item, Node):
                        links[item.nid] = (parent, name, idx)
    return links


def classify_node(nid, module):
    """Classify a statement for mutation purposes.

    .. Keyword Arguments:
    :param nid: NodeId of a statement.
    :param module: The ModuleAst that holds it.

    .. Returns:
    :returns: ``"leaf"`` for assignments, ``"parent"`` for control structures.
    """
    node = find_node(module, nid)
    if isinstance(node, ASSIGNMENT_TYPES):
        return "leaf"
    if isinstance(node, STATEMENT_TYPES):
        return "parent"
    raise UnknownNode(nid)


def _get_slot(parent, name, idx):
    value = getattr(parent, name)
    return value[idx] if idx is not None else value


def _set_slot(parent, name, idx, node):
    if idx is None:
        setattr(parent, name, node)
    else:
        getattr(parent, name)[idx] = node


def remove_statement(module, nid):
    """Delete a statement or module item, in place.

    Members of a begin-end or of the module item list disappear, an else
    branch is dropped and any other single-statement slot keeps an empty
    begin-end.
    """
    links = parent_links(module)
    if nid not in links:
        raise UnknownNode(nid)
    parent, name, idx = links[nid]
    if idx is not None and name in ("stmts", "items"):
        del getattr(parent, name)[idx]
    elif isinstance(parent, If) and name == "other":
        parent.other = None
    else:
        _set_slot(parent, name, idx, BeginEnd([]))
    return number_new_nodes(module)


def remove_declaration(module, name):
    module.declarations = [d for d in module.declarations if d.name != name]
    return module


def insert_statements(module, nid, new_stmts, before):
    """Place ``new_stmts`` next to statement ``nid``, in place.

    A site that is not a begin-end member is first promoted into a fresh
    begin-end so the new statements become its siblings.
    """
    links = parent_links(module)
    if nid not in links:
        raise UnknownNode(nid)
    parent, name, idx = links[nid]
    if isinstance(parent, BeginEnd):
        at = idx if before else idx + 1
        parent.stmts[at:at] = list(new_stmts)
        return number_new_nodes(module)
    site = _get_slot(parent, name, idx)
    stmts = list(new_stmts) + [site] if before else [site] + list(new_stmts)
    _set_slot(parent, name, idx, BeginEnd(stmts))
    return number_new_nodes(module)


def replace_node(module, nid, new_node):
    """Swap the subtree at ``nid`` for ``new_node``, in place."""
    links = parent_links(module)
    if nid not in links:
        raise UnknownNode(nid)
    parent, name, idx = links[nid]
    _set_slot(parent, name, idx, new_node)
    return module


def enclosing_item(module, nid):
    """The module item (assign, always or initial block) containing ``nid``."""
    for item in module.items:
        if any(n.nid == nid for n in walk(item)):
            return item
    raise UnknownNode(nid)


def signal_table(module):
    """Name → SignalInfo for every port and declared net."""
    table = {}
    for port in module.ports:
        table[port.name] = SignalInfo(port.name, port.width, port.signed, port.kind,
                                      port.direction, port.msb, port.lsb)
    for decl in module.declarations:
        table[decl.name] = SignalInfo(decl.name, decl.width, decl.signed, decl.kind,
                                      None, decl.msb, decl.lsb)
    return table


def lvalue_names(target):
    if isinstance(target, Concat):
        names = set()
        for part in target.parts:
            names |= lvalue_names(part)
        return names
    return {target.name}


def expression_names(expr):
    return {n.name for n in walk(expr) if isinstance(n, (Ref, BitSelect, PartSelect))}


def _target_reads(target):
    names = set()
    for node in walk(target):
        if isinstance(node, BitSelect):
            names |= expression_names(node.index)
    return names


def direct_reads(node):
    """Names read by ``node`` itself, excluding nested statements."""
    if isinstance(node, ASSIGNMENT_TYPES):
        return expression_names(node.value) | _target_reads(node.target)
    if isinstance(node, If):
        return expression_names(node.cond)
    if isinstance(node, Case):
        names = expression_names(node.subject)
        for arm in node.arms:
            for label in arm.labels:
                names |= expression_names(label)
        return names
    if isinstance(node, For):
        return (expression_names(node.init) | expression_names(node.cond)
                | expression_names(node.step))
    if isinstance(node, AlwaysBlock):
        return {edge.signal for edge in node.edges}
    return set()


def direct_writes(node):
    """Names assigned by ``node`` itself, excluding nested statements."""
    if isinstance(node, ASSIGNMENT_TYPES):
        return lvalue_names(node.target)
    if isinstance(node, For):
        return {node.var}
    return set()


def names_read(node):
    names = set()
    for sub in walk(node):
        names |= direct_reads(sub)
    return names


def names_written(node):
    names = set()
    for sub in walk(node):
        names |= direct_writes(sub)
    return names
