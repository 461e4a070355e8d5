#!/usr/bin/env python3

"""LALR grammar for the synthesizable Verilog subset and its semantic checks.

Bodies of always/initial blocks, if/else branches, case arms, defaults and
for loops are canonicalised into begin-end blocks while parsing, which is
what lets ``parse(emit(ast)) == ast`` hold for every tree.
"""

import logging
import threading

from ply import yacc

from .semantics import Evaluator, constant_value
from .verilog_ast import (AlwaysBlock, BeginEnd, Binary, BitSelect, BlockingAssign, Case,
                          CaseArm, Concat, ContinuousAssign, Edge, For, If, InitialBlock,
                          Literal, ModuleAst, NetDecl, NonBlockingAssign, PartSelect,
                          PortDecl, Ref, SignCast, Ternary, UndeclaredIdentifier, Unary,
                          UnsupportedConstruct, VerilogSyntaxError, classify_node,
                          expression_names, number_nodes, signal_table, walk)
from .verilog_lexer import VerilogLexer

__all__ = ["parse", "classify_node"]

MAX_WIDTH = 64
MAX_LOOP_ITERATIONS = 65536


def _block(stmt):
    if isinstance(stmt, BeginEnd):
        return stmt
    return BeginEnd([stmt], span=stmt.span)


class VerilogParser:
    """PLY grammar object; not re-entrant, see ``parse`` for locking."""

    tokens = VerilogLexer.tokens
    start = "module_def"

    precedence = (
        ("nonassoc", "IFX"),
        ("nonassoc", "ELSE"),
        ("right", "COND", "COLON"),
        ("left", "LOR"),
        ("left", "LAND"),
        ("left", "OR"),
        ("left", "XOR", "XNOR"),
        ("left", "AND"),
        ("left", "EQ", "NE", "EQL", "NEL"),
        ("left", "LT", "GT", "LE", "GE"),
        ("left", "LSHIFT", "RSHIFT", "LSHIFTA", "RSHIFTA"),
        ("left", "PLUS", "MINUS"),
        ("left", "TIMES", "DIVIDE", "MOD"),
        ("right", "UMINUS", "UPLUS", "ULNOT", "UNOT", "UAND", "UOR", "UXOR",
         "UNAND", "UNOR", "UXNOR"),
    )

    def __init__(self):
        self.lexer = VerilogLexer()
        self.parser = yacc.yacc(module=self, debug=False, write_tables=False,
                                errorlog=yacc.NullLogger())

    def parse(self, text):
        return self.parser.parse(text, lexer=self.lexer, tracking=True)

    def _span(self, p, first=1, last=None):
        last = len(p) - 1 if last is None else last
        return self.lexer.span(p.lexspan(first)[0], p.lexspan(last)[1])

    # Module structure

    def p_module_def(self, p):
        "module_def : MODULE ID port_header SEMICOLON module_items ENDMODULE"
        ports = self._resolve_ports(p[3])
        declarations, items = [], []
        for entry in p[5]:
            if isinstance(entry, list):
                declarations.extend(entry)
            else:
                items.append(entry)
        p[0] = ModuleAst(p[2], ports, declarations, items, span=self._span(p))

    def p_port_header(self, p):
        """port_header : LPAREN port_list RPAREN
                       | LPAREN RPAREN
                       | empty"""
        p[0] = p[2] if len(p) == 4 else []

    def p_port_list(self, p):
        """port_list : port_list COMMA port_item
                     | port_item"""
        p[0] = p[1] + [p[3]] if len(p) == 4 else [p[1]]

    def p_port_item_full(self, p):
        "port_item : direction net_type_opt signed_opt range_opt ID"
        msb, lsb = p[4] if p[4] else (0, 0)
        p[0] = PortDecl(p[1], p[2] or "wire", p[5], msb, lsb, bool(p[3]), span=self._span(p))

    def p_port_item_bare(self, p):
        "port_item : ID"
        p[0] = PortDecl(None, None, p[1], span=self._span(p))

    def p_direction(self, p):
        """direction : INPUT
                     | OUTPUT"""
        p[0] = p[1]

    def p_net_type_opt(self, p):
        """net_type_opt : WIRE
                        | REG
                        | empty"""
        p[0] = p[1]

    def p_signed_opt(self, p):
        """signed_opt : SIGNED
                      | empty"""
        p[0] = p[1]

    def p_range_opt(self, p):
        """range_opt : LBRACKET NUMBER COLON NUMBER RBRACKET
                     | empty"""
        if len(p) == 2:
            p[0] = None
            return
        msb, lsb = p[2].value, p[4].value
        if msb < lsb:
            raise UnsupportedConstruct("ascending range")
        if msb - lsb + 1 > MAX_WIDTH:
            raise UnsupportedConstruct(f"width {msb - lsb + 1} above {MAX_WIDTH} bits")
        p[0] = (msb, lsb)

    def p_empty(self, p):
        "empty :"
        p[0] = None

    def p_module_items(self, p):
        """module_items : module_items module_item
                        | empty"""
        p[0] = p[1] + [p[2]] if len(p) == 3 else []

    def p_module_item(self, p):
        """module_item : net_decl
                       | cont_assign
                       | always_block
                       | initial_block"""
        p[0] = p[1]

    def p_net_decl(self, p):
        """net_decl : WIRE signed_opt range_opt id_list SEMICOLON
                    | REG signed_opt range_opt id_list SEMICOLON"""
        msb, lsb = p[3] if p[3] else (0, 0)
        span = self._span(p)
        p[0] = [NetDecl(p[1], name, msb, lsb, bool(p[2]), span=span) for name in p[4]]

    def p_net_decl_integer(self, p):
        "net_decl : INTEGER id_list SEMICOLON"
        span = self._span(p)
        p[0] = [NetDecl("reg", name, 31, 0, True, span=span) for name in p[2]]

    def p_id_list(self, p):
        """id_list : id_list COMMA ID
                   | ID"""
        p[0] = p[1] + [p[3]] if len(p) == 4 else [p[1]]

    def p_cont_assign(self, p):
        "cont_assign : ASSIGN lvalue EQUALS expression SEMICOLON"
        p[0] = ContinuousAssign(p[2], p[4], span=self._span(p))

    def p_always_comb(self, p):
        """always_block : ALWAYS AT TIMES statement
                        | ALWAYS AT LPAREN TIMES RPAREN statement"""
        p[0] = AlwaysBlock([], _block(p[len(p) - 1]), span=self._span(p))

    def p_always_edges(self, p):
        "always_block : ALWAYS AT LPAREN event_list RPAREN statement"
        p[0] = AlwaysBlock(p[4], _block(p[6]), span=self._span(p))

    def p_event_list(self, p):
        """event_list : event_list EVOR event
                      | event_list COMMA event
                      | event"""
        p[0] = p[1] + [p[3]] if len(p) == 4 else [p[1]]

    def p_event_edge(self, p):
        """event : POSEDGE ID
                 | NEGEDGE ID"""
        p[0] = Edge(p[1], p[2])

    def p_event_level(self, p):
        "event : ID"
        raise UnsupportedConstruct("level-sensitive event list")

    def p_initial_block(self, p):
        "initial_block : INITIAL statement"
        p[0] = InitialBlock(_block(p[2]), span=self._span(p))

    # Statements

    def p_statement(self, p):
        """statement : blocking_assign
                     | nonblocking_assign
                     | if_statement
                     | case_statement
                     | for_statement
                     | block"""
        p[0] = p[1]

    def p_blocking_assign(self, p):
        "blocking_assign : lvalue EQUALS expression SEMICOLON"
        p[0] = BlockingAssign(p[1], p[3], span=self._span(p))

    def p_nonblocking_assign(self, p):
        "nonblocking_assign : lvalue LE expression SEMICOLON"
        p[0] = NonBlockingAssign(p[1], p[3], span=self._span(p))

    def p_block(self, p):
        "block : BEGIN statements END"
        p[0] = BeginEnd(p[2], span=self._span(p))

    def p_block_named(self, p):
        "block : BEGIN COLON ID statements END"
        raise UnsupportedConstruct("named block")

    def p_statements(self, p):
        """statements : statements statement
                      | empty"""
        p[0] = p[1] + [p[2]] if len(p) == 3 else []

    def p_if(self, p):
        "if_statement : IF LPAREN expression RPAREN statement %prec IFX"
        p[0] = If(p[3], _block(p[5]), None, span=self._span(p))

    def p_if_else(self, p):
        "if_statement : IF LPAREN expression RPAREN statement ELSE statement"
        p[0] = If(p[3], _block(p[5]), _block(p[7]), span=self._span(p))

    def p_case(self, p):
        "case_statement : CASE LPAREN expression RPAREN case_items ENDCASE"
        arms = [item for item in p[5] if isinstance(item, CaseArm)]
        defaults = [item for item in p[5] if not isinstance(item, CaseArm)]
        if len(defaults) > 1:
            line, col = self.lexer.position(p.lexpos(1))
            raise VerilogSyntaxError(line, col, "at most one default arm")
        default = defaults[0] if defaults else None
        p[0] = Case(p[3], arms, default, span=self._span(p))

    def p_case_items(self, p):
        """case_items : case_items case_item
                      | case_item"""
        p[0] = p[1] + [p[2]] if len(p) == 3 else [p[1]]

    def p_case_item(self, p):
        "case_item : expression_list COLON statement"
        p[0] = CaseArm(p[1], _block(p[3]), span=self._span(p))

    def p_case_default(self, p):
        """case_item : DEFAULT COLON statement
                     | DEFAULT statement"""
        p[0] = _block(p[len(p) - 1])

    def p_for(self, p):
        ("for_statement : FOR LPAREN ID EQUALS expression SEMICOLON expression "
         "SEMICOLON ID EQUALS expression RPAREN statement")
        if p[3] != p[9]:
            line, col = self.lexer.position(p.lexpos(9))
            raise VerilogSyntaxError(line, col, f"the loop variable '{p[3]}'")
        p[0] = For(p[3], p[5], p[7], p[11], _block(p[13]), span=self._span(p))

    # Lvalues and expressions

    def p_lvalue_ref(self, p):
        "lvalue : ID"
        p[0] = Ref(p[1], span=self._span(p))

    def p_lvalue_bit(self, p):
        "lvalue : ID LBRACKET expression RBRACKET"
        p[0] = BitSelect(p[1], p[3], span=self._span(p))

    def p_lvalue_part(self, p):
        "lvalue : ID LBRACKET NUMBER COLON NUMBER RBRACKET"
        p[0] = PartSelect(p[1], p[3].value, p[5].value, span=self._span(p))

    def p_lvalue_concat(self, p):
        "lvalue : LBRACE lvalue_list RBRACE"
        p[0] = Concat(p[2], span=self._span(p))

    def p_lvalue_list(self, p):
        """lvalue_list : lvalue_list COMMA lvalue
                       | lvalue"""
        p[0] = p[1] + [p[3]] if len(p) == 4 else [p[1]]

    def p_expression_list(self, p):
        """expression_list : expression_list COMMA expression
                           | expression"""
        p[0] = p[1] + [p[3]] if len(p) == 4 else [p[1]]

    def p_expression_ternary(self, p):
        "expression : expression COND expression COLON expression"
        p[0] = Ternary(p[1], p[3], p[5], span=self._span(p))

    def p_expression_binary(self, p):
        """expression : expression LOR expression
                      | expression LAND expression
                      | expression OR expression
                      | expression XOR expression
                      | expression XNOR expression
                      | expression AND expression
                      | expression EQ expression
                      | expression NE expression
                      | expression EQL expression
                      | expression NEL expression
                      | expression LT expression
                      | expression GT expression
                      | expression LE expression
                      | expression GE expression
                      | expression LSHIFT expression
                      | expression RSHIFT expression
                      | expression LSHIFTA expression
                      | expression RSHIFTA expression
                      | expression PLUS expression
                      | expression MINUS expression
                      | expression TIMES expression
                      | expression DIVIDE expression
                      | expression MOD expression"""
        op = "~^" if p[2] == "^~" else p[2]
        p[0] = Binary(op, p[1], p[3], span=self._span(p))

    def p_expression_unary(self, p):
        """expression : MINUS expression %prec UMINUS
                      | PLUS expression %prec UPLUS
                      | LNOT expression %prec ULNOT
                      | NOT expression %prec UNOT
                      | AND expression %prec UAND
                      | OR expression %prec UOR
                      | XOR expression %prec UXOR
                      | NAND expression %prec UNAND
                      | NOR expression %prec UNOR
                      | XNOR expression %prec UXNOR"""
        op = "~^" if p[1] == "^~" else p[1]
        p[0] = Unary(op, p[2], span=self._span(p))

    def p_expression_number(self, p):
        "expression : NUMBER"
        literal = p[1]
        p[0] = Literal(literal.width, literal.value, literal.signed, literal.sized,
                       span=self._span(p))

    def p_expression_ref(self, p):
        "expression : ID"
        p[0] = Ref(p[1], span=self._span(p))

    def p_expression_bit(self, p):
        "expression : ID LBRACKET expression RBRACKET"
        p[0] = BitSelect(p[1], p[3], span=self._span(p))

    def p_expression_part(self, p):
        "expression : ID LBRACKET NUMBER COLON NUMBER RBRACKET"
        p[0] = PartSelect(p[1], p[3].value, p[5].value, span=self._span(p))

    def p_expression_concat(self, p):
        "expression : LBRACE expression_list RBRACE"
        p[0] = Concat(p[2], span=self._span(p))

    def p_expression_paren(self, p):
        "expression : LPAREN expression RPAREN"
        p[0] = p[2]

    def p_expression_cast(self, p):
        """expression : SIGNED_CAST LPAREN expression RPAREN
                      | UNSIGNED_CAST LPAREN expression RPAREN"""
        p[0] = SignCast(p[1] == "$signed", p[3], span=self._span(p))

    def p_error(self, p):
        if p is not None and p.type == "MODULE":
            raise UnsupportedConstruct("multiple modules")
        if p is None:
            line, col = self.lexer.position(len(self.lexer.text))
            raise VerilogSyntaxError(line, col, "more input before end of file")
        expected = "something else"
        try:
            state = self.parser.statestack[-1]
            names = sorted(self.parser.action[state])
            if names:
                expected = "one of " + ", ".join(names)
        except (AttributeError, IndexError, KeyError):
            pass
        line, col = self.lexer.position(p.lexpos)
        raise VerilogSyntaxError(line, col, f"{expected} before {p.value!r}")

    def _resolve_ports(self, items):
        ports, previous = [], None
        for item in items:
            if item.direction is None:
                if previous is None:
                    raise UnsupportedConstruct("non-ANSI port list")
                item = PortDecl(previous.direction, previous.kind, item.name, previous.msb,
                                previous.lsb, previous.signed, span=item.span)
            if item.direction == "input" and item.kind == "reg":
                line, col = item.span[:2]
                raise VerilogSyntaxError(line, col, f"a net type for input '{item.name}'")
            ports.append(item)
            previous = item
        return ports


_PARSER = None
_PARSER_LOCK = threading.Lock()


def _error_at(node, expected):
    line, col = (node.span.line, node.span.col) if node.span else (0, 0)
    return VerilogSyntaxError(line, col, expected)


def _check_declarations(module):
    seen = set()
    for decl in list(module.ports) + list(module.declarations):
        if decl.name in seen:
            raise _error_at(decl, f"a unique name instead of '{decl.name}'")
        seen.add(decl.name)


def _check_references(module, info):
    for node in walk(module):
        if isinstance(node, (Ref, BitSelect, PartSelect)):
            if node.name not in info:
                line, col = (node.span.line, node.span.col) if node.span else (0, 0)
                raise UndeclaredIdentifier(node.name, line, col)
            if isinstance(node, PartSelect):
                sig = info[node.name]
                if node.msb < node.lsb or node.lsb < sig.lsb or node.msb > sig.msb:
                    raise _error_at(node, f"a part-select within [{sig.msb}:{sig.lsb}]")
        elif isinstance(node, AlwaysBlock):
            for edge in node.edges:
                if edge.signal not in info:
                    line, col = (node.span.line, node.span.col) if node.span else (0, 0)
                    raise UndeclaredIdentifier(edge.signal, line, col)


def _lvalue_bases(target):
    if isinstance(target, Concat):
        for part in target.parts:
            yield from _lvalue_bases(part)
    else:
        yield target


def _check_targets(module, info):
    for node in walk(module):
        if isinstance(node, ContinuousAssign):
            wanted, kind = ("wire",), "a net"
        elif isinstance(node, (BlockingAssign, NonBlockingAssign)):
            wanted, kind = ("reg",), "a reg"
        elif isinstance(node, For):
            if node.var not in info:
                line, col = (node.span.line, node.span.col) if node.span else (0, 0)
                raise UndeclaredIdentifier(node.var, line, col)
            if info[node.var].kind != "reg":
                raise _error_at(node, f"a reg loop variable instead of '{node.var}'")
            continue
        else:
            continue
        for base in _lvalue_bases(node.target):
            sig = info[base.name]
            if sig.direction == "input" or sig.kind not in wanted:
                raise _error_at(base, f"{kind} as target instead of '{base.name}'")


def _check_case_labels(module):
    for node in walk(module):
        if isinstance(node, CaseArm):
            for label in node.labels:
                if expression_names(label):
                    raise UnsupportedConstruct("non-constant case label")


def _check_loops(module, info):
    """Every for loop must be counted by constants and terminate."""
    for node in walk(module):
        if not isinstance(node, For):
            continue
        init = constant_value(node.init, info)
        bounded = (init is not None
                   and expression_names(node.cond) <= {node.var}
                   and expression_names(node.step) <= {node.var}
                   and isinstance(node.step, Binary) and node.step.op in ("+", "-")
                   and node.step.left == Ref(node.var)
                   and not expression_names(node.step.right)
                   and node.var not in _body_writes(node.body))
        if not bounded:
            raise UnsupportedConstruct("for loop that is not statically bounded")
        value = Evaluator(info).assigned_value(Ref(node.var), node.init)
        iterations = 0
        while constant_value(node.cond, info, {node.var: value}):
            iterations += 1
            if iterations > MAX_LOOP_ITERATIONS:
                raise UnsupportedConstruct("for loop that is not statically bounded")
            value = Evaluator(info, lambda _name, v=value: v).assigned_value(
                Ref(node.var), node.step)


def _body_writes(body):
    names = set()
    for node in walk(body):
        if isinstance(node, (BlockingAssign, NonBlockingAssign)):
            names |= {b.name for b in _lvalue_bases(node.target)}
        elif isinstance(node, For):
            names.add(node.var)
    return names


def check_module(module):
    """Semantic checks the grammar alone cannot express."""
    _check_declarations(module)
    info = signal_table(module)
    _check_references(module, info)
    _check_targets(module, info)
    _check_case_labels(module)
    _check_loops(module, info)
    return module


def _decode(data):
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as err:
        line = data.count(b"\n", 0, err.start) + 1
        col = err.start - (data.rfind(b"\n", 0, err.start) + 1) + 1
        raise VerilogSyntaxError(line, col, "UTF-8 text") from None


def parse(source_text):
    """Parse one module of the supported Verilog subset.

    .. Keyword Arguments:
    :param source_text: Verilog source, ``str`` or UTF-8 ``bytes``; LF or CRLF.

    .. Returns:
    :returns: A ModuleAst with pre-order NodeIds and source spans.
    """
    global _PARSER  # pylint: disable=global-statement
    if isinstance(source_text, bytes):
        source_text = _decode(source_text)
    text = source_text.replace("\r\n", "\n")
    with _PARSER_LOCK:
        if _PARSER is None:
            logging.debug("Building Verilog LALR tables")
            _PARSER = VerilogParser()
        module = _PARSER.parse(text)
    return number_nodes(check_module(module))
