#!/usr/bin/env python3

"""Canonical Verilog emitter.

One statement per line, two-space indentation, explicit begin-end around
every body and fully parenthesised compound expressions, so textual diffs
between a seed and its variant point straight at the edited statements.
"""

from .verilog_ast import (AlwaysBlock, BeginEnd, Binary, BitSelect, BlockingAssign, Case,
                          Concat, ContinuousAssign, For, If, InitialBlock, Literal,
                          NonBlockingAssign, PartSelect, Ref, SignCast, Ternary, Unary)

INDENT = "  "


def _range(msb, lsb):
    return "" if msb == 0 and lsb == 0 else f"[{msb}:{lsb}] "


def emit_expr(expr):
    if isinstance(expr, Literal):
        sign = "s" if expr.signed else ""
        if not expr.sized:
            if expr.signed:
                return str(expr.value)
            return f"'h{expr.value:x}"
        return f"{expr.width}'{sign}h{expr.value:x}"
    if isinstance(expr, Ref):
        return expr.name
    if isinstance(expr, BitSelect):
        return f"{expr.name}[{emit_expr(expr.index)}]"
    if isinstance(expr, PartSelect):
        return f"{expr.name}[{expr.msb}:{expr.lsb}]"
    if isinstance(expr, Concat):
        return "{" + ", ".join(emit_expr(p) for p in expr.parts) + "}"
    if isinstance(expr, Unary):
        return f"({expr.op}{emit_expr(expr.operand)})"
    if isinstance(expr, Binary):
        return f"({emit_expr(expr.left)} {expr.op} {emit_expr(expr.right)})"
    if isinstance(expr, Ternary):
        return (f"({emit_expr(expr.cond)} ? {emit_expr(expr.if_true)}"
                f" : {emit_expr(expr.if_false)})")
    if isinstance(expr, SignCast):
        name = "$signed" if expr.signed else "$unsigned"
        return f"{name}({emit_expr(expr.operand)})"
    raise TypeError(f"not an expression: {expr!r}")


def _body(stmt, depth, lines, prefix):
    """Emit ``stmt`` as a begin-end body opened by ``prefix``."""
    stmts = stmt.stmts if isinstance(stmt, BeginEnd) else [stmt]
    lines.append(INDENT * depth + prefix + "begin")
    for sub in stmts:
        _statement(sub, depth + 1, lines)
    lines.append(INDENT * depth + "end")


def _statement(stmt, depth, lines):
    pad = INDENT * depth
    if isinstance(stmt, BlockingAssign):
        lines.append(f"{pad}{emit_expr(stmt.target)} = {emit_expr(stmt.value)};")
    elif isinstance(stmt, NonBlockingAssign):
        lines.append(f"{pad}{emit_expr(stmt.target)} <= {emit_expr(stmt.value)};")
    elif isinstance(stmt, BeginEnd):
        _body(stmt, depth, lines, "")
    elif isinstance(stmt, If):
        _body(stmt.then, depth, lines, f"if ({emit_expr(stmt.cond)}) ")
        if stmt.other is not None:
            _body(stmt.other, depth, lines, "else ")
    elif isinstance(stmt, Case):
        lines.append(f"{pad}case ({emit_expr(stmt.subject)})")
        for arm in stmt.arms:
            labels = ", ".join(emit_expr(label) for label in arm.labels)
            _body(arm.body, depth + 1, lines, f"{labels}: ")
        if stmt.default is not None:
            _body(stmt.default, depth + 1, lines, "default: ")
        lines.append(f"{pad}endcase")
    elif isinstance(stmt, For):
        header = (f"for ({stmt.var} = {emit_expr(stmt.init)}; {emit_expr(stmt.cond)}; "
                  f"{stmt.var} = {emit_expr(stmt.step)}) ")
        _body(stmt.body, depth, lines, header)
    else:
        raise TypeError(f"not a statement: {stmt!r}")


def _port(port):
    kind = "reg " if port.kind == "reg" else ""
    sign = "signed " if port.signed else ""
    return f"{INDENT}{port.direction} {kind}{sign}{_range(port.msb, port.lsb)}{port.name}"


def emit(module):
    """Render a ModuleAst as canonical Verilog text (LF line endings)."""
    lines = []
    if module.ports:
        lines.append(f"module {module.name} (")
        lines.append(",\n".join(_port(p) for p in module.ports))
        lines.append(");")
    else:
        lines.append(f"module {module.name};")
    for decl in module.declarations:
        sign = "signed " if decl.signed else ""
        lines.append(f"{INDENT}{decl.kind} {sign}{_range(decl.msb, decl.lsb)}{decl.name};")
    for item in module.items:
        if isinstance(item, ContinuousAssign):
            lines.append(f"{INDENT}assign {emit_expr(item.target)} = {emit_expr(item.value)};")
        elif isinstance(item, AlwaysBlock):
            if item.combinational:
                sens = "@*"
            else:
                sens = "@(" + " or ".join(f"{e.kind} {e.signal}" for e in item.edges) + ")"
            _body(item.body, 1, lines, f"always {sens} ")
        elif isinstance(item, InitialBlock):
            _body(item.body, 1, lines, "initial ")
        else:
            raise TypeError(f"not a module item: {item!r}")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def _hex_literal(width, value):
    return f"{width}'h{value:x}"


def emit_testbench(tb, module_name, tb_name="hdlmutant_tb"):
    """Render a TestbenchAst as a self-checking-free Verilog testbench.

    Every output is printed with ``$strobe`` at each schedule time as
    ``TRACE <time> <port> <hex>``, the format the resimulation hook reads.
    """
    lines = [f"module {tb_name};"]
    for port in tb.ports:
        kind = "reg" if port.direction == "input" else "wire"
        sign = "signed " if port.signed else ""
        lines.append(f"{INDENT}{kind} {sign}{_range(port.width - 1, 0)}{port.name};")
    bindings = ", ".join(f".{p.name}({p.name})" for p in tb.ports)
    lines.append(f"{INDENT}{module_name} dut ({bindings});")
    if tb.clock is not None:
        lines.append(f"{INDENT}initial begin")
        lines.append(f"{INDENT * 2}{tb.clock} = 1'b0;")
        lines.append(f"{INDENT * 2}forever #{tb.clock_half_period} {tb.clock} = ~{tb.clock};")
        lines.append(f"{INDENT}end")
    widths = {p.name: p.width for p in tb.ports}
    outputs = [p for p in tb.ports if p.direction == "output"]
    lines.append(f"{INDENT}initial begin")
    now = 0
    for step in tb.schedule:
        if step.time > now:
            lines.append(f"{INDENT * 2}#{step.time - now};")
            now = step.time
        for name, value in step.values.items():
            lines.append(f"{INDENT * 2}{name} = {_hex_literal(widths[name], value)};")
        for port in outputs:
            lines.append(f'{INDENT * 2}$strobe("TRACE %0t {port.name} %h", $time, {port.name});')
    if tb.finish_time > now:
        lines.append(f"{INDENT * 2}#{tb.finish_time - now};")
    lines.append(f"{INDENT * 2}$finish;")
    lines.append(f"{INDENT}end")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"
