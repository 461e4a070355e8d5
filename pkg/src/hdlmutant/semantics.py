#!/usr/bin/env python3

"""Two-state value semantics of the subset: expression widths, signedness
and evaluation.

Values are stored as non-negative integers masked to their width. Operands
are extended to the context width of the enclosing expression, sign-extended
only when the whole context is signed.
"""

from .verilog_ast import (ARITHMETIC_OPS, BITWISE_OPS, SHIFT_OPS, Binary, BitSelect, Concat,
                          Literal, PartSelect, Ref, SignCast, Ternary, Unary, walk)


def mask(width):
    return (1 << width) - 1


def to_signed(value, width):
    value &= mask(width)
    if value >> (width - 1) & 1:
        return value - (1 << width)
    return value


def extend(value, from_width, to_width, signed):
    """Resize ``value`` from ``from_width`` bits to ``to_width`` bits."""
    value &= mask(from_width)
    if signed and to_width > from_width and (value >> (from_width - 1)) & 1:
        value |= mask(to_width) ^ mask(from_width)
    return value & mask(to_width)


def self_width(expr, info):
    if isinstance(expr, Literal):
        return expr.width
    if isinstance(expr, Ref):
        return info[expr.name].width
    if isinstance(expr, BitSelect):
        return 1
    if isinstance(expr, PartSelect):
        return expr.msb - expr.lsb + 1
    if isinstance(expr, Concat):
        return sum(self_width(p, info) for p in expr.parts)
    if isinstance(expr, Unary):
        if expr.op in ("+", "-", "~"):
            return self_width(expr.operand, info)
        return 1
    if isinstance(expr, Binary):
        if expr.op in ARITHMETIC_OPS or expr.op in BITWISE_OPS:
            return max(self_width(expr.left, info), self_width(expr.right, info))
        if expr.op in SHIFT_OPS:
            return self_width(expr.left, info)
        return 1
    if isinstance(expr, Ternary):
        return max(self_width(expr.if_true, info), self_width(expr.if_false, info))
    if isinstance(expr, SignCast):
        return self_width(expr.operand, info)
    raise TypeError(f"not an expression: {expr!r}")


def self_signed(expr, info):
    if isinstance(expr, Literal):
        return expr.signed
    if isinstance(expr, Ref):
        return info[expr.name].signed
    if isinstance(expr, Unary):
        return expr.op in ("+", "-", "~") and self_signed(expr.operand, info)
    if isinstance(expr, Binary):
        if expr.op in ARITHMETIC_OPS or expr.op in BITWISE_OPS:
            return self_signed(expr.left, info) and self_signed(expr.right, info)
        if expr.op in SHIFT_OPS:
            return self_signed(expr.left, info)
        return False
    if isinstance(expr, Ternary):
        return self_signed(expr.if_true, info) and self_signed(expr.if_false, info)
    if isinstance(expr, SignCast):
        return expr.signed
    return False


def lvalue_width(target, info):
    if isinstance(target, Concat):
        return sum(lvalue_width(p, info) for p in target.parts)
    return self_width(target, info)


class NotConstant(Exception):
    """Raised by a reader that has no value for a signal."""


def _no_signals(name):
    raise NotConstant(name)


class Evaluator:
    """Evaluates expressions against a signal reader.

    .. Keyword Arguments:
    :param info: Name → SignalInfo of the design.
    :param read: Callable returning the current (masked) value of a signal.
    :param on_condition: Optional callback ``(nid, outcome)`` fired for every
        ternary condition evaluated.
    """

    def __init__(self, info, read=_no_signals, on_condition=None):
        self.info = info
        self.read = read
        self.on_condition = on_condition

    def self_value(self, expr):
        width = self_width(expr, self.info)
        signed = self_signed(expr, self.info)
        return self.value(expr, width, signed), width, signed

    def truth(self, expr):
        return self.self_value(expr)[0] != 0

    def index(self, expr):
        """Value of a select index; negative signed indexes never hit a bit."""
        value, width, signed = self.self_value(expr)
        if signed:
            value = to_signed(value, width)
        return value

    def value(self, expr, width, signed):
        """Evaluate ``expr`` in a context of ``width`` bits and given signedness."""
        if isinstance(expr, Literal):
            return extend(expr.value, expr.width, width, signed)
        if isinstance(expr, Ref):
            sig = self.info[expr.name]
            return extend(self.read(expr.name), sig.width, width, signed)
        if isinstance(expr, BitSelect):
            sig = self.info[expr.name]
            bit = self.index(expr.index) - sig.lsb
            got = (self.read(expr.name) >> bit) & 1 if 0 <= bit < sig.width else 0
            return extend(got, 1, width, signed)
        if isinstance(expr, PartSelect):
            sig = self.info[expr.name]
            part = expr.msb - expr.lsb + 1
            got = (self.read(expr.name) >> (expr.lsb - sig.lsb)) & mask(part)
            return extend(got, part, width, signed)
        if isinstance(expr, Concat):
            total, acc = 0, 0
            for part in expr.parts:
                pval, pwidth, _ = self.self_value(part)
                acc = (acc << pwidth) | pval
                total += pwidth
            return extend(acc, total, width, signed)
        if isinstance(expr, Unary):
            return self._unary(expr, width, signed)
        if isinstance(expr, Binary):
            return self._binary(expr, width, signed)
        if isinstance(expr, Ternary):
            outcome = self.truth(expr.cond)
            if self.on_condition is not None:
                self.on_condition(expr.cond.nid, outcome)
            return self.value(expr.if_true if outcome else expr.if_false, width, signed)
        if isinstance(expr, SignCast):
            val, own, _ = self.self_value(expr.operand)
            return extend(val, own, width, signed)
        raise TypeError(f"not an expression: {expr!r}")

    def _unary(self, expr, width, signed):
        op = expr.op
        if op == "+":
            return self.value(expr.operand, width, signed)
        if op == "-":
            return -self.value(expr.operand, width, signed) & mask(width)
        if op == "~":
            return ~self.value(expr.operand, width, signed) & mask(width)
        if op == "!":
            return extend(0 if self.truth(expr.operand) else 1, 1, width, False)
        val, own, _ = self.self_value(expr.operand)
        if op in ("&", "~&"):
            bit = 1 if val == mask(own) else 0
        elif op in ("|", "~|"):
            bit = 1 if val else 0
        else:
            bit = bin(val).count("1") & 1
        if op.startswith("~"):
            bit ^= 1
        return extend(bit, 1, width, False)

    def _binary(self, expr, width, signed):
        op = expr.op
        if op in ("&&", "||"):
            left = self.truth(expr.left)
            if op == "&&":
                result = left and self.truth(expr.right)
            else:
                result = left or self.truth(expr.right)
            return extend(1 if result else 0, 1, width, False)
        if op in SHIFT_OPS:
            return self._shift(expr, width, signed)
        if op in ARITHMETIC_OPS or op in BITWISE_OPS:
            return self._arith(op, self.value(expr.left, width, signed),
                               self.value(expr.right, width, signed), width, signed)
        # Relational and equality operators size their operands to each other.
        cwidth = max(self_width(expr.left, self.info), self_width(expr.right, self.info))
        csigned = self_signed(expr.left, self.info) and self_signed(expr.right, self.info)
        left = self.value(expr.left, cwidth, csigned)
        right = self.value(expr.right, cwidth, csigned)
        if csigned:
            left, right = to_signed(left, cwidth), to_signed(right, cwidth)
        result = {
            "==": left == right, "===": left == right,
            "!=": left != right, "!==": left != right,
            "<": left < right, "<=": left <= right,
            ">": left > right, ">=": left >= right,
        }[op]
        return extend(1 if result else 0, 1, width, False)

    @staticmethod
    def _arith(op, left, right, width, signed):
        m = mask(width)
        if op == "+":
            return (left + right) & m
        if op == "-":
            return (left - right) & m
        if op == "*":
            return (left * right) & m
        if op == "&":
            return left & right
        if op == "|":
            return left | right
        if op == "^":
            return left ^ right
        if op == "~^":
            return ~(left ^ right) & m
        if right == 0:
            return 0
        if signed:
            sleft, sright = to_signed(left, width), to_signed(right, width)
            quotient = abs(sleft) // abs(sright)
            if (sleft < 0) != (sright < 0):
                quotient = -quotient
            if op == "/":
                return quotient & m
            return (sleft - quotient * sright) & m
        if op == "/":
            return left // right
        return left % right

    def _shift(self, expr, width, signed):
        value = self.value(expr.left, width, signed)
        amount = self.self_value(expr.right)[0]
        if expr.op in ("<<", "<<<"):
            return 0 if amount >= width else (value << amount) & mask(width)
        if expr.op == ">>>" and signed:
            svalue = to_signed(value, width)
            if amount >= width:
                return mask(width) if svalue < 0 else 0
            return (svalue >> amount) & mask(width)
        return 0 if amount >= width else value >> amount

    def assigned_value(self, target, expr):
        """Value of ``expr`` as assigned to ``target``, truncated to the target."""
        twidth = lvalue_width(target, self.info)
        width = max(twidth, self_width(expr, self.info))
        return self.value(expr, width, self_signed(expr, self.info)) & mask(twidth)

    def lvalue_pieces(self, target):
        """Resolve an lvalue into ``(name, bit offset, width)`` pieces, MSB first.

        Selects that fall outside the declared range resolve to no piece.
        """
        if isinstance(target, Concat):
            pieces = []
            for part in target.parts:
                pieces.extend(self.lvalue_pieces(part))
            return pieces
        sig = self.info[target.name]
        if isinstance(target, Ref):
            return [(target.name, 0, sig.width)]
        if isinstance(target, BitSelect):
            bit = self.index(target.index) - sig.lsb
            if 0 <= bit < sig.width:
                return [(target.name, bit, 1)]
            return [(target.name, None, 1)]
        return [(target.name, target.lsb - sig.lsb, target.msb - target.lsb + 1)]


def split_value(pieces, value):
    """Distribute an assigned value over lvalue pieces (last piece gets the LSBs)."""
    out = []
    for name, offset, width in reversed(pieces):
        out.append((name, offset, width, value & mask(width)))
        value >>= width
    out.reverse()
    return [p for p in out if p[1] is not None]


def constant_value(expr, info, bindings=None):
    """Fold ``expr`` to an int, or None when it depends on a signal.

    ``bindings`` supplies fixed values for selected names.
    """
    bindings = bindings or {}
    names = {n.name for n in walk(expr) if isinstance(n, (Ref, BitSelect, PartSelect))}
    if not names <= set(bindings):
        return None

    def read(name):
        return bindings[name] & mask(info[name].width)

    try:
        return Evaluator(info, read).self_value(expr)[0]
    except NotConstant:
        return None
