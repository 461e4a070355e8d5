#!/usr/bin/env python3

"""PLY lexer for the synthesizable Verilog subset."""

import bisect

from ply import lex

from .verilog_ast import Literal, SourceSpan, UnsupportedConstruct, VerilogSyntaxError

# Keywords that are real Verilog but outside the subset.
UNSUPPORTED_KEYWORDS = frozenset((
    "parameter", "localparam", "defparam", "generate", "endgenerate", "genvar",
    "function", "endfunction", "task", "endtask", "inout", "while", "repeat",
    "forever", "casez", "casex", "fork", "join", "wait", "force", "release",
    "deassign", "disable", "supply0", "supply1", "tri", "wand", "wor", "real",
    "realtime", "time", "specify", "endspecify", "primitive", "endprimitive",
    "table", "endtable", "automatic", "event", "assert",
))


class VerilogLexer:
    """Tokenizer with per-token end offsets for span reconstruction."""

    reserved = {
        "module": "MODULE", "endmodule": "ENDMODULE",
        "input": "INPUT", "output": "OUTPUT",
        "wire": "WIRE", "reg": "REG", "integer": "INTEGER", "signed": "SIGNED",
        "assign": "ASSIGN", "always": "ALWAYS", "initial": "INITIAL",
        "posedge": "POSEDGE", "negedge": "NEGEDGE", "or": "EVOR",
        "begin": "BEGIN", "end": "END",
        "if": "IF", "else": "ELSE",
        "case": "CASE", "endcase": "ENDCASE", "default": "DEFAULT",
        "for": "FOR",
    }

    tokens = tuple(sorted(set(reserved.values()))) + (
        "ID", "NUMBER", "SIGNED_CAST", "UNSIGNED_CAST",
        "PLUS", "MINUS", "TIMES", "DIVIDE", "MOD",
        "LNOT", "NOT", "AND", "OR", "XOR", "XNOR", "NAND", "NOR",
        "LAND", "LOR", "EQ", "NE", "EQL", "NEL", "LT", "GT", "LE", "GE",
        "LSHIFT", "RSHIFT", "LSHIFTA", "RSHIFTA",
        "COND", "COLON", "EQUALS", "SEMICOLON", "COMMA", "AT",
        "LPAREN", "RPAREN", "LBRACKET", "RBRACKET", "LBRACE", "RBRACE",
    )

    t_ignore = " \t\r\f"

    t_LSHIFTA = r"<<<"
    t_RSHIFTA = r">>>"
    t_EQL = r"==="
    t_NEL = r"!=="
    t_LSHIFT = r"<<"
    t_RSHIFT = r">>"
    t_LAND = r"&&"
    t_LOR = r"\|\|"
    t_EQ = r"=="
    t_NE = r"!="
    t_LE = r"<="
    t_GE = r">="
    t_XNOR = r"~\^|\^~"
    t_NAND = r"~&"
    t_NOR = r"~\|"
    t_LT = r"<"
    t_GT = r">"
    t_PLUS = r"\+"
    t_MINUS = r"-"
    t_TIMES = r"\*"
    t_DIVIDE = r"/"
    t_MOD = r"%"
    t_LNOT = r"!"
    t_NOT = r"~"
    t_AND = r"&"
    t_OR = r"\|"
    t_XOR = r"\^"
    t_COND = r"\?"
    t_COLON = r":"
    t_EQUALS = r"="
    t_SEMICOLON = r";"
    t_COMMA = r","
    t_AT = r"@"
    t_LPAREN = r"\("
    t_RPAREN = r"\)"
    t_LBRACKET = r"\["
    t_RBRACKET = r"\]"
    t_LBRACE = r"\{"
    t_RBRACE = r"\}"

    def __init__(self):
        # lex.lex reads every attribute, including the lineno/lexpos properties
        self.lexer = lex.Lexer()
        self.lexer = lex.lex(module=self, debug=False, optimize=False)
        self.text = ""
        self.line_starts = [0]
        self.ends = {}

    def t_comment(self, t):
        r"/\*[\s\S]*?\*/"
        t.lexer.lineno += t.value.count("\n")

    def t_linecomment(self, t):
        r"//[^\n]*"

    def t_directive(self, t):
        r"`[a-zA-Z_]+[^\n]*"
        raise UnsupportedConstruct(f"compiler directive {t.value.split()[0]}")

    def t_newline(self, t):
        r"\n+"
        t.lexer.lineno += len(t.value)

    def t_SIGNED_CAST(self, t):
        r"\$[a-zA-Z_][a-zA-Z0-9_$]*"
        if t.value == "$signed":
            return t
        if t.value == "$unsigned":
            t.type = "UNSIGNED_CAST"
            return t
        raise UnsupportedConstruct(f"system task {t.value}")

    def t_NUMBER(self, t):
        r"(?:\d[\d_]*)?\s*'[sS]?[bBoOdDhH]\s*[0-9a-fA-FxXzZ?_]+|\d[\d_]*"
        t.value = self._literal(t)
        return t

    def t_ID(self, t):
        r"[a-zA-Z_][a-zA-Z0-9_$]*"
        if t.value in UNSUPPORTED_KEYWORDS:
            raise UnsupportedConstruct(t.value)
        t.type = self.reserved.get(t.value, "ID")
        return t

    def t_error(self, t):
        line, col = self.position(t.lexpos)
        raise VerilogSyntaxError(line, col, f"a valid token, not {t.value[0]!r}")

    def _literal(self, t):
        text = "".join(t.value.split()).replace("_", "")
        if "'" not in text:
            return Literal(32, int(text) & 0xFFFFFFFF, signed=True, sized=False)
        size, rest = text.split("'", 1)
        signed = rest[0] in "sS"
        if signed:
            rest = rest[1:]
        radix = {"b": 2, "o": 8, "d": 10, "h": 16}[rest[0].lower()]
        digits = rest[1:]
        if any(c in "xXzZ?" for c in digits):
            raise UnsupportedConstruct("4-state literal")
        width = int(size) if size else 32
        if not 1 <= width <= 64:
            raise UnsupportedConstruct(f"literal width {width}")
        try:
            value = int(digits, radix)
        except ValueError:
            line, col = self.position(t.lexpos)
            raise VerilogSyntaxError(line, col, f"base-{radix} digits") from None
        return Literal(width, value & ((1 << width) - 1), signed=signed, sized=bool(size))

    # Parser-facing interface

    def input(self, text):
        self.text = text
        self.line_starts = [0] + [i + 1 for i, c in enumerate(text) if c == "\n"]
        self.ends = {}
        self.lexer.lineno = 1
        self.lexer.input(text)

    def token(self):
        tok = self.lexer.token()
        if tok is not None:
            self.ends[tok.lexpos] = self.lexer.lexpos
        return tok

    # yacc reads both when tracking positions of empty productions
    @property
    def lineno(self):
        return self.lexer.lineno

    @property
    def lexpos(self):
        return self.lexer.lexpos

    def position(self, offset):
        """1-based (line, column) of a character offset."""
        line = bisect.bisect_right(self.line_starts, offset)
        return line, offset - self.line_starts[line - 1] + 1

    def span(self, start, last_token):
        """Span from offset ``start`` through the token beginning at ``last_token``."""
        end = self.ends.get(last_token, last_token + 1)
        line, col = self.position(start)
        end_line, end_col = self.position(max(start, end - 1))
        return SourceSpan(line, col, end_line, end_col)
