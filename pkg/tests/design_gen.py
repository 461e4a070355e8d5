"""Seeded generator of random modules in the supported Verilog subset.

Designs are built so that their behaviour does not depend on process
scheduling: combinational logic is acyclic and latch-free, every reg has a
single writer, sequential logic only reacts to ``posedge clk`` and never
reads a reg it writes with a blocking assignment.
"""

import random

BINARY_OPS = ["+", "-", "*", "/", "%", "&", "|", "^", "~^", "&&", "||", "==", "!=",
              "===", "!==", "<", "<=", ">", ">=", "<<", ">>", "<<<", ">>>"]
UNARY_OPS = ["-", "+", "!", "~", "&", "|", "^", "~&", "~|", "~^"]
DEAD_GUARDS = ["1'b0", "(4'h3 > 4'h7)", "(2'd1 == 2'd2)", "0"]


class Signal:
    def __init__(self, name, width, signed=False):
        self.name = name
        self.width = width
        self.signed = signed

    def decl_range(self):
        return f"[{self.width - 1}:0] " if self.width > 1 else ""


class DesignGenerator:
    """Produces Verilog text; every call to ``generate`` is independent."""

    def __init__(self, seed, max_statements=20, dead_code=0.2):
        self.rng = random.Random(seed)
        self.max_statements = max_statements
        self.dead_code = dead_code

    # Expressions

    def literal(self, width=None):
        rng = self.rng
        width = width or rng.randint(1, 12)
        value = rng.getrandbits(width)
        style = rng.randrange(5)
        if style == 0:
            return f"{width}'h{value:x}"
        if style == 1:
            return f"{width}'b{value:b}"
        if style == 2:
            return f"{width}'sh{value:x}"
        if style == 3:
            return f"{width}'d{value}"
        return str(rng.randint(0, 300))

    def leaf(self, readable):
        rng = self.rng
        pick = rng.random()
        if not readable or pick < 0.2:
            return self.literal()
        sig = rng.choice(readable)
        if sig.width > 1 and pick < 0.3:
            return f"{sig.name}[{rng.randrange(sig.width + 1)}]"
        if sig.width > 1 and pick < 0.4:
            other = rng.choice(readable)
            return f"{sig.name}[{other.name}]"
        if sig.width > 2 and pick < 0.5:
            lsb = rng.randrange(sig.width - 1)
            msb = rng.randrange(lsb, sig.width)
            return f"{sig.name}[{msb}:{lsb}]"
        return sig.name

    def expression(self, readable, depth=3):
        rng = self.rng
        if depth <= 0 or rng.random() < 0.3:
            return self.leaf(readable)
        kind = rng.random()
        if kind < 0.5:
            op = rng.choice(BINARY_OPS)
            return (f"({self.expression(readable, depth - 1)} {op} "
                    f"{self.expression(readable, depth - 1)})")
        if kind < 0.65:
            return f"({rng.choice(UNARY_OPS)}{self.expression(readable, depth - 1)})"
        if kind < 0.75:
            return (f"({self.expression(readable, depth - 1)} ? "
                    f"{self.expression(readable, depth - 1)} : "
                    f"{self.expression(readable, depth - 1)})")
        if kind < 0.85:
            parts = [self.expression(readable, depth - 1) for _ in range(rng.randint(1, 3))]
            # Unsized numbers are not allowed inside a concatenation.
            parts = [p if not p.isdigit() else f"8'd{int(p) % 256}" for p in parts]
            return "{" + ", ".join(parts) + "}"
        cast = rng.choice(["$signed", "$unsigned"])
        return f"{cast}({self.expression(readable, depth - 1)})"

    # Statements

    def _budget(self):
        return self.statements < self.max_statements

    def assignment(self, target, readable, op):
        self.statements += 1
        return f"{target.name} {op} {self.expression(readable)};"

    def block(self, targets, readable, op, depth):
        """A few statements assigning ``targets``, possibly nested."""
        rng = self.rng
        lines = []
        for _ in range(rng.randint(1, 3)):
            if not self._budget():
                break
            choice = rng.random()
            if depth > 0 and choice < 0.25:
                cond = self.expression(readable, 2)
                lines.append(f"if ({cond}) begin")
                lines += ["  " + l for l in self.block(targets, readable, op, depth - 1)]
                if rng.random() < 0.6:
                    lines.append("end else begin")
                    lines += ["  " + l for l in self.block(targets, readable, op, depth - 1)]
                lines.append("end")
                self.statements += 1
            elif depth > 0 and choice < 0.4:
                width = rng.randint(1, 3)
                lines.append(f"case ({self.expression(readable, 1)})")
                labels = rng.sample(range(1 << width), min(2, 1 << width))
                for label in labels:
                    lines.append(f"  {width}'d{label}: begin")
                    lines += ["    " + l for l in self.block(targets, readable, op, depth - 1)]
                    lines.append("  end")
                if rng.random() < 0.5:
                    lines.append("  default: begin")
                    lines += ["    " + l for l in self.block(targets, readable, op, depth - 1)]
                    lines.append("  end")
                lines.append("endcase")
                self.statements += 1
            elif depth > 0 and choice < 0.5:
                guard = rng.choice(DEAD_GUARDS)
                lines.append(f"if ({guard}) begin")
                lines += ["  " + l for l in self.block(targets, readable, op, depth - 1)]
                lines.append("end")
                self.statements += 1
            else:
                lines.append(self.assignment(rng.choice(targets), readable, op))
        return lines

    # Module

    def generate(self, name="gen"):
        rng = self.rng
        self.statements = 0
        inputs = [Signal("clk", 1), Signal("rst", 1)]
        for k in range(rng.randint(1, 3)):
            inputs.append(Signal(f"in{k}", rng.randint(1, 12), rng.random() < 0.3))
        decls, items = [], []
        # The clock is never read as data so edge blocks cannot race it.
        readable = list(inputs[1:])
        state = []
        for k in range(rng.randint(0, 2)):
            q = Signal(f"q{k}", rng.randint(1, 10), rng.random() < 0.3)
            state.append(q)
            decls.append(f"  reg {'signed ' if q.signed else ''}{q.decl_range()}{q.name};")
        readable += state

        # Acyclic combinational layer: each node reads only what came before.
        for k in range(rng.randint(1, 3)):
            if not self._budget():
                break
            if rng.random() < 0.5:
                w = Signal(f"w{k}", rng.randint(1, 10))
                decls.append(f"  wire {w.decl_range()}{w.name};")
                items.append(f"  assign {w.name} = {self.expression(readable)};")
                self.statements += 1
                readable.append(w)
            else:
                r = Signal(f"c{k}", rng.randint(1, 10), rng.random() < 0.3)
                decls.append(f"  reg {'signed ' if r.signed else ''}{r.decl_range()}{r.name};")
                body = [self.assignment(r, readable, "=")]
                if rng.random() < self.dead_code:
                    body.append(f"if ({rng.choice(DEAD_GUARDS)}) begin")
                    body.append("  " + self.assignment(r, readable, "="))
                    body.append("end")
                    self.statements += 1
                body += self.block([r], readable, "=", 2)
                items.append("  always @* begin")
                items += ["    " + line for line in body]
                items.append("  end")
                readable.append(r)

        outputs = []
        for k in range(rng.randint(1, 2)):
            outputs.append(Signal(f"y{k}", rng.randint(1, 12), rng.random() < 0.2))
        seq_outputs = [y for y in outputs if rng.random() < 0.4]
        wire_outputs = [y for y in outputs if y not in seq_outputs]

        seq_targets = state + seq_outputs
        if seq_targets:
            body = ["if (rst) begin"]
            body += [f"  {t.name} <= 0;" for t in seq_targets]
            body.append("end else begin")
            self.statements += 1 + len(seq_targets)
            inner = self.block(seq_targets, readable, "<=", 2)
            if rng.random() < 0.3 and self._budget():
                inner.append("for (i = 0; i < 3; i = i + 1) begin")
                inner.append("  " + self.assignment(rng.choice(seq_targets), readable, "<="))
                inner.append("end")
                decls.append("  integer i;")
                self.statements += 1
            body += ["  " + line for line in inner]
            body.append("end")
            items.append("  always @(posedge clk) begin")
            items += ["    " + line for line in body]
            items.append("  end")
        for y in wire_outputs:
            items.append(f"  assign {y.name} = {self.expression(readable)};")
            self.statements += 1

        ports = [f"  input {'signed ' if s.signed else ''}{s.decl_range()}{s.name}"
                 for s in inputs]
        for y in outputs:
            kind = "reg " if y in seq_outputs else ""
            ports.append(f"  output {kind}{'signed ' if y.signed else ''}{y.decl_range()}{y.name}")
        lines = [f"module {name} ("] + [",\n".join(ports)] + [");"] + decls + items
        lines.append("endmodule")
        return "\n".join(lines) + "\n"


def generate_design(seed, max_statements=20, dead_code=0.2):
    return DesignGenerator(seed, max_statements, dead_code).generate(f"gen{seed}")
