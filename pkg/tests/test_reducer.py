import shlex
import shutil
import sys

import pytest

from hdlmutant.errors import HdlMutantError
from hdlmutant.harness import CRASH_BUG, MISMATCH_BUG, identify_bug, observe, rtl_observation
from hdlmutant.reducer import ReductionTimeout, chunks, design_size, reduce_design, without_chunk
from hdlmutant.synth_adapters import BUILTIN_FAULTY, EXTERNAL, ToolSpec
from hdlmutant.testbench import StimulusConfig
from hdlmutant.testbench import testbench_for as build_testbench
from hdlmutant.verilog_ast import Binary, walk
from hdlmutant.verilog_emit import emit
from hdlmutant.verilog_parser import parse

NOISY = """
module t(input clk, input a, input b, output y);
  reg d0;
  reg d1;
  reg d2;
  reg d3;
  reg d4;
  assign y = a ^ b;
  always @(posedge clk) begin
    d0 <= a;
    d1 <= b;
    d2 <= a & b;
    d3 <= a | b;
    d4 <= ~a;
  end
endmodule
"""


def has_xor(module):
    return any(isinstance(n, Binary) and n.op == "^" for n in walk(module))


def test_minimal_design_is_unchanged():
    module = parse("module t(input a, input b, output y); assign y = a ^ b; endmodule")
    assert emit(reduce_design(module, has_xor)) == emit(module)


def test_unrelated_logic_is_removed():
    reduced = reduce_design(parse(NOISY), has_xor)
    assert len(reduced.items) == 1
    assert reduced.declarations == []
    assert has_xor(reduced)
    assert design_size(reduced) < design_size(parse(NOISY))


def test_chunks_list_items_first():
    module = parse(NOISY)
    ids = chunks(module)
    assert ids[:2] == [item.nid for item in module.items]
    assert len(ids) == len(set(ids))


def test_oracle_sees_only_parsable_designs():
    seen = []

    def oracle(candidate):
        seen.append(emit(candidate))
        return has_xor(candidate)

    reduce_design(parse(NOISY), oracle)
    for text in seen:
        parse(text)


def test_budget_exhausted():
    module = parse(NOISY)
    with pytest.raises(ReductionTimeout) as info:
        reduce_design(module, has_xor, budget_secs=0)
    assert has_xor(info.value.best)


CRASH_ON_XOR = """
import shutil, sys
if "^" in open(sys.argv[1]).read():
    sys.stderr.write("internal error: xor lowering\\n")
    sys.exit(2)
shutil.copy(sys.argv[1], sys.argv[2])
"""

# (tool, expected class, design); the noise around each trigger holds no
# site the tool reacts to.
REDUCTION_CASES = [
    ("and_to_or", MISMATCH_BUG, """
module t(input [3:0] a, input [3:0] b, output [3:0] y, output [3:0] z);
  wire [3:0] n;
  assign n = a + b;
  assign z = n - 4'd1;
  assign y = a & b;
endmodule
"""),
    ("and_to_or", MISMATCH_BUG, """
module t(input clk, input rst, input [3:0] a, input [3:0] b, output reg [3:0] y,
         output reg [3:0] q);
  always @(posedge clk) begin
    if (rst)
      q <= 4'd0;
    else
      q <= q + a;
    y <= a & b;
  end
endmodule
"""),
    ("and_to_or", MISMATCH_BUG, """
module t(input [1:0] s, input [3:0] a, input [3:0] b, output reg [3:0] y);
  always @* begin
    y = 4'd0;
    case (s)
      2'd0: y = a & b;
      2'd1: y = a + b;
      default: y = b;
    endcase
  end
endmodule
"""),
    ("drop_signed", MISMATCH_BUG, """
module t(input [3:0] s, input [3:0] u, output [3:0] z, output [3:0] w);
  assign w = u | s;
  assign z = $signed(s) >>> 1;
endmodule
"""),
    ("drop_signed", MISMATCH_BUG, """
module t(input [3:0] s, input e, output reg [3:0] z, output reg k);
  always @* begin
    k = !e;
    if (e)
      z = $signed(s) >>> 2;
    else
      z = s;
  end
endmodule
"""),
    ("off_by_one_shift", MISMATCH_BUG, """
module t(input [3:0] a, input [3:0] b, output [7:0] y, output [3:0] d);
  assign d = a - b;
  assign y = a << 1;
endmodule
"""),
    ("off_by_one_shift", MISMATCH_BUG, """
module t(input clk, input [3:0] a, output reg [7:0] y, output reg [3:0] c);
  always @(posedge clk) begin
    c <= c + 4'd1;
    y <= a << 2;
  end
endmodule
"""),
    ("crash_on_xor", CRASH_BUG, """
module t(input a, input b, output y, output z);
  reg r;
  assign z = a | b;
  assign y = a ^ b;
  always @* r = a & b;
endmodule
"""),
    ("crash_on_xor", CRASH_BUG, """
module t(input clk, input a, input b, output reg y, output reg z);
  always @(posedge clk) begin
    z <= a;
    if (a)
      y <= b;
    else
      y <= a ^ b;
  end
endmodule
"""),
    ("crash_on_xor", CRASH_BUG, """
module t(input [3:0] a, input [3:0] b, output [3:0] y, output [3:0] z);
  wire [3:0] m;
  assign m = a + b;
  assign z = m;
  assign y = ^a ? a : b;
endmodule
"""),
]


@pytest.fixture
def tools(tmp_path, monkeypatch):
    monkeypatch.setenv("HDLMUTANT_WORKDIR", str(tmp_path / "scratch"))
    script = tmp_path / "crash_on_xor.py"
    script.write_text(CRASH_ON_XOR)
    command = f"{shlex.quote(sys.executable)} {shlex.quote(str(script))} {{input}} {{output}}"
    found = {profile: ToolSpec("faulty", BUILTIN_FAULTY, fault_profile=profile)
             for profile in ("and_to_or", "drop_signed", "off_by_one_shift")}
    found["crash_on_xor"] = ToolSpec("crashy", EXTERNAL, command=command)
    return found


def bug_class(design, tool, tb):
    obs = None
    try:
        obs = observe(design, tool, tb)
        verdict = identify_bug(rtl_observation(design, tb), obs)
    except HdlMutantError:
        return None
    finally:
        if obs is not None:
            shutil.rmtree(obs.workdir, ignore_errors=True)
    return None if verdict is None else verdict.bug_class


@pytest.mark.parametrize("tool_name,expected,source", REDUCTION_CASES)
def test_reduced_case_keeps_bug_and_is_minimal(tools, tool_name, expected, source):
    tool = tools[tool_name]
    module = parse(source)
    tb = build_testbench(module, StimulusConfig(rng_seed=9, vector_count=30))

    def oracle(candidate):
        return bug_class(candidate, tool, tb) == expected

    assert oracle(module)
    reduced = reduce_design(module, oracle)
    assert oracle(reduced)
    assert design_size(reduced) <= design_size(module)
    for nid in chunks(reduced):
        candidate = without_chunk(reduced, nid)
        assert (candidate is None or design_size(candidate) >= design_size(reduced)
                or not oracle(candidate))
