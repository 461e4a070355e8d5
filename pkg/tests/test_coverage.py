import pytest

from bench import fixed_testbench
from hdlmutant.coverage import (CoverageSummary, coverage_from_json, coverage_summary,
                                coverage_to_json)
from hdlmutant.simulator import simulate
from hdlmutant.verilog_ast import Case, If, Ternary, walk
from hdlmutant.verilog_parser import parse

IF_ELSE = """
module t(input a, output reg y);
  always @* begin
    if (a)
      y = 1'b1;
    else
      y = 1'b0;
  end
endmodule
"""


def run(source, rows):
    module = parse(source)
    return module, simulate(module, fixed_testbench(module, rows))[1]


def test_one_statement_never_runs():
    source = """
module t(input a, input b, input en, output reg y, output w);
  assign w = a ^ b;
  always @* begin
    y = a;
    y = b;
  end
  always @(posedge en) begin
  end
endmodule
"""
    _, cov = run(source, [{"a": 1, "b": 0, "en": 0}] * 3)
    assert len(cov.line_hits) == 5
    assert coverage_summary(cov) == CoverageSummary(80.0, 100.0, 100.0)


def test_condition_seen_true_only():
    module, cov = run(IF_ELSE, [{"a": 1}] * 4)
    cond = next(n for n in walk(module) if isinstance(n, If)).cond
    assert cov.condition_outcomes[cond.nid].saw_true
    assert not cov.condition_outcomes[cond.nid].saw_false
    summary = coverage_summary(cov)
    assert summary.condition_pct == 0.0
    assert summary.branch_pct == 50.0


def test_full_coverage():
    _, cov = run(IF_ELSE, [{"a": 0}, {"a": 1}, {"a": 0}])
    assert coverage_summary(cov) == CoverageSummary(100.0, 100.0, 100.0)


def test_ternary_condition():
    source = "module t(input s, input a, input b, output y); assign y = s ? a : b; endmodule"
    module, cov = run(source, [{"s": 0, "a": 1, "b": 0}, {"s": 1, "a": 1, "b": 0}])
    cond = next(n for n in walk(module) if isinstance(n, Ternary)).cond
    assert cov.condition_outcomes[cond.nid].covered


def test_case_arms_and_default():
    source = """
module t(input [1:0] s, output reg [1:0] y);
  always @* begin
    case (s)
      2'd0: y = 2'd3;
      2'd1, 2'd2: y = 2'd2;
      default: y = 2'd0;
    endcase
  end
endmodule
"""
    module, cov = run(source, [{"s": 0}, {"s": 2}])
    case = next(n for n in walk(module) if isinstance(n, Case))
    assert cov.branch_taken[(case.nid, "arm0")] >= 1
    assert cov.branch_taken[(case.nid, "arm1")] >= 1
    assert cov.branch_taken[(case.nid, "default")] == 0
    assert cov.condition_outcomes[case.arms[0].nid].covered


def test_json_document():
    _, cov = run(IF_ELSE, [{"a": 1}])
    assert coverage_from_json(coverage_to_json(cov)) == cov


@pytest.mark.parametrize("rows", [[{"a": 0}], [{"a": 1}]])
def test_conditions_never_exceed_hundred(rows):
    _, cov = run(IF_ELSE, rows)
    assert all(0.0 <= pct <= 100.0 for pct in coverage_summary(cov))
