import json
import os

import pytest

from hdlmutant.cli import EXIT_BUGS, EXIT_OK, EXIT_USAGE, cli_dispatch, corpus_files
from hdlmutant.fragments import load_model

ADDER = "module add(input [3:0] a, input [3:0] b, output [4:0] y); assign y = a + b; endmodule\n"
SEED = """
module seed(input clk, input rst, input [3:0] a, output reg [3:0] y);
  always @(posedge clk) begin
    if (rst)
      y <= 4'd0;
    else
      y <= a + 4'd1;
  end
endmodule
"""


@pytest.fixture(autouse=True)
def scratch(tmp_path, monkeypatch):
    monkeypatch.setenv("HDLMUTANT_WORKDIR", str(tmp_path / "scratch"))


def write_config(tmp_path, tool):
    seeds = tmp_path / "seeds"
    seeds.mkdir(exist_ok=True)
    (seeds / "seed.v").write_text(SEED)
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps({"seeds_dir": "seeds", "output_dir": "out", "tools": [tool],
                                "max_iterations": 1, "variants_per_seed": 1,
                                "stimulus": {"vector_count": 10}, "reduce": False}))
    return str(path)


def test_mine(tmp_path):
    corpus = tmp_path / "corpus"
    (corpus / "sub").mkdir(parents=True)
    (corpus / "add.v").write_text(ADDER)
    (corpus / "sub" / "add2.v").write_text(ADDER.replace("module add", "module add2"))
    (corpus / "README").write_text("ignored")
    assert corpus_files(str(corpus)) == [str(corpus / "add.v"), str(corpus / "sub" / "add2.v")]
    out = tmp_path / "model.json"
    assert cli_dispatch(["mine", str(corpus), "-o", str(out), "--max-len", "4"]) == EXIT_OK
    model = load_model(str(out))
    assert model.freq == {"+": 2}
    assert model.max_len_L == 4


def test_mine_missing_corpus(tmp_path):
    assert cli_dispatch(["mine", str(tmp_path / "none"), "-o", str(tmp_path / "m.json")]) \
        == EXIT_USAGE


def test_usage_errors(capsys):
    assert cli_dispatch(["frobnicate"]) == EXIT_USAGE
    assert cli_dispatch(["fuzz"]) == EXIT_USAGE
    assert cli_dispatch(["--help"]) == EXIT_OK
    assert "hdlmutant" in capsys.readouterr().out


def test_fuzz_without_bugs(tmp_path, capsys):
    config = write_config(tmp_path, {"name": "id", "kind": "builtin_identity"})
    assert cli_dispatch(["fuzz", "-c", config, "--seed", "3"]) == EXIT_OK
    assert "0 bug(s)" in capsys.readouterr().out
    with open(tmp_path / "out" / "campaign.json", encoding="utf-8") as f:
        assert json.load(f)["config"]["rng_seed"] == 3


def test_fuzz_bad_config(tmp_path, capsys):
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps({"seeds_dir": "nowhere", "output_dir": "out", "tools": []}))
    assert cli_dispatch(["fuzz", "-c", str(path)]) == EXIT_USAGE
    assert "hdlmutant fuzz:" in capsys.readouterr().err


def test_fuzz_reduce_and_report(tmp_path):
    config = write_config(tmp_path, {"name": "crashy", "kind": "builtin_crash"})
    out = tmp_path / "other"
    assert cli_dispatch(["fuzz", "-c", config, "--out", str(out)]) == EXIT_BUGS
    bug_dir = out / "bugs" / "bug-0001"
    assert not (bug_dir / "reduced.v").exists()
    assert cli_dispatch(["reduce", str(bug_dir), "--budget-secs", "60"]) == EXIT_OK
    assert (bug_dir / "reduced.v").exists()
    with open(bug_dir / "metadata.json", encoding="utf-8") as f:
        assert json.load(f)["reduced"] == "reduced.v"
    report = tmp_path / "report.md"
    assert cli_dispatch(["report", "-d", str(out), "-o", str(report)]) == EXIT_OK
    text = report.read_text()
    assert "| crashy | 0 | 1 | 0 | 1 |" in text


def test_reduce_missing_bug(tmp_path):
    assert cli_dispatch(["reduce", str(tmp_path)]) == EXIT_USAGE


def test_report_without_campaign(tmp_path):
    assert cli_dispatch(["report", "-d", str(tmp_path), "-o", str(tmp_path / "r.md")]) \
        == EXIT_USAGE
    assert not os.path.exists(tmp_path / "r.md")
