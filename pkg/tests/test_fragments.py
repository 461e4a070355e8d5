import collections
import random

import pytest

from hdlmutant.fragments import (TEMP_PREFIX, EmptyCorpus, EmptyModel, FragmentModel,
                                 NoViableFragment, UnseenContext, bayes_transition_probability,
                                 build_model, element_probability, feedback_update,
                                 ingest_corpus, linearize, load_model, sample_elements,
                                 sample_fragment, sample_start, save_model,
                                 transition_probability)
from hdlmutant.verilog_ast import (BlockingAssign, NonBlockingAssign, Ref, signal_table,
                                   walk)
from hdlmutant.verilog_parser import parse

ADDER = "module t(input [3:0] a, input [3:0] b, output [4:0] y); assign y = a + b; endmodule"
COMPARE = """
module t(input [3:0] a, input [3:0] b, output reg [4:0] y);
  always @* begin
    y = 5'd0;
    if (a < b)
      y = a + b;
  end
endmodule
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_single_assign_corpus(tmp_path):
    stats = ingest_corpus([write(tmp_path, "a.v", ADDER)])
    assert stats.freq() == {"+": 1}
    assert not stats.transitions()


def test_if_linearization():
    assert linearize(parse(COMPARE)) == ["if-else", "<", "+"]


def test_if_transitions(tmp_path):
    stats = ingest_corpus([write(tmp_path, "c.v", COMPARE)])
    assert stats.transitions() == {("if-else", "<"): 1, ("<", "+"): 1}
    assert stats.ends() == {("+", "end"): 1}


def test_closing_tokens_in_stream(tmp_path):
    assert linearize(parse(COMPARE), ends=True) == ["if-else", "<", "+", "end", "end",
                                                     "endmodule"]
    stats = ingest_corpus([write(tmp_path, "a.v", ADDER)])
    assert stats.ends() == {("+", "endmodule"): 1}


def test_corrupt_file_is_counted(tmp_path):
    paths = [write(tmp_path, "a.v", ADDER), write(tmp_path, "bad.v", "module broken("),
             write(tmp_path, "c.v", COMPARE)]
    stats = ingest_corpus(paths)
    assert (stats.files_ingested, stats.files_rejected) == (2, 1)
    assert stats.freq()["+"] == 2


def test_empty_corpus(tmp_path):
    with pytest.raises(EmptyCorpus):
        ingest_corpus([write(tmp_path, "bad.v", "garbage"), str(tmp_path / "missing.v")])


def test_single_element_probability():
    assert element_probability(FragmentModel({"^": 5})) == {"^": 1.0}


def test_weighted_probability():
    probs = element_probability(FragmentModel({"+": 3, "if-else": 1}))
    assert probs["+"] == pytest.approx(0.6)
    assert probs["if-else"] == pytest.approx(0.4)


def test_equal_products():
    # C(+) = 2, C(case) = 4
    probs = element_probability(FragmentModel({"+": 2, "case": 1}))
    assert probs == {"+": pytest.approx(0.5), "case": pytest.approx(0.5)}


def test_zero_model():
    with pytest.raises(EmptyModel):
        element_probability(FragmentModel({"+": 0}))


def transitions_model(threshold=None):
    return FragmentModel({"+": 4, "-": 3, "if-else": 2},
                         transitions={("+", "-"): 3, ("+", "+"): 1, ("-", "+"): 2,
                                      ("if-else", "-"): 1, ("-", "if-else"): 1},
                         threshold_T=threshold)


def test_transition_probability():
    model = transitions_model()
    assert transition_probability(model, "-", "+") == pytest.approx(0.75)
    with pytest.raises(UnseenContext):
        transition_probability(model, "+", "*")


@pytest.mark.parametrize("prev", ["+", "-", "if-else"])
@pytest.mark.parametrize("nxt", ["+", "-", "if-else"])
def test_bayes_rule_matches_direct_estimate(prev, nxt):
    model = transitions_model()
    assert bayes_transition_probability(model, nxt, prev) == pytest.approx(
        transition_probability(model, nxt, prev))


def test_default_threshold_is_median():
    # conditionals: 0.75, 0.25, 2/3, 1/3, 1.0
    assert transitions_model().threshold_T == pytest.approx(2 / 3)


def test_full_threshold_stops_after_one_element():
    model = FragmentModel({"+": 3, "-": 2},
                          transitions={("+", "-"): 1, ("+", "+"): 1, ("-", "+"): 1,
                                       ("-", "-"): 1},
                          threshold_T=1.0)
    scope = list(signal_table(parse(ADDER)).values())
    for seed in range(20):
        fragment = sample_fragment(model, scope, random.Random(seed))
        assert len(fragment.elements) == 1
        assert len(fragment.statements) == 1


def test_chain_respects_max_length():
    model = FragmentModel({"+": 1}, transitions={("+", "+"): 5}, max_len_L=4)
    assert sample_elements(model, random.Random(0)) == ["+"] * 4


def test_closing_token_ends_chain():
    model = FragmentModel({"+": 1}, transitions={("+", "+"): 1}, ends={("+", "end"): 1},
                          threshold_T=0.5)
    lengths = {len(sample_elements(model, random.Random(seed))) for seed in range(200)}
    assert 1 in lengths
    assert max(lengths) > 1
    # closing tokens outside end_tokens never stop a chain
    open_model = model.replace(end_tokens=())
    assert sample_elements(open_model, random.Random(0)) == ["+"] * open_model.max_len_L


def test_start_distribution():
    model = FragmentModel({"+": 3, "if-else": 1})
    rng = random.Random(1234)
    counts = collections.Counter(sample_start(model, rng) for _ in range(4000))
    assert abs(counts["+"] / 4000 - 0.6) <= 0.04
    assert abs(counts["if-else"] / 4000 - 0.4) <= 0.04


def test_uniform_strategy():
    model = FragmentModel({"+": 100, "-": 1}, strategy="uniform", max_len_L=3)
    rng = random.Random(5)
    for _ in range(50):
        chain = sample_elements(model, rng)
        assert 1 <= len(chain) <= 3
        assert set(chain) <= {"+", "-"}


def test_unknown_strategy():
    with pytest.raises(ValueError):
        FragmentModel({"+": 1}, strategy="greedy")


def test_fragment_is_deterministic():
    model = transitions_model()
    scope = list(signal_table(parse(ADDER)).values())
    first = sample_fragment(model, scope, random.Random(7))
    second = sample_fragment(model, scope, random.Random(7))
    assert first.statements == second.statements
    assert first.temps == second.temps


def test_fragment_writes_only_temps():
    module = parse(COMPARE)
    scope = list(signal_table(module).values())
    taken = set(signal_table(module))
    for seed in range(30):
        fragment = sample_fragment(transitions_model(), scope, random.Random(seed),
                                   nonblocking=True, taken=taken)
        temps = {d.name for d in fragment.temps}
        assert all(name.startswith(TEMP_PREFIX) for name in temps)
        for stmt in fragment.statements:
            for node in walk(stmt):
                if isinstance(node, (BlockingAssign, NonBlockingAssign)):
                    assert isinstance(node.target, Ref) and node.target.name in temps


def test_fragment_needs_scope():
    with pytest.raises(NoViableFragment):
        sample_fragment(transitions_model(), [], random.Random(0))


def test_feedback_success():
    model = FragmentModel({"+": 3})
    updated = feedback_update(model, [(["+"], True)], eta=0.1)
    assert updated.weights["+"] == pytest.approx(2.2)
    assert model.weights["+"] == 2.0


def test_feedback_failure_floor():
    model = FragmentModel({"+": 3}, weights={"+": 0.1})
    assert feedback_update(model, [(["+"], False)]).weights["+"] == pytest.approx(0.1)


def test_feedback_without_outcomes():
    model = FragmentModel({"+": 3})
    assert feedback_update(model, []) is model


def test_feedback_keeps_distribution_normalized():
    model = transitions_model()
    updated = feedback_update(model, [(["+", "-"], True), (["if-else"], False)])
    assert sum(element_probability(updated).values()) == pytest.approx(1.0)
    assert updated.transitions[("+", "-")] == model.transitions[("+", "-")] + 1


def test_model_file(tmp_path):
    stats = ingest_corpus([write(tmp_path, "a.v", ADDER), write(tmp_path, "c.v", COMPARE)])
    model = build_model(stats, max_len_L=5)
    path = str(tmp_path / "model.json")
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.freq == model.freq
    assert loaded.weights == model.weights
    assert loaded.transitions == model.transitions
    assert loaded.threshold_T == model.threshold_T
    assert loaded.max_len_L == 5
    assert loaded.ends == model.ends == {("+", "endmodule"): 1, ("+", "end"): 1}
