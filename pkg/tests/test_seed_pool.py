import pytest

from hdlmutant.mutation import UNCHECKED, VERIFIED, MutationEntry, Variant
from hdlmutant.seed_pool import SeedPool, content_digest, update_seed_pool
from hdlmutant.verilog_parser import parse


def design(op):
    return parse(f"module t(input a, input b, output y); assign y = a {op} b; endmodule")


def test_duplicate_content_is_ignored():
    pool = SeedPool()
    digest = pool.add(design("&"), origin="a.v")
    assert digest == content_digest(design("&"))
    # whitespace differences vanish in the canonical text
    assert pool.add(parse("module t(input a,input b,output y);assign y=a&b;endmodule")) is None
    assert len(pool) == 1
    assert digest in pool


def test_lowest_yield_is_evicted():
    pool = SeedPool(capacity=2)
    first = pool.add(design("&"))
    second = pool.add(design("|"))
    pool.attribute(first, variants=4, bugs=2)
    pool.attribute(second, variants=4, bugs=0)
    third = pool.add(design("^"))
    assert set(pool.entries) == {first, third}


def test_oldest_is_evicted_on_ties():
    pool = SeedPool(capacity=2)
    first = pool.add(design("&"))
    second = pool.add(design("|"))
    pool.add(design("^"))
    assert first not in pool
    assert second in pool
    assert [e.digest for e in pool.ordered()][0] == second


def test_attribute_unknown_digest():
    pool = SeedPool()
    pool.attribute("0" * 64, variants=1, bugs=1)
    assert len(pool) == 0


def test_capacity_must_be_positive():
    with pytest.raises(ValueError):
        SeedPool(capacity=0)


def test_unverified_variant_is_refused():
    with pytest.raises(ValueError):
        update_seed_pool(SeedPool(), Variant(design("&"), equivalence=UNCHECKED))


def test_degenerate_variant_is_skipped():
    pool = update_seed_pool(SeedPool(), Variant(design("&"), equivalence=VERIFIED))
    assert len(pool) == 0


def test_verified_variant_is_added():
    variant = Variant(design("|"), [MutationEntry(3, "prune_leaf", "")], VERIFIED)
    pool = update_seed_pool(SeedPool(), variant, origin="seed~0.0")
    (entry,) = pool.ordered()
    assert entry.origin == "seed~0.0"
    assert entry.bug_yield == 0.0
