#!/usr/bin/env python3

"""Equivalent-variant generation by pruning and inserting logic at zombie sites."""

import collections
import copy
import dataclasses
import logging
from dataclasses import dataclass, field

from .errors import HdlMutantError
from .fragments import NoViableFragment, sample_fragment
from .simulator import Equivalent, SimulationError, compare_traces, simulate
from .testbench import generate_testbench
from .verilog_ast import (AlwaysBlock, Case, FrontendError, If, InitialBlock, child_statements,
                          classify_node, enclosing_item, find_node, insert_statements,
                          number_new_nodes, remove_statement, signal_table, statement_count,
                          walk)
from .verilog_emit import emit
from .verilog_parser import parse
from .zombie import mark_zombie, signal_usage, zombie_local_signals

VERIFIED = "verified"
FAILED = "failed"
UNCHECKED = "unchecked"

PRUNE_LEAF = "prune_leaf"
PRUNE_SUBTREE = "prune_subtree"
INSERT_BEFORE = "insert_before"
INSERT_AFTER = "insert_after"

MutationEntry = collections.namedtuple("MutationEntry", ["site", "action", "fragment"])
ComplexityDelta = collections.namedtuple("ComplexityDelta", ["statements", "variables", "branches"])


class SimulationFailed(HdlMutantError):
    """Equivalence could not be decided because a simulation failed."""

    def __init__(self, which, cause):
        super().__init__(f"simulation of the {which} failed: {cause}")
        self.which = which
        self.cause = cause


@dataclass(frozen=True)
class MutationConfig:
    p_parent_prune: float = 0.5
    p_leaf_prune: float = 0.5
    p_parent_insert: float = 0.5
    p_leaf_insert: float = 0.5
    variants_per_seed: int = 5
    max_retries: int = 20
    p_prune_vs_insert: float = 0.5
    resample: bool = True

    def __post_init__(self):
        for name in ("p_parent_prune", "p_leaf_prune", "p_parent_insert", "p_leaf_insert",
                     "p_prune_vs_insert"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.variants_per_seed < 1 or self.max_retries < 1:
            raise ValueError("variants_per_seed and max_retries must be positive")


@dataclass
class Variant:
    ast: object
    mutation_log: list = field(default_factory=list)
    equivalence: str = UNCHECKED
    fragments: list = field(default_factory=list)
    rejected_fragments: list = field(default_factory=list)
    coverage_gain: int = 0
    candidates_checked: int = 0
    complexity: ComplexityDelta = ComplexityDelta(0, 0, 0)

    @property
    def degenerate(self):
        return not self.mutation_log


def flip_coin(p, rng):
    """True with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    return rng.random() < p


def _scope(module):
    info = signal_table(module)
    return [info[name] for name in sorted(info)]


def prune_visit(ast, stmt, annotation, cfg, rng, log=None):
    """Breadth-first pruning below statement ``stmt``.

    Only unprotected zombie sites are candidates. An assignment that wins its
    coin flip is deleted, a control structure goes with its whole subtree.

    .. Returns:
    :returns: A pruned copy of ``ast``; ``log`` receives one entry per deletion.
    """
    work = copy.deepcopy(ast)
    queue = collections.deque([(find_node(work, stmt), False)])
    while queue:
        node, inside = queue.popleft()
        if annotation.is_site(node.nid, inside):
            kind = classify_node(node.nid, work)
            p = cfg.p_leaf_prune if kind == "leaf" else cfg.p_parent_prune
            if flip_coin(p, rng):
                remove_statement(work, node.nid)
                if log is not None:
                    action = PRUNE_LEAF if kind == "leaf" else PRUNE_SUBTREE
                    log.append(MutationEntry(node.nid, action, ""))
                logging.debug("Pruned %s site %d", kind, node.nid)
                continue
        within = inside or node.nid in annotation.zombie_nodes
        queue.extend((child, within) for child in child_statements(node))
    return work


def insert_visit(ast, stmt, annotation, model, cfg, rng, log=None, inserted=None):
    """Breadth-first fragment insertion below statement ``stmt``.

    A coin-selected zombie site gets a sampled fragment placed before or
    after it with equal probability; fresh temporaries are declared at module
    scope. Sites without a viable fragment are skipped.

    .. Returns:
    :returns: A copy of ``ast`` with the insertions; ``inserted`` receives the
        element chain of every inserted fragment.
    """
    work = copy.deepcopy(ast)
    usage = signal_usage(work)
    taken = set(signal_table(work))
    scope = _scope(ast)
    queue = collections.deque([(find_node(work, stmt), False)])
    while queue:
        node, inside = queue.popleft()
        if annotation.is_site(node.nid, inside):
            kind = classify_node(node.nid, work)
            p = cfg.p_leaf_insert if kind == "leaf" else cfg.p_parent_insert
            if flip_coin(p, rng):
                item = enclosing_item(work, node.nid)
                nonblocking = isinstance(item, AlwaysBlock) and not item.combinational
                try:
                    fragment = sample_fragment(model, scope, rng, nonblocking, taken,
                                               zombie_local_signals(work, node.nid, usage))
                except NoViableFragment as err:
                    logging.debug("No fragment for site %d: %s", node.nid, err)
                    continue
                before = rng.random() < 0.5
                insert_statements(work, node.nid, fragment.statements, before)
                work.declarations.extend(fragment.temps)
                number_new_nodes(work)
                summary = " ".join(fragment.elements)
                if log is not None:
                    log.append(MutationEntry(node.nid, INSERT_BEFORE if before else INSERT_AFTER,
                                             summary))
                if inserted is not None:
                    inserted.append(list(fragment.elements))
                logging.debug("Inserted [%s] next to site %d", summary, node.nid)
                continue
        within = inside or node.nid in annotation.zombie_nodes
        queue.extend((child, within) for child in child_statements(node))
    return work


def equivalence_testbenches(tb):
    """The campaign testbench plus one with an independently derived seed."""
    return [tb, generate_testbench(tb.ports, tb.config.derived())]


def _traces(design, testbenches, which):
    runs = []
    for bench in testbenches:
        try:
            runs.append(simulate(design, bench))
        except SimulationError as err:
            raise SimulationFailed(which, err) from err
    return runs


def check_equivalence(seed, variant, tb):
    """True iff seed and variant produce identical traces under both testbenches."""
    benches = equivalence_testbenches(tb)
    seed_runs = _traces(seed, benches, "seed")
    variant_runs = _traces(variant, benches, "variant")
    return all(isinstance(compare_traces(a[0], b[0]), Equivalent)
               for a, b in zip(seed_runs, variant_runs))


def _branch_count(module):
    count = 0
    for node in walk(module):
        if isinstance(node, If):
            count += 2
        elif isinstance(node, Case):
            count += len(node.arms) + 1
    return count


def complexity_delta(seed, variant):
    return ComplexityDelta(statement_count(variant) - statement_count(seed),
                           len(variant.declarations) - len(seed.declarations),
                           _branch_count(variant) - _branch_count(seed))


def _pass_config(cfg, rng):
    if not cfg.resample:
        return cfg
    return dataclasses.replace(cfg, p_parent_prune=rng.random(), p_leaf_prune=rng.random(),
                               p_parent_insert=rng.random(), p_leaf_insert=rng.random())


def gen_variant(seed, cov, model, cfg, rng, tb):
    """Generate one equivalent variant of ``seed``.

    .. Keyword Arguments:
    :param seed: Seed ModuleAst.
    :param cov: Coverage of ``seed`` under ``tb``.
    :param model: FragmentModel, or None to disable insertion.
    :param cfg: MutationConfig.
    :param rng: ``random.Random`` owned by this call.
    :param tb: The campaign testbench.

    .. Returns:
    :returns: A verified Variant; the seed itself with an empty log when no
        candidate survives.
    """
    annotation = mark_zombie(seed, cov)
    variant = Variant(copy.deepcopy(seed), equivalence=VERIFIED)
    if not annotation.zombie_nodes:
        return variant
    benches = equivalence_testbenches(tb)
    seed_runs = _traces(seed, benches, "seed")
    seed_points = seed_runs[-1][1].covered_points()
    bodies = [item.body.nid for item in seed.items if isinstance(item, (AlwaysBlock, InitialBlock))]
    for attempt in range(1, cfg.max_retries + 1):
        log, inserted = [], []
        work = seed
        for body in bodies:
            if model is None or flip_coin(cfg.p_prune_vs_insert, rng):
                work = prune_visit(work, body, annotation, _pass_config(cfg, rng), rng, log)
            else:
                work = insert_visit(work, body, annotation, model, _pass_config(cfg, rng), rng,
                                    log, inserted)
        if not log:
            continue
        variant.candidates_checked += 1
        try:
            candidate = parse(emit(work))
            runs = _traces(candidate, benches, "variant")
        except (FrontendError, SimulationFailed) as err:
            logging.debug("Candidate %d discarded: %s", attempt, err)
            variant.rejected_fragments.extend(inserted)
            continue
        if all(isinstance(compare_traces(a[0], b[0]), Equivalent)
               for a, b in zip(seed_runs, runs)):
            variant.ast = candidate
            variant.mutation_log = log
            variant.fragments = inserted
            variant.coverage_gain = runs[-1][1].covered_points() - seed_points
            variant.complexity = complexity_delta(seed, candidate)
            return variant
        logging.debug("Candidate %d is not equivalent to its seed", attempt)
        variant.rejected_fragments.extend(inserted)
    return variant
