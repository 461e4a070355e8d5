#!/usr/bin/env python3

"""Greedy chunk-deletion reduction of bug-triggering designs.

A chunk is a module item or a statement. Chunks are tried one at a time in
order (items first, then statements in pre-order); whenever a deletion keeps
the bug alive the walk restarts on the smaller design, until no single
deletion does. Declarations nothing refers to any more are dropped last.
"""

import copy
import logging
import time

from .errors import HdlMutantError
from .verilog_ast import (BeginEnd, FrontendError, names_read, names_written, remove_declaration,
                          remove_statement, statements, walk)
from .verilog_emit import emit
from .verilog_parser import parse


class ReductionTimeout(HdlMutantError):
    """The reduction budget ran out; ``best`` is the smallest design found."""

    def __init__(self, best):
        super().__init__("reduction budget exhausted")
        self.best = best


def design_size(module):
    return sum(1 for _ in walk(module))


def chunks(module):
    """Candidate deletions: item NodeIds, then statement NodeIds in pre-order."""
    items = [item.nid for item in module.items]
    seen = set(items)
    stmts = [n.nid for n in statements(module)
             if n.nid not in seen and not (isinstance(n, BeginEnd) and not n.stmts)]
    return items + stmts


def without_chunk(module, nid):
    """A re-parsed copy of ``module`` with chunk ``nid`` deleted, or None."""
    work = remove_statement(copy.deepcopy(module), nid)
    try:
        return parse(emit(work))
    except FrontendError as err:
        logging.debug("Deleting chunk %d breaks the design: %s", nid, err)
        return None


def unused_declarations(module):
    used = set()
    for item in module.items:
        used |= names_read(item) | names_written(item)
    return [d.name for d in module.declarations if d.name not in used]


def _out_of_time(deadline, best):
    if deadline is not None and time.monotonic() > deadline:
        logging.warning("Reduction stopped at %d nodes: budget exhausted", design_size(best))
        raise ReductionTimeout(best)


def reduce_design(module, still_fails, budget_secs=None):
    """Shrink ``module`` while ``still_fails(candidate)`` holds.

    .. Keyword Arguments:
    :param module: A design for which ``still_fails`` is true.
    :param still_fails: Oracle called on every candidate.
    :param budget_secs: Wall-clock budget, unlimited when None.

    .. Returns:
    :returns: A design that is deletion-minimal at chunk granularity.
    """
    deadline = None if budget_secs is None else time.monotonic() + budget_secs
    best = module
    progress = True
    while progress:
        progress = False
        for nid in chunks(best):
            _out_of_time(deadline, best)
            candidate = without_chunk(best, nid)
            if candidate is None or design_size(candidate) >= design_size(best):
                continue
            if still_fails(candidate):
                logging.debug("Chunk %d removed, %d nodes left", nid, design_size(candidate))
                best = candidate
                progress = True
                break
    unused = unused_declarations(best)
    if unused:
        _out_of_time(deadline, best)
        candidate = copy.deepcopy(best)
        for name in unused:
            remove_declaration(candidate, name)
        candidate = parse(emit(candidate))
        if still_fails(candidate):
            best = candidate
    return best
