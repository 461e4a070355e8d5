#!/usr/bin/env python3

"""Content-addressed pool of designs eligible for mutation."""

import hashlib
import logging
from dataclasses import dataclass, field

from .mutation import VERIFIED
from .verilog_emit import emit


def content_digest(module):
    return hashlib.sha256(emit(module).encode("utf-8")).hexdigest()


@dataclass
class SeedEntry:
    digest: str
    ast: object
    text: str
    origin: str = ""
    variants: int = 0
    bugs: int = 0
    order: int = 0

    @property
    def bug_yield(self):
        return self.bugs / max(1, self.variants)


@dataclass
class SeedPool:
    """Designs keyed by the SHA-256 of their canonical text.

    When full, the entry with the lowest bugs-per-variant yield is evicted,
    the oldest one on ties.
    """

    capacity: int = 256
    entries: dict = field(default_factory=dict)
    _counter: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be positive")

    def __len__(self):
        return len(self.entries)

    def __contains__(self, digest):
        return digest in self.entries

    def ordered(self):
        """Entries in insertion order."""
        return sorted(self.entries.values(), key=lambda e: e.order)

    def add(self, module, origin=""):
        """Insert ``module`` unless its content is already present.

        .. Returns:
        :returns: The digest when inserted, None for duplicates.
        """
        text = emit(module)
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        if digest in self.entries:
            return None
        if len(self.entries) >= self.capacity:
            victim = min(self.entries.values(), key=lambda e: (e.bug_yield, e.order))
            logging.debug("Evicting seed %s (yield %.3f)", victim.digest[:12], victim.bug_yield)
            del self.entries[victim.digest]
        self.entries[digest] = SeedEntry(digest, module, text, origin, order=self._counter)
        self._counter += 1
        return digest

    def attribute(self, digest, variants=0, bugs=0):
        entry = self.entries.get(digest)
        if entry is not None:
            entry.variants += variants
            entry.bugs += bugs


def update_seed_pool(pool, variant, origin=""):
    """Feed a verified, non-degenerate variant back into ``pool``."""
    if variant.equivalence != VERIFIED:
        raise ValueError("only verified variants may enter the seed pool")
    if variant.degenerate:
        return pool
    pool.add(variant.ast, origin)
    return pool
