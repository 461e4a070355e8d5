#!/usr/bin/env python3

"""Fragment mining and sampling.

Designs are linearized into pre-order streams of syntax elements (operators
and control structures). Their frequencies, complexity weights and
first-order transitions form a FragmentModel, from which short element
chains are sampled and realized as insertable statements.
"""

import collections
import json
import logging
import statistics
from dataclasses import dataclass, field

from .errors import HdlMutantError
from .semantics import self_width
from .verilog_ast import (BINARY_OPS, BeginEnd, Binary, BlockingAssign, Case, CaseArm, For,
                          FrontendError, If, Literal, ModuleAst, NetDecl, NonBlockingAssign,
                          Ref, SignCast, Ternary, Unary, SignalInfo, children)
from .verilog_parser import parse

COMPLEXITY_WEIGHTS = {
    "u+": 1, "u-": 1, "!": 1, "~": 1,
    "u&": 1, "u|": 1, "u^": 1, "u~&": 1, "u~|": 1, "u~^": 1,
    "+": 2, "-": 2, "*": 2, "/": 2, "%": 2,
    "&&": 2, "||": 2,
    "&": 2, "|": 2, "^": 2, "~^": 2,
    "==": 2, "!=": 2,
    "===": 3, "!==": 3,
    "<": 3, "<=": 3, ">": 3, ">=": 3,
    "<<": 3, ">>": 3, "<<<": 3, ">>>": 3,
    "?:": 4,
    "if-else": 4, "case": 4,
    "for": 5,
}
CONTROL_ELEMENTS = ("if-else", "case", "for")
UNARY_ELEMENTS = {"u+": "+", "u-": "-", "!": "!", "~": "~", "u&": "&", "u|": "|",
                  "u^": "^", "u~&": "~&", "u~|": "~|", "u~^": "~^"}
END_TOKENS = frozenset(("end", "endmodule"))
DEFAULT_MAX_LEN = 8
DEFAULT_ETA = 0.1
DEFAULT_C_MIN = 0.1
SAMPLING_STRATEGIES = ("bayesian", "uniform")
MODEL_VERSION = 1
TEMP_PREFIX = "hm_t"


class FragmentError(HdlMutantError):
    """Base class of fragment-miner errors."""


class EmptyCorpus(FragmentError):
    """No corpus file could be parsed."""


class EmptyModel(FragmentError):
    """The model has no element with a positive weighted count."""


class UnseenContext(FragmentError):
    """An element was never observed as a predecessor."""

    def __init__(self, element):
        super().__init__(f"element {element!r} has no observed successor")
        self.element = element


class NoViableFragment(FragmentError):
    """Model or scope cannot realize any statement."""


def element_name(node):
    """Syntax element represented by ``node``, or None."""
    if isinstance(node, If):
        return "if-else"
    if isinstance(node, Case):
        return "case"
    if isinstance(node, For):
        return "for"
    if isinstance(node, Ternary):
        return "?:"
    if isinstance(node, Binary):
        return node.op
    if isinstance(node, Unary):
        return node.op if node.op in ("!", "~") else "u" + node.op
    return None


def _stream(node):
    name = element_name(node)
    if name is not None:
        yield name
    for child in children(node):
        yield from _stream(child)
    if isinstance(node, BeginEnd):
        yield "end"
    elif isinstance(node, ModuleAst):
        yield "endmodule"


def linearize(module, ends=False):
    """Pre-order element stream of ``module``.

    With ``ends`` the stream also carries an ``end``/``endmodule`` token
    wherever a block or the module closes.
    """
    stream = list(_stream(module))
    return stream if ends else [z for z in stream if z not in END_TOKENS]


@dataclass
class CorpusStats:
    files_ingested: int = 0
    files_rejected: int = 0
    sequences: dict = field(default_factory=dict)

    def _elements(self):
        for seq in self.sequences.values():
            yield [z for z in seq if z not in END_TOKENS]

    def freq(self):
        counts = collections.Counter()
        for seq in self._elements():
            counts.update(seq)
        return counts

    def transitions(self):
        counts = collections.Counter()
        for seq in self._elements():
            counts.update(zip(seq, seq[1:]))
        return counts

    def ends(self):
        """How often each element was the last one before a closing token."""
        counts = collections.Counter()
        for seq in self.sequences.values():
            counts.update((prev, nxt) for prev, nxt in zip(seq, seq[1:])
                          if nxt in END_TOKENS and prev not in END_TOKENS)
        return counts


def ingest_corpus(paths):
    """Parse every corpus file and collect its element stream.

    .. Keyword Arguments:
    :param paths: Verilog files to mine.

    .. Returns:
    :returns: CorpusStats; unreadable or unparseable files are only counted.
    """
    stats = CorpusStats()
    for path in paths:
        try:
            with open(path, "r", encoding="utf-8", errors="replace") as fp:
                module = parse(fp.read())
        except (OSError, FrontendError) as err:
            logging.warning("Rejected corpus file %s: %s", path, err)
            stats.files_rejected += 1
            continue
        stats.sequences[str(path)] = linearize(module, ends=True)
        stats.files_ingested += 1
    if stats.files_ingested == 0:
        raise EmptyCorpus(f"none of {len(paths)} corpus files could be parsed")
    logging.info("Ingested %d corpus files, rejected %d",
                 stats.files_ingested, stats.files_rejected)
    return stats


class FragmentModel:
    """Immutable snapshot of corpus statistics and element weights.

    Every update returns a new model, so a snapshot can be shared by any
    number of concurrent samplers.
    """

    def __init__(self, freq, weights=None, transitions=None, threshold_T=None,
                 max_len_L=DEFAULT_MAX_LEN, end_tokens=END_TOKENS, strategy="bayesian",
                 ends=None):
        if strategy not in SAMPLING_STRATEGIES:
            raise ValueError(f"unknown sampling strategy {strategy!r}")
        self.freq = dict(freq)
        self.weights = {z: float(COMPLEXITY_WEIGHTS.get(z, 1)) for z in self.freq}
        self.weights.update(weights or {})
        self.transitions = collections.Counter(transitions or {})
        self.max_len_L = max_len_L
        self.end_tokens = frozenset(end_tokens)
        self.ends = collections.Counter(ends or {})
        self.strategy = strategy
        self._successors = collections.defaultdict(dict)
        for (prev, nxt), count in sorted(self.transitions.items()):
            if count > 0:
                self._successors[prev][nxt] = count
        self._stops = collections.defaultdict(dict)
        for (prev, token), count in sorted(self.ends.items()):
            if count > 0 and token in self.end_tokens:
                self._stops[prev][token] = count
        if threshold_T is None:
            threshold_T = self._median_conditional()
        if not 0.0 <= threshold_T <= 1.0:
            raise ValueError("threshold_T must lie in [0, 1]")
        self.threshold_T = threshold_T

    @property
    def elements(self):
        return set(self.freq) | set(self.weights)

    def successors(self, prev):
        return self._successors.get(prev, {})

    def stops(self, prev):
        """Closing tokens observed right after ``prev``, with counts."""
        return self._stops.get(prev, {})

    def _median_conditional(self):
        probs = []
        for successors in self._successors.values():
            total = sum(successors.values())
            probs.extend(count / total for count in successors.values())
        return statistics.median(probs) if probs else 0.0

    def replace(self, **changes):
        fields = {"freq": self.freq, "weights": self.weights, "transitions": self.transitions,
                  "threshold_T": self.threshold_T, "max_len_L": self.max_len_L,
                  "end_tokens": self.end_tokens, "strategy": self.strategy,
                  "ends": self.ends}
        fields.update(changes)
        return FragmentModel(**fields)

    def to_dict(self):
        return {
            "version": MODEL_VERSION,
            "elements": [{"name": z, "freq": self.freq.get(z, 0), "weight": self.weights[z]}
                         for z in sorted(self.weights)],
            "transitions": [{"prev": p, "next": n, "count": c}
                            for (p, n), c in sorted(self.transitions.items())],
            "threshold_T": self.threshold_T,
            "max_len_L": self.max_len_L,
            "end_tokens": sorted(self.end_tokens),
            "ends": [{"prev": p, "token": t, "count": c}
                     for (p, t), c in sorted(self.ends.items())],
            "sampling": self.strategy,
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("version") != MODEL_VERSION:
            raise FragmentError(f"unsupported model version {data.get('version')!r}")
        return cls(
            {e["name"]: e["freq"] for e in data["elements"]},
            {e["name"]: e["weight"] for e in data["elements"]},
            {(t["prev"], t["next"]): t["count"] for t in data["transitions"]},
            data["threshold_T"],
            data.get("max_len_L", DEFAULT_MAX_LEN),
            data.get("end_tokens", sorted(END_TOKENS)),
            data.get("sampling", "bayesian"),
            {(e["prev"], e["token"]): e["count"] for e in data.get("ends", [])},
        )


def build_model(stats, max_len_L=DEFAULT_MAX_LEN, strategy="bayesian"):
    return FragmentModel(stats.freq(), transitions=stats.transitions(),
                         max_len_L=max_len_L, strategy=strategy, ends=stats.ends())


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(model.to_dict(), fp, indent=2, sort_keys=True)
        fp.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fp:
        return FragmentModel.from_dict(json.load(fp))


def element_probability(model):
    """P(z) = C(z)·f(z) / Σ C(z')·f(z')."""
    products = {z: model.weights.get(z, 1.0) * count for z, count in model.freq.items()}
    total = sum(products.values())
    if total <= 0:
        raise EmptyModel("no element has a positive weighted frequency")
    return {z: product / total for z, product in sorted(products.items()) if product > 0}


def transition_probability(model, z_next, z_prev):
    """P(z_next | z_prev) from the transition counts."""
    successors = model.successors(z_prev)
    if not successors:
        raise UnseenContext(z_prev)
    return successors.get(z_next, 0) / sum(successors.values())


def bayes_transition_probability(model, z_next, z_prev):
    """P(z_prev | z_next)·P(z_next) / P(z_prev) with count-based marginals.

    Marginals count each element as a predecessor and as a successor
    within the transition table, so the identity with the direct estimate
    holds exactly.
    """
    as_prev = collections.Counter()
    as_next = collections.Counter()
    total = 0
    for (prev, nxt), count in model.transitions.items():
        as_prev[prev] += count
        as_next[nxt] += count
        total += count
    if as_prev[z_prev] == 0:
        raise UnseenContext(z_prev)
    if as_next[z_next] == 0:
        return 0.0
    p_prev_given_next = model.transitions.get((z_prev, z_next), 0) / as_next[z_next]
    return p_prev_given_next * (as_next[z_next] / total) / (as_prev[z_prev] / total)


def sample_start(model, rng):
    probs = element_probability(model)
    names = list(probs)
    return rng.choices(names, weights=[probs[z] for z in names])[0]


def sample_elements(model, rng):
    """Draw one element chain following the model's sampling strategy."""
    if model.strategy == "uniform":
        names = sorted(z for z in model.elements if model.freq.get(z, 0) > 0)
        if not names:
            raise EmptyModel("no element observed in the corpus")
        return [rng.choice(names) for _ in range(rng.randint(1, model.max_len_L))]
    chain = [sample_start(model, rng)]
    while len(chain) < model.max_len_L:
        # closing tokens compete with the successors and end the chain when drawn
        options = {**model.successors(chain[-1]), **model.stops(chain[-1])}
        if not options:
            break
        total = sum(options.values())
        candidates = [(z, count / total) for z, count in options.items()
                      if count / total >= model.threshold_T]
        if not candidates:
            break
        nxt = rng.choices([z for z, _ in candidates], weights=[p for _, p in candidates])[0]
        if nxt in model.end_tokens:
            break
        chain.append(nxt)
    return chain


@dataclass
class Fragment:
    statements: list
    temps: list
    elements: list


class _Realizer:
    """Turns an element chain into statements over a signal scope."""

    def __init__(self, scope, rng, nonblocking, taken, writable):
        self.scope = list(scope)
        self.rng = rng
        self.nonblocking = nonblocking
        self.taken = taken
        self.writable = [s for s in self.scope if s.name in set(writable)]
        self.temps = []
        self.info = {s.name: s for s in self.scope}

    def fresh_temp(self, width):
        k = 0
        while f"{TEMP_PREFIX}{k}" in self.taken:
            k += 1
        name = f"{TEMP_PREFIX}{k}"
        self.taken.add(name)
        decl = NetDecl("reg", name, width - 1, 0, False)
        self.temps.append(decl)
        self.info[name] = SignalInfo(name, width, False, "reg", None, width - 1, 0)
        return name

    def leaf(self):
        if self.scope and self.rng.random() < 0.75:
            return Ref(self.rng.choice(self.scope).name)
        width = self.rng.randint(1, 8)
        return Literal(width, self.rng.randrange(1 << width))

    def apply(self, element, expr):
        if element == "?:":
            return Ternary(self.leaf(), expr, self.leaf())
        if element in UNARY_ELEMENTS:
            operand = expr
            if self.rng.random() < 0.1:
                operand = SignCast(self.rng.random() < 0.5, expr)
            return Unary(UNARY_ELEMENTS[element], operand)
        if element in ("<<", ">>", "<<<", ">>>"):
            return Binary(element, expr, Literal(3, self.rng.randrange(8)))
        if element in BINARY_OPS:
            return Binary(element, expr, self.leaf())
        raise NoViableFragment(f"cannot realize element {element!r}")

    def expression(self, ops):
        expr = self.leaf()
        for element in ops:
            expr = self.apply(element, expr)
        return expr

    def assignment(self, ops, blocking=False):
        value = self.expression(ops)
        if self.writable and self.rng.random() < 0.2:
            target = self.rng.choice(self.writable).name
        else:
            target = self.fresh_temp(min(64, max(1, self_width(value, self.info))))
        cls = NonBlockingAssign if self.nonblocking and not blocking else BlockingAssign
        return cls(Ref(target), value)

    def statements(self, elements):
        """Realize ``elements`` depth-first into a statement list."""
        stmts = []
        ops = []
        idx = 0
        while idx < len(elements) and elements[idx] not in CONTROL_ELEMENTS:
            ops.append(elements[idx])
            idx += 1
        if ops or idx == len(elements):
            stmts.append(self.assignment(ops))
        if idx < len(elements):
            stmts.append(self.control(elements[idx], elements[idx + 1:]))
        return stmts

    def control(self, element, rest):
        # Operators right after a control element shape its condition.
        head = []
        while rest and rest[0] not in CONTROL_ELEMENTS and len(head) < 2:
            head.append(rest[0])
            rest = rest[1:]
        body = BeginEnd(self.statements(rest) if rest else [self.assignment([])])
        if element == "if-else":
            return If(self.expression(head), body, BeginEnd([self.assignment([])]))
        if element == "case":
            return self._case(head, body)
        return self._for(body)

    def _case(self, head, body):
        subject = self.expression(head) if head else self.leaf()
        width = min(8, self_width(subject, self.info))
        labels = self.rng.sample(range(1 << width), min(2, 1 << width))
        arms = [CaseArm([Literal(width, labels[0])], body)]
        for label in labels[1:]:
            arms.append(CaseArm([Literal(width, label)], BeginEnd([self.assignment([])])))
        return Case(subject, arms, BeginEnd([self.assignment([])]))

    def _for(self, body):
        var = self.fresh_temp(8)
        bound = self.rng.randint(1, 4)
        return For(var, Literal(8, 0), Binary("<", Ref(var), Literal(8, bound)),
                   Binary("+", Ref(var), Literal(8, 1)), body)


def sample_fragment(model, scope, rng, nonblocking=False, taken=None, writable=()):
    """Sample an element chain and realize it as statements.

    .. Keyword Arguments:
    :param model: FragmentModel snapshot.
    :param scope: SignalInfo entries that may be read.
    :param rng: ``random.Random`` owned by the caller.
    :param nonblocking: Use ``<=`` for data assignments (edge-triggered blocks).
    :param taken: Names already declared; fresh temporaries are added to it.
    :param writable: Existing regs that may be written besides temporaries.

    .. Returns:
    :returns: Fragment with statements, temporaries to declare and the chain.
    """
    scope = list(scope)
    if not scope:
        raise NoViableFragment("no signal in scope")
    try:
        elements = sample_elements(model, rng)
    except (EmptyModel, UnseenContext) as err:
        raise NoViableFragment(str(err)) from err
    taken = set(s.name for s in scope) if taken is None else taken
    realizer = _Realizer(scope, rng, nonblocking, taken, writable)
    stmts = realizer.statements(elements)
    return Fragment(stmts, realizer.temps, elements)


def feedback_update(model, outcomes, eta=DEFAULT_ETA, c_min=DEFAULT_C_MIN):
    """Reweight elements by mutation outcome.

    .. Keyword Arguments:
    :param model: Current snapshot (left untouched).
    :param outcomes: ``(elements, success)`` pairs.

    .. Returns:
    :returns: A new FragmentModel.
    """
    outcomes = list(outcomes)
    if not outcomes:
        return model
    weights = dict(model.weights)
    transitions = collections.Counter(model.transitions)
    for elements, success in outcomes:
        for z in sorted(set(elements)):
            current = weights.get(z, float(COMPLEXITY_WEIGHTS.get(z, 1)))
            if success:
                weights[z] = current * (1 + eta)
            else:
                weights[z] = max(c_min, current * (1 - eta))
        if success:
            transitions.update(zip(elements, elements[1:]))
    return model.replace(weights=weights, transitions=transitions)
