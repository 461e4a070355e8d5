#!/usr/bin/env python3

"""Differential fuzzing campaign.

Every iteration picks a seed from the pool, builds its testbench and
coverage, derives equivalent variants and synthesizes seed and variants
with each configured tool. A hang, a crash or a divergence between the
synthesized seed and a synthesized variant is a bug candidate; it is kept
only if it reproduces from the artifacts written for it.
"""

import collections
import concurrent.futures
import datetime
import json
import logging
import os
import random
import re
import shutil
import time
from dataclasses import dataclass
from typing import Optional

from .config import MUTATION_MODES
from .coverage import coverage_summary
from .errors import ConfigError, HdlMutantError
from .fragments import FragmentError, feedback_update, load_model, save_model
from .mutation import VERIFIED, MutationConfig, gen_variant
from .reducer import ReductionTimeout, reduce_design
from .scratch import make_workdir
from .seed_pool import SeedPool, update_seed_pool
from .simulator import Mismatch, SimulationError, compare_traces, simulate
from .synth_adapters import CRASH, HANG, OK, SynthResult, ToolSpec, resimulate, synthesize
from .testbench import NoOutputs, StimulusConfig, extract_ports, testbench_for
from .verilog_ast import FrontendError
from .verilog_emit import emit, emit_testbench
from .verilog_parser import parse

HANG_BUG = "H"
CRASH_BUG = "C"
MISMATCH_BUG = "M"
BUG_CLASSES = (HANG_BUG, CRASH_BUG, MISMATCH_BUG)

REQUIRED_ARTIFACTS = ("seed.v", "variant.v", "metadata.json")

Observation = collections.namedtuple("Observation", ["result", "trace", "workdir"])
BugVerdict = collections.namedtuple("BugVerdict", ["bug_class", "side", "mismatch"])
BugCase = collections.namedtuple(
    "BugCase", ["verdict", "culprit", "seed", "variant", "tb", "tool", "observation",
                "mutation_log", "origin", "iteration", "variant_seed"])


class ArtifactsMissing(HdlMutantError):
    """A bug directory lacks the files needed to rerun it."""


@dataclass
class BugRecord:
    bug_id: str
    bug_class: str
    tool: str
    directory: str
    fingerprint: str
    culprit: str
    first_divergence: Optional[tuple] = None
    reproduced: bool = False
    reduced_ref: Optional[str] = None

    @property
    def seed_ref(self):
        return os.path.join(self.directory, "seed.v")

    @property
    def variant_ref(self):
        return os.path.join(self.directory, "variant.v")

    @property
    def testbench_ref(self):
        return os.path.join(self.directory, "testbench.v")

    def to_dict(self):
        return {"id": self.bug_id, "class": self.bug_class, "tool": self.tool,
                "fingerprint": self.fingerprint, "culprit": self.culprit,
                "first_divergence": (None if self.first_divergence is None else
                                     {"time": self.first_divergence[0],
                                      "port": self.first_divergence[1]}),
                "reproduced": self.reproduced,
                "reduced": None if self.reduced_ref is None
                else os.path.basename(self.reduced_ref)}


def _discard(obs):
    if obs is not None and obs.workdir:
        shutil.rmtree(obs.workdir, ignore_errors=True)


def netlist_trace(tool, result, tb, module_name, workdir):
    """Trace of a synthesized netlist, or None when it cannot be simulated."""
    if tool.resim_command:
        return resimulate(tool, result.netlist_path, tb, module_name, workdir)
    if result.netlist is None:
        return None
    try:
        return simulate(result.netlist, tb)[0]
    except SimulationError as err:
        logging.warning("Netlist from %s cannot be simulated: %s", tool.name, err)
        return None


def observe(design, tool, tb):
    """Synthesize ``design`` in a fresh work directory and simulate the result."""
    workdir = make_workdir(f"{tool.name}-")
    try:
        design_path = os.path.join(workdir, "design.v")
        with open(design_path, "w", encoding="utf-8") as f:
            f.write(emit(design))
        result = synthesize(tool, design_path, workdir)
        trace = None
        if result.status == OK:
            trace = netlist_trace(tool, result, tb, design.name, workdir)
    except BaseException:
        shutil.rmtree(workdir, ignore_errors=True)
        raise
    return Observation(result, trace, workdir)


def rtl_observation(design, tb):
    """The unsynthesized design viewed as a perfect tool's output."""
    trace, _ = simulate(design, tb)
    return Observation(SynthResult(OK, design, None, 0, "", 0.0), trace, None)


def identify_bug(seed_obs, variant_obs):
    """Classify a pair of observations made with the same tool.

    .. Returns:
    :returns: None, or a BugVerdict: H if either side hung, else C if either
        crashed, else M when both traces exist and differ.
    """
    for status, bug_class in ((HANG, HANG_BUG), (CRASH, CRASH_BUG)):
        for side, obs in (("variant", variant_obs), ("seed", seed_obs)):
            if obs.result.status == status:
                return BugVerdict(bug_class, side, None)
    if seed_obs.trace is None or variant_obs.trace is None:
        return None
    diff = compare_traces(seed_obs.trace, variant_obs.trace)
    if isinstance(diff, Mismatch):
        return BugVerdict(MISMATCH_BUG, None, diff)
    return None


def mismatch_culprit(rtl_trace, seed_obs, variant_obs, port):
    """The side whose synthesized trace departs from the RTL trace on ``port``."""
    for side, obs in (("variant", variant_obs), ("seed", seed_obs)):
        diff = compare_traces(rtl_trace, obs.trace)
        if isinstance(diff, Mismatch) and port in diff.ports:
            return side
    return "variant"


_HEX = re.compile(r"0x[0-9a-fA-F]+")
_PATH = re.compile(r"(?:[A-Za-z]:)?(?:[\\/][^\s:'\"]+)+")
_NUMBER = re.compile(r"\d+")


def crash_signature(log_text):
    """Last log line with paths, hex constants and numbers masked."""
    lines = [line.strip() for line in log_text.splitlines() if line.strip()]
    if not lines:
        return ""
    line = _PATH.sub("<path>", lines[-1])
    line = _HEX.sub("<hex>", line)
    return _NUMBER.sub("<n>", line)


def fingerprint(verdict, tool_name, observation):
    if verdict.bug_class == HANG_BUG:
        return f"H|{tool_name}"
    if verdict.bug_class == CRASH_BUG:
        return f"C|{tool_name}|{crash_signature(observation.result.log_excerpt)}"
    return f"M|{tool_name}|{','.join(verdict.mismatch.ports)}"


def _timestamp():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write(path, text):
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def _write_json(path, data):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def load_case(directory):
    """Read back seed, variant, testbench and metadata of a bug directory."""
    missing = [name for name in REQUIRED_ARTIFACTS
               if not os.path.isfile(os.path.join(directory, name))]
    if missing:
        raise ArtifactsMissing(f"{directory} lacks {', '.join(missing)}")
    with open(os.path.join(directory, "metadata.json"), encoding="utf-8") as f:
        metadata = json.load(f)
    with open(os.path.join(directory, "seed.v"), encoding="utf-8") as f:
        seed = parse(f.read())
    with open(os.path.join(directory, "variant.v"), encoding="utf-8") as f:
        variant = parse(f.read())
    tb = testbench_for(seed, StimulusConfig(**metadata["stimulus"]))
    return seed, variant, tb, metadata


def load_bug(directory):
    """The BugRecord and ToolSpec stored in ``directory``."""
    _, _, _, metadata = load_case(directory)
    divergence = metadata.get("first_divergence")
    record = BugRecord(metadata["id"], metadata["class"], metadata["tool"]["name"], directory,
                       metadata["fingerprint"], metadata["culprit"],
                       None if divergence is None else (divergence["time"], divergence["port"]),
                       metadata.get("reproduced", False))
    if metadata.get("reduced"):
        record.reduced_ref = os.path.join(directory, metadata["reduced"])
    return record, ToolSpec.from_dict(metadata["tool"])


def save_reduced(record, reduced):
    """Write ``reduced.v`` into the bug directory and name it in metadata.json."""
    record.reduced_ref = os.path.join(record.directory, "reduced.v")
    _write(record.reduced_ref, emit(reduced))
    meta_path = os.path.join(record.directory, "metadata.json")
    with open(meta_path, encoding="utf-8") as f:
        metadata = json.load(f)
    metadata["reduced"] = os.path.basename(record.reduced_ref)
    _write_json(meta_path, metadata)
    return record.reduced_ref


def reproduce(record, tool):
    """Rerun the stored seed and variant through ``tool``.

    .. Returns:
    :returns: True iff the recorded bug class recurs.
    """
    seed, variant, tb, _ = load_case(record.directory)
    seed_obs = variant_obs = None
    try:
        seed_obs = observe(seed, tool, tb)
        variant_obs = observe(variant, tool, tb)
        verdict = identify_bug(seed_obs, variant_obs)
    finally:
        _discard(seed_obs)
        _discard(variant_obs)
    recurred = verdict is not None and verdict.bug_class == record.bug_class
    logging.info("Bug %s %s", record.bug_id, "reproduced" if recurred else "did not reproduce")
    return recurred


def reduce_case(record, tool, budget_secs=None):
    """Shrink the culprit design of ``record`` while its bug persists.

    The oracle synthesizes a candidate alone and compares against its own
    RTL behavior; a candidate is kept iff the class stays the same and, for
    mismatches, the recorded port still diverges.

    .. Returns:
    :returns: The reduced ModuleAst. ReductionTimeout carries the best so far.
    """
    seed, variant, tb, _ = load_case(record.directory)
    design = variant if record.culprit == "variant" else seed
    port = record.first_divergence[1] if record.first_divergence else None

    def still_fails(candidate):
        obs = None
        try:
            obs = observe(candidate, tool, tb)
            verdict = identify_bug(rtl_observation(candidate, tb), obs)
        except HdlMutantError as err:
            logging.debug("Reduction candidate rejected: %s", err)
            return False
        finally:
            _discard(obs)
        if verdict is None or verdict.bug_class != record.bug_class:
            return False
        return port is None or port in verdict.mismatch.ports

    return reduce_design(design, still_fails, budget_secs)


class BugStore:
    """Single writer for the ``bugs/`` directory of a campaign."""

    def __init__(self, output_dir):
        self.root = os.path.join(output_dir, "bugs")
        os.makedirs(self.root, exist_ok=True)
        self.records = []
        self.fingerprints = set()

    def _metadata(self, record, case, tool):
        return {
            "id": record.bug_id,
            "class": record.bug_class,
            "tool": tool.to_dict(),
            "fingerprint": record.fingerprint,
            "culprit": record.culprit,
            "first_divergence": record.to_dict()["first_divergence"],
            "stimulus": case.tb.config.to_dict(),
            "rng": {"iteration": case.iteration, "variant_seed": case.variant_seed},
            "mutation_log": [entry._asdict() for entry in case.mutation_log],
            "seed_origin": case.origin,
            "log_excerpt": case.observation.result.log_excerpt,
            "reproduced": record.reproduced,
            "reduced": None,
            "timestamps": {"recorded": _timestamp()},
        }

    def record(self, case, campaign_seed, reduce=True, reduction_budget_secs=None):
        """Write, reproduce and optionally reduce one bug candidate.

        .. Returns:
        :returns: The BugRecord, or None for duplicates and unreproducible bugs.
        """
        tool = case.tool
        fp = fingerprint(case.verdict, tool.name, case.observation)
        if fp in self.fingerprints:
            logging.debug("Duplicate bug %s", fp)
            return None
        bug_id = f"bug-{len(self.records) + 1:04d}"
        directory = os.path.join(self.root, bug_id)
        shutil.rmtree(directory, ignore_errors=True)
        os.makedirs(directory)
        mismatch = case.verdict.mismatch
        record = BugRecord(bug_id, case.verdict.bug_class, tool.name, directory, fp,
                           case.culprit,
                           None if mismatch is None else (mismatch.first_time, mismatch.port))
        _write(record.seed_ref, emit(case.seed))
        _write(record.variant_ref, emit(case.variant))
        _write(record.testbench_ref, emit_testbench(case.tb, case.seed.name))
        log_src = os.path.join(case.observation.workdir or "", "tool.log")
        if os.path.isfile(log_src):
            shutil.copyfile(log_src, os.path.join(directory, "tool.log"))
        else:
            _write(os.path.join(directory, "tool.log"), case.observation.result.log_excerpt)
        metadata = self._metadata(record, case, tool)
        metadata["rng"]["campaign_seed"] = campaign_seed
        _write_json(os.path.join(directory, "metadata.json"), metadata)
        try:
            reproduced = reproduce(record, tool)
        except HdlMutantError as err:
            logging.warning("Reproducing %s failed: %s", bug_id, err)
            reproduced = False
        if not reproduced:
            logging.warning("Dropping unreproducible %s bug from %s", record.bug_class, tool.name)
            shutil.rmtree(directory, ignore_errors=True)
            return None
        record.reproduced = True
        self.fingerprints.add(fp)
        self.records.append(record)
        if reduce:
            self._reduce(record, tool, reduction_budget_secs)
        metadata.update(reproduced=True, reduced=None if record.reduced_ref is None
                        else os.path.basename(record.reduced_ref))
        _write_json(os.path.join(directory, "metadata.json"), metadata)
        logging.info("Recorded %s: class %s on %s (%s)", bug_id, record.bug_class, tool.name, fp)
        return record

    @staticmethod
    def _reduce(record, tool, budget_secs):
        try:
            reduced = reduce_case(record, tool, budget_secs)
        except ReductionTimeout as err:
            reduced = err.best
        except HdlMutantError as err:
            logging.warning("Reduction of %s failed: %s", record.bug_id, err)
            return
        save_reduced(record, reduced)


def load_seeds(seeds_dir):
    """Parse every ``.v`` file of ``seeds_dir`` in name order.

    .. Returns:
    :returns: ``(file name, ModuleAst)`` pairs; rejected files are logged.
    """
    seeds = []
    for name in sorted(os.listdir(seeds_dir)):
        if not name.endswith(".v"):
            continue
        path = os.path.join(seeds_dir, name)
        try:
            with open(path, encoding="utf-8", errors="replace") as f:
                module = parse(f.read())
            extract_ports(module)
        except (OSError, FrontendError, NoOutputs) as err:
            logging.warning("Rejected seed %s: %s", path, err)
            continue
        seeds.append((name, module))
    return seeds


class Campaign:
    """State of one run_campaign call."""

    def __init__(self, config, executor):
        self.config = config
        self.executor = executor
        self.rng = random.Random(config.rng_seed)
        self.mutation = MutationConfig(variants_per_seed=config.variants_per_seed,
                                       max_retries=config.max_retries,
                                       p_prune_vs_insert=MUTATION_MODES[config.mutation_mode])
        self.model = None
        if config.fragment_model_path:
            try:
                self.model = load_model(config.fragment_model_path)
            except (OSError, ValueError, KeyError, FragmentError) as err:
                raise ConfigError(f"cannot load fragment model: {err}") from err
            if config.sampling:
                self.model = self.model.replace(strategy=config.sampling)
        self.pool = SeedPool(config.seed_pool_capacity)
        for name, module in load_seeds(config.seeds_dir):
            self.pool.add(module, origin=name)
        if not len(self.pool):
            raise ConfigError(f"no usable seed in {config.seeds_dir}")
        self.store = BugStore(config.output_dir)
        self.stats = {"iterations": 0, "variants_attempted": 0, "variants_surviving": 0,
                      "candidates_checked": 0, "coverage": [], "complexity": []}

    def _variant(self, seed, cov, tb, variant_seed):
        try:
            return gen_variant(seed, cov, self.model, self.mutation,
                               random.Random(variant_seed), tb)
        except HdlMutantError as err:
            logging.warning("Variant generation failed: %s", err)
            return None

    def _observe(self, design, tool, tb):
        try:
            return observe(design, tool, tb)
        except HdlMutantError as err:
            logging.warning("Tool %s failed: %s", tool.name, err)
            return None

    def _case(self, verdict, culprit, entry, variant, tb, tool, obs, iteration, variant_seed):
        return BugCase(verdict, culprit, entry.ast, variant.ast if variant else entry.ast, tb,
                       tool, obs, variant.mutation_log if variant else [], entry.origin,
                       iteration, variant_seed)

    def _synthesize_all(self, entry, live, tb, rtl_trace, iteration, variant_seeds):
        """Run every tool on seed and live variants; returns indices of buggy variants."""
        buggy = set()
        for tool in self.config.tools:
            seed_obs = self._observe(entry.ast, tool, tb)
            if seed_obs is None:
                continue
            try:
                if seed_obs.result.status != OK:
                    bug_class = HANG_BUG if seed_obs.result.status == HANG else CRASH_BUG
                    case = self._case(BugVerdict(bug_class, "seed", None), "seed", entry, None,
                                      tb, tool, seed_obs, iteration, None)
                    self._record(case)
                    continue
                observations = list(self.executor.map(
                    lambda item, tool=tool: self._observe(item[1].ast, tool, tb), live))
                try:
                    for (k, variant), obs in zip(live, observations):
                        if obs is None:
                            continue
                        try:
                            verdict = identify_bug(seed_obs, obs)
                            if verdict is None:
                                continue
                            culprit = verdict.side
                            if verdict.bug_class == MISMATCH_BUG:
                                culprit = mismatch_culprit(rtl_trace, seed_obs, obs,
                                                           verdict.mismatch.port)
                        except SimulationError as err:
                            logging.warning("Cannot compare traces from %s: %s", tool.name, err)
                            continue
                        buggy.add(k)
                        culprit_obs = seed_obs if culprit == "seed" else obs
                        self._record(self._case(verdict, culprit, entry, variant, tb, tool,
                                                culprit_obs, iteration, variant_seeds[k]))
                finally:
                    for obs in observations:
                        _discard(obs)
            finally:
                _discard(seed_obs)
        return buggy

    def _record(self, case):
        return self.store.record(case, self.config.rng_seed, self.config.reduce,
                                 self.config.reduction_budget_secs)

    def iteration(self, iteration):
        """One seed: preprocess, mutate, synthesize, classify and give feedback."""
        entry = self.rng.choice(self.pool.ordered())
        stimulus = self.config.stimulus_config(self.rng.getrandbits(64))
        variant_seeds = [self.rng.getrandbits(64) for _ in range(self.config.variants_per_seed)]
        logging.info("Iteration %d: seed %s", iteration, entry.origin)
        self.stats["iterations"] += 1
        self.stats["variants_attempted"] += len(variant_seeds)
        tb = testbench_for(entry.ast, stimulus)
        try:
            rtl_trace, cov = simulate(entry.ast, tb)
        except SimulationError as err:
            logging.warning("Rejected seed %s: %s", entry.origin, err)
            return
        summary = coverage_summary(cov)
        self.stats["coverage"].append({"iteration": iteration, "seed": entry.origin,
                                       "line": summary.line_pct,
                                       "condition": summary.condition_pct,
                                       "branch": summary.branch_pct})
        variants = list(self.executor.map(
            lambda s: self._variant(entry.ast, cov, tb, s), variant_seeds))
        live = [(k, v) for k, v in enumerate(variants)
                if v is not None and v.equivalence == VERIFIED and not v.degenerate]
        logging.info("Generated %d of %d variants", len(live), len(variants))
        self.stats["variants_surviving"] += len(live)
        for v in variants:
            if v is not None:
                self.stats["candidates_checked"] += v.candidates_checked
        for _, v in live:
            self.stats["complexity"].append(v.complexity._asdict())
        before = len(self.store.records)
        buggy = self._synthesize_all(entry, live, tb, rtl_trace, iteration, variant_seeds)
        self.pool.attribute(entry.digest, variants=len(live),
                            bugs=len(self.store.records) - before)
        for k, v in live:
            update_seed_pool(self.pool, v, origin=f"{entry.origin}~{iteration}.{k}")
        if self.model is not None:
            outcomes = []
            for k, v in enumerate(variants):
                if v is None:
                    continue
                success = not v.degenerate and (v.coverage_gain > 0 or k in buggy)
                outcomes.extend((elements, success) for elements in v.fragments)
                outcomes.extend((elements, False) for elements in v.rejected_fragments)
            self.model = feedback_update(self.model, outcomes)

    def summary(self):
        by_class = collections.Counter(r.bug_class for r in self.store.records)
        by_tool = collections.Counter(r.tool for r in self.store.records)
        return dict(self.stats, bugs_by_class=dict(sorted(by_class.items())),
                    bugs_by_tool=dict(sorted(by_tool.items())),
                    bugs=[r.to_dict() for r in self.store.records])


def run_campaign(config):
    """Run a whole fuzzing campaign.

    .. Keyword Arguments:
    :param config: Validated CampaignConfig.

    .. Returns:
    :returns: The reproduced BugRecords, in recording order.
    """
    started = _timestamp()
    start = time.monotonic()
    os.makedirs(config.output_dir, exist_ok=True)
    with concurrent.futures.ThreadPoolExecutor(max_workers=config.workers) as executor:
        campaign = Campaign(config, executor)
        iteration = 0
        while True:
            if config.max_iterations is not None and iteration >= config.max_iterations:
                break
            if (config.wall_clock_budget is not None
                    and time.monotonic() - start >= config.wall_clock_budget):
                break
            campaign.iteration(iteration)
            iteration += 1
    if config.model_out_path and campaign.model is not None:
        save_model(campaign.model, config.model_out_path)
        logging.info("Saved updated fragment model to %s", config.model_out_path)
    _write_json(os.path.join(config.output_dir, "campaign.json"),
                {"config": config.to_dict(), "summary": campaign.summary(),
                 "timestamps": {"started": started, "finished": _timestamp(),
                                "elapsed_secs": round(time.monotonic() - start, 3)}})
    logging.info("Campaign finished: %d iterations, %d bugs",
                 campaign.stats["iterations"], len(campaign.store.records))
    return list(campaign.store.records)
