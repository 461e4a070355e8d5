#!/usr/bin/env python3

"""Uniform invocation of synthesis tools.

External tools run as child processes under a watchdog. The built-in
adapters stand in for real tools: ``builtin_identity`` returns the design
unchanged, ``builtin_faulty`` applies one seeded semantic fault, while
``builtin_hang`` and ``builtin_crash`` spawn a real child that sleeps or
dies so the watchdog path is exercised end to end.
"""

import collections
import copy
import hashlib
import logging
import os
import random
import re
import shlex
import shutil
import subprocess
import sys
import time
from dataclasses import asdict, dataclass
from typing import Optional

import psutil

from .errors import HdlMutantError
from .scratch import check_writable
from .simulator import Trace
from .verilog_ast import (SHIFT_OPS, Binary, FrontendError, Literal, SignCast, number_new_nodes,
                          replace_node, walk)
from .verilog_emit import emit, emit_testbench
from .verilog_parser import parse

EXTERNAL = "external"
BUILTIN_IDENTITY = "builtin_identity"
BUILTIN_FAULTY = "builtin_faulty"
BUILTIN_HANG = "builtin_hang"
BUILTIN_CRASH = "builtin_crash"
TOOL_KINDS = (EXTERNAL, BUILTIN_IDENTITY, BUILTIN_FAULTY, BUILTIN_HANG, BUILTIN_CRASH)

FAULT_PROFILES = ("and_to_or", "drop_signed", "off_by_one_shift")

OK = "ok"
CRASH = "crash"
HANG = "hang"

GRACE_SECS = 2
LOG_EXCERPT_LINES = 20
CRASH_MESSAGE = "hdlmutant builtin_crash: internal error in technology mapping"

_TRACE_LINE = re.compile(r"^TRACE\s+(\d+)\s+(\w+)\s+([0-9a-fA-FxXzZ]+)\s*$")


class SynthError(HdlMutantError):
    """A synthesis tool could not be invoked as configured."""


class ToolNotFound(SynthError):
    """The executable named by a command template does not exist."""


@dataclass(frozen=True)
class ToolSpec:
    name: str
    kind: str
    command: Optional[str] = None
    timeout_secs: float = 60
    fault_profile: Optional[str] = None
    fault_seed: Optional[int] = 0
    resim_command: Optional[str] = None

    def __post_init__(self):
        if self.kind not in TOOL_KINDS:
            raise ValueError(f"unknown tool kind '{self.kind}'")
        if self.kind == EXTERNAL:
            if not self.command or "{input}" not in self.command or "{output}" not in self.command:
                raise ValueError("external tools need a command with {input} and {output}")
        if self.kind == BUILTIN_FAULTY and self.fault_profile not in FAULT_PROFILES:
            raise ValueError(f"unknown fault profile '{self.fault_profile}'")
        if self.timeout_secs <= 0:
            raise ValueError("timeout_secs must be positive")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


SynthResult = collections.namedtuple(
    "SynthResult", ["status", "netlist", "netlist_path", "exit_code", "log_excerpt", "elapsed"])

ProcessOutcome = collections.namedtuple(
    "ProcessOutcome", ["exit_code", "stdout", "stderr", "elapsed", "timed_out"])


def kill_tree(pid):
    """Kill ``pid`` and every descendant, waiting at most the grace period.

    .. Returns:
    :returns: Exit status of ``pid`` as reaped here (negative signal number),
        or None when it could not be collected.
    """
    try:
        parent = psutil.Process(pid)
    except psutil.NoSuchProcess:
        return None
    try:
        procs = parent.children(recursive=True) + [parent]
    except psutil.NoSuchProcess:
        procs = [parent]
    for proc in procs:
        try:
            proc.kill()
        except (psutil.NoSuchProcess, psutil.AccessDenied):
            pass
    psutil.wait_procs(procs, timeout=GRACE_SECS)
    code = getattr(parent, "returncode", None)
    return None if code is None else int(code)


def run_watched(argv, timeout_secs, cwd, log_path):
    """Run ``argv`` without a shell, killing its process tree at the timeout.

    .. Keyword Arguments:
    :param argv: Program and arguments.
    :param timeout_secs: Wall-clock limit.
    :param cwd: Working directory of the child.
    :param log_path: Where the command line, exit code and both streams go.

    .. Returns:
    :returns: ProcessOutcome
    """
    logging.debug("Running %s", " ".join(shlex.quote(a) for a in argv))
    start = time.monotonic()
    try:
        proc = subprocess.Popen(argv, cwd=cwd, stdin=subprocess.DEVNULL,
                                stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    except FileNotFoundError as err:
        raise ToolNotFound(f"cannot execute {argv[0]}: {err}") from err
    except OSError as err:
        raise SynthError(f"cannot execute {argv[0]}: {err}") from err
    timed_out, killed = False, None
    try:
        out, err = proc.communicate(timeout=timeout_secs)
    except subprocess.TimeoutExpired:
        timed_out = True
        killed = kill_tree(proc.pid)
        try:
            out, err = proc.communicate(timeout=GRACE_SECS)
        except subprocess.TimeoutExpired:
            out, err = b"", b""
    elapsed = time.monotonic() - start
    # wait_procs reaps the child before Popen can see its status
    exit_code = killed if timed_out and killed is not None else proc.returncode
    stdout = out.decode("utf-8", errors="replace")
    stderr = err.decode("utf-8", errors="replace")
    with open(log_path, "w", encoding="utf-8") as f:
        f.write("$ " + " ".join(shlex.quote(a) for a in argv) + "\n")
        f.write(f"exit: {exit_code}{' (timeout)' if timed_out else ''}\n")
        f.write(f"elapsed: {elapsed:.3f}\n")
        f.write("--- stdout ---\n" + stdout)
        f.write("--- stderr ---\n" + stderr)
    return ProcessOutcome(exit_code, stdout, stderr, elapsed, timed_out)


def log_excerpt(outcome):
    text = outcome.stderr if outcome.stderr.strip() else outcome.stdout
    lines = [line for line in text.splitlines() if line.strip()]
    return "\n".join(lines[-LOG_EXCERPT_LINES:])


def fault_sites(module, profile):
    """Nodes a fault profile can rewrite, in pre-order."""
    if profile == "and_to_or":
        return [n for n in walk(module) if isinstance(n, Binary) and n.op == "&"]
    if profile == "drop_signed":
        return [n for n in walk(module) if isinstance(n, SignCast) and n.signed]
    if profile == "off_by_one_shift":
        return [n for n in walk(module) if isinstance(n, Binary) and n.op in SHIFT_OPS]
    raise ValueError(f"unknown fault profile '{profile}'")


def apply_fault(module, profile, rng):
    """Rewrite one randomly chosen site of ``module``.

    .. Returns:
    :returns: ``(faulty copy, NodeId of the site or None)``
    """
    work = copy.deepcopy(module)
    sites = fault_sites(work, profile)
    if not sites:
        return work, None
    site = rng.choice(sites)
    if profile == "and_to_or":
        site.op = "|"
    elif profile == "drop_signed":
        replace_node(work, site.nid, site.operand)
    elif isinstance(site.right, Literal):
        site.right = Literal(max(32, site.right.width), site.right.value + 1, nid=site.right.nid)
    else:
        site.right = Binary("+", site.right, Literal(32, 1))
    return number_new_nodes(work), site.nid


def _fault_rng(tool, text):
    if tool.fault_seed is None:
        return random.Random()
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return random.Random(f"{tool.fault_seed}:{digest}")


def _read_design(design_path):
    try:
        with open(design_path, encoding="utf-8") as f:
            return f.read()
    except OSError as err:
        raise SynthError(f"cannot read design {design_path}: {err}") from err


def _builtin(tool, text, workdir):
    start = time.monotonic()
    design = parse(text)
    log_lines = [f"{tool.kind}: {design.name}"]
    if tool.kind == BUILTIN_FAULTY:
        design, site = apply_fault(design, tool.fault_profile, _fault_rng(tool, emit(design)))
        log_lines.append(f"fault {tool.fault_profile} at node {site}")
    netlist_text = emit(design)
    netlist_path = os.path.join(workdir, "netlist.v")
    with open(netlist_path, "w", encoding="utf-8") as f:
        f.write(netlist_text)
    with open(os.path.join(workdir, "tool.log"), "w", encoding="utf-8") as f:
        f.write("\n".join(log_lines) + "\n")
    return SynthResult(OK, parse(netlist_text), netlist_path, 0, "\n".join(log_lines),
                       time.monotonic() - start)


def _child_argv(tool):
    if tool.kind == BUILTIN_HANG:
        return [sys.executable, "-c", "import time; time.sleep(3600)"]
    return [sys.executable, "-c",
            f"import sys; sys.stderr.write({CRASH_MESSAGE!r} + '\\n'); sys.exit(3)"]


def _template_argv(template, **fields):
    try:
        return [arg.format(**fields) for arg in shlex.split(template)]
    except (KeyError, IndexError, ValueError) as err:
        raise SynthError(f"bad command template '{template}': {err}") from err


def _external_argv(tool, design_path, netlist_path, top):
    argv = _template_argv(tool.command, input=design_path, output=netlist_path, top=top)
    if shutil.which(argv[0]) is None and not os.path.isfile(argv[0]):
        raise ToolNotFound(f"tool {tool.name}: executable '{argv[0]}' not found")
    return argv


def synthesize(tool, design_path, workdir):
    """Synthesize one design file with ``tool``.

    .. Keyword Arguments:
    :param tool: ToolSpec.
    :param design_path: Verilog source of the design.
    :param workdir: Private writable directory; receives ``tool.log`` and
        the netlist.

    .. Returns:
    :returns: SynthResult with status ``ok``, ``crash`` or ``hang``.
    """
    check_writable(workdir)
    text = _read_design(design_path)
    if tool.kind in (BUILTIN_IDENTITY, BUILTIN_FAULTY):
        return _builtin(tool, text, workdir)
    netlist_path = os.path.join(workdir, "netlist.v")
    if tool.kind == EXTERNAL:
        try:
            top = parse(text).name
        except FrontendError:
            top = ""
        argv = _external_argv(tool, os.path.abspath(design_path), netlist_path, top)
    else:
        argv = _child_argv(tool)
    outcome = run_watched(argv, tool.timeout_secs, workdir, os.path.join(workdir, "tool.log"))
    excerpt = log_excerpt(outcome)
    if outcome.timed_out:
        logging.info("Tool %s hung after %.1f s", tool.name, outcome.elapsed)
        return SynthResult(HANG, None, None, None, excerpt, outcome.elapsed)
    if outcome.exit_code != 0:
        logging.info("Tool %s exited with %d", tool.name, outcome.exit_code)
        return SynthResult(CRASH, None, None, outcome.exit_code, excerpt, outcome.elapsed)
    if not os.path.isfile(netlist_path):
        return SynthResult(CRASH, None, None, 0, excerpt or "no netlist produced",
                           outcome.elapsed)
    try:
        netlist = parse(_read_design(netlist_path))
    except FrontendError:
        netlist = None
    return SynthResult(OK, netlist, netlist_path, 0, excerpt, outcome.elapsed)


def parse_trace_output(text, tb):
    """Collect ``TRACE <time> <port> <hex>`` lines into a Trace shaped like ``tb``.

    Missing samples and X/Z digits read as -1, which never equals a
    two-state value.
    """
    seen = {}
    for line in text.splitlines():
        match = _TRACE_LINE.match(line.strip())
        if not match:
            continue
        when, port, digits = match.groups()
        try:
            value = int(digits, 16)
        except ValueError:
            value = -1
        seen[(int(when), port)] = value
    outputs = {}
    for port in tb.ports:
        if port.direction == "output":
            outputs[port.name] = tuple(seen.get((t, port.name), -1) for t in tb.sample_times)
    return Trace(tuple(tb.sample_times), outputs, tb.finish_time)


def resimulate(tool, netlist_path, tb, module_name, workdir):
    """Simulate an external netlist with the tool's ``resim_command``.

    .. Returns:
    :returns: Trace, or None when the tool has no resimulation hook.
    """
    if not tool.resim_command:
        return None
    tb_path = os.path.join(workdir, "testbench.v")
    with open(tb_path, "w", encoding="utf-8") as f:
        f.write(emit_testbench(tb, module_name))
    argv = _template_argv(tool.resim_command, netlist=netlist_path, testbench=tb_path)
    outcome = run_watched(argv, tool.timeout_secs, workdir, os.path.join(workdir, "resim.log"))
    if outcome.timed_out or outcome.exit_code != 0:
        raise SynthError(f"resimulation for {tool.name} failed: {log_excerpt(outcome)}")
    return parse_trace_output(outcome.stdout, tb)
