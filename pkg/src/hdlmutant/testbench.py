#!/usr/bin/env python3

"""Deterministic randomized stimulus for a design under test.

All randomness comes from a splitmix64 stream so a testbench can be rebuilt
bit for bit from its StimulusConfig alone.
"""

import collections
import dataclasses
import re
from dataclasses import dataclass
from typing import Optional

from .errors import HdlMutantError

MASK64 = (1 << 64) - 1
RESET_HOLD_STEPS = 2

PortSpec = collections.namedtuple("PortSpec", ["name", "direction", "width", "signed", "is_clock"])
StimulusStep = collections.namedtuple("StimulusStep", ["time", "values"])


class NoOutputs(HdlMutantError):
    """The design has no observable output and cannot serve as a seed."""


class SplitMix64:
    """The splitmix64 generator, one 64-bit draw per ``next()``."""

    def __init__(self, seed):
        self.state = seed & MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


@dataclass(frozen=True)
class StimulusConfig:
    rng_seed: int = 0
    vector_count: int = 100
    step_delay: int = 10
    clock_half_period: int = 5
    margin: Optional[int] = None

    def __post_init__(self):
        if self.vector_count < 0:
            raise ValueError("vector_count must be >= 0")
        if self.step_delay <= 0 or self.clock_half_period <= 0:
            raise ValueError("step_delay and clock_half_period must be positive")
        if self.margin is not None and self.margin < 0:
            raise ValueError("margin must be >= 0")

    @property
    def total_horizon(self):
        margin = self.step_delay if self.margin is None else self.margin
        return self.vector_count * self.step_delay + margin

    def derived(self):
        """Same shape with the seed advanced by one splitmix64 step."""
        return dataclasses.replace(self, rng_seed=SplitMix64(self.rng_seed).next())

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class TestbenchAst:
    """Stimulus schedule plus the DUT binding it drives.

    ``clock`` names the input toggled every ``clock_half_period`` starting
    from 0 at time 0, or is None for clock-less designs.
    """

    __test__ = False

    ports: tuple
    clock: Optional[str]
    clock_half_period: int
    schedule: tuple
    finish_time: int
    config: StimulusConfig

    @property
    def sample_times(self):
        return [step.time for step in self.schedule]

    def clock_value(self, time):
        return (time // self.clock_half_period) & 1


def is_clock_name(name):
    return name.lower() in ("clk", "clock")


def is_reset_name(name):
    lowered = name.lower()
    return "rst" in lowered or "reset" in lowered


def reset_active_low(name):
    lowered = name.lower()
    return bool(re.search(r"(rst|reset)_?[nb]$", lowered) or re.match(r"n_?(rst|reset)", lowered))


def extract_ports(module):
    """Describe the ports of ``module`` for stimulus generation.

    .. Keyword Arguments:
    :param module: A parsed ModuleAst.

    .. Returns:
    :returns: PortSpecs in declaration order; at most one flagged as clock.
    """
    specs, clock_taken = [], False
    for port in module.ports:
        clock = (not clock_taken and port.direction == "input" and port.width == 1
                 and is_clock_name(port.name))
        clock_taken = clock_taken or clock
        specs.append(PortSpec(port.name, port.direction, port.width, port.signed, clock))
    if not any(spec.direction == "output" for spec in specs):
        raise NoOutputs(f"module {module.name} has no output port")
    return specs


def generate_testbench(ports, cfg):
    """Build the stimulus schedule for ``ports``.

    Entry 0 at time 0 drives every non-clock input to zero, reset-like inputs
    to their active level. Entries 1..N follow every ``step_delay`` with one
    splitmix64 draw per non-clock, non-reset input in port order.
    """
    rng = SplitMix64(cfg.rng_seed)
    ports = tuple(ports)
    clock = next((p.name for p in ports if p.is_clock), None)
    driven = [p for p in ports if p.direction == "input" and not p.is_clock]
    levels = {}
    for port in driven:
        if is_reset_name(port.name):
            active_low = reset_active_low(port.name)
            levels[port.name] = (0 if active_low else 1, 1 if active_low else 0)
    schedule = [StimulusStep(0, {p.name: levels.get(p.name, (0, 0))[0] for p in driven})]
    for k in range(1, cfg.vector_count + 1):
        values = {}
        for port in driven:
            if port.name in levels:
                active, inactive = levels[port.name]
                values[port.name] = active if k <= RESET_HOLD_STEPS else inactive
            else:
                values[port.name] = rng.next() & ((1 << port.width) - 1)
        schedule.append(StimulusStep(k * cfg.step_delay, values))
    return TestbenchAst(ports, clock, cfg.clock_half_period, tuple(schedule),
                        cfg.total_horizon, cfg)


def testbench_for(module, cfg):
    return generate_testbench(extract_ports(module), cfg)
