#!/usr/bin/env python3

"""Campaign configuration: one JSON file, optionally overridden by flags."""

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError
from .fragments import SAMPLING_STRATEGIES
from .synth_adapters import ToolSpec
from .testbench import StimulusConfig

STIMULUS_KEYS = ("vector_count", "step_delay", "clock_half_period", "margin")

# Chance that a body is pruned rather than grown, per mode.
MUTATION_MODES = {"both": 0.5, "prune": 1.0, "insert": 0.0}


@dataclass
class CampaignConfig:
    seeds_dir: str
    tools: list
    output_dir: str
    rng_seed: int = 0
    fragment_model_path: Optional[str] = None
    model_out_path: Optional[str] = None
    variants_per_seed: int = 5
    max_iterations: Optional[int] = None
    wall_clock_budget: Optional[float] = None
    workers: int = 1
    stimulus: dict = field(default_factory=dict)
    seed_pool_capacity: int = 256
    reduce: bool = True
    reduction_budget_secs: float = 120
    max_retries: int = 20
    sampling: Optional[str] = None
    mutation_mode: str = "both"

    def validate(self):
        if (self.max_iterations is None) == (self.wall_clock_budget is None):
            raise ConfigError("exactly one of max_iterations and wall_clock_budget must be set")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ConfigError("max_iterations must be positive")
        if self.wall_clock_budget is not None and self.wall_clock_budget <= 0:
            raise ConfigError("wall_clock_budget must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.variants_per_seed < 1 or self.max_retries < 1:
            raise ConfigError("variants_per_seed and max_retries must be positive")
        if self.seed_pool_capacity < 1:
            raise ConfigError("seed_pool_capacity must be positive")
        if not self.tools:
            raise ConfigError("at least one tool is required")
        names = [tool.name for tool in self.tools]
        if len(set(names)) != len(names):
            raise ConfigError("tool names must be unique")
        if self.sampling is not None and self.sampling not in SAMPLING_STRATEGIES:
            raise ConfigError(f"sampling must be one of {', '.join(SAMPLING_STRATEGIES)}")
        if self.mutation_mode not in MUTATION_MODES:
            raise ConfigError(f"mutation_mode must be one of {', '.join(MUTATION_MODES)}")
        if self.mutation_mode == "insert" and not self.fragment_model_path:
            raise ConfigError("mutation_mode insert needs a fragment_model_path")
        unknown = set(self.stimulus) - set(STIMULUS_KEYS)
        if unknown:
            raise ConfigError(f"unknown stimulus keys: {', '.join(sorted(unknown))}")
        try:
            self.stimulus_config(0)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"bad stimulus settings: {err}") from err
        if not os.path.isdir(self.seeds_dir):
            raise ConfigError(f"seeds_dir {self.seeds_dir} is not a directory")
        return self

    def stimulus_config(self, rng_seed):
        return StimulusConfig(rng_seed=rng_seed, **self.stimulus)

    def to_dict(self):
        data = {name: getattr(self, name) for name in self.__dataclass_fields__}
        data["tools"] = [tool.to_dict() for tool in self.tools]
        return data


def _tool(data):
    if not isinstance(data, dict):
        raise ConfigError("each tool must be a JSON object")
    try:
        return ToolSpec.from_dict(data)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad tool {data.get('name', '?')!r}: {err}") from err


def _resolve(base, path):
    if path is None or os.path.isabs(path):
        return path
    return os.path.normpath(os.path.join(base, path))


def config_from_dict(data, base_dir=".", overrides=None):
    """Build and validate a CampaignConfig.

    .. Keyword Arguments:
    :param data: Parsed JSON document.
    :param base_dir: Relative paths are taken relative to this directory.
    :param overrides: Flag values; None entries are ignored. ``timeout_secs``
        applies to every tool.

    .. Returns:
    :returns: CampaignConfig
    """
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    data = dict(data)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    timeout = overrides.pop("timeout_secs", None)
    tools = [_tool(dict(t, timeout_secs=timeout) if timeout is not None else t)
             for t in data.pop("tools", [])]
    data.update(overrides)
    unknown = set(data) - set(CampaignConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    for key in ("seeds_dir", "output_dir"):
        if key not in data:
            raise ConfigError(f"missing required key '{key}'")
    for key in ("seeds_dir", "output_dir", "fragment_model_path", "model_out_path"):
        if key in data and key not in overrides:
            data[key] = _resolve(base_dir, data[key])
    try:
        config = CampaignConfig(tools=tools, **data)
    except TypeError as err:
        raise ConfigError(str(err)) from err
    return config.validate()


def load_config(path, overrides=None):
    try:
        with open(path, "r", encoding="utf-8") as fp:
            data = json.load(fp)
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path} is not valid JSON: {err}") from err
    return config_from_dict(data, os.path.dirname(os.path.abspath(path)), overrides)
