#!/usr/bin/env python3

"""Exception root shared by every hdlmutant module."""


class HdlMutantError(Exception):
    """Base class for all errors raised by the toolkit."""


class ConfigError(HdlMutantError):
    """A campaign configuration is missing, malformed or inconsistent."""
