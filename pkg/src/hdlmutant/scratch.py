#!/usr/bin/env python3

"""Scratch directories for tool invocations."""

import logging
import os
import tempfile

from .errors import HdlMutantError


class WorkdirError(HdlMutantError):
    """A scratch directory could not be created or written."""


def scratch_root():
    """Root of all scratch directories.

    ``HDLMUTANT_WORKDIR`` wins when set, the platform temp directory otherwise.
    """
    if "HDLMUTANT_WORKDIR" in os.environ:
        return os.environ["HDLMUTANT_WORKDIR"]
    return os.path.join(tempfile.gettempdir(), "hdlmutant")


def make_workdir(prefix="job-"):
    """Create a fresh private directory below the scratch root."""
    root = scratch_root()
    try:
        os.makedirs(root, exist_ok=True)
        path = tempfile.mkdtemp(prefix=prefix, dir=root)
    except OSError as err:
        raise WorkdirError(f"cannot create scratch directory under {root}: {err}") from err
    logging.debug("Created work directory %s", path)
    return path


def check_writable(path):
    if not os.path.isdir(path) or not os.access(path, os.W_OK):
        raise WorkdirError(f"work directory {path} is not writable")
    return path
