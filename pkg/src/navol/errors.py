"""Shared exception types.

PreconditionError maps to CLI exit code 3, InstanceFormatError to exit code 2.
Verification failures are not exceptions; they are carried as report flags.
"""
from __future__ import annotations


class PreconditionError(ValueError):
    """An operation's documented precondition is violated."""


class InstanceFormatError(ValueError):
    """An instance file fails to parse or validate; message names the field."""
