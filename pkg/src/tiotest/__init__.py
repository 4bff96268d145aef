"""Conformance-test generation from timed automata with inputs and outputs."""

from __future__ import annotations

__version__ = "0.1.0"
