"""Equivalence-preserving mutation fuzzer for Verilog logic-synthesis tools."""

__version__ = "0.1.0"
