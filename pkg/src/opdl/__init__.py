"""Operational propositional dynamic logic: proof kernel, prover and semantics workbench."""

__version__ = "0.1.0"
