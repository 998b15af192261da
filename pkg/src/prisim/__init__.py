"""Deterministic simulator of a tree-of-strategies priority construction.

Builds two stagewise-isomorphic loop-bundle graphs against scripted
adversaries (c.e. string sets, functionals, oracle graph machines), records
a structured trace, checks the construction's invariants over that trace,
and codes directed graphs into symmetric irreflexive graphs.
"""

from .codings import (
    CodingError,
    Digraph,
    SymGraph,
    canonical_iso_roundtrip,
    decode,
    encode,
    transport_iso,
)
from .engine import Engine, Scenario, replay_trace, run_scenario, stable_prefix
from .graphs import BuiltGraph, ConstructionError, GenericApprox
from .verifier import CHECKS, CheckReport, run_checks

__all__ = [
    "BuiltGraph",
    "CHECKS",
    "CheckReport",
    "CodingError",
    "ConstructionError",
    "Digraph",
    "Engine",
    "GenericApprox",
    "Scenario",
    "SymGraph",
    "canonical_iso_roundtrip",
    "decode",
    "encode",
    "replay_trace",
    "run_checks",
    "run_scenario",
    "stable_prefix",
    "transport_iso",
]
