"""Compiler and ledger simulator for a protocol language for smart contracts."""

from .ast import ProtocolDecl, validate
from .automaton import Automaton, build_automaton, enabled, to_dot
from .codegen import emit_manifest, emit_stubs
from .diagnostics import Diagnostic, DiagnosticError
from .lexer import tokenize
from .logic import hash_string, register_pack
from .parser import load_protocol, parse_protocol, pretty_print
from .scenario import Scenario, load_scenario
from .simulator import LedgerState, Mode, advance_slot, init_simulation, run_scenario, submit_call

__all__ = [
    "Automaton",
    "Diagnostic",
    "DiagnosticError",
    "LedgerState",
    "Mode",
    "ProtocolDecl",
    "Scenario",
    "advance_slot",
    "build_automaton",
    "emit_manifest",
    "emit_stubs",
    "enabled",
    "hash_string",
    "init_simulation",
    "load_protocol",
    "load_scenario",
    "parse_protocol",
    "pretty_print",
    "register_pack",
    "run_scenario",
    "submit_call",
    "to_dot",
    "tokenize",
    "validate",
]
