"""Command-line entry point: check, graph, stubs, simulate.

Exit codes: 0 success, 1 diagnostics (or a simulation that could not run),
2 I/O errors.  Everything except the requested artefact goes to stderr.
"""

from __future__ import annotations

import argparse
import importlib.util
import sys
from pathlib import Path
from typing import TextIO

from .automaton import build_automaton, dump, to_dot
from .codegen import emit_manifest, emit_stubs
from .diagnostics import DiagnosticError
from .logic import DEFAULT_PACK, PACK_NAMES, HandlerTable, register_pack
from .parser import load_protocol
from .scenario import load_scenario
from .simulator import Mode, SimulationError, render_balances, run_scenario

EXIT_OK, EXIT_DIAGNOSTICS, EXIT_IO = 0, 1, 2


class _IOFailure(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from None


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from None


def _emit(text: str, output: str | None, stdout: TextIO) -> None:
    if output:
        _write(output, text)
    else:
        stdout.write(text)


def _load_plugin(path: str) -> HandlerTable:
    spec = importlib.util.spec_from_file_location(Path(path).stem, path)
    if spec is None or spec.loader is None:
        raise _IOFailure(f"cannot load logic module {path}")
    module = importlib.util.module_from_spec(spec)
    try:
        spec.loader.exec_module(module)
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from None
    handlers = getattr(module, "HANDLERS", None)
    if not isinstance(handlers, dict):
        raise SimulationError(f"{path} does not define a HANDLERS dict")
    return handlers


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="protocontract", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a protocol")
    p.add_argument("protocol")

    p = sub.add_parser("graph", help="print the protocol automaton")
    p.add_argument("protocol")
    p.add_argument("--format", choices=("dot", "dump"), default="dot")
    p.add_argument("--output", "-o")

    p = sub.add_parser("stubs", help="emit business-logic stubs and the contract manifest")
    p.add_argument("protocol")
    p.add_argument("--output", "-o", metavar="DIR",
                   help="write <name>_logic.py and <name>.manifest into DIR instead of stdout")

    p = sub.add_parser("simulate", help="replay a scenario against the protocol")
    p.add_argument("protocol")
    p.add_argument("--scenario", required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode])
    logic = p.add_mutually_exclusive_group()
    logic.add_argument("--pack", choices=PACK_NAMES)
    logic.add_argument("--logic", metavar="MODULE.py", help="Python file defining a HANDLERS dict")
    return ap


def run(argv: list[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    path = args.protocol
    try:
        decl = load_protocol(_read(path))

        if args.command == "check":
            stdout.write(f"{path}: ok\n")

        elif args.command == "graph":
            automaton = build_automaton(decl)
            _emit(to_dot(automaton) if args.format == "dot" else dump(automaton), args.output, stdout)

        elif args.command == "stubs":
            stubs = emit_stubs(decl)
            manifest = emit_manifest(decl, build_automaton(decl))
            if args.output:
                out = Path(args.output)
                _write(str(out / f"{decl.name}_logic.py"), stubs)
                _write(str(out / f"{decl.name}.manifest"), manifest)
            else:
                stdout.write(stubs)
                stdout.write("\n\n# --- manifest ---\n")
                stdout.write("".join(f"# {line}\n" for line in manifest.splitlines()))

        elif args.command == "simulate":
            try:
                scenario = load_scenario(_read(args.scenario))
            except DiagnosticError as exc:
                stderr.write(exc.render(args.scenario) + "\n")
                return EXIT_DIAGNOSTICS
            if args.logic:
                handlers = _load_plugin(args.logic)
            else:
                pack = args.pack or DEFAULT_PACK.get(decl.name)
                handlers = register_pack(pack) if pack else {}
            mode = Mode(args.mode) if args.mode else None
            try:
                state, log = run_scenario(decl, handlers, scenario, mode)
            except DiagnosticError as exc:
                stderr.write(exc.render(args.scenario) + "\n")
                return EXIT_DIAGNOSTICS
            stdout.write(log)
            stdout.write("\n")
            stdout.write(render_balances(state))

    except _IOFailure as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except DiagnosticError as exc:
        stderr.write(exc.render(path) + "\n")
        return EXIT_DIAGNOSTICS
    except SimulationError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_DIAGNOSTICS
    return EXIT_OK


def main() -> None:
    sys.exit(run())
