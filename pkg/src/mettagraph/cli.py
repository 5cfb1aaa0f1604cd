"""Command-line front end: batch runs and an interactive loop.

    mettagraph --space kb.metta --run script.metta
    mettagraph --space kb.metta          # interactive

Exit status of a batch run: 0 on success, 1 on an evaluation error,
2 on a parse error.
"""

from __future__ import annotations

import argparse
import sys
from typing import TextIO

from .errors import EvaluationError, MettaGraphError, ParseError
from .interpreter import DEFAULT_FUEL, Interpreter
from .matcher import match, transform
from .syntax import format_expr, parse_all

__all__ = ["main", "build_parser", "Session"]

HELP = """commands:
  <expr>              add an expression to the space
  !eval <expr>        evaluate and print each result
  !match <pattern>    print the bindings of each match
  !transform <P> <T>  print each instantiated template
  !dump <path>        write the space to a file
  !trace on|off       print trace events (JSON lines) to stderr
  !quit               leave"""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mettagraph", description="Evaluate expressions over a metagraph space.")
    p.add_argument("--space", action="append", default=[], metavar="FILE", help="load a space file (repeatable)")
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="evaluation step budget per expression")
    p.add_argument("--trace", metavar="FILE", help="append JSON-lines traces of every evaluation to FILE")
    p.add_argument("--run", metavar="SCRIPT", help="load SCRIPT and evaluate its (@ ...) roots, then exit")
    return p


def paren_depth(text: str) -> int:
    """Open-paren depth at the end of ``text`` (strings and comments skipped)."""
    depth = 0
    in_str = esc = comment = False
    for ch in text:
        if comment:
            comment = ch != "\n"
        elif in_str:
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch == ";":
            comment = True
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
    return depth


class Session:
    """Interpreter plus output streams and trace settings."""

    def __init__(
        self,
        interp: Interpreter,
        out: TextIO = sys.stdout,
        err: TextIO = sys.stderr,
        trace_file: str | None = None,
    ) -> None:
        self.interp = interp
        self.out = out
        self.err = err
        self.trace_file = trace_file
        self.trace_echo = False

    def evaluate(self, e) -> list:
        if self.trace_file is None and not self.trace_echo:
            return self.interp.eval(e)
        try:
            results, trace = self.interp.eval_traced(e)
        except EvaluationError as exc:
            partial = getattr(exc, "trace", None)
            if partial is not None:
                self._emit_trace(partial.to_json_lines())
            raise
        self._emit_trace(trace.to_json_lines())
        return results

    def _emit_trace(self, text: str) -> None:
        if self.trace_file is not None:
            with open(self.trace_file, "a", encoding="utf-8") as fh:
                fh.write(text)
        if self.trace_echo:
            self.err.write(text)

    def print(self, line: str) -> None:
        self.out.write(line + "\n")

    def _exprs(self, text: str) -> list:
        return parse_all(text, self.interp.registry.names())

    def command(self, text: str) -> bool:
        """Handle one complete input; False means quit."""
        text = text.strip()
        if not text:
            return True
        if not text.startswith("!") or text.startswith("!enrich") or text.startswith("!rule"):
            for e in self._exprs(text):
                self.interp.space.add_expression(e)
            return True
        name, _, rest = text.partition(" ")
        rest = rest.strip()
        if name == "!quit":
            return False
        if name == "!help":
            self.print(HELP)
        elif name == "!eval":
            for e in self._exprs(rest):
                for r in self.evaluate(e):
                    self.print(format_expr(r))
        elif name == "!match":
            (pattern,) = self._one_or_more(rest, 1)
            for m in match(self.interp.space, pattern):
                self.print(repr(m.bindings))
        elif name == "!transform":
            pattern, template = self._one_or_more(rest, 2)
            for r in transform(self.interp.space, pattern, template):
                self.print(format_expr(r))
        elif name == "!dump":
            if not rest:
                raise ValueError("!dump needs a path")
            with open(rest, "w", encoding="utf-8") as fh:
                fh.write(self.interp.space.dump())
        elif name == "!trace":
            if rest not in ("on", "off"):
                raise ValueError("!trace on|off")
            self.trace_echo = rest == "on"
        else:
            raise ValueError(f"unknown command {name} (try !help)")
        return True

    def _one_or_more(self, text: str, n: int) -> list:
        exprs = self._exprs(text)
        if len(exprs) != n:
            raise ValueError(f"expected {n} expression(s), got {len(exprs)}")
        return exprs

    def repl(self, stdin: TextIO) -> int:
        interactive = stdin.isatty()
        buf = ""
        while True:
            if interactive:
                self.out.write("... " if buf else "> ")
                self.out.flush()
            line = stdin.readline()
            if not line:
                break
            buf += line
            if paren_depth(buf) > 0:
                continue
            text, buf = buf, ""
            try:
                if not self.command(text):
                    break
            except (MettaGraphError, ValueError, OSError) as exc:
                self.err.write(f"error: {exc}\n")
        return 0

    def run_script(self, path: str) -> int:
        try:
            with open(path, encoding="utf-8") as fh:
                self.interp.load(fh.read())
        except ParseError as exc:
            self.err.write(f"{path}: parse error: {exc}\n")
            return 2
        for rid in self.interp.activated_roots():
            target = self.interp.space.lift(rid)
            try:
                results = self.evaluate(target)
            except EvaluationError as exc:
                where = format_expr(exc.expr if exc.expr is not None else target, limit=200)
                self.err.write(f"error evaluating {format_expr(target, limit=200)}: {exc} [at {where}]\n")
                return 1
            for r in results:
                self.print(format_expr(r))
        return 0


def main(argv: list[str] | None = None, stdin: TextIO | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = out or sys.stdout
    err = err or sys.stderr
    interp = Interpreter(fuel=args.fuel)
    for path in args.space:
        try:
            with open(path, encoding="utf-8") as fh:
                interp.load(fh.read())
        except ParseError as exc:
            err.write(f"{path}: parse error: {exc}\n")
            return 2
        except OSError as exc:
            err.write(f"{path}: {exc}\n")
            return 2
    session = Session(interp, out, err, args.trace)
    if args.run:
        try:
            return session.run_script(args.run)
        except OSError as exc:
            err.write(f"{args.run}: {exc}\n")
            return 2
    return session.repl(stdin or sys.stdin)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
