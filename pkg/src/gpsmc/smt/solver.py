"""A thin SMT-LIB v2 client for an external solver process."""

from __future__ import annotations

import enum
import os
import selectors
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..formula import (
    FALSE,
    TRUE,
    And,
    Atom,
    Exists,
    Forall,
    Formula,
    Or,
    Term,
    conj_all,
    fresh,
    neg,
    rename,
)

DEFAULT_COMMAND = "z3 -in"
SOLVER_ENV = "GPSMC_SOLVER"
DEFAULT_TIMEOUT_MS = 10_000


class SolverError(RuntimeError):
    """The solver process died or rejected a command."""


class Status(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass
class SatResult:
    status: Status
    model: dict[str, int] = field(default_factory=dict)
    reason: str = ""

    @property
    def is_sat(self) -> bool:
        return self.status is Status.SAT

    @property
    def is_unsat(self) -> bool:
        return self.status is Status.UNSAT

    @property
    def is_unknown(self) -> bool:
        return self.status is Status.UNKNOWN


@dataclass
class SolverStats:
    queries: int = 0
    sat: int = 0
    unsat: int = 0
    unknown: int = 0
    wall_time: float = 0.0
    restarts: int = 0

    def as_dict(self) -> dict[str, float]:
        return {
            "queries": self.queries,
            "sat": self.sat,
            "unsat": self.unsat,
            "unknown": self.unknown,
            "wall_time": round(self.wall_time, 4),
        }


# --------------------------------------------------------------------------
# Encoding


def sym(name: str) -> str:
    if "|" in name or "\\" in name:
        raise SolverError(f"cannot encode identifier {name!r}")
    return f"|{name}|"


def _int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def term_to_smt(t: Term) -> str:
    parts = []
    for v, c in t.coeffs:
        parts.append(sym(v) if c == 1 else f"(* {_int(c)} {sym(v)})")
    if t.const or not parts:
        parts.append(_int(t.const))
    if len(parts) == 1:
        return parts[0]
    return f"(+ {' '.join(parts)})"


def atom_to_smt(a: Atom) -> str:
    t = term_to_smt(a.term)
    if a.op == "le":
        return f"(<= {t} 0)"
    if a.op == "eq":
        return f"(= {t} 0)"
    if a.op == "ne":
        return f"(not (= {t} 0))"
    d = f"(= (mod {t} {a.mod}) 0)"
    return d if a.op == "div" else f"(not {d})"


def to_smt(f: Formula) -> str:
    if f is TRUE or f == TRUE:
        return "true"
    if f is FALSE or f == FALSE:
        return "false"
    if isinstance(f, Atom):
        return atom_to_smt(f)
    if isinstance(f, And):
        return f"(and {' '.join(to_smt(a) for a in f.args)})"
    if isinstance(f, Or):
        return f"(or {' '.join(to_smt(a) for a in f.args)})"
    if isinstance(f, (Exists, Forall)):
        q = "exists" if isinstance(f, Exists) else "forall"
        binds = " ".join(f"({sym(v)} Int)" for v in f.vars)
        return f"({q} ({binds}) {to_smt(f.body)})"
    raise TypeError(f)


def skolemize(f: Formula) -> tuple[Formula, list[str]]:
    """Replace positively occurring existential binders by fresh constants."""
    consts: list[str] = []

    def go(g: Formula) -> Formula:
        if isinstance(g, Exists):
            ren = {v: fresh("__sk") for v in g.vars}
            consts.extend(ren.values())
            return go(rename(g.body, ren))
        if isinstance(g, And):
            return conj_all(go(a) for a in g.args)
        if isinstance(g, Or):
            return Or(tuple(go(a) for a in g.args))
        return g

    return go(f), consts


# --------------------------------------------------------------------------
# Process handling


class Solver:
    """One external solver process; not thread-safe."""

    def __init__(self, command: str | Sequence[str] | None = None, timeout_ms: int = DEFAULT_TIMEOUT_MS):
        if command is None:
            command = os.environ.get(SOLVER_ENV, DEFAULT_COMMAND)
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout_ms = timeout_ms
        self.stats = SolverStats()
        self._proc: subprocess.Popen[bytes] | None = None
        self._buf = b""
        self._start()

    # -- lifecycle

    def _start(self) -> None:
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT,
            )
        except OSError as exc:
            raise SolverError(f"cannot launch solver {self.command}: {exc}") from exc
        self._buf = b""
        self._send(
            "(set-option :print-success false)\n"
            "(set-option :produce-models true)\n"
            f"(set-option :timeout {self.timeout_ms})\n"
            "(set-logic ALL)\n"
        )

    def close(self) -> None:
        if self._proc is None:
            return
        try:
            self._send("(exit)\n")
            self._proc.wait(timeout=2)
        except Exception:
            self._proc.kill()
        self._proc = None

    def restart(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None
        self.stats.restarts += 1
        self._start()

    def reset(self) -> None:
        """Clear all assertions between logical tasks."""
        self._send("(reset)\n"
                   "(set-option :print-success false)\n"
                   "(set-option :produce-models true)\n"
                   f"(set-option :timeout {self.timeout_ms})\n"
                   "(set-logic ALL)\n")

    def __enter__(self) -> "Solver":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def __del__(self) -> None:  # pragma: no cover - best effort
        try:
            if self._proc is not None:
                self._proc.kill()
        except Exception:
            pass

    # -- raw IO

    def _send(self, text: str) -> None:
        assert self._proc is not None and self._proc.stdin is not None
        try:
            self._proc.stdin.write(text.encode())
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise SolverError(f"solver process died: {exc}") from exc

    def _readline(self, deadline: float) -> str | None:
        assert self._proc is not None and self._proc.stdout is not None
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            with selectors.DefaultSelector() as sel:
                sel.register(fd, selectors.EVENT_READ)
                if not sel.select(remaining):
                    return None
            chunk = os.read(fd, 65536)
            if not chunk:
                raise SolverError("solver process closed its output")
            self._buf += chunk
        line, _, self._buf = self._buf.partition(b"\n")
        return line.decode().strip()

    def _read_sexpr(self, deadline: float) -> str | None:
        lines: list[str] = []
        depth = 0
        while True:
            line = self._readline(deadline)
            if line is None:
                return None
            if not line and not lines:
                continue
            lines.append(line)
            depth += line.count("(") - line.count(")")
            if depth <= 0:
                return " ".join(lines)

    # -- queries

    def query(self, assertions: Iterable[Formula], want: Iterable[str] = ()) -> SatResult:
        """Check the conjunction of ``assertions``; on sat read back ``want``."""
        body, consts = skolemize(conj_all(assertions))
        want = list(dict.fromkeys(want))
        decl_names = sorted(set(body.free_vars()) | set(want))
        script = ["(push 1)"]
        script += [f"(declare-const {sym(n)} Int)" for n in decl_names]
        script.append(f"(assert {to_smt(body)})")
        script.append("(check-sat)")
        start = time.monotonic()
        deadline = start + self.timeout_ms / 1000 + 5
        self.stats.queries += 1
        self._send("\n".join(script) + "\n")
        errors: list[str] = []
        answer: str | None = None
        while True:
            line = self._read_sexpr(deadline)
            if line is None:
                break
            if line.startswith("(error"):
                errors.append(line)
                continue
            answer = line
            break
        if answer is None:
            self.stats.wall_time += time.monotonic() - start
            self.stats.unknown += 1
            self.restart()
            return SatResult(Status.UNKNOWN, reason="timeout")
        if errors:
            self._send("(pop 1)\n")
            self.stats.wall_time += time.monotonic() - start
            raise SolverError("; ".join(errors))
        model: dict[str, int] = {}
        if answer == "sat":
            status = Status.SAT
            if want:
                self._send(f"(get-value ({' '.join(sym(n) for n in want)}))\n")
                resp = self._read_sexpr(deadline)
                if resp is None or resp.startswith("(error"):
                    self.restart()
                    raise SolverError(f"bad get-value response: {resp}")
                model = parse_values(resp)
        elif answer == "unsat":
            status = Status.UNSAT
        else:
            status = Status.UNKNOWN
        self._send("(pop 1)\n")
        self.stats.wall_time += time.monotonic() - start
        if status is Status.SAT:
            self.stats.sat += 1
        elif status is Status.UNSAT:
            self.stats.unsat += 1
        else:
            self.stats.unknown += 1
        return SatResult(status, model, reason="" if status is not Status.UNKNOWN else answer)

    def is_sat(self, f: Formula, want: Iterable[str] | None = None) -> SatResult:
        if want is None:
            want = sorted(f.free_vars())
        return self.query([f], want)

    def entails(self, a: Formula, b: Formula) -> SatResult:
        """Sat means *not* entailed (model is a counterexample)."""
        return self.query([a, neg(b)], sorted(a.free_vars() | b.free_vars()))

    def optimize_const(self, f: Formula, t: Term, hi: int = 2**64) -> int | None:
        """Least c <= hi with f |= t <= c, or None if there is none."""
        obj = fresh("__obj")
        base = [f, Atom("eq", t - Term.var(obj))]
        r = self.query(base, [obj])
        if r.is_unsat:
            return None  # f is unsatisfiable: every bound holds, none is "best"
        if not r.is_sat:
            return None
        lo = r.model[obj]  # achieved, so the bound is >= lo
        if lo > hi:
            return None
        top = self.query(base + [Atom("le", Term.constant(hi + 1) - Term.var(obj))], [obj])
        if not top.is_unsat:
            return None
        # invariant: t can reach lo; f |= t <= hi
        while lo < hi:
            mid = (lo + hi) // 2
            r = self.query(base + [Atom("le", Term.constant(mid + 1) - Term.var(obj))], [obj])
            if r.is_unsat:
                hi = mid
            elif r.is_sat:
                lo = r.model[obj]
            else:
                return None
        return hi


def parse_values(text: str) -> dict[str, int]:
    """Parse a ``get-value`` response such as ``((|x| 3) (|y| (- 2)))``."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    out: dict[str, int] = {}
    # re-join quoted symbols that contained no spaces (ours never do)
    i = 0

    def parse(i: int):
        tok = tokens[i]
        if tok == "(":
            items = []
            i += 1
            while tokens[i] != ")":
                item, i = parse(i)
                items.append(item)
            return items, i + 1
        return tok, i + 1

    tree, i = parse(0)
    for pair in tree:
        name, val = pair
        if name.startswith("|") and name.endswith("|"):
            name = name[1:-1]
        out[name] = _to_int(val)
    return out


def _to_int(v) -> int:
    if isinstance(v, str):
        return int(v)
    if len(v) == 2 and v[0] == "-":
        return -_to_int(v[1])
    raise SolverError(f"unexpected model value {v!r}")


def make_solver(command: str | None = None, timeout_ms: int = DEFAULT_TIMEOUT_MS) -> Solver:
    return Solver(command, timeout_ms)


def conjoin(fs: Iterable[Formula]) -> Formula:
    return conj_all(fs)


def values_for(model: Mapping[str, int], names: Iterable[str]) -> dict[str, int]:
    return {n: model.get(n, 0) for n in names}
