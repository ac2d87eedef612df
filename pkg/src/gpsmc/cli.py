"""Command-line driver: ``gpsmc verify FILE``, ``gpsmc corpus DIR``, ``gpsmc generate DIR``."""

from __future__ import annotations

import argparse
import csv
import io
import random
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .engine import EXHAUSTED, SAFE, UNSAFE, Budget, Checker, Verdict, is_safe_certificate
from .formula import UsageError, prime, to_text
from .graph import WeightedGraph
from .lang import ParseError, instrument_gas, load_graph
from .smt.solver import SOLVER_ENV, Solver, SolverError, sym, to_smt
from .summary import SummaryTable, build_summary_table, trivial_table

EXIT_SAFE, EXIT_UNSAFE, EXIT_EXHAUSTED, EXIT_ERROR = 0, 1, 2, 3
EXIT_CODES = {SAFE: EXIT_SAFE, UNSAFE: EXIT_UNSAFE, EXHAUSTED: EXIT_EXHAUSTED}
CSV_COLUMNS = ["file", "verdict", "iterations", "tests", "deadends", "covers", "smt_sat", "smt_unsat", "smt_unknown", "wall_ms"]
EXPECT_RE = re.compile(r"//\s*expect:\s*(safe|unsafe)\b", re.IGNORECASE)


@dataclass
class RunConfig:
    path: Path | None = None
    engine: str = "gps"
    gas: bool = True
    summaries: str = "cra"
    solver: str | None = None
    max_frontier: int | None = 10_000
    explore_steps: int = 10_000
    timeout_ms: int = 10_000
    table_budget: float | None = 60.0
    time_budget: float | None = None
    dump_cfg: Path | None = None
    dump_summaries: Path | None = None
    dump_art: Path | None = None
    witness: Path | None = None
    validate_art: bool = False
    seed: int = 0

    def budget(self) -> Budget:
        return Budget(self.max_frontier, self.explore_steps, self.time_budget)


@dataclass
class RunResult:
    verdict: Verdict
    graph: WeightedGraph
    table: SummaryTable
    wall_time: float
    violations: list[str] = field(default_factory=list)


def prepare(path: Path, config: RunConfig, solver: Solver) -> tuple[WeightedGraph, SummaryTable]:
    g = load_graph(path)
    if config.gas:
        g = instrument_gas(g)
    if config.summaries == "trivial":
        table = trivial_table(g)
    else:
        table = build_summary_table(g, solver, config.table_budget)
    return g, table


def run(config: RunConfig, solver: Solver | None = None) -> RunResult:
    """Parse, lower, instrument, summarize and check one file."""
    assert config.path is not None
    start = time.monotonic()
    own = solver is None
    if solver is None:
        solver = Solver(config.solver, config.timeout_ms)
    try:
        g, table = prepare(config.path, config, solver)
        checker = Checker(g, table, solver, config.budget(), refine=config.engine == "gps", validate=config.validate_art)
        verdict = checker.run()
        wall = time.monotonic() - start  # audits below are not part of the run
        violations = list(checker.violations)
        if config.validate_art and verdict.kind == SAFE and config.engine == "gps":
            violations += [f"final: {v}" for v in is_safe_certificate(verdict.art, table, solver)]
        if verdict.witness is not None and not verdict.witness.replays(g, solver):
            violations.append("witness does not replay")
    finally:
        if own:
            solver.close()
    return RunResult(verdict, g, table, wall, violations)


# -- dumps


def summaries_to_smt(g: WeightedGraph, table: SummaryTable) -> str:
    vocab = list(g.vocab)
    params = " ".join(f"({sym(v)} Int)" for v in vocab + [prime(v) for v in vocab])
    out = []
    for v in g.vertices:
        f = table[v]
        out.append(f"; Sum({g.names[v]}): {to_text(f)}")
        out.append(f"(define-fun {sym('Sum_' + g.names[v])} ({params}) Bool\n  {to_smt(f)})")
        loop = table.loop(v) if table.kind == "cra" else None
        if loop is not None:
            out.append(f"; Loop({g.names[v]}): {to_text(loop)}")
    return "\n".join(out) + "\n"


def witness_json(g: WeightedGraph, verdict: Verdict) -> str:
    assert verdict.witness is not None
    return verdict.witness.to_json() + "\n"


def _write(path: Path, text: str) -> None:
    if str(path) == "-":
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def report(res: RunResult, out, verbose: bool = False) -> None:
    v, st = res.verdict, res.verdict.stats
    print(f"VERDICT: {v.kind.upper()}", file=out)
    if v.reason:
        print(f"reason: {v.reason}", file=out)
    smt = st.smt
    print(
        f"iterations={st.iterations} tests={st.tests} deadends={st.deadends} covers={st.covers} "
        f"refinements={st.refinements} explore_steps={st.explore_steps} cap_hits={st.cap_hits} "
        f"unknowns={st.unknown_results} nodes={st.nodes}",
        file=out,
    )
    print(
        f"smt: queries={int(smt.get('queries', 0))} sat={int(smt.get('sat', 0))} "
        f"unsat={int(smt.get('unsat', 0))} unknown={int(smt.get('unknown', 0))}",
        file=out,
    )
    print(f"wall_time={res.wall_time:.3f}s table_time={res.table.build_time:.3f}s", file=out)
    for w in res.graph.warnings:
        print(f"warning: {w}", file=out)
    if res.verdict.witness is not None:
        init = res.verdict.witness.states[0]
        print("witness initial state: " + ", ".join(f"{k}={init[k]}" for k in res.graph.vocab), file=out)
        if verbose:
            print(res.verdict.witness.to_text(res.graph), file=out)
    if res.violations:
        print(f"art violations: {len(res.violations)}", file=out)
        for x in res.violations[:20]:
            print(f"  {x}", file=out)


def verify(config: RunConfig, out=None, verbose: bool = False) -> int:
    out = out or sys.stdout
    res = run(config)
    report(res, out, verbose)
    if config.dump_cfg:
        _write(config.dump_cfg, res.graph.to_dot())
    if config.dump_summaries:
        _write(config.dump_summaries, summaries_to_smt(res.graph, res.table))
    if config.dump_art and res.verdict.art is not None:
        _write(config.dump_art, res.verdict.art.to_dot())
    if config.witness and res.verdict.witness is not None:
        _write(config.witness, witness_json(res.graph, res.verdict))
    return EXIT_CODES[res.verdict.kind]


# -- corpus


def expected_verdict(path: Path) -> str | None:
    m = EXPECT_RE.search(path.read_text(encoding="utf-8"))
    return m.group(1).lower() if m else None


@dataclass
class CorpusRow:
    file: str
    expect: str
    verdict: str
    stats: dict
    wall_ms: int
    violations: list[str]

    @property
    def contradicts(self) -> bool:
        return (self.expect, self.verdict) in ((SAFE, UNSAFE), (UNSAFE, SAFE))

    def csv_row(self) -> list:
        s, smt = self.stats, self.stats.get("smt", {})
        return [
            self.file, self.verdict, s["iterations"], s["tests"], s["deadends"], s["covers"],
            int(smt.get("sat", 0)), int(smt.get("unsat", 0)), int(smt.get("unknown", 0)), self.wall_ms,
        ]


def _corpus_one(args: tuple[Path, str, RunConfig]) -> CorpusRow:
    path, expect, config = args
    res = run(replace(config, path=path))
    return CorpusRow(path.name, expect, res.verdict.kind, res.verdict.stats.as_dict(), int(res.wall_time * 1000), res.violations)


def corpus_files(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.suffix in (".imp", ".wg") and p.is_file())


def run_corpus(directory: Path, config: RunConfig, jobs: int = 1, err=None) -> list[CorpusRow]:
    err = err or sys.stderr
    work = []
    for p in corpus_files(directory):
        expect = expected_verdict(p)
        if expect is None:
            print(f"warning: {p.name} has no '// expect:' annotation, skipped", file=err)
            continue
        work.append((p, expect, config))
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_corpus_one, work))
    return [_corpus_one(w) for w in work]


def corpus_csv(rows: Sequence[CorpusRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_row())
    return buf.getvalue()


def corpus(directory: Path, config: RunConfig, csv_path: Path | None, jobs: int, out=None) -> int:
    out = out or sys.stdout
    rows = run_corpus(directory, config, jobs)
    width = max([len(r.file) for r in rows] + [4])
    print(f"{'file':<{width}}  {'expect':<7} {'verdict':<10} {'iters':>6} {'tests':>6} {'ms':>8}", file=out)
    for r in rows:
        flag = "  CONTRADICTION" if r.contradicts else ""
        flag += f"  ({len(r.violations)} art violations)" if r.violations else ""
        print(f"{r.file:<{width}}  {r.expect:<7} {r.verdict:<10} {r.stats['iterations']:>6} {r.stats['tests']:>6} {r.wall_ms:>8}{flag}", file=out)
    bad = sum(r.contradicts for r in rows)
    violations = sum(len(r.violations) for r in rows)
    print(f"{len(rows)} files, {bad} contradictions, {violations} art violations", file=out)
    if csv_path is not None:
        _write(csv_path, corpus_csv(rows))
    return 1 if bad or violations else 0


def generate_corpus(directory: Path, n_safe: int, n_unsafe: int, seed: int) -> list[Path]:
    from .lang.generate import generate

    directory.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    out = []
    for i, want in enumerate([SAFE] * n_safe + [UNSAFE] * n_unsafe):
        p = directory / f"gen_{seed}_{i:03d}_{want}.imp"
        p.write_text(generate(rng, want).source, encoding="utf-8")
        out.append(p)
    return out


# -- argument parsing


def _positive_or_none(s: str) -> int | None:
    return None if s in ("none", "0") else int(s)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--engine", choices=["gps", "gpslite"], default="gps")
    p.add_argument("--gas", choices=["on", "off"], default="on")
    p.add_argument("--summaries", choices=["cra", "trivial"], default="cra")
    p.add_argument("--solver", default=None, help=f"solver command (default: ${SOLVER_ENV} or 'z3 -in')")
    p.add_argument("--max-frontier", type=_positive_or_none, default=10_000, help="frontier iterations (0 = unlimited)")
    p.add_argument("--explore-steps", type=int, default=10_000, help="step cap per Explore call")
    p.add_argument("--timeout", type=int, default=10_000, help="per-query solver timeout in ms")
    p.add_argument("--table-budget", type=float, default=60.0, help="seconds for building summaries")
    p.add_argument("--time-budget", type=float, default=None, help="seconds for the checking loop")
    p.add_argument("--validate-art", action="store_true", help="check ART well-labeledness after every step")
    p.add_argument("--seed", type=int, default=0)


def _config(ns: argparse.Namespace, path: Path | None) -> RunConfig:
    return RunConfig(
        path=path,
        engine=ns.engine,
        gas=ns.gas == "on",
        summaries=ns.summaries,
        solver=ns.solver,
        max_frontier=ns.max_frontier,
        explore_steps=ns.explore_steps,
        timeout_ms=ns.timeout,
        table_budget=ns.table_budget,
        time_budget=ns.time_budget,
        dump_cfg=getattr(ns, "dump_cfg", None),
        dump_summaries=getattr(ns, "dump_summaries", None),
        dump_art=getattr(ns, "dump_art", None),
        witness=getattr(ns, "witness", None),
        validate_art=ns.validate_art,
        seed=ns.seed,
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gpsmc", description="Summary-guided software model checker.")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="check one .imp or .wg file")
    v.add_argument("file", type=Path)
    _add_run_flags(v)
    v.add_argument("--dump-cfg", type=Path, metavar="FILE", help="write the weighted graph as DOT ('-' for stdout)")
    v.add_argument("--dump-summaries", type=Path, metavar="FILE", help="write Sum(u) per vertex as SMT-LIB")
    v.add_argument("--dump-art", type=Path, metavar="FILE", help="write the final ART as DOT")
    v.add_argument("--witness", type=Path, metavar="FILE", help="write the counterexample as JSON")
    v.add_argument("-v", "--verbose", action="store_true", help="print the counterexample step by step")
    c = sub.add_parser("corpus", help="check every annotated file in a directory")
    c.add_argument("directory", type=Path)
    _add_run_flags(c)
    c.add_argument("--csv", type=Path, metavar="FILE", help="write the CSV report ('-' for stdout)")
    c.add_argument("--jobs", type=int, default=1)
    gen = sub.add_parser("generate", help="write random programs with known verdicts")
    gen.add_argument("directory", type=Path)
    gen.add_argument("--safe", type=int, default=5)
    gen.add_argument("--unsafe", type=int, default=5)
    gen.add_argument("--seed", type=int, default=0)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_SAFE
    try:
        if ns.command == "verify":
            return verify(_config(ns, ns.file), verbose=ns.verbose)
        if ns.command == "corpus":
            if not ns.directory.is_dir():
                raise UsageError(f"{ns.directory} is not a directory")
            return corpus(ns.directory, _config(ns, None), ns.csv, ns.jobs)
        for p in generate_corpus(ns.directory, ns.safe, ns.unsafe, ns.seed):
            print(p)
        return EXIT_SAFE
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
    except (UsageError, FileNotFoundError, IsADirectoryError) as e:
        print(f"error: {e}", file=sys.stderr)
    except (SolverError, OSError) as e:
        print(f"solver error: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
