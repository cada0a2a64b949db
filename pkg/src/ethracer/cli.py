"""``ethracer`` command line: analyze contracts, verify reports, list the corpus.

Exit codes: 0 no bugs, 2 bugs flagged, 1 usage, parse or scenario error.
Every ``analyze`` option can also be set through an ``ETHRACER_<OPTION>``
environment variable (for example ``ETHRACER_MAX_LEN=4``); flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import corpus
from .effects import rw_sets
from .events import Scenario, ScenarioError
from .lang import ParseError, parse
from .lang import ast as A
from .report import Analysis, AnalysisOptions, ReplayMismatch, analyze, dumps, replay, to_json
from .vm import MalformedEvent, UnknownFunction

EXIT_CLEAN, EXIT_ERROR, EXIT_BUGS = 0, 1, 2
ENV_PREFIX = "ETHRACER_"


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name.upper(), default)


def _env_flag(name: str) -> bool:
    return str(_env(name, "")).lower() in ("1", "true", "yes", "on")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ethracer", description="Find event-ordering bugs in .fsol contracts.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze a contract under a scenario")
    a.add_argument("contract", help="path to a .fsol file, or the name of a bundled contract")
    a.add_argument("--scenario", default=_env("scenario"), help="scenario JSON (default: <contract>.scenario.json)")
    a.add_argument("--mode", choices=["sync", "lin", "both"], default=_env("mode"))
    a.add_argument("--report", default=_env("report"), help="write the JSON report here")
    a.add_argument("--dump-rwsets", action="store_true", default=_env_flag("dump_rwsets"))
    a.add_argument("--compare-transfers", action="store_true", default=_env_flag("compare_transfers"))
    a.add_argument("--min-len", type=int, default=_env("min_len"))
    a.add_argument("--max-len", type=int, default=_env("max_len"))
    a.add_argument("--timeout-min", type=float, default=float(_env("timeout_min", 150)))
    a.add_argument("--max-traces", type=int, default=_env("max_traces"))
    a.add_argument("--witness-cap", type=int, default=int(_env("witness_cap", 8)))
    a.add_argument("--full-pairwise", action="store_true", default=_env_flag("full_pairwise"))
    a.add_argument("--dedupe", choices=["calls", "events"], default=_env("dedupe", "calls"))
    a.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    a.add_argument("--jobs", type=int, default=int(_env("jobs", os.cpu_count() or 1)))
    a.add_argument("--timing", action="store_true", default=_env_flag("timing"), help="include wall time in the report")

    v = sub.add_parser("verify", help="replay every claim in a report")
    v.add_argument("report")

    c = sub.add_parser("corpus", help="list bundled contracts or print a path")
    c.add_argument("name", nargs="?")
    return p


def _resolve_contract(arg: str) -> Path:
    path = Path(arg)
    if path.exists():
        return path
    if arg in corpus.names():
        return corpus.contract_path(arg)
    raise FileNotFoundError(f"no such contract: {arg}")


def _resolve_scenario(arg: Optional[str], contract: Path) -> Path:
    if arg:
        return Path(arg)
    guess = contract.with_name(contract.stem + ".scenario.json")
    if not guess.exists():
        raise FileNotFoundError(f"no --scenario given and {guess} does not exist")
    return guess


def _int_or_none(v) -> Optional[int]:
    return None if v is None else int(v)


def _summary(a: Analysis, out) -> None:
    names = a.scenario.address_names
    fn_names = a.events.names
    w = out.write
    w(f"contract {a.contract.name}: {len(a.contract.functions)} functions, {len(a.events)} events\n")
    for i, e in enumerate(a.events):
        w(f"  [{i}] {e.label(names)}\n")
    pairs = ", ".join(f"({i}, {j})" for i, j in a.hb) or "none"
    w(f"hb relations: {pairs}\n")
    if a.sync is not None:
        s = a.sync
        st = s.stats
        w(
            f"sync: {st.traces_enumerated} traces ({st.traces_skipped_by_hb} skipped by hb), "
            f"{st.witnesses_found} raw witnesses, {len(s.witnesses)} minimized"
            + (f", {len(s.low_priority)} low priority" if s.low_priority else "")
            + (" [TRUNCATED]" if st.truncated else "")
            + "\n"
        )
        for label, group in (("witness", s.witnesses), ("low-priority", s.low_priority)):
            for wp in group:
                ca, cb = wp.calls(fn_names)
                ia = " ".join(map(str, wp.trace_a))
                ib = " ".join(map(str, wp.trace_b))
                w(f"  {label}: {ia} : {' '.join(ca)}  <->  {ib} : {' '.join(cb)}\n")
    if a.lin is not None:
        lin = a.lin
        if lin.skipped:
            w(f"lin: skipped ({lin.skipped})\n")
        else:
            w(f"lin: {lin.traces_checked} interleavings, {len(lin.violations)} violations\n")
        for v in lin.violations:
            flagged = ", ".join(e.label(names) for e in v.trace)
            closest = ", ".join(e.label(names) for e in v.closest_trace)
            w(f"  violation: [{flagged}]\n    closest linearizable: [{closest}]\n")


def _analyze(args, out) -> int:
    path = _resolve_contract(args.contract)
    source = path.read_text()
    contract = parse(source)
    scenario = Scenario.load(_resolve_scenario(args.scenario, path))
    mode = args.mode or ("both" if contract.has_callback else "sync")
    if args.dump_rwsets:
        for name, rw in rw_sets(contract).items():
            out.write(f"{name}: reads={sorted(rw.reads)} writes={sorted(rw.writes)}\n")
    if mode in ("lin", "both") and not contract.has_callback:
        raise ScenarioError(f"--mode {mode} needs a contract with {A.CALLBACK}")
    opts = AnalysisOptions(
        sync=mode in ("sync", "both"),
        lin=mode in ("lin", "both"),
        min_len=_int_or_none(args.min_len),
        max_len=_int_or_none(args.max_len),
        witness_cap=args.witness_cap,
        full_pairwise=args.full_pairwise,
        compare_transfers=args.compare_transfers,
        timeout_s=args.timeout_min * 60 if args.timeout_min > 0 else None,
        max_traces=_int_or_none(args.max_traces),
        jobs=max(1, args.jobs),
        seed=args.seed,
        dedupe_by=args.dedupe,
    )
    result = analyze(source, scenario, opts)
    _summary(result, out)
    if args.timing:
        out.write(f"wall time: {result.elapsed_s:.3f}s\n")
    if args.report:
        Path(args.report).write_text(dumps(to_json(result, timing=args.timing)))
        out.write(f"report written to {args.report}\n")
    return EXIT_BUGS if result.bugs else EXIT_CLEAN


def _verify(args, out) -> int:
    doc = json.loads(Path(args.report).read_text())
    try:
        replay(doc)
    except ReplayMismatch as exc:
        out.write(f"replay mismatch: {exc}\n")
        return EXIT_ERROR
    out.write("report verified\n")
    return EXIT_CLEAN


def _corpus(args, out) -> int:
    if args.name is None:
        for n in corpus.names():
            out.write(f"{n}\n")
    else:
        out.write(f"{corpus.contract_path(args.name)}\n{corpus.scenario_path(args.name)}\n")
    return EXIT_CLEAN


def run_cli(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CLEAN if exc.code == 0 else EXIT_ERROR
    try:
        if args.command == "analyze":
            return _analyze(args, out)
        if args.command == "verify":
            return _verify(args, out)
        return _corpus(args, out)
    except ParseError as exc:
        where = f"{args.contract}:" if exc.line else f"{args.contract}: "
        sys.stderr.write(f"{where}{exc}\n")
        return EXIT_ERROR
    except (ScenarioError, MalformedEvent, UnknownFunction, FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
