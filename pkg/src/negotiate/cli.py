"""``negotiate`` command line: run tournaments, record traces, evaluate GP kernels.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from . import gpr
from .agents import AgentConfig, parse_agent_spec
from .bayes import BayesConfig
from .domain import load_domain, load_profile
from .errors import ConfigError, DomainError
from .harness import TournamentConfig, export, read_traces, record_traces, run_tournament, write_traces
from .mcts import SearchParams
from .protocol import DEFAULT_MAX_ROUNDS

EXIT_CONFIG = 2
EXIT_IO = 3

log = logging.getLogger("negotiate")


def data_file(name: str) -> str:
    return str(resources.files("negotiate") / "data" / name)


def _tournament_args(p):
    p.add_argument("--domain", default=data_file("factoring_domain.json"))
    p.add_argument("--profile1", default=data_file("profile1.json"))
    p.add_argument("--profile2", default=data_file("profile2.json"))
    p.add_argument("--agent-a", default="mcts")
    p.add_argument("--agent-b", default="rw")
    p.add_argument("--max-rounds", type=int, default=DEFAULT_MAX_ROUNDS)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--config", help="JSON file with mcts.*, bayes.* and gp.* defaults")
    p.add_argument("--print-config", action="store_true", help="print the effective configuration and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="negotiate", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="play a two-assignment tournament and write reports")
    _tournament_args(run)
    run.add_argument("--sessions", type=int, default=20)
    run.add_argument("--out", default="results")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--dump-tree", metavar="DIR", help="write one search-tree CSV per MCTS move")
    run.add_argument("--transcripts", action="store_true", help="also write per-session transcript CSVs")
    run.add_argument("--no-figure", action="store_true")

    tr = sub.add_parser("traces", help="record agent B's proposal sequences for kernel evaluation")
    _tournament_args(tr)
    tr.add_argument("--sessions", type=int, default=50)
    tr.add_argument("--out", default="traces.csv")

    ke = sub.add_parser("kernel-eval", help="score GP kernels on one-step bid forecasts")
    ke.add_argument("traces", help="traces CSV (session_id, round, issue values...)")
    ke.add_argument("--domain", default=data_file("factoring_domain.json"))
    ke.add_argument("--kernels", default=",".join(gpr.KERNELS))
    ke.add_argument("--noise", type=float, default=gpr.DEFAULT_NOISE)
    ke.add_argument("--window", type=int, default=gpr.DEFAULT_WINDOW)
    ke.add_argument("--baseline", action="store_true", help="add a repeat-last-bid row")
    ke.add_argument("--figure", help="also save a bar chart to this path")
    ke.add_argument("--out", default="kernel_table.csv")
    return parser


def load_defaults(path) -> AgentConfig:
    """Agent defaults from a JSON file keyed ``mcts.*``, ``bayes.*``, ``gp.*`` (nested or dotted)."""
    base = AgentConfig("mcts")
    if path is None:
        return base
    raw = json.loads(Path(path).read_text())
    flat = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            flat.update({f"{key}.{k}": v for k, v in value.items()})
        else:
            flat[key] = value
    search = dataclasses.asdict(base.search)
    bcfg = dataclasses.asdict(base.bayes)
    kernel, noise = base.kernel, base.noise
    for key, value in flat.items():
        section, _, name = key.partition(".")
        if section == "mcts" and name in search and name != "seed":
            search[name] = value
        elif section == "bayes" and name in bcfg:
            bcfg[name] = value
        elif key == "gp.kernel":
            if value not in gpr.KERNELS:
                raise ConfigError(f"gp.kernel: unknown kernel {value!r}")
            kernel = value
        elif key == "gp.noise":
            noise = float(value)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    try:
        return AgentConfig("mcts", SearchParams(**search), BayesConfig(**bcfg), kernel, noise)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _require(*paths):
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise ConfigError(f"no such file: {p}")


def make_tournament(args, sessions) -> TournamentConfig:
    _require(args.domain, args.profile1, args.profile2, args.config)
    defaults = load_defaults(args.config)
    domain = load_domain(args.domain)
    p1 = load_profile(domain, args.profile1)
    p2 = load_profile(domain, args.profile2)
    a = parse_agent_spec(args.agent_a, defaults)
    b = parse_agent_spec(args.agent_b, defaults)
    try:
        return TournamentConfig(domain, p1, p2, a, b, sessions, args.max_rounds, args.seed,
                                getattr(args, "jobs", 1), getattr(args, "dump_tree", None))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def describe(args, config: TournamentConfig) -> dict:
    def agent(c):
        return {"kind": c.kind, "mcts": dataclasses.asdict(c.search), "bayes": dataclasses.asdict(c.bayes),
                "gp": {"kernel": c.kernel, "noise": c.noise}, "tft_floor": c.floor}

    return {
        "command": args.command,
        "domain": args.domain,
        "profile1": args.profile1,
        "profile2": args.profile2,
        "agent_a": agent(config.agent_a),
        "agent_b": agent(config.agent_b),
        "sessions": config.sessions,
        "max_rounds": config.max_rounds,
        "seed": config.seed,
        "out": args.out,
    }


def cmd_run(args) -> int:
    config = make_tournament(args, args.sessions)
    if args.print_config:
        print(json.dumps(describe(args, config), indent=2))
        return 0
    out = Path(args.out)
    if args.transcripts:
        config.transcript_dir = str(out / "transcripts")
    result = run_tournament(config)
    files = export(result, out, figure=not args.no_figure)
    for a in result.aggregates:
        print(f"{a.role}:{a.agent:5s} profile {a.profile}  mean {a.mean:.3f} ± {a.std:.3f}  "
              f"agreements {a.agreement_rate:.0%}  (n={a.n})")
    if result.failed:
        print(f"warning: {result.failed} session(s) failed with protocol errors", file=sys.stderr)
    print(f"wrote {', '.join(str(p) for p in files.values())}")
    return 0


def cmd_traces(args) -> int:
    config = make_tournament(args, args.sessions)
    if args.print_config:
        print(json.dumps(describe(args, config), indent=2))
        return 0
    traces = record_traces(config)
    write_traces(traces, config.domain, args.out)
    print(f"wrote {len(traces)} trace(s) to {args.out}")
    return 0


def cmd_kernel_eval(args) -> int:
    _require(args.traces, args.domain)
    domain = load_domain(args.domain)
    kernels = [k.strip() for k in args.kernels.split(",") if k.strip()]
    bad = [k for k in kernels if k not in gpr.KERNELS]
    if bad:
        raise ConfigError(f"unknown kernel(s): {', '.join(bad)}")
    traces = list(read_traces(args.traces, domain).values())
    table = gpr.evaluate_kernels(traces, domain, kernels, args.noise, args.window)
    rows = list(table.scores)
    base = gpr.repeat_last_distance(domain, traces)
    if args.baseline:
        rows.append(base)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kernel", "avg_distance", "n_predictions"])
        for s in rows:
            w.writerow([s.kernel, repr(float(s.avg_distance)), s.n_predictions])
    print(" | ".join(f"{s.kernel:>12s}" for s in rows))
    print(" | ".join(f"{s.avg_distance:12.3f}" for s in rows))
    if table.skipped:
        print(f"warning: skipped {table.skipped} trace(s) shorter than 3 bids", file=sys.stderr)
    if args.figure:
        from .plotting import plot_kernel_table

        plot_kernel_table(table.scores, args.figure, base.avg_distance)
    return 0


COMMANDS = {"run": cmd_run, "traces": cmd_traces, "kernel-eval": cmd_kernel_eval}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
