"""Tournament runner, statistics and CSV export.

A tournament plays two profile assignments (A holds profile 1 and B profile
2, then swapped), `sessions` sessions each.  Session ``i`` of assignment ``a``
gets seed ``mix64(master_seed, a, i)``; agent A's private seed is
``mix64(session_seed, 0)`` and B's is ``mix64(session_seed, 1)``.  A moves
first in even-numbered sessions and B in odd ones.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .agents import AgentConfig
from .domain import ContinuousIssue, Domain, PreferenceProfile
from .errors import DomainError, ProtocolError
from .protocol import (
    DEFAULT_MAX_ROUNDS,
    Propose,
    SessionConfig,
    realized_utilities,
    run_session,
    transcript_to_csv,
)
from .seeding import mix64

log = logging.getLogger(__name__)

SESSION_COLUMNS = ["session_id", "assignment", "session_index", "seed", "first_mover", "outcome", "rounds", "u_A", "u_B", "error"]
AGGREGATE_COLUMNS = ["role", "agent", "profile", "n", "mean", "std", "agreement_rate"]
PLOT_COLUMNS = ["agent", "profile", "mean", "stddev"]

AgentSource = Union[AgentConfig, Callable[[], object]]


@dataclass
class TournamentConfig:
    domain: Domain
    profile1: PreferenceProfile
    profile2: PreferenceProfile
    agent_a: AgentSource
    agent_b: AgentSource
    sessions: int = 20
    max_rounds: int = DEFAULT_MAX_ROUNDS
    seed: int = 0
    jobs: int = 1
    dump_dir: Optional[str] = None
    transcript_dir: Optional[str] = None

    def __post_init__(self):
        if self.sessions < 1:
            raise ValueError("sessions must be >= 1")
        if self.max_rounds < 2:
            raise ValueError("max_rounds must be >= 2")


class SessionRow(NamedTuple):
    session_id: int
    assignment: int
    session_index: int
    seed: int
    first_mover: str
    outcome: str
    rounds: int
    u_a: float
    u_b: float
    error: str = ""

    @property
    def failed(self) -> bool:
        return self.outcome == "error"


class Aggregate(NamedTuple):
    role: str
    agent: str
    profile: int
    n: int
    mean: float
    std: float
    agreement_rate: float


@dataclass
class TournamentResult:
    rows: list
    aggregates: list = field(default_factory=list)
    failed: int = 0
    labels: tuple = ("A", "B")


def session_seed(master: int, assignment: int, index: int) -> int:
    return mix64(master, assignment, index)


def _label(source) -> str:
    return source.label() if isinstance(source, AgentConfig) else getattr(source, "kind", "custom")


def _build(source, dump_dir, prefix):
    if isinstance(source, AgentConfig):
        return source.build(dump_dir, prefix)
    return source()


def play(config: TournamentConfig, assignment: int, index: int):
    """Run one session; returns (SessionRow, transcript or None)."""
    seed = session_seed(config.seed, assignment, index)
    prof_a, prof_b = (config.profile1, config.profile2) if assignment == 1 else (config.profile2, config.profile1)
    sid = (assignment - 1) * config.sessions + index
    dump = None
    if config.dump_dir is not None:
        dump = Path(config.dump_dir) / f"session{sid:04d}"
        dump.mkdir(parents=True, exist_ok=True)
    agent_a = _build(config.agent_a, dump, "A")
    agent_b = _build(config.agent_b, dump, "B")
    seed_a, seed_b = mix64(seed, 0), mix64(seed, 1)
    a_first = index % 2 == 0
    scfg = SessionConfig(config.max_rounds, seed)
    try:
        if a_first:
            tr = run_session(agent_a, agent_b, config.domain, prof_a, prof_b, scfg, (seed_a, seed_b), ("A", "B"))
            u_a, u_b = realized_utilities(tr, prof_a, prof_b)
        else:
            tr = run_session(agent_b, agent_a, config.domain, prof_b, prof_a, scfg, (seed_b, seed_a), ("B", "A"))
            u_b, u_a = realized_utilities(tr, prof_b, prof_a)
    except ProtocolError as exc:
        log.warning("session %d failed: %s (actor %s)", sid, exc, exc.actor)
        row = SessionRow(sid, assignment, index, seed, "A" if a_first else "B", "error", 0, math.nan, math.nan,
                         f"{exc.actor}: {exc}")
        return row, None
    outcome = "agreement" if tr.agreed else "no_agreement"
    row = SessionRow(sid, assignment, index, seed, "A" if a_first else "B", outcome, tr.rounds, u_a, u_b)
    if config.transcript_dir is not None:
        path = Path(config.transcript_dir) / f"session{sid:04d}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        profiles = (prof_a, prof_b) if a_first else (prof_b, prof_a)
        path.write_text(transcript_to_csv(tr, config.domain, *profiles))
    return row, tr


def _play_row(args):
    config, assignment, index = args
    return play(config, assignment, index)[0]


def run_tournament(config: TournamentConfig) -> TournamentResult:
    tasks = [(config, a, i) for a in (1, 2) for i in range(config.sessions)]
    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            rows = list(pool.map(_play_row, tasks))
    else:
        rows = [_play_row(t) for t in tasks]
    rows.sort(key=lambda r: (r.assignment, r.session_index))
    labels = (_label(config.agent_a), _label(config.agent_b))
    return TournamentResult(rows, aggregate(rows, labels), sum(r.failed for r in rows), labels)


def moments(values) -> tuple:
    """Mean and population standard deviation."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    mean = float(x.mean())
    return mean, float(np.sqrt(np.mean((x - mean) ** 2)))


def aggregate(rows, labels=("A", "B")) -> list:
    """Per (role, held profile) statistics over successful sessions."""
    out = []
    for r_i, role in enumerate(("A", "B")):
        for profile in (1, 2):
            # A holds profile 1 in assignment 1; B holds it in assignment 2
            assignment = profile if role == "A" else 3 - profile
            ok = [r for r in rows if r.assignment == assignment and not r.failed]
            if not ok:
                continue
            vals = [r.u_a if role == "A" else r.u_b for r in ok]
            mean, std = moments(vals)
            rate = sum(r.outcome == "agreement" for r in ok) / len(ok)
            out.append(Aggregate(role, labels[r_i], profile, len(ok), mean, std, rate))
    return out


# -- export ------------------------------------------------------------------


def _f(x) -> str:
    return repr(float(x))


def write_sessions(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SESSION_COLUMNS)
        for r in rows:
            w.writerow([r.session_id, r.assignment, r.session_index, r.seed, r.first_mover, r.outcome, r.rounds,
                        _f(r.u_a), _f(r.u_b), r.error])


def read_sessions(path) -> list:
    with open(path, newline="") as fh:
        rows = []
        for d in csv.DictReader(fh):
            rows.append(SessionRow(int(d["session_id"]), int(d["assignment"]), int(d["session_index"]), int(d["seed"]),
                                   d["first_mover"], d["outcome"], int(d["rounds"]), float(d["u_A"]), float(d["u_B"]),
                                   d["error"]))
    return rows


def write_aggregates(aggs, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        for a in aggs:
            w.writerow([a.role, a.agent, a.profile, a.n, _f(a.mean), _f(a.std), _f(a.agreement_rate)])


def read_aggregates(path) -> list:
    with open(path, newline="") as fh:
        return [Aggregate(d["role"], d["agent"], int(d["profile"]), int(d["n"]), float(d["mean"]), float(d["std"]),
                          float(d["agreement_rate"])) for d in csv.DictReader(fh)]


def write_plot_data(aggs, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_COLUMNS)
        for a in aggs:
            w.writerow([f"{a.role}:{a.agent}", a.profile, _f(a.mean), _f(a.std)])


def export(result: TournamentResult, path, figure: bool = True) -> dict:
    """Write sessions.csv, aggregates.csv, plot_data.csv and utilities.png under `path`."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "sessions": out / "sessions.csv",
        "aggregates": out / "aggregates.csv",
        "plot_data": out / "plot_data.csv",
    }
    if not result.aggregates:
        log.warning("no successful sessions: aggregates are empty")
    write_sessions(result.rows, files["sessions"])
    write_aggregates(result.aggregates, files["aggregates"])
    write_plot_data(result.aggregates, files["plot_data"])
    if figure and result.aggregates:
        from .plotting import plot_utilities

        files["figure"] = out / "utilities.png"
        plot_utilities(result.aggregates, files["figure"])
    return files


# -- opponent traces ---------------------------------------------------------


def record_traces(config: TournamentConfig) -> dict:
    """Agent B's proposals in each assignment-1 session, keyed by session id."""
    traces = {}
    for i in range(config.sessions):
        row, tr = play(config, 1, i)
        if tr is None:
            continue
        traces[row.session_id] = [(e.round, e.action.bid) for e in tr.entries
                                  if e.actor == "B" and isinstance(e.action, Propose)]
    return traces


def write_traces(traces: dict, domain: Domain, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["session_id", "round", *domain.names])
        for sid in sorted(traces):
            for rnd, bid in traces[sid]:
                vals = [repr(v) if isinstance(i, ContinuousIssue) else v for i, v in zip(domain.issues, bid)]
                w.writerow([sid, rnd, *vals])


def read_traces(path, domain: Domain) -> dict:
    """Parse a traces CSV into ``{session_id: rows array}`` ordered by round."""
    groups: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [n for n in ["session_id", "round", *domain.names] if n not in (reader.fieldnames or [])]
        if missing:
            raise DomainError(f"traces file lacks columns: {', '.join(missing)}")
        for d in reader:
            bid = []
            for issue in domain.issues:
                v = d[issue.name]
                bid.append(float(v) if isinstance(issue, ContinuousIssue) else v)
            groups.setdefault(d["session_id"], []).append((int(d["round"]), domain.to_row(bid)))
    return {sid: np.array([r for _, r in sorted(g, key=lambda x: x[0])]) for sid, g in groups.items()}
