import csv
import math
from pathlib import Path

import numpy as np
import pytest

from negotiate import harness
from negotiate.agents import parse_agent_spec
from negotiate.harness import SessionRow, TournamentConfig, aggregate, moments, run_tournament
from negotiate.protocol import Propose
from negotiate.seeding import mix64

from conftest import Acceptor, Stubborn

GOLDEN = Path(__file__).parent / "data" / "golden_sessions.csv"


class Vandal(Stubborn):
    """Proposes a bid outside the domain."""

    def act(self, history):
        return Propose(("nonsense",))


def config(shipped, a, b, **kw):
    dom, p1, p2 = shipped
    return TournamentConfig(dom, p1, p2, a, b, **kw)


def golden_config(shipped):
    return config(shipped, parse_agent_spec("rw"), parse_agent_spec("tft"), sessions=3, max_rounds=200, seed=7)


def test_acceptors_agree_in_round_two(shipped):
    res = run_tournament(config(shipped, Acceptor, Acceptor, sessions=4))
    assert len(res.rows) == 8
    assert all(r.outcome == "agreement" and r.rounds == 2 for r in res.rows)
    assert all(a.agreement_rate == 1.0 for a in res.aggregates)


def test_population_moments():
    mean, std = moments([0.2, 0.4, 0.6])
    assert mean == pytest.approx(0.4, abs=1e-12)
    assert std == pytest.approx(math.sqrt(0.08 / 3), abs=1e-12)
    assert std == pytest.approx(0.1633, abs=1e-4)


def test_first_mover_alternates_and_seeds_documented(shipped):
    res = run_tournament(config(shipped, Acceptor, Stubborn, sessions=4, max_rounds=10, seed=99))
    for r in res.rows:
        assert r.first_mover == ("A" if r.session_index % 2 == 0 else "B")
        assert r.seed == mix64(99, r.assignment, r.session_index)


def test_failed_sessions_are_counted_and_excluded(shipped):
    res = run_tournament(config(shipped, Vandal, Stubborn, sessions=2, max_rounds=10))
    assert res.failed == 4
    assert all(r.failed and r.error.startswith("A:") for r in res.rows)
    assert res.aggregates == []


def test_aggregate_skips_failed_rows():
    rows = [SessionRow(0, 1, 0, 0, "A", "agreement", 4, 0.2, 0.9),
            SessionRow(1, 1, 1, 0, "B", "agreement", 4, 0.6, 0.5),
            SessionRow(2, 1, 2, 0, "A", "error", 0, math.nan, math.nan, "B: boom")]
    (a1, b2) = aggregate(rows, ("x", "y"))
    assert (a1.role, a1.agent, a1.profile, a1.n) == ("A", "x", 1, 2)
    assert a1.mean == pytest.approx(0.4) and a1.std == pytest.approx(0.2)
    assert (b2.role, b2.profile) == ("B", 2)


def test_profile_swap_symmetry_for_random_walkers(shipped):
    rw = parse_agent_spec("rw")
    res = run_tournament(config(shipped, rw, rw, sessions=50, seed=3))
    by = {(a.role, a.profile): a.mean for a in res.aggregates}
    assert abs(by[("A", 1)] - by[("B", 1)]) <= 0.1
    assert abs(by[("A", 2)] - by[("B", 2)]) <= 0.1


def test_parallel_matches_serial(shipped):
    cfg = golden_config(shipped)
    serial = run_tournament(cfg)
    cfg.jobs = 2
    assert run_tournament(cfg).rows == serial.rows


@pytest.mark.parametrize("bad", [dict(sessions=0), dict(max_rounds=1)])
def test_config_validated(shipped, bad):
    with pytest.raises(ValueError):
        config(shipped, Acceptor, Acceptor, **bad)


# -- export -------------------------------------------------------------------


def test_export_round_trip(shipped, tmp_path):
    res = run_tournament(golden_config(shipped))
    files = harness.export(res, tmp_path)
    assert harness.read_aggregates(files["aggregates"]) == res.aggregates
    assert harness.read_sessions(files["sessions"]) == res.rows
    assert files["figure"].stat().st_size > 0
    with open(files["plot_data"]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["agent", "profile", "mean", "stddev"]
    assert len(rows) == 5


def test_aggregates_recomputed_from_sessions_csv(shipped, tmp_path):
    res = run_tournament(golden_config(shipped))
    files = harness.export(res, tmp_path, figure=False)
    with open(files["sessions"]) as fh:
        rows = list(csv.DictReader(fh))
    for agg in harness.read_aggregates(files["aggregates"]):
        col = "u_A" if agg.role == "A" else "u_B"
        assignment = agg.profile if agg.role == "A" else 3 - agg.profile
        vals = np.array([float(r[col]) for r in rows if int(r["assignment"]) == assignment and r["outcome"] != "error"])
        assert abs(vals.mean() - agg.mean) <= 1e-12
        assert abs(vals.std() - agg.std) <= 1e-12


def test_empty_aggregates_header_only(shipped, tmp_path, caplog):
    res = run_tournament(config(shipped, Vandal, Stubborn, sessions=1, max_rounds=4))
    files = harness.export(res, tmp_path)
    assert files["aggregates"].read_text() == ",".join(harness.AGGREGATE_COLUMNS) + "\n"
    assert "figure" not in files
    assert "no successful sessions" in caplog.text


def test_golden_sessions_csv(shipped, tmp_path):
    files = harness.export(run_tournament(golden_config(shipped)), tmp_path, figure=False)
    assert files["sessions"].read_bytes() == GOLDEN.read_bytes()


def test_transcripts_written(shipped, tmp_path):
    cfg = golden_config(shipped)
    cfg.transcript_dir = str(tmp_path)
    run_tournament(cfg)
    assert len(list(tmp_path.glob("session*.csv"))) == 6


# -- traces -------------------------------------------------------------------


def test_traces_cardinality_order_and_validity(shipped, tmp_path):
    dom = shipped[0]
    cfg = config(shipped, parse_agent_spec("rw"), parse_agent_spec("tft"), sessions=50, max_rounds=60, seed=1)
    traces = harness.record_traces(cfg)
    path = tmp_path / "traces.csv"
    harness.write_traces(traces, dom, path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    groups = {}
    for r in rows:
        groups.setdefault(r["session_id"], []).append(int(r["round"]))
    assert len(groups) == 50
    assert all(rs == sorted(rs) and len(set(rs)) == len(rs) for rs in groups.values())
    parsed = harness.read_traces(path, dom)
    for arr in parsed.values():
        for row in arr:
            dom.validate(dom.from_row(row))
    assert sum(len(a) for a in parsed.values()) == len(rows)
