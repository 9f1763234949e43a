import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from negotiate import agents, mcts
from negotiate.agents import AgentConfig, MCTSAgent, NiceTitForTat, RandomWalker, TitForTat, parse_agent_spec
from negotiate.domain import CategoricalIssue, ContinuousIssue, Domain, PreferenceProfile, Table, Triangular
from negotiate.errors import ConfigError
from negotiate.mcts import SearchParams
from negotiate.protocol import ACCEPT, Entry, Propose, SessionConfig, run_session

FAST = SearchParams(iterations=60, seed=0)


def bid_worth(u):
    """Bid in the small domain worth `u` under the small profile (color B scores 0.2)."""
    v = (u - 0.3 * 0.2) / 0.7
    return (10.0 - 10.0 * (1 - v), "B")


def offered(*bids):
    """History ending with the opponent's proposal of each bid in turn; we act next."""
    entries = []
    for i, b in enumerate(bids):
        if entries:
            entries.append(Entry(len(entries) + 1, "us", Propose(b)))
        entries.append(Entry(len(entries) + 1, "opp", Propose(b)))
    return tuple(entries)


def ready(agent, dom, profile, seed=0):
    agent.init(dom, profile, seed)
    return agent


def test_bid_worth_helper(small_profile):
    for u in (0.3, 0.31, 0.4, 0.5):
        assert small_profile.utility(bid_worth(u)) == pytest.approx(u, abs=1e-12)


# -- MCTS agent -----------------------------------------------------------------


def test_mcts_accepts_ideal(small_domain, small_profile):
    a = ready(MCTSAgent(FAST), small_domain, small_profile)
    assert a.act(offered(small_profile.ideal_bid())) == ACCEPT


def test_mcts_opening_proposes(small_domain, small_profile):
    a = ready(MCTSAgent(FAST), small_domain, small_profile)
    act = a.act(())
    assert isinstance(act, Propose)
    small_domain.validate(act.bid)


@pytest.mark.parametrize("u_offer,u_search,accept", [(0.30, 0.31, False), (0.31, 0.30, True), (0.31, 0.31, True)])
def test_mcts_acceptance_boundary(monkeypatch, small_domain, small_profile, u_offer, u_search, accept):
    monkeypatch.setattr(mcts, "search", lambda *a, **k: bid_worth(u_search))
    a = ready(MCTSAgent(FAST), small_domain, small_profile)
    act = a.act(offered(bid_worth(u_offer)))
    assert (act == ACCEPT) is accept


def test_mcts_never_proposes_below_threshold(shipped):
    dom, p1, _ = shipped
    rng = np.random.default_rng(3)
    opp = [dom.from_row(r) for r in dom.random_rows(rng, 6)]
    a = ready(MCTSAgent(SearchParams(iterations=100)), dom, p1, 5)
    act = a.act(offered(*opp))
    thr = max(p1.utility(b) for b in opp)
    assert act == ACCEPT or p1.utility(act.bid) >= thr


def test_mcts_deterministic(shipped):
    dom, p1, _ = shipped
    hist = offered(*[dom.from_row(r) for r in dom.random_rows(np.random.default_rng(0), 3)])
    acts = [ready(MCTSAgent(FAST), dom, p1, 42).act(hist) for _ in range(2)]
    assert acts[0] == acts[1]


def test_mcts_tree_dump(tmp_path, small_domain, small_profile):
    a = ready(MCTSAgent(FAST, dump_dir=str(tmp_path), dump_prefix="A"), small_domain, small_profile)
    a.act(())
    assert (tmp_path / "A_move0001.csv").read_text().startswith("depth,n_i,s_self,s_opp,pruned\n0,60,")


# -- random walker ---------------------------------------------------------------


def test_rw_accepts_ideal(small_domain, small_profile):
    a = ready(RandomWalker(), small_domain, small_profile)
    assert a.act(offered(small_profile.ideal_bid())) == ACCEPT


def test_rw_opening_proposes(small_domain, small_profile):
    assert isinstance(ready(RandomWalker(), small_domain, small_profile).act(()), Propose)


def test_rw_acceptance_frequency(small_domain, small_profile):
    # oracle: Monte-Carlo estimate of Pr[u(random bid) <= 0.5] from an independent stream
    rows = small_domain.random_rows(np.random.default_rng(999), 200_000)
    p = float(np.mean(small_profile.utility_rows(rows) <= 0.5))
    a = ready(RandomWalker(), small_domain, small_profile, seed=7)
    hist = offered(bid_worth(0.5))
    freq = np.mean([a.act(hist) == ACCEPT for _ in range(1000)])
    assert abs(freq - p) <= 0.05


# -- tit for tat ----------------------------------------------------------------


def test_tft_ratio_update(small_domain, small_profile):
    a = ready(TitForTat(), small_domain, small_profile)
    a.target = 0.9
    a.observe([bid_worth(0.4), bid_worth(0.5)])
    assert a.target == pytest.approx(0.72, abs=1e-12)


def test_tft_repeat_keeps_target(small_domain, small_profile):
    a = ready(TitForTat(), small_domain, small_profile)
    a.target = 0.8
    a.observe([bid_worth(0.4)] * 5)
    assert a.target == pytest.approx(0.8, abs=1e-12)


def test_tft_accepts_at_target(small_domain, small_profile):
    a = ready(TitForTat(), small_domain, small_profile)
    b = bid_worth(0.6)
    a._seen = 1  # one offer already folded into the target
    a.target = small_profile.utility(b)
    assert a.act(offered(b)) == ACCEPT


def test_tft_proposes_near_target(small_domain, small_profile):
    a = ready(TitForTat(), small_domain, small_profile)
    act = a.act(())
    assert small_profile.utility(act.bid) >= 0.95


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=30))
def test_tft_target_stays_clamped(utils):
    dom = Domain((ContinuousIssue("price", 0.0, 20.0), CategoricalIssue("color", ("A", "B"))))
    prof = PreferenceProfile(dom, (0.7, 0.3), (Triangular(10.0), Table({"A": 1.0, "B": 0.2})))
    a = ready(TitForTat(), dom, prof)
    a.observe([bid_worth(max(u, 0.06)) for u in utils])
    assert 0.05 <= a.target <= 1.0


# -- nice tit for tat -----------------------------------------------------------


@pytest.fixture
def ntft(monkeypatch, small_domain, small_profile):
    a = ready(NiceTitForTat(), small_domain, small_profile)
    monkeypatch.setattr(a, "nash_point", lambda: (None, 0.6))
    return a


def test_ntft_no_progress_keeps_full_target(ntft):
    ntft.act(offered(bid_worth(0.3)))
    assert ntft.target == 1.0


def test_ntft_full_progress_reaches_nash(ntft):
    ntft.act(offered(bid_worth(0.1), bid_worth(0.7)))
    assert ntft.target == pytest.approx(0.6, abs=1e-12)


def test_ntft_half_progress(ntft):
    # gamma = (0.35 - 0.1) / (0.6 - 0.1) = 0.5
    ntft.act(offered(bid_worth(0.1), bid_worth(0.35)))
    assert ntft.target == pytest.approx(0.6 + 0.5 * 0.4, abs=1e-9)


def test_ntft_nash_point_is_product_argmax(shipped):
    dom, p1, _ = shipped
    a = ready(NiceTitForTat(), dom, p1, 3)
    row, u = a.nash_point()
    assert u == pytest.approx(p1.utility(dom.from_row(row)), abs=1e-12)


# -- all agents -----------------------------------------------------------------


@pytest.mark.parametrize("kind", ["mcts:iters=50", "rw", "tft", "ntft"])
def test_sessions_produce_valid_bids(shipped, kind):
    dom, p1, p2 = shipped
    a = parse_agent_spec(kind).build()
    b = parse_agent_spec("rw").build()
    tr = run_session(a, b, dom, p1, p2, SessionConfig(60, 1), (1, 2))
    for e in tr.entries:
        if isinstance(e.action, Propose):
            dom.validate(e.action.bid)


@pytest.mark.parametrize("kind", ["rw", "tft", "ntft"])
def test_baselines_deterministic(shipped, kind):
    dom, p1, p2 = shipped

    def go():
        tr = run_session(parse_agent_spec(kind).build(), RandomWalker(), dom, p1, p2, SessionConfig(80, 0), (5, 6))
        return tr.entries, tr.outcome

    assert go() == go()


# -- spec strings ---------------------------------------------------------------


def test_parse_full_mcts_spec():
    cfg = parse_agent_spec("mcts:C=0.7,alpha=0.3,iters=250,kernel=matern52,nh=40")
    assert cfg.search.C == 0.7 and cfg.search.alpha == 0.3 and cfg.search.iterations == 250
    assert cfg.kernel == "matern52" and cfg.bayes.n_hypotheses == 40
    assert isinstance(cfg.build(), MCTSAgent)


def test_parse_defaults():
    cfg = parse_agent_spec("mcts")
    assert cfg == AgentConfig("mcts")
    assert (cfg.search.C, cfg.search.alpha, cfg.search.iterations, cfg.kernel) == (0.5, 0.4, 1000, "rqf")


@pytest.mark.parametrize("kind,cls", [("rw", RandomWalker), ("tft", TitForTat), ("ntft", NiceTitForTat)])
def test_parse_kinds(kind, cls):
    assert isinstance(parse_agent_spec(kind).build(), cls)


def test_parse_tft_floor():
    assert parse_agent_spec("tft:floor=0.1").build().floor == 0.1


@pytest.mark.parametrize("spec", ["alien", "mcts:C", "mcts:C=abc", "mcts:kernel=linear", "mcts:wat=1", "mcts:alpha=2"])
def test_parse_rejects(spec):
    with pytest.raises(ConfigError):
        parse_agent_spec(spec)


def test_agent_kinds_listed():
    assert set(agents.AGENT_KINDS) == {"mcts", "rw", "tft", "ntft"}
