"""Negotiating agents: the MCTS agent and the three baselines it is compared with.

Every agent is set up with ``init(domain, profile, seed)`` and then asked for
one action at a time with ``act(history)``, where history is the tuple of
public `Entry` records.  Agents are deterministic given their seed.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Optional

import numpy as np

from . import bayes, mcts
from .domain import Domain, PreferenceProfile
from .errors import ConfigError
from .gpr import DEFAULT_NOISE, KERNELS
from .seeding import mix64
from .protocol import ACCEPT, Propose, opponent_offers, standing_offer

NEAREST_SAMPLES = 1024
NASH_SAMPLES = 2048
TFT_FLOOR = 0.05


class BaseAgent:
    kind = "base"

    def init(self, domain: Domain, profile: PreferenceProfile, seed: int) -> None:
        self.domain = domain
        self.profile = profile
        self.rng = np.random.default_rng(seed)

    def utility(self, bid) -> float:
        return self.profile.utility(bid)

    def nearest_bid(self, target: float, n: int = NEAREST_SAMPLES):
        """Sampled bid whose own utility is closest to `target`."""
        rows = self.domain.random_rows(self.rng, n)
        u = self.profile.utility_rows(rows)
        i = int(np.argmin(np.abs(u - target)))
        return self.domain.from_row(rows[i]), float(u[i])


class RandomWalker(BaseAgent):
    """Proposes uniform random bids; accepts whatever beats its own next draw."""

    kind = "rw"

    def act(self, history):
        bid = self.domain.from_row(self.domain.random_rows(self.rng, 1)[0])
        offer = standing_offer(history)
        if offer is not None and self.utility(offer) >= self.utility(bid):
            return ACCEPT
        return Propose(bid)


class TitForTat(BaseAgent):
    """Relative tit-for-tat: scales its target by the opponent's last concession ratio."""

    kind = "tft"

    def __init__(self, floor: float = TFT_FLOOR):
        self.floor = floor

    def init(self, domain, profile, seed):
        super().init(domain, profile, seed)
        self.target = 1.0
        self._seen = 0

    def observe(self, offers) -> None:
        for i in range(max(self._seen, 1), len(offers)):
            u_prev = self.utility(offers[i - 1])
            u_cur = self.utility(offers[i])
            if u_cur > 0:
                self.target = min(max(self.target * u_prev / u_cur, self.floor), 1.0)
        self._seen = len(offers)

    def act(self, history):
        self.observe(opponent_offers(history))
        offer = standing_offer(history)
        if offer is not None and self.utility(offer) >= self.target:
            return ACCEPT
        bid, _ = self.nearest_bid(self.target)
        return Propose(bid)


class NiceTitForTat(BaseAgent):
    """Mirrors the opponent's progress toward an estimated Nash bid."""

    kind = "ntft"

    def __init__(self, bayes_config: bayes.BayesConfig = bayes.BayesConfig()):
        self.bayes_config = bayes_config

    def init(self, domain, profile, seed):
        super().init(domain, profile, seed)
        cfg = self.bayes_config
        self.beliefs = bayes.init_beliefs(domain, cfg.n_hypotheses, mix64(seed, cfg.seed), cfg.concession_rate, cfg.sigma)
        self._seen = 0
        self.target = 1.0

    def nash_point(self):
        rows = self.domain.random_rows(self.rng, NASH_SAMPLES)
        own = self.profile.utility_rows(rows)
        i = int(np.argmax(own * self.beliefs.estimated_utility_rows(rows)))
        return rows[i], float(own[i])

    def act(self, history):
        offers = opponent_offers(history)
        for t in range(self._seen, len(offers)):
            self.beliefs = bayes.update(self.beliefs, offers[t], t + 1)
        self._seen = len(offers)

        _, u_nash = self.nash_point()
        if offers:
            u_first = self.utility(offers[0])
            u_cur = self.utility(offers[-1])
            progress = (u_cur - u_first) / max(1e-6, u_nash - u_first)
            progress = min(max(progress, 0.0), 1.0)
        else:
            progress = 0.0
        self.target = u_nash + (1 - progress) * (1 - u_nash)
        bid, u_bid = self.nearest_bid(self.target)
        offer = standing_offer(history)
        if offer is not None and self.utility(offer) >= min(self.target, u_bid):
            return ACCEPT
        return Propose(bid)


class MCTSAgent(BaseAgent):
    """Tree-search bidding with a GP bid forecast and Bayesian utility beliefs.

    Accepts a standing offer when it is worth at least as much as the bid the
    search would make instead.
    """

    kind = "mcts"

    def __init__(self, params: mcts.SearchParams = mcts.SearchParams(),
                 bayes_config: bayes.BayesConfig = bayes.BayesConfig(),
                 kernel: str = "rqf", noise: float = DEFAULT_NOISE, dump_dir: Optional[str] = None,
                 dump_prefix: str = "mcts"):
        self.params = params
        self.bayes_config = bayes_config
        self.kernel = kernel
        self.noise = noise
        self.dump_dir = dump_dir
        self.dump_prefix = dump_prefix

    def init(self, domain, profile, seed):
        super().init(domain, profile, seed)
        cfg = self.bayes_config
        self.beliefs = bayes.init_beliefs(domain, cfg.n_hypotheses, mix64(seed, cfg.seed), cfg.concession_rate, cfg.sigma)
        self._seen = 0
        self.moves = 0
        self.last_threshold = 0.0
        self.last_searcher = None

    def act(self, history):
        offers = opponent_offers(history)
        for t in range(self._seen, len(offers)):
            self.beliefs = bayes.update(self.beliefs, offers[t], t + 1)
        self._seen = len(offers)

        horizon = self.params.rollout_cap + 32
        models = mcts.OpponentModel.from_history(self.domain, offers, self.beliefs, self.kernel, self.noise, horizon)
        params = dataclasses.replace(self.params, seed=int(self.rng.integers(2**63)))
        self.last_threshold = mcts.prune_threshold(history, self.profile)
        out = []
        bid = mcts.search(history, self.profile, models, params, searcher_out=out)
        self.last_searcher = out[0] if out else None
        self.moves += 1
        if self.dump_dir is not None and self.last_searcher is not None:
            path = Path(self.dump_dir) / f"{self.dump_prefix}_move{self.moves:04d}.csv"
            mcts.dump_tree(self.last_searcher.root, path)

        offer = standing_offer(history)
        if offer is not None and self.utility(offer) >= self.utility(bid):
            return ACCEPT
        return Propose(bid)


# -- agent spec strings -------------------------------------------------------

AGENT_KINDS = {"mcts": MCTSAgent, "rw": RandomWalker, "tft": TitForTat, "ntft": NiceTitForTat}

_MCTS_KEYS = {"C": "C", "alpha": "alpha", "iters": "iterations", "iterations": "iterations",
              "rollout_cap": "rollout_cap", "rollout": "rollout_cap"}
_BAYES_KEYS = {"n_hypotheses": "n_hypotheses", "nh": "n_hypotheses", "concession_rate": "concession_rate",
               "c": "concession_rate", "sigma": "sigma", "bayes_seed": "seed"}


@dataclasses.dataclass(frozen=True)
class AgentConfig:
    kind: str
    search: mcts.SearchParams = mcts.SearchParams()
    bayes: bayes.BayesConfig = bayes.BayesConfig()
    kernel: str = "rqf"
    noise: float = DEFAULT_NOISE
    floor: float = TFT_FLOOR

    def build(self, dump_dir=None, dump_prefix="mcts"):
        if self.kind == "mcts":
            return MCTSAgent(self.search, self.bayes, self.kernel, self.noise, dump_dir, dump_prefix)
        if self.kind == "rw":
            return RandomWalker()
        if self.kind == "tft":
            return TitForTat(self.floor)
        return NiceTitForTat(self.bayes)

    def label(self) -> str:
        return self.kind


def _number(key, value, cast=float):
    try:
        return cast(value)
    except ValueError:
        raise ConfigError(f"agent option {key}: cannot parse {value!r}") from None


def parse_agent_spec(spec: str, defaults: Optional[AgentConfig] = None) -> AgentConfig:
    """Parse ``kind[:key=value,...]``, e.g. ``mcts:C=0.5,alpha=0.4,iters=1000,kernel=rqf``."""
    kind, _, rest = spec.strip().partition(":")
    if kind not in AGENT_KINDS:
        raise ConfigError(f"unknown agent {kind!r}; choose from {', '.join(AGENT_KINDS)}")
    base = defaults if defaults is not None else AgentConfig(kind)
    search, bcfg = dict(dataclasses.asdict(base.search)), dict(dataclasses.asdict(base.bayes))
    kernel, noise, floor = base.kernel, base.noise, base.floor
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"agent option {item!r} is not key=value")
        if key in _MCTS_KEYS:
            field = _MCTS_KEYS[key]
            search[field] = _number(key, value, int if field in ("iterations", "rollout_cap") else float)
        elif key in _BAYES_KEYS:
            field = _BAYES_KEYS[key]
            bcfg[field] = _number(key, value, int if field in ("n_hypotheses", "seed") else float)
        elif key == "kernel":
            if value not in KERNELS:
                raise ConfigError(f"unknown kernel {value!r}; choose from {', '.join(KERNELS)}")
            kernel = value
        elif key == "noise":
            noise = _number(key, value)
        elif key == "floor":
            floor = _number(key, value)
        else:
            raise ConfigError(f"unknown agent option {key!r} for {kind}")
    try:
        return AgentConfig(kind, mcts.SearchParams(**search), bayes.BayesConfig(**bcfg), kernel, noise, floor)
    except ValueError as exc:
        raise ConfigError(f"agent {spec!r}: {exc}") from None
