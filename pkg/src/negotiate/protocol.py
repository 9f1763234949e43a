"""Deadline-free alternating-offers engine.

Agents only ever see the public history of actions.  The engine's round cap is
a safety net for sessions that would otherwise never end; agents are not told
about it.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Protocol

from .domain import Bid, ContinuousIssue, Domain, PreferenceProfile
from .errors import DomainError, ProtocolError, StateError

DEFAULT_MAX_ROUNDS = 2000


@dataclass(frozen=True)
class Accept:
    pass


@dataclass(frozen=True)
class Propose:
    bid: Bid


ACCEPT = Accept()


class Entry(NamedTuple):
    round: int
    actor: str
    action: object


class Agent(Protocol):
    def init(self, domain: Domain, profile: PreferenceProfile, seed: int) -> None: ...

    def act(self, history: tuple) -> object: ...


@dataclass(frozen=True)
class Agreement:
    bid: Bid
    final_round: int


@dataclass(frozen=True)
class NoAgreement:
    rounds: int


@dataclass
class Transcript:
    actors: tuple = ("a", "b")
    entries: list = field(default_factory=list)
    outcome: object = None

    @property
    def complete(self) -> bool:
        return self.outcome is not None

    @property
    def agreed(self) -> bool:
        return isinstance(self.outcome, Agreement)

    @property
    def rounds(self) -> int:
        if isinstance(self.outcome, Agreement):
            return self.outcome.final_round
        if isinstance(self.outcome, NoAgreement):
            return self.outcome.rounds
        return len(self.entries)


@dataclass(frozen=True)
class SessionConfig:
    max_rounds: int = DEFAULT_MAX_ROUNDS
    seed: int = 0

    def __post_init__(self):
        if self.max_rounds < 2:
            raise ValueError("max_rounds must be >= 2")


def opponent_offers(history) -> list:
    """Bids proposed by the opponent of whoever acts next, oldest first."""
    parity = (len(history) - 1) % 2
    return [e.action.bid for i, e in enumerate(history) if i % 2 == parity and isinstance(e.action, Propose)]


def own_offers(history) -> list:
    parity = len(history) % 2
    return [e.action.bid for i, e in enumerate(history) if i % 2 == parity and isinstance(e.action, Propose)]


def standing_offer(history) -> Optional[Bid]:
    if history and isinstance(history[-1].action, Propose):
        return history[-1].action.bid
    return None


def run_session(
    agent_a: Agent,
    agent_b: Agent,
    domain: Domain,
    profile_a: PreferenceProfile,
    profile_b: PreferenceProfile,
    config: SessionConfig,
    seeds: tuple = None,
    actors: tuple = ("a", "b"),
) -> Transcript:
    """Run one session with `agent_a` opening; returns the completed transcript.

    `seeds` gives each agent's private seed; by default both derive from
    ``config.seed``.
    """
    if profile_a.domain != domain or profile_b.domain != domain:
        raise DomainError("profiles must be defined over the session domain")
    if seeds is None:
        seeds = (config.seed * 2 + 1, config.seed * 2 + 2)
    agent_a.init(domain, profile_a, seeds[0])
    agent_b.init(domain, profile_b, seeds[1])

    transcript = Transcript(actors=tuple(actors))
    agents = (agent_a, agent_b)
    for t in range(1, config.max_rounds + 1):
        who = (t - 1) % 2
        action = agents[who].act(tuple(transcript.entries))
        actor = actors[who]
        if isinstance(action, Accept):
            if not transcript.entries:
                raise ProtocolError("Accept is illegal on the opening move", actor)
            transcript.entries.append(Entry(t, actor, action))
            transcript.outcome = Agreement(transcript.entries[-2].action.bid, t)
            return transcript
        if not isinstance(action, Propose):
            raise ProtocolError(f"unknown action {action!r}", actor)
        try:
            bid = domain.validate(action.bid)
        except DomainError as exc:
            raise ProtocolError(f"invalid bid: {exc}", actor) from None
        transcript.entries.append(Entry(t, actor, Propose(bid)))
    transcript.outcome = NoAgreement(config.max_rounds)
    return transcript


def realized_utilities(transcript: Transcript, profile_a, profile_b) -> tuple:
    if not transcript.complete:
        raise StateError("transcript has no outcome yet")
    if isinstance(transcript.outcome, Agreement):
        bid = transcript.outcome.bid
        return profile_a.utility(bid), profile_b.utility(bid)
    return profile_a.reservation, profile_b.reservation


def transcript_to_csv(transcript: Transcript, domain: Domain, profile_a, profile_b) -> str:
    """Columns: round, actor, action, one per issue, u_self_of_proposer.

    Accept rows repeat the accepted bid and report the acceptor's utility.
    The outcome row follows: outcome, final_round, u_a, u_b.
    """
    profiles = dict(zip(transcript.actors, (profile_a, profile_b)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["round", "actor", "action", *domain.names, "u_self_of_proposer"])
    last = None
    for e in transcript.entries:
        bid = e.action.bid if isinstance(e.action, Propose) else last
        kind = "propose" if isinstance(e.action, Propose) else "accept"
        w.writerow([e.round, e.actor, kind, *_fmt_bid(domain, bid), repr(profiles[e.actor].utility(bid))])
        last = bid
    u_a, u_b = realized_utilities(transcript, profile_a, profile_b)
    kind = "agreement" if transcript.agreed else "no_agreement"
    w.writerow(["outcome", "final_round", "u_a", "u_b"])
    w.writerow([kind, transcript.rounds, repr(u_a), repr(u_b)])
    return buf.getvalue()


def _fmt_bid(domain: Domain, bid) -> list:
    return [repr(v) if isinstance(i, ContinuousIssue) else v for i, v in zip(domain.issues, bid)]
