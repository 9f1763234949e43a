"""Deadline-free bilateral negotiation with an MCTS agent and opponent models."""

from .agents import AgentConfig, MCTSAgent, NiceTitForTat, RandomWalker, TitForTat, parse_agent_spec
from .domain import (
    CategoricalIssue,
    ContinuousIssue,
    Domain,
    PreferenceProfile,
    Table,
    Triangular,
    encode,
    load_domain,
    load_profile,
    random_bid,
    utility,
)
from .protocol import ACCEPT, Accept, Propose, SessionConfig, Transcript, realized_utilities, run_session

__version__ = "0.1.0"
