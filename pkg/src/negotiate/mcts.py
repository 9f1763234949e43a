"""Monte-Carlo tree search bidding strategy.

The tree alternates our proposals and the opponent's.  Children are added by
progressive widening, descents use a two-player UCT rule (each mover ranks
children by its own accumulated score), rollouts play out the opponent models,
and every visit backs up both our utility and the opponent's modelled utility.
Our branches never go below the best offer the opponent has made so far.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bayes import BeliefState
from .domain import Bid, Domain, PreferenceProfile
from .errors import SearchExhausted
from .gpr import DEFAULT_NOISE, BidForecast, forecast
from .protocol import opponent_offers, own_offers

SELF, OPP = 0, 1

CANDIDATE_BATCH = 1024
# total uniform draws tried before declaring every bid pruned
EXHAUSTION_BUDGET = 64 * CANDIDATE_BATCH
OPP_BATCH = 64


@dataclass(frozen=True)
class SearchParams:
    C: float = 0.5
    alpha: float = 0.4
    iterations: int = 1000
    rollout_cap: int = 20
    seed: int = 0

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be > 0")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.iterations < 1 or self.rollout_cap < 1:
            raise ValueError("iterations and rollout_cap must be >= 1")


class Node:
    __slots__ = ("row", "u_self", "u_opp", "player", "depth", "n", "s_self", "s_opp", "children", "dead")

    def __init__(self, row=None, u_self=0.0, u_opp=0.0, player=SELF, depth=0):
        self.row = row
        self.u_self = u_self
        self.u_opp = u_opp
        self.player = player  # who moves next at this node
        self.depth = depth
        self.n = 0
        self.s_self = 0.0
        self.s_opp = 0.0
        self.children = []
        self.dead = False

    def live_children(self):
        return [c for c in self.children if not c.dead]

    def __repr__(self):
        return f"Node(depth={self.depth}, n={self.n}, s_self={self.s_self:.3f}, s_opp={self.s_opp:.3f})"


def widen(n_p: float, n_c: int, alpha: float) -> bool:
    return n_p**alpha >= n_c


def uct_score(s_i: float, n_i: float, n: float, C: float, alpha: float) -> float:
    return s_i / (n_i + 1) + C * n**alpha * math.sqrt(math.log(n) / (n_i + 1))


def backpropagate(path, u_self: float, u_opp: float) -> None:
    for node in path:
        node.n += 1
        node.s_self += u_self
        node.s_opp += u_opp


def prune_threshold(history, profile: PreferenceProfile) -> float:
    """Our utility for the opponent's best offer so far, 0 before any offer."""
    offers = opponent_offers(history)
    if not offers:
        return 0.0
    rows = np.array([profile.domain.to_row(b) for b in offers])
    return float(profile.utility_rows(rows).max())


def prune_tree(root: Node, threshold: float) -> int:
    """Mark our-move nodes below `threshold` dead; returns how many were marked."""
    marked = 0
    stack = [root]
    while stack:
        node = stack.pop()
        for child in node.children:
            if node.player == SELF and not child.dead and child.u_self < threshold:
                child.dead = True
                marked += 1
            stack.append(child)
    return marked


class OpponentModel:
    """Frozen snapshot of the opponent bid forecast and utility beliefs.

    Without a forecast (no opponent offer seen yet) simulated opponent bids
    are uniform.
    """

    def __init__(self, domain: Domain, beliefs: BeliefState, bid_forecast: Optional[BidForecast] = None):
        self.domain = domain
        self.beliefs = beliefs
        self.forecast = bid_forecast

    @classmethod
    def from_history(cls, domain, opponent_bids, beliefs, kernel="rqf", noise=DEFAULT_NOISE, horizon=64):
        if not opponent_bids:
            return cls(domain, beliefs, None)
        rows = np.array([domain.to_row(b) for b in opponent_bids])
        return cls(domain, beliefs, forecast(domain, rows, horizon, kernel, noise))

    def estimated(self, rows) -> np.ndarray:
        return self.beliefs.estimated_utility_rows(rows)

    def sample_rows(self, rng: np.random.Generator, ply: int, n: int) -> np.ndarray:
        if self.forecast is None:
            return self.domain.random_rows(rng, n)
        h = min(ply, len(self.forecast.mean) - 1)
        mean = self.forecast.mean[h]
        std = np.sqrt(self.forecast.variance[h])
        return self.domain.decode_rows(mean + std * rng.standard_normal((n, len(mean))))


class _Pool:
    """Buffered i.i.d. candidate bids with both utilities precomputed."""

    def __init__(self, generate):
        self._generate = generate
        self.rows = np.empty((0, 0))
        self.u_self: list = []
        self.u_opp: list = []
        self.pos = 0

    def draw(self):
        if self.pos >= len(self.u_self):
            self.rows, us, uo = self._generate()
            self.u_self, self.u_opp = us.tolist(), uo.tolist()
            self.pos = 0
        i = self.pos
        self.pos += 1
        return self.rows[i], self.u_self[i], self.u_opp[i]


class Searcher:
    """One search tree rooted at the current decision, with its samplers."""

    def __init__(self, profile: PreferenceProfile, models: OpponentModel, params: SearchParams,
                 threshold: float = 0.0, root: Optional[Node] = None):
        self.profile = profile
        self.domain = profile.domain
        self.models = models
        self.params = params
        self.threshold = threshold
        self.rng = np.random.default_rng(params.seed)
        self.root = root if root is not None else Node(player=SELF)
        self._accepted_rows = []
        self._own = _Pool(self._own_batch)
        self._opp = {}
        self.random_fallbacks = 0

    # -- candidate generation ------------------------------------------------

    def _own_batch(self):
        tried = 0
        while tried < EXHAUSTION_BUDGET:
            rows = self.domain.random_rows(self.rng, CANDIDATE_BATCH)
            tried += CANDIDATE_BATCH
            u = self.profile.utility_rows(rows)
            keep = u >= self.threshold
            if keep.any():
                rows, u = rows[keep], u[keep]
                self._accepted_rows.append(rows)
                return rows, u, self.models.estimated(rows)
        if not self._accepted_rows:
            raise SearchExhausted(f"no bid found with own utility >= {self.threshold:.6f}")
        pool = np.concatenate(self._accepted_rows)
        rows = pool[self.rng.integers(0, len(pool), CANDIDATE_BATCH)]
        return rows, self.profile.utility_rows(rows), self.models.estimated(rows)

    def _opp_pool(self, ply: int) -> _Pool:
        if self.models.forecast is not None:
            ply = min(ply, len(self.models.forecast.mean) - 1)
        else:
            ply = 0
        pool = self._opp.get(ply)
        if pool is None:
            def generate(ply=ply):
                rows = self.models.sample_rows(self.rng, ply, OPP_BATCH)
                return rows, self.profile.utility_rows(rows), self.models.estimated(rows)
            pool = self._opp[ply] = _Pool(generate)
        return pool

    def draw_candidate(self, mover: int, ply: int):
        return self._own.draw() if mover == SELF else self._opp_pool(ply).draw()

    def accepts(self, mover: int, ply: int, u_self: float, u_opp: float) -> bool:
        """Simulated myopic acceptance of a standing offer against a fresh candidate."""
        _, c_self, c_opp = self.draw_candidate(mover, ply)
        return u_self >= c_self if mover == SELF else u_opp >= c_opp

    # -- the four phases -----------------------------------------------------

    def select_and_expand(self):
        """Descend from the root; returns (path, agreed).

        `agreed` is True when the next mover at the last node accepted that
        node's offer, in which case no rollout is needed.
        """
        p = self.params
        total = self.root.n
        node = self.root
        path = [node]
        while True:
            if node is not self.root and self.accepts(node.player, node.depth // 2, node.u_self, node.u_opp):
                return path, True
            live = node.live_children()
            if widen(node.n, len(live), p.alpha):
                try:
                    row, u_self, u_opp = self.draw_candidate(node.player, node.depth // 2)
                except SearchExhausted:
                    if not live:
                        raise
                else:
                    child = Node(row, u_self, u_opp, 1 - node.player, node.depth + 1)
                    node.children.append(child)
                    path.append(child)
                    return path, False
            node = self.select_child(node, live, total)
            path.append(node)

    def select_child(self, node: Node, live, total: int) -> Node:
        """Max-W live child, scored from the viewpoint of the player moving at `node`; ties to the lowest index."""
        p = self.params
        mine = node.player == SELF
        best, best_w = None, -math.inf
        for child in live:
            w = uct_score(child.s_self if mine else child.s_opp, child.n, total, p.C, p.alpha)
            if w > best_w:
                best, best_w = child, w
        return best

    def simulate(self, path) -> tuple:
        leaf = path[-1]
        mover = leaf.player
        ply = leaf.depth // 2
        u_self, u_opp = leaf.u_self, leaf.u_opp
        for _ in range(self.params.rollout_cap):
            _, c_self, c_opp = self.draw_candidate(mover, ply)
            if mover == SELF:
                if u_self >= c_self:
                    return u_self, u_opp
            else:
                if u_opp >= c_opp:
                    return u_self, u_opp
                ply += 1
            u_self, u_opp = c_self, c_opp
            mover = 1 - mover
        return 0.0, 0.0

    def iterate(self):
        path, agreed = self.select_and_expand()
        if agreed:
            u = path[-1].u_self, path[-1].u_opp
        else:
            u = self.simulate(path)
        backpropagate(path, *u)
        return path

    def run(self) -> Node:
        for _ in range(self.params.iterations):
            self.iterate()
        return self.best_child()

    def best_child(self) -> Node:
        live = self.root.live_children()
        if not live:
            raise SearchExhausted("root has no live children")
        # max visits, then max mean own score, then lowest index
        return max(live, key=lambda c: (c.n, c.s_self / (c.n + 1), -live.index(c)))


def fallback_bid(history, profile: PreferenceProfile, threshold: float) -> Bid:
    """Move used when no bid clears the pruning threshold.

    Our best past bid if it still clears the threshold, otherwise the
    opponent's best offer (which sits exactly at it); the ideal bid on opening.
    """
    mine = own_offers(history)
    theirs = opponent_offers(history)
    if not mine and not theirs:
        return profile.ideal_bid()
    if mine:
        best = max(mine, key=profile.utility)
        if profile.utility(best) >= threshold:
            return best
    if theirs:
        return max(theirs, key=profile.utility)
    return profile.ideal_bid()


def search(history, profile: PreferenceProfile, models: OpponentModel, params: SearchParams,
           searcher_out: Optional[list] = None) -> Bid:
    """Choose our next proposal.  Deterministic for a fixed `params.seed`."""
    threshold = prune_threshold(history, profile)
    searcher = Searcher(profile, models, params, threshold)
    if searcher_out is not None:
        searcher_out.append(searcher)
    try:
        best = searcher.run()
    except SearchExhausted:
        return fallback_bid(history, profile, threshold)
    return profile.domain.from_row(best.row)


def tree_rows(root: Node):
    """(depth, n_i, s_self, s_opp, pruned) for every node, depth-first."""
    out = []
    stack = [root]
    while stack:
        node = stack.pop()
        out.append((node.depth, node.n, node.s_self, node.s_opp, node.dead))
        stack.extend(reversed(node.children))
    return out


def dump_tree(root: Node, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["depth", "n_i", "s_self", "s_opp", "pruned"])
        for depth, n, s_self, s_opp, dead in tree_rows(root):
            w.writerow([depth, n, repr(s_self), repr(s_opp), int(dead)])
