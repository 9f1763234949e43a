"""Bayesian opponent-utility learning over a sampled family of profiles.

The opponent is assumed to concede at a roughly constant rate, so its t-th
offer should be worth about ``1 - c*t`` to it.  Each hypothesis is a complete
additive profile with triangular continuous valuations; evidence is weighed
with a Gaussian likelihood around that expected utility.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .domain import ContinuousIssue, Domain, PreferenceProfile, Table, Triangular

DEFAULT_N_HYPOTHESES = 100
DEFAULT_CONCESSION_RATE = 0.005
DEFAULT_SIGMA = 0.25
UNDERFLOW = 1e-300


@dataclass(frozen=True)
class BayesConfig:
    n_hypotheses: int = DEFAULT_N_HYPOTHESES
    concession_rate: float = DEFAULT_CONCESSION_RATE
    sigma: float = DEFAULT_SIGMA
    seed: int = 0


class HypothesisMatrix:
    """Column-stacked parameters of every hypothesis for batch utility evaluation."""

    def __init__(self, domain: Domain, hypotheses):
        self.domain = domain
        self.weights = np.array([h.weights for h in hypotheses])
        self.columns = []
        for k, issue in enumerate(domain.issues):
            if isinstance(issue, ContinuousIssue):
                peaks = np.array([h.valuations[k].peak for h in hypotheses])
                spread = np.maximum(peaks - issue.lo, issue.hi - peaks)
                self.columns.append(("c", peaks[:, None], spread[:, None]))
            else:
                table = np.array([[h.valuations[k].scores_by_label[lab] for lab in issue.labels] for h in hypotheses])
                self.columns.append(("t", table, None))

    def utilities(self, rows) -> np.ndarray:
        """Utility of each row under each hypothesis, shape (n_hypotheses, n_rows)."""
        rows = np.atleast_2d(rows)
        out = np.zeros((self.weights.shape[0], rows.shape[0]))
        for k, (kind, a, b) in enumerate(self.columns):
            if kind == "c":
                score = np.clip(1.0 - np.abs(rows[None, :, k] - a) / b, 0.0, 1.0)
            else:
                score = a[:, rows[:, k].astype(int)]
            out += self.weights[:, k : k + 1] * score
        return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class BeliefState:
    hypotheses: tuple
    probs: np.ndarray
    concession_rate: float = DEFAULT_CONCESSION_RATE
    sigma: float = DEFAULT_SIGMA
    matrix: HypothesisMatrix = field(default=None, repr=False)

    def __post_init__(self):
        if self.matrix is None:
            object.__setattr__(self, "matrix", HypothesisMatrix(self.hypotheses[0].domain, self.hypotheses))

    def expected_concession_utility(self, t: float) -> float:
        return expected_concession_utility(t, self.concession_rate)

    def estimated_utility_rows(self, rows) -> np.ndarray:
        return np.clip(self.probs @ self.matrix.utilities(rows), 0.0, 1.0)

    def estimated_utility(self, bid) -> float:
        return float(self.estimated_utility_rows(self.hypotheses[0].domain.to_row(bid))[0])


def random_hypothesis(domain: Domain, rng: np.random.Generator) -> PreferenceProfile:
    vals = []
    for issue in domain.issues:
        if isinstance(issue, ContinuousIssue):
            vals.append(Triangular(float(rng.uniform(issue.lo, issue.hi))))
        else:
            m = len(issue.labels)
            ranks = rng.permutation(m)
            # best label scores 1, worst 1/m
            vals.append(Table({lab: (m - int(r)) / m for lab, r in zip(issue.labels, ranks)}))
    w = rng.exponential(size=len(domain))
    w = w / w.sum()
    return PreferenceProfile(domain, tuple(w), tuple(vals), 0.0)


def init_beliefs(domain: Domain, n_hypotheses: int = DEFAULT_N_HYPOTHESES, seed: int = 0,
                 concession_rate: float = DEFAULT_CONCESSION_RATE, sigma: float = DEFAULT_SIGMA) -> BeliefState:
    if n_hypotheses < 1:
        raise ValueError("n_hypotheses must be >= 1")
    if concession_rate <= 0 or sigma <= 0:
        raise ValueError("concession_rate and sigma must be positive")
    rng = np.random.default_rng(seed)
    hyps = tuple(random_hypothesis(domain, rng) for _ in range(n_hypotheses))
    return BeliefState(hyps, np.full(n_hypotheses, 1.0 / n_hypotheses), concession_rate, sigma)


def expected_concession_utility(t: float, concession_rate: float = DEFAULT_CONCESSION_RATE) -> float:
    return max(0.0, 1.0 - concession_rate * t)


def likelihoods(beliefs: BeliefState, row, t: float) -> np.ndarray:
    u = beliefs.matrix.utilities(row)[:, 0]
    target = beliefs.expected_concession_utility(t)
    return np.exp(-((u - target) ** 2) / (2 * beliefs.sigma**2))


def update(beliefs: BeliefState, offer, t: float) -> BeliefState:
    """Posterior after observing the opponent's t-th offer (a bid or a row array)."""
    row = offer if isinstance(offer, np.ndarray) else beliefs.hypotheses[0].domain.to_row(offer)
    joint = beliefs.probs * likelihoods(beliefs, row, t)
    evidence = joint.sum()
    if evidence < UNDERFLOW:
        return beliefs
    return replace(beliefs, probs=joint / evidence)


def estimated_utility(beliefs: BeliefState, bid) -> float:
    return beliefs.estimated_utility(bid)
