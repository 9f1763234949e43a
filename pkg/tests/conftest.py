import numpy as np
import pytest

from negotiate.cli import data_file
from negotiate.domain import (
    CategoricalIssue,
    ContinuousIssue,
    Domain,
    PreferenceProfile,
    Table,
    Triangular,
    load_domain,
    load_profile,
)
from negotiate.protocol import ACCEPT, Propose


@pytest.fixture(scope="session")
def shipped():
    dom = load_domain(data_file("factoring_domain.json"))
    return dom, load_profile(dom, data_file("profile1.json")), load_profile(dom, data_file("profile2.json"))


@pytest.fixture
def small_domain():
    return Domain((ContinuousIssue("price", 0.0, 20.0), CategoricalIssue("color", ("A", "B"))))


@pytest.fixture
def small_profile(small_domain):
    return PreferenceProfile(small_domain, (0.7, 0.3), (Triangular(10.0), Table({"A": 1.0, "B": 0.2})))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class Acceptor:
    """Accepts any standing offer; proposes a fixed bid otherwise."""

    kind = "acceptor"

    def __init__(self, bid=None):
        self.bid = bid

    def init(self, domain, profile, seed):
        self.ideal = profile.ideal_bid()

    def act(self, history):
        if history:
            return ACCEPT
        return Propose(self.bid if self.bid is not None else self.ideal)


class Stubborn:
    """Proposes its own ideal bid forever."""

    kind = "stubborn"

    def init(self, domain, profile, seed):
        self.ideal = profile.ideal_bid()

    def act(self, history):
        return Propose(self.ideal)


class Recorder(Stubborn):
    """Stubborn agent that keeps everything the engine hands it."""

    def __init__(self):
        self.received = []

    def init(self, domain, profile, seed):
        super().init(domain, profile, seed)
        self.received.append(("init", domain, profile, seed))

    def act(self, history):
        self.received.append(("act", history))
        return super().act(history)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
