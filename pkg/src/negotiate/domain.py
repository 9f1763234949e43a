"""Issues, bids, preference profiles and the numeric encodings used for learning.

A bid is a plain tuple with one value per issue: a float for continuous
issues and a label string for categorical ones.  For vectorised work bids are
also handled as *rows*: float arrays where categorical values are replaced by
their label index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import DomainError

Value = Union[float, str]
Bid = tuple


@dataclass(frozen=True)
class ContinuousIssue:
    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise DomainError(f"issue {self.name!r}: need lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> int:
        return 1

    def check(self, value) -> float:
        if isinstance(value, (bool, str)) or not isinstance(value, (int, float, np.floating, np.integer)):
            raise DomainError(f"issue {self.name!r}: expected a number, got {value!r}")
        v = float(value)
        if not self.lo <= v <= self.hi:
            raise DomainError(f"issue {self.name!r}: {v} outside [{self.lo}, {self.hi}]")
        return v


@dataclass(frozen=True)
class CategoricalIssue:
    name: str
    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise DomainError(f"issue {self.name!r}: need at least 2 labels")
        if len(set(labels)) != len(labels):
            raise DomainError(f"issue {self.name!r}: labels must be distinct")
        if not all(isinstance(lab, str) and lab for lab in labels):
            raise DomainError(f"issue {self.name!r}: labels must be non-empty strings")

    @property
    def width(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DomainError(f"issue {self.name!r}: unknown label {label!r}") from None

    def check(self, value) -> str:
        self.index(value)
        return value


Issue = Union[ContinuousIssue, CategoricalIssue]


@dataclass(frozen=True)
class Domain:
    issues: tuple

    def __post_init__(self):
        issues = tuple(self.issues)
        object.__setattr__(self, "issues", issues)
        if not issues:
            raise DomainError("domain needs at least one issue")
        names = [i.name for i in issues]
        if len(set(names)) != len(names):
            raise DomainError("issue names must be unique")

    def __len__(self):
        return len(self.issues)

    @property
    def names(self) -> list[str]:
        return [i.name for i in self.issues]

    @property
    def encoded_size(self) -> int:
        return sum(i.width for i in self.issues)

    def validate(self, bid) -> Bid:
        if len(bid) != len(self.issues):
            raise DomainError(f"bid has {len(bid)} values, domain has {len(self.issues)} issues")
        return tuple(issue.check(v) for issue, v in zip(self.issues, bid))

    # -- row representation -------------------------------------------------

    def to_row(self, bid) -> np.ndarray:
        bid = self.validate(bid)
        return np.array(
            [v if isinstance(i, ContinuousIssue) else i.index(v) for i, v in zip(self.issues, bid)],
            dtype=float,
        )

    def from_row(self, row) -> Bid:
        out = []
        for issue, v in zip(self.issues, row):
            if isinstance(issue, ContinuousIssue):
                out.append(float(v))
            else:
                out.append(issue.labels[int(v)])
        return tuple(out)

    def random_rows(self, rng: np.random.Generator, n: int) -> np.ndarray:
        rows = np.empty((n, len(self.issues)))
        for k, issue in enumerate(self.issues):
            if isinstance(issue, ContinuousIssue):
                rows[:, k] = rng.uniform(issue.lo, issue.hi, size=n)
            else:
                rows[:, k] = rng.integers(0, len(issue.labels), size=n)
        return rows

    # -- encoding ------------------------------------------------------------

    def encode_rows(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(rows)
        out = np.zeros((rows.shape[0], self.encoded_size))
        j = 0
        for k, issue in enumerate(self.issues):
            if isinstance(issue, ContinuousIssue):
                out[:, j] = (rows[:, k] - issue.lo) / (issue.hi - issue.lo)
            else:
                out[np.arange(rows.shape[0]), j + rows[:, k].astype(int)] = 1.0
            j += issue.width
        return out

    def decode_rows(self, enc: np.ndarray) -> np.ndarray:
        """Inverse of `encode_rows`: clamp continuous coordinates, argmax one-hot blocks.

        np.argmax returns the first maximum, so ties go to the lowest label index.
        """
        enc = np.atleast_2d(enc)
        rows = np.empty((enc.shape[0], len(self.issues)))
        j = 0
        for k, issue in enumerate(self.issues):
            if isinstance(issue, ContinuousIssue):
                rows[:, k] = issue.lo + np.clip(enc[:, j], 0.0, 1.0) * (issue.hi - issue.lo)
            else:
                rows[:, k] = np.argmax(enc[:, j : j + issue.width], axis=1)
            j += issue.width
        return rows

    def raw_distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Euclidean distance in unscaled issue units; a categorical mismatch counts 1."""
        a, b = np.atleast_2d(a), np.atleast_2d(b)
        sq = np.zeros(max(a.shape[0], b.shape[0]))
        for k, issue in enumerate(self.issues):
            if isinstance(issue, ContinuousIssue):
                sq += (a[:, k] - b[:, k]) ** 2
            else:
                sq += (a[:, k] != b[:, k]).astype(float)
        return np.sqrt(sq)


def encode(domain: Domain, bid) -> np.ndarray:
    return domain.encode_rows(domain.to_row(bid))[0]


def decode(domain: Domain, vector) -> Bid:
    return domain.from_row(domain.decode_rows(np.asarray(vector, dtype=float))[0])


def random_bid(domain: Domain, rng: np.random.Generator) -> Bid:
    return domain.from_row(domain.random_rows(rng, 1)[0])


# -- valuations and profiles -------------------------------------------------


@dataclass(frozen=True)
class Triangular:
    """Tent-shaped score peaking at `peak`, falling to 0 at the farther bound."""

    peak: float

    def scores(self, issue: ContinuousIssue, x):
        spread = max(self.peak - issue.lo, issue.hi - self.peak)
        return np.clip(1.0 - np.abs(np.asarray(x, dtype=float) - self.peak) / spread, 0.0, 1.0)


@dataclass(frozen=True)
class Table:
    scores_by_label: dict = field(hash=False)

    def scores(self, issue: CategoricalIssue, idx):
        table = np.array([self.scores_by_label[lab] for lab in issue.labels])
        return table[np.asarray(idx, dtype=int)]


@dataclass(frozen=True, eq=False)
class PreferenceProfile:
    domain: Domain
    weights: tuple
    valuations: tuple
    reservation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "valuations", tuple(self.valuations))
        n = len(self.domain)
        if len(self.weights) != n:
            raise DomainError(f"weights: expected {n} entries, got {len(self.weights)}")
        if any(w < 0 or not math.isfinite(w) for w in self.weights):
            raise DomainError("weights: entries must be finite and >= 0")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise DomainError(f"weights: must sum to 1, got {sum(self.weights)!r}")
        if len(self.valuations) != n:
            raise DomainError(f"valuations: expected {n} entries, got {len(self.valuations)}")
        for k, (issue, val) in enumerate(zip(self.domain.issues, self.valuations)):
            _check_valuation(k, issue, val)
        if not 0.0 <= self.reservation < 1.0:
            raise DomainError(f"reservation: must lie in [0, 1), got {self.reservation}")

    def utility_rows(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(rows)
        total = np.zeros(rows.shape[0])
        for k, (issue, val, w) in enumerate(zip(self.domain.issues, self.valuations, self.weights)):
            if w:
                total += w * val.scores(issue, rows[:, k])
        return np.clip(total, 0.0, 1.0)

    def utility(self, bid) -> float:
        return float(self.utility_rows(self.domain.to_row(bid))[0])

    def ideal_bid(self) -> Bid:
        out = []
        for issue, val in zip(self.domain.issues, self.valuations):
            if isinstance(issue, ContinuousIssue):
                out.append(float(val.peak))
            else:
                out.append(max(issue.labels, key=lambda lab: val.scores_by_label[lab]))
        return tuple(out)


def _check_valuation(k, issue, val):
    where = f"valuations[{k}]"
    if isinstance(issue, ContinuousIssue):
        if not isinstance(val, Triangular):
            raise DomainError(f"{where}: continuous issue {issue.name!r} needs a peak")
        if not issue.lo <= val.peak <= issue.hi:
            raise DomainError(f"{where}: peak {val.peak} outside [{issue.lo}, {issue.hi}]")
    else:
        if not isinstance(val, Table):
            raise DomainError(f"{where}: categorical issue {issue.name!r} needs a table")
        table = val.scores_by_label
        if set(table) != set(issue.labels):
            raise DomainError(f"{where}: table must score exactly the labels {list(issue.labels)}")
        scores = list(table.values())
        if any(not 0.0 <= s <= 1.0 for s in scores):
            raise DomainError(f"{where}: scores must lie in [0, 1]")
        if max(scores) != 1.0:
            raise DomainError(f"{where}: best label must score 1")


def utility(profile: PreferenceProfile, bid) -> float:
    return profile.utility(bid)


# -- JSON files --------------------------------------------------------------


def domain_from_dict(data: dict) -> Domain:
    try:
        specs = data["issues"]
    except (KeyError, TypeError):
        raise DomainError("issues: missing") from None
    issues = []
    for k, spec in enumerate(specs):
        kind = spec.get("type")
        name = spec.get("name")
        if not isinstance(name, str) or not name:
            raise DomainError(f"issues[{k}].name: missing or empty")
        if kind == "continuous":
            try:
                issues.append(ContinuousIssue(name, float(spec["lo"]), float(spec["hi"])))
            except KeyError as exc:
                raise DomainError(f"issues[{k}].{exc.args[0]}: missing") from None
        elif kind == "categorical":
            if "labels" not in spec:
                raise DomainError(f"issues[{k}].labels: missing")
            issues.append(CategoricalIssue(name, tuple(spec["labels"])))
        else:
            raise DomainError(f"issues[{k}].type: expected 'continuous' or 'categorical', got {kind!r}")
    return Domain(tuple(issues))


def domain_to_dict(domain: Domain) -> dict:
    out = []
    for issue in domain.issues:
        if isinstance(issue, ContinuousIssue):
            out.append({"name": issue.name, "type": "continuous", "lo": issue.lo, "hi": issue.hi})
        else:
            out.append({"name": issue.name, "type": "categorical", "labels": list(issue.labels)})
    return {"issues": out}


def profile_from_dict(domain: Domain, data: dict) -> PreferenceProfile:
    for key in ("weights", "valuations"):
        if key not in data:
            raise DomainError(f"{key}: missing")
    vals = []
    for k, spec in enumerate(data["valuations"]):
        if "peak" in spec:
            vals.append(Triangular(float(spec["peak"])))
        elif "table" in spec:
            vals.append(Table({str(lab): float(s) for lab, s in spec["table"].items()}))
        else:
            raise DomainError(f"valuations[{k}]: expected 'peak' or 'table'")
    return PreferenceProfile(domain, tuple(data["weights"]), tuple(vals), float(data.get("reservation", 0.0)))


def profile_to_dict(profile: PreferenceProfile) -> dict:
    vals = []
    for v in profile.valuations:
        vals.append({"peak": v.peak} if isinstance(v, Triangular) else {"table": dict(v.scores_by_label)})
    return {"weights": list(profile.weights), "valuations": vals, "reservation": profile.reservation}


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON ({exc})") from None


def load_domain(path) -> Domain:
    return domain_from_dict(_read_json(path))


def load_profile(domain: Domain, path) -> PreferenceProfile:
    return profile_from_dict(domain, _read_json(path))


def rows_to_bids(domain: Domain, rows: Sequence) -> list:
    return [domain.from_row(r) for r in rows]
