"""Exact Gaussian-process regression for forecasting the opponent's next bid.

Each encoded bid coordinate is treated as an independent time series over the
round index.  All coordinates share inputs and kernel, so they share a single
Cholesky factor and are solved together as multiple right-hand sides.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .domain import Domain
from .errors import DomainError, NumericError

log = logging.getLogger(__name__)

KERNELS = ("rbf", "rqf", "matern52", "ess")
DEFAULT_NOISE = 1e-4
DEFAULT_WINDOW = 50
JITTER_START = 1e-9
JITTER_MAX = 1e-3


@dataclass(frozen=True)
class Kernel:
    """Stationary kernel on scalar inputs with unit amplitude.

    `alpha` is the rational-quadratic shape parameter and `period` the
    exp-sine-squared period; both are ignored by the other kernels.
    """

    name: str
    length: float
    alpha: float = 1.0
    period: float = 1.0

    def __post_init__(self):
        if self.name not in KERNELS:
            raise DomainError(f"unknown kernel {self.name!r}; choose from {', '.join(KERNELS)}")
        for attr in ("length", "alpha", "period"):
            v = getattr(self, attr)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"kernel {self.name}: {attr} must be positive, got {v}")

    def of_distance(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        ell = self.length
        if self.name == "rbf":
            return np.exp(-(r**2) / (2 * ell**2))
        if self.name == "rqf":
            return (1 + r**2 / (2 * self.alpha * ell**2)) ** (-self.alpha)
        if self.name == "matern52":
            s = math.sqrt(5) * r / ell
            return (1 + s + 5 * r**2 / (3 * ell**2)) * np.exp(-s)
        return np.exp(-2 * np.sin(np.pi * r / self.period) ** 2 / ell**2)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.of_distance(x[:, None] - y[None, :])


def kernel_eval(k: Kernel, x: float, y: float) -> float:
    return float(k.of_distance(x - y))


def default_kernel(name: str, n_obs: int, **overrides) -> Kernel:
    """Hyperparameters scaled to the observed history length T.

    length = T/4 with rational-quadratic shape 1.  The periodic kernel gets
    period 2T, so the window never wraps onto itself, and length pi/4, which
    makes its short-range decay match the others' T/4.  Explicit overrides win.
    """
    t = max(n_obs, 1)
    if name == "ess":
        params = {"length": math.pi / 4, "alpha": 1.0, "period": 2.0 * t}
    else:
        params = {"length": t / 4, "alpha": 1.0, "period": t / 2}
    params.update({k: v for k, v in overrides.items() if v is not None})
    return Kernel(name, **params)


@dataclass(frozen=True, eq=False)
class GPModel:
    inputs: np.ndarray
    targets: np.ndarray
    kernel: Kernel
    noise: float
    factor: np.ndarray
    weights: np.ndarray
    jitter: float

    def gram(self) -> np.ndarray:
        n = len(self.inputs)
        return self.kernel(self.inputs, self.inputs) + (self.noise + self.jitter) * np.eye(n)


class Prediction(NamedTuple):
    mean: object
    variance: object


def fit(inputs, targets, kernel: Kernel, noise: float = DEFAULT_NOISE) -> GPModel:
    """Factor (K + noise*I) once; `targets` may be (n,) or (n, d)."""
    x = np.asarray(inputs, dtype=float).ravel()
    y = np.asarray(targets, dtype=float)
    if len(x) < 1 or y.shape[0] != len(x):
        raise ValueError("need at least one input and matching targets")
    if noise < 0:
        raise ValueError("noise variance must be >= 0")
    if noise == 0 and len(np.unique(x)) != len(x):
        raise NumericError("duplicate inputs with zero noise give a singular Gram matrix")
    gram = kernel(x, x) + noise * np.eye(len(x))
    jitter = JITTER_START
    while True:
        try:
            factor = np.linalg.cholesky(gram + jitter * np.eye(len(x)))
            break
        except np.linalg.LinAlgError:
            jitter *= 2
            if jitter > JITTER_MAX:
                raise NumericError("Gram matrix not positive definite at maximum jitter") from None
    weights = solve_triangular(factor.T, solve_triangular(factor, y, lower=True), lower=False)
    return GPModel(x, y, kernel, float(noise), factor, weights, jitter)


def predict(model: GPModel, x) -> Prediction:
    """Posterior mean and variance at `x` (scalar or 1-D array)."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    k_star = model.kernel(model.inputs, xs)
    mean = k_star.T @ model.weights
    v = solve_triangular(model.factor, k_star, lower=True)
    var = np.maximum(1.0 - np.sum(v * v, axis=0), 0.0)
    if scalar:
        return Prediction(float(mean[0]) if mean.ndim == 1 else mean[0], float(var[0]))
    return Prediction(mean, var)


class BidForecast(NamedTuple):
    """Encoded means and variances, one row per future opponent bid."""

    mean: np.ndarray
    variance: np.ndarray


def forecast(
    domain: Domain,
    rows: np.ndarray,
    steps: int = 1,
    kernel: str | Kernel = "rqf",
    noise: float = DEFAULT_NOISE,
    window: int = DEFAULT_WINDOW,
) -> BidForecast:
    """Forecast the encoded opponent bids for the next `steps` rounds.

    The prior mean is the last observed bid, so the GP only models deviations
    from it: a trend is extrapolated over the next few rounds and far-ahead
    forecasts settle back on the last bid.  With fewer than two bids the last
    bid is repeated with unit variance.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    d = domain.encoded_size
    if rows.shape[0] == 0 or rows.size == 0:
        raise ValueError("forecast needs at least one observed bid")
    enc = domain.encode_rows(rows)
    if len(enc) < 2:
        return BidForecast(np.repeat(enc[-1:], steps, axis=0), np.ones((steps, d)))
    enc = enc[-window:]
    total = len(rows)
    t = np.arange(total - len(enc) + 1, total + 1, dtype=float)
    k = kernel if isinstance(kernel, Kernel) else default_kernel(kernel, len(enc))
    centre = enc[-1].copy()
    model = fit(t, enc - centre, k, noise)
    future = np.arange(total + 1, total + steps + 1, dtype=float)
    mean, var = predict(model, future)
    return BidForecast(mean + centre, np.repeat(var[:, None], d, axis=1))


def predict_next_bid(history: Sequence, domain: Domain, kernel: str | Kernel = "rqf", noise: float = DEFAULT_NOISE,
                     window: int = DEFAULT_WINDOW):
    """Return (predicted bid, per-coordinate variance) for the opponent's next offer."""
    rows = np.array([domain.to_row(b) for b in history])
    fc = forecast(domain, rows, 1, kernel, noise, window)
    return domain.from_row(domain.decode_rows(fc.mean[0])[0]), fc.variance[0]


class KernelScore(NamedTuple):
    kernel: str
    avg_distance: float
    n_predictions: int


class KernelTable(NamedTuple):
    scores: list
    skipped: int


def repeat_last_distance(domain: Domain, traces) -> KernelScore:
    """Baseline that predicts bid t+1 to equal bid t."""
    total, n = 0.0, 0
    for trace in traces:
        rows = np.asarray(trace, dtype=float)
        if len(rows) < 3:
            continue
        d = domain.raw_distance(rows[1:-1], rows[2:])
        total += d.sum()
        n += len(d)
    return KernelScore("repeat_last", total / n if n else float("nan"), n)


def evaluate_kernels(traces, domain: Domain, kernels=KERNELS, noise: float = DEFAULT_NOISE,
                     window: int = DEFAULT_WINDOW) -> KernelTable:
    """Mean raw-space distance between each actual bid and its one-step forecast.

    `traces` holds one row array per session.  For every t in 2..T-1 the first
    t bids predict bid t+1.  Traces shorter than 3 are skipped and counted.
    """
    traces = [np.atleast_2d(np.asarray(t, dtype=float)) for t in traces]
    usable = [t for t in traces if len(t) >= 3]
    skipped = len(traces) - len(usable)
    if skipped:
        log.warning("skipped %d trace(s) shorter than 3 bids", skipped)
    scores = []
    for name in kernels:
        total, n = 0.0, 0
        for rows in usable:
            for t in range(2, len(rows)):
                fc = forecast(domain, rows[:t], 1, name, noise, window)
                pred = domain.decode_rows(fc.mean[0])
                total += float(domain.raw_distance(pred, rows[t])[0])
                n += 1
        scores.append(KernelScore(name, total / n if n else float("nan"), n))
    return KernelTable(scores, skipped)
