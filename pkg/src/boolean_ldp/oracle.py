"""Exact small-instance laws: Poisson cell counts and binomial edge counts.

Everything is computed in log space.  Log-factorials are exact sums of logs
below ``EXACT_FACTORIAL_LIMIT`` and Stirling's series with the ``1/(12n)``
term above it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .measures import BinnedMeasure, Partition, reference_measure
from .model import ScalingRegime

EXACT_FACTORIAL_LIMIT = 100_000
_COUNT_TOL = 1e-9
_LOG_FACT_TABLE: np.ndarray | None = None


def _table() -> np.ndarray:
    global _LOG_FACT_TABLE
    if _LOG_FACT_TABLE is None:
        t = np.zeros(EXACT_FACTORIAL_LIMIT)
        t[1:] = np.cumsum(np.log(np.arange(1, EXACT_FACTORIAL_LIMIT, dtype=float)))
        _LOG_FACT_TABLE = t
    return _LOG_FACT_TABLE


def log_factorial(n):
    """``log(n!)`` for nonnegative integers (vectorized)."""
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("factorial of a negative number")
    n = n.astype(np.int64)
    small = n < EXACT_FACTORIAL_LIMIT
    out = np.empty(n.shape, dtype=float)
    out[small] = _table()[n[small]]
    big = n[~small].astype(float)
    out[~small] = (big * np.log(big) - big + 0.5 * np.log(2 * math.pi * big) + 1.0 / (12.0 * big))
    return float(out) if out.ndim == 0 else out


def stirling_bounds(n: int) -> tuple[float, float]:
    """Robbins bounds on ``log(n!)`` with corrections ``1/(12n+1)`` and ``1/(12n)``."""
    if n < 1:
        return 0.0, 0.0
    base = n * math.log(n) - n + 0.5 * math.log(2 * math.pi * n)
    return base + 1.0 / (12 * n + 1), base + 1.0 / (12 * n)


@dataclass(frozen=True, eq=False)
class CellLaw:
    """Independent Poisson cell counts with the given means."""

    partition: Partition
    means: np.ndarray
    lam: float

    def __post_init__(self):
        m = np.asarray(self.means, dtype=float).reshape(self.partition.n_cells)
        if np.any(m < 0):
            raise ValueError("cell means must be nonnegative")
        object.__setattr__(self, "means", m)

    @classmethod
    def from_regime(cls, regime: ScalingRegime, partition: Partition) -> "CellLaw":
        ref = reference_measure(regime, partition)
        return cls(partition, regime.lam * ref.masses, regime.lam)


def _counts(eta: BinnedMeasure, law: CellLaw) -> np.ndarray:
    raw = law.lam * np.asarray(eta.masses if hasattr(eta, "masses") else eta, dtype=float)
    k = np.round(raw)
    if np.any(np.abs(raw - k) > _COUNT_TOL * np.maximum(1.0, raw)) or np.any(k < 0):
        raise ValueError("lam * eta must be a nonnegative integer in every cell")
    return k


def _poisson_logpmf(k: np.ndarray, m: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logm = np.where(k > 0, np.log(m), 0.0)
    return -m + k * logm - log_factorial(k)


def poisson_cell_log_prob(eta: BinnedMeasure, law: CellLaw) -> float:
    """``log P(L1 = eta)`` under independent Poisson cell counts."""
    k = _counts(eta, law)
    return float(np.sum(_poisson_logpmf(k, law.means)))


def sandwich_bounds(eta: BinnedMeasure, law: CellLaw, epsilon: float) -> tuple[float, float]:
    """Lower/upper log-probabilities with the cell means perturbed by ``epsilon``.

    Lower: ``exp(-m - eps) (m - eps)^k / k!``; upper: ``exp(-m + eps) (m + eps)^k / k!``.
    Both factors move in the same direction, so the bounds bracket the exact
    value for every count.  The vanishing slack term is not modelled.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if epsilon > 0 and epsilon >= law.means.min():
        raise ValueError("epsilon must be smaller than every cell mean")
    k = _counts(eta, law)
    m = law.means
    lower = -m - epsilon + k * np.log(np.where(k > 0, m - epsilon, 1.0)) - log_factorial(k)
    upper = -m + epsilon + k * np.log(np.where(k > 0, m + epsilon, 1.0)) - log_factorial(k)
    return float(lower.sum()), float(upper.sum())


def binomial_log_pmf(k, n_pairs: int, p: float):
    k = np.asarray(k)
    if n_pairs < 0 or int(n_pairs) != n_pairs or not 0.0 <= p <= 1.0:
        raise ValueError("invalid binomial parameters")
    if np.any(k < 0) or np.any(k > n_pairs):
        raise ValueError("count outside [0, n_pairs]")
    k = k.astype(np.int64)
    n = int(n_pairs)
    logc = log_factorial(n) - log_factorial(k) - log_factorial(n - k)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(k > 0, k * np.log(p) if p > 0 else -np.inf, 0.0)
        b = np.where(n - k > 0, (n - k) * np.log1p(-p) if p < 1 else -np.inf, 0.0)
    return logc + a + b


def binomial_edge_pmf(k: int, n_pairs: int, p: float) -> float:
    """Exact ``P(|E| = k)`` for ``n_pairs`` independent pairs of probability ``p``."""
    return float(np.exp(binomial_log_pmf(k, n_pairs, p)))


def poisson_log_pmf(k, mean: float):
    k = np.asarray(k)
    if mean == 0:
        return np.where(k == 0, 0.0, -np.inf)
    return -mean + k * math.log(mean) - log_factorial(k)


def poisson_tail(mean: float, threshold) -> float:
    """Exact ``P(N > threshold)`` for ``N ~ Poisson(mean)``."""
    if mean < 0:
        raise ValueError("mean must be nonnegative")
    t = math.floor(threshold)
    if t < 0:
        return 1.0
    if mean == 0:
        return 0.0
    if t + 1 >= mean:
        # upper terms decay at least geometrically past the mode
        span = int(max(50, 12 * math.sqrt(mean) + 40))
        ks = np.arange(t + 1, t + 1 + span)
        while True:
            lp = poisson_log_pmf(ks, mean)
            if lp[-1] < lp.max() - 50:
                break
            span *= 2
            ks = np.arange(t + 1, t + 1 + span)
        return float(math.exp(min(0.0, logsumexp(lp))))
    ks = np.arange(0, t + 1)
    lower = math.exp(min(0.0, logsumexp(poisson_log_pmf(ks, mean))))
    return float(max(0.0, 1.0 - lower))


def bennett_phi(u: float) -> float:
    return (1.0 + u) * math.log1p(u) - u


def bennett_bound(lam: float, a: float = 1.0) -> float:
    """``exp(-(lam/a^2) Phi(a))``: bound on ``P(|I| - E|I| > lam)``.

    Valid for Poisson totals whenever ``a >= 1``.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    return math.exp(-(lam / a**2) * bennett_phi(a))


def poisson_cramer_rate(mean: float, threshold: float) -> float:
    """``m - c + c log(c/m)`` for ``c > m``, else 0: upper-tail rate of Poisson counts."""
    if threshold <= mean:
        return 0.0
    if mean == 0:
        return math.inf
    return mean - threshold + threshold * math.log(threshold / mean)


def log_prob_table(law: CellLaw, max_counts) -> np.ndarray:
    """Joint log-pmf of cell counts on the box ``0..max_counts[c]``."""
    axes = [poisson_log_pmf(np.arange(k + 1), m) for k, m in zip(max_counts, law.means)]
    out = axes[0]
    for ax in axes[1:]:
        out = np.add.outer(out, ax)
    return out
