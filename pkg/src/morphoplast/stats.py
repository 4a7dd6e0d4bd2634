"""Self-contained statistical tests used by the analysis layer.

Everything here is implemented from the textbook definitions on top of
numpy — no scipy at runtime.  The unit tests pin these routines against
scipy on frozen inputs, so the conventions below (tie handling, continuity
corrections, exact-vs-asymptotic switch points) deliberately mirror scipy's
defaults:

* Mann-Whitney: exact p when both groups have <= 8 values and the pooled
  data is tie-free, otherwise the tie-corrected normal approximation with
  a 0.5 continuity correction.
* Wilcoxon signed-rank: zero differences dropped; exact distribution up to
  25 non-zero pairs (tie-averaged ranks scaled to integers), otherwise the
  tie-corrected normal approximation without continuity correction.
* Kruskal-Wallis: tie-corrected H; effect size epsilon^2 = H / (N - 1).

All p-values are two-sided.  Degenerate inputs (zero pooled variance,
constant ranks, all-zero differences) yield nan-valued results tagged
``method="undefined"`` instead of raising, so reports can render an
explicit "undefined" cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "TestResult",
    "BootstrapResult",
    "rankdata",
    "cohens_d",
    "sign_test_binomial",
    "mann_whitney_u",
    "wilcoxon_signed",
    "kruskal_wallis_eps2",
    "spearman_rho",
    "bootstrap_ci",
    "normal_sf",
]


@dataclass(frozen=True)
class TestResult:
    """Outcome of a two-sided hypothesis test."""

    statistic: float
    p_value: float
    n: tuple[int, ...]
    method: str  # "exact", "normal", or "undefined"

    def __post_init__(self) -> None:
        if not (math.isnan(self.p_value) or 0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")


@dataclass(frozen=True)
class BootstrapResult:
    lo: float
    hi: float
    n_dropped: int  # resamples where the statistic came out non-finite


def normal_sf(z: float) -> float:
    """Standard normal survival function via erfc (no scipy)."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def rankdata(values) -> np.ndarray:
    """Ranks starting at 1, ties replaced by their average rank."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _tie_sizes(values: np.ndarray) -> np.ndarray:
    _, counts = np.unique(values, return_counts=True)
    return counts[counts > 1]


def cohens_d(a, b) -> float:
    """Standardised mean difference with pooled sample SD.

    Returns nan when the pooled variance is zero (the statistic is
    undefined there, and callers treat nan as an explicit flag).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("cohens_d needs at least two values per group")
    var_a = a.var(ddof=1)
    var_b = b.var(ddof=1)
    pooled = ((len(a) - 1) * var_a + (len(b) - 1) * var_b) / (len(a) + len(b) - 2)
    if pooled == 0.0:
        return math.nan
    return float((a.mean() - b.mean()) / math.sqrt(pooled))


def sign_test_binomial(n_successes: int, n_trials: int) -> float:
    """Exact two-sided binomial sign test at p = 1/2 (doubled smaller tail)."""
    if not 0 <= n_successes <= n_trials:
        raise ValueError("need 0 <= successes <= trials")
    if n_trials == 0:
        raise ValueError("sign test needs at least one trial")
    lower = sum(math.comb(n_trials, i) for i in range(0, n_successes + 1))
    upper = sum(math.comb(n_trials, i) for i in range(n_successes, n_trials + 1))
    scale = 2.0**n_trials
    return min(1.0, 2.0 * min(lower, upper) / scale)


@lru_cache(maxsize=None)
def _u_counts(n1: int, n2: int) -> tuple[int, ...]:
    """Number of tie-free rank arrangements per U value.

    These are the Gaussian binomial coefficients of [n1+n2 choose n1],
    built from the recurrence G(m, n) = G(m-1, n) + q^m * G(m, n-1);
    the counts sum to C(n1+n2, n1).
    """
    if n1 == 0 or n2 == 0:
        return (1,)
    shrink_a = _u_counts(n1 - 1, n2)
    shrink_b = _u_counts(n1, n2 - 1)
    counts = [0] * (n1 * n2 + 1)
    for u, c in enumerate(shrink_a):
        counts[u] += c
    for u, c in enumerate(shrink_b):
        counts[u + n1] += c
    return tuple(counts)


def mann_whitney_u(a, b) -> TestResult:
    """Two-sided Mann-Whitney test; the statistic is U of the first sample."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both groups must be non-empty")
    pooled = np.concatenate([a, b])
    ranks = rankdata(pooled)
    u1 = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    ties = _tie_sizes(pooled)
    if n1 <= 8 and n2 <= 8 and ties.size == 0:
        counts = _u_counts(n1, n2)
        total = math.comb(n1 + n2, n1)
        u_low = min(u1, n1 * n2 - u1)
        tail = sum(counts[u] for u in range(0, int(u_low) + 1))
        return TestResult(u1, min(1.0, 2.0 * tail / total), (n1, n2), "exact")
    n = n1 + n2
    mu = n1 * n2 / 2.0
    tie_term = float((ties.astype(float) ** 3 - ties).sum()) if ties.size else 0.0
    sigma_sq = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma_sq <= 0.0:
        return TestResult(u1, math.nan, (n1, n2), "undefined")
    u_big = max(u1, n1 * n2 - u1)
    z = (u_big - mu - 0.5) / math.sqrt(sigma_sq)
    return TestResult(u1, min(1.0, 2.0 * normal_sf(z)), (n1, n2), "normal")


def wilcoxon_signed(x, y=None) -> TestResult:
    """Two-sided Wilcoxon signed-rank test; the statistic is W+ (positive-rank sum).

    With one argument, tests the sample median against zero; with two,
    tests paired differences.  Zero differences are discarded first; if
    nothing remains the result is the nan-tagged "undefined" outcome.
    """
    x = np.asarray(x, dtype=float)
    diffs = x - np.asarray(y, dtype=float) if y is not None else x
    diffs = diffs[diffs != 0.0]
    n = len(diffs)
    if n == 0:
        return TestResult(math.nan, math.nan, (0,), "undefined")
    abs_ranks = rankdata(np.abs(diffs))
    w_plus = float(abs_ranks[diffs > 0].sum())
    if n <= 25:
        # Scale (possibly half-integer) tie-averaged ranks to integers and
        # count sign assignments by dynamic programming.
        scaled = np.round(abs_ranks * 2).astype(int)
        total_sum = int(scaled.sum())
        ways = np.zeros(total_sum + 1)
        ways[0] = 1.0
        for s in scaled:
            ways[s:] = ways[s:] + ways[:-s]
        target = int(round(w_plus * 2))
        low = ways[: min(target, total_sum - target) + 1].sum()
        high = ways[max(target, total_sum - target) :].sum()
        p = min(1.0, 2.0 * min(low, high) / 2.0**n)
        return TestResult(w_plus, p, (n,), "exact")
    mu = n * (n + 1) / 4.0
    ties = _tie_sizes(np.abs(diffs))
    tie_term = float((ties.astype(float) ** 3 - ties).sum()) if ties.size else 0.0
    sigma_sq = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    if sigma_sq <= 0.0:
        return TestResult(w_plus, math.nan, (n,), "undefined")
    z = (w_plus - mu) / math.sqrt(sigma_sq)
    return TestResult(w_plus, min(1.0, 2.0 * normal_sf(abs(z))), (n,), "normal")


def kruskal_wallis_eps2(groups) -> tuple[float, float]:
    """Tie-corrected Kruskal-Wallis H and its epsilon-squared effect size.

    All observations identical is treated as "no group effect": (0, 0).
    """
    groups = [np.asarray(g, dtype=float) for g in groups]
    if len(groups) < 2 or any(len(g) == 0 for g in groups):
        raise ValueError("need >= 2 non-empty groups")
    pooled = np.concatenate(groups)
    n = len(pooled)
    if n < 3:
        raise ValueError("need at least 3 observations in total")
    if np.all(pooled == pooled[0]):
        return 0.0, 0.0
    ranks = rankdata(pooled)
    h = 0.0
    start = 0
    for g in groups:
        r = ranks[start : start + len(g)]
        h += r.sum() ** 2 / len(g)
        start += len(g)
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    ties = _tie_sizes(pooled)
    if ties.size:
        h /= 1.0 - float((ties.astype(float) ** 3 - ties).sum()) / (n**3 - n)
    return float(h), float(h / (n - 1))


def spearman_rho(a, b) -> float:
    """Spearman rank correlation with average ranks for ties.

    Constant input leaves the correlation undefined: returns nan.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) != len(b) or len(a) < 2:
        raise ValueError("need two equal-length samples of size >= 2")
    ra = rankdata(a)
    rb = rankdata(b)
    ra -= ra.mean()
    rb -= rb.mean()
    denom = math.sqrt(float((ra**2).sum() * (rb**2).sum()))
    if denom == 0.0:
        return math.nan
    return float((ra * rb).sum() / denom)


def bootstrap_ci(
    groups,
    statistic,
    n_resamples: int = 10_000,
    level: float = 0.95,
    seed: int = 0,
) -> BootstrapResult:
    """Percentile bootstrap CI for ``statistic(*resampled_groups)``.

    Each replicate draws from an independent child generator seeded by
    (seed, replicate), so confidence intervals are reproducible and
    insensitive to evaluation order.  Resamples where the statistic is
    non-finite (e.g. a zero-variance Cohen's d draw) are dropped and
    counted in ``n_dropped``.
    """
    groups = [np.asarray(g, dtype=float) for g in groups]
    if any(len(g) == 0 for g in groups):
        raise ValueError("cannot bootstrap an empty group")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    stats = np.empty(n_resamples)
    for rep in range(n_resamples):
        rng = np.random.default_rng(np.random.SeedSequence([seed, rep]))
        resampled = [g[rng.integers(0, len(g), size=len(g))] for g in groups]
        stats[rep] = statistic(*resampled)
    kept = stats[np.isfinite(stats)]
    if kept.size == 0:
        raise ValueError("every bootstrap resample was degenerate")
    alpha = (1.0 - level) / 2.0
    return BootstrapResult(
        lo=float(np.percentile(kept, 100.0 * alpha)),
        hi=float(np.percentile(kept, 100.0 * (1.0 - alpha))),
        n_dropped=int(n_resamples - kept.size),
    )
