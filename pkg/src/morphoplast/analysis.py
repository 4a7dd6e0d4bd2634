"""Plasticity-parameter grids and the analyses computed over sweep records.

The central object is a delta matrix: rows are networks, columns are grid
points, entries are mean reward change versus the network's own baseline.
``collect_delta_matrix`` builds it (plus the per-episode tensor behind it)
from raw evaluation records; everything else — per-network oracle search,
best-fixed-parameter regret, split-half validation, harm rates, adaptation
premiums, weight-change ratios, quintile preferences, survival curves and
dose-response monotonicity — is a pure function of those arrays.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .evaluation import EvalResult
from .genome import PlasticityParams
from .stats import spearman_rho

__all__ = [
    "GRID_NAMES",
    "SweepGrid",
    "build_grid",
    "OracleRegret",
    "oracle_and_regret",
    "collect_delta_matrix",
    "split_half_validation",
    "harm_rate",
    "adaptation_premium",
    "weight_change_ratio",
    "hebbian_split",
    "quintile_preference",
    "unsolved_fraction",
    "dose_response",
]

GRID_NAMES = ("primary75", "extended248", "coarse22", "micro248_acrobot")

# Learning-rate magnitude ladders.  Log-ish spacing concentrates points at
# the small-|eta| end where the interesting transitions live, while the
# extended grid pushes out to +/-0.5 to map the destructive regime.
_PRIMARY_ETA_MAG = (0.0005, 0.001, 0.005, 0.01, 0.02, 0.03, 0.05)
_EXTENDED_ETA_MAG = (
    0.0005, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.075,
    0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5,
)
_COARSE_ETA = tuple(-m for m in (0.0005, 0.001, 0.002, 0.005, 0.01, 0.015, 0.02, 0.03, 0.04, 0.05, 0.075))

_PRIMARY_LAM = (0.0, 1e-5, 1e-4, 1e-3, 1e-2)
_EXTENDED_LAM = (0.0, 1e-5, 1e-4, 1e-3, 5e-3, 1e-2, 5e-2, 1e-1)
_COARSE_LAM = (1e-3, 1e-2)


def _symmetric(magnitudes: Sequence[float]) -> tuple[float, ...]:
    return tuple(sorted({-m for m in magnitudes} | {0.0} | set(magnitudes)))


@dataclass(frozen=True)
class SweepGrid:
    """A named, ordered set of (eta, lambda) evaluation points."""

    name: str
    points: tuple[PlasticityParams, ...]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def etas(self) -> tuple[float, ...]:
        return tuple(sorted({p.eta for p in self.points}))

    @property
    def lams(self) -> tuple[float, ...]:
        return tuple(sorted({p.decay for p in self.points}))

    def index_of(self, eta: float, lam: float) -> int:
        for i, p in enumerate(self.points):
            if p.eta == eta and p.decay == lam:
                return i
        raise KeyError(f"({eta}, {lam}) not in grid {self.name}")


def _cross(etas: Sequence[float], lams: Sequence[float]) -> tuple[PlasticityParams, ...]:
    return tuple(PlasticityParams(eta, lam) for lam in lams for eta in etas)


def build_grid(name: str) -> SweepGrid:
    """Return one of the canonical sweep grids by name."""
    if name == "primary75":
        points = _cross(_symmetric(_PRIMARY_ETA_MAG), _PRIMARY_LAM)
    elif name == "extended248":
        points = _cross(_symmetric(_EXTENDED_ETA_MAG), _EXTENDED_LAM)
    elif name == "coarse22":
        points = _cross(_COARSE_ETA, _COARSE_LAM)
    elif name == "micro248_acrobot":
        mags = tuple(float(m) for m in np.logspace(math.log10(5e-5), math.log10(0.1), 15))
        points = _cross(_symmetric(mags), _EXTENDED_LAM)
    else:
        raise ValueError(f"unknown grid {name!r}; expected one of {GRID_NAMES}")
    return SweepGrid(name=name, points=points)


def _tie_rank(grid: SweepGrid) -> list[tuple[float, float, float, int]]:
    """Per-point sort key for breaking delta ties: least-invasive first."""
    return [(abs(p.eta), p.decay, p.eta, i) for i, p in enumerate(grid.points)]


def _argmax_with_ties(values: np.ndarray, tie_rank) -> int:
    best = values.max()
    candidates = np.nonzero(values == best)[0]
    return int(min(candidates, key=lambda i: tie_rank[i]))


@dataclass(frozen=True)
class OracleRegret:
    """Per-network oracle search versus the best single fixed setting."""

    grid_name: str
    network_ids: tuple[str, ...]
    oracle_indices: tuple[int, ...]
    oracle_deltas: tuple[float, ...]
    best_fixed_index: int
    best_fixed_mean: float
    regret: float  # nan when the oracle mean is not positive

    @property
    def oracle_mean(self) -> float:
        return float(np.mean(self.oracle_deltas))


def oracle_and_regret(
    deltas,
    grid: SweepGrid,
    network_ids: Sequence[str] | None = None,
) -> OracleRegret:
    """Exhaustive per-network oracle and the regret of the best fixed point.

    ``deltas`` is (n_networks, n_points).  Delta ties are broken toward the
    least invasive parameters: smaller |eta|, then smaller lambda, then
    eta ascending.  Regret = 1 - max(0, best_fixed)/oracle_mean, clamped to
    [0, 1]; a non-positive oracle mean leaves it undefined (nan).
    """
    deltas = np.asarray(deltas, dtype=float)
    if deltas.ndim != 2 or deltas.shape[1] != len(grid):
        raise ValueError(f"need a (n_networks, {len(grid)}) delta matrix")
    if network_ids is None:
        network_ids = tuple(str(i) for i in range(deltas.shape[0]))
    tie_rank = _tie_rank(grid)
    oracle_idx = [_argmax_with_ties(row, tie_rank) for row in deltas]
    oracle_deltas = tuple(float(deltas[i, j]) for i, j in enumerate(oracle_idx))
    fixed_means = deltas.mean(axis=0)
    best_fixed = _argmax_with_ties(fixed_means, tie_rank)
    oracle_mean = float(np.mean(oracle_deltas))
    if oracle_mean > 0.0:
        regret = 1.0 - max(0.0, float(fixed_means[best_fixed])) / oracle_mean
        regret = min(1.0, max(0.0, regret))
    else:
        regret = math.nan
    return OracleRegret(
        grid_name=grid.name,
        network_ids=tuple(network_ids),
        oracle_indices=tuple(oracle_idx),
        oracle_deltas=oracle_deltas,
        best_fixed_index=best_fixed,
        best_fixed_mean=float(fixed_means[best_fixed]),
        regret=regret,
    )


def collect_delta_matrix(
    baselines: Mapping[str, EvalResult],
    records: Iterable[EvalResult],
    grid: SweepGrid,
) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Assemble (network_ids, deltas, per_episode_deltas) from raw records.

    Every network in ``baselines`` must have one record per grid point with
    seed-matched episodes; anything missing is reported in one error.
    """
    by_key: dict[tuple[str, float, float], EvalResult] = {}
    for rec in records:
        by_key[(rec.network_id, rec.eta, rec.lam)] = rec
    ids = tuple(sorted(baselines))
    gaps = []
    n_seeds = {len(b.seeds) for b in baselines.values()}
    if len(n_seeds) > 1:
        raise ValueError("baselines disagree on episode count")
    per_episode = np.zeros((len(ids), len(grid), n_seeds.pop() if n_seeds else 0))
    for i, net_id in enumerate(ids):
        base = baselines[net_id]
        for j, p in enumerate(grid.points):
            rec = by_key.get((net_id, p.eta, p.decay))
            if rec is None:
                gaps.append(f"{net_id[:12]}@(eta={p.eta}, lambda={p.decay})")
                continue
            if rec.seeds != base.seeds:
                raise ValueError(f"seed mismatch for {net_id[:12]}")
            per_episode[i, j] = np.asarray(rec.rewards) - np.asarray(base.rewards)
    if gaps:
        shown = ", ".join(gaps[:8])
        more = f" (+{len(gaps) - 8} more)" if len(gaps) > 8 else ""
        raise ValueError(f"missing sweep records: {shown}{more}")
    return ids, per_episode.mean(axis=2), per_episode


def split_half_validation(per_episode_deltas, grid: SweepGrid) -> float:
    """Fraction of the oracle advantage that survives episode-split selection.

    Oracle parameters are chosen per network on odd-indexed episodes only
    and scored on the even-indexed episodes; the result is that held-out
    mean as a fraction of the full-data oracle mean (nan when the full
    oracle advantage is not positive).
    """
    tensor = np.asarray(per_episode_deltas, dtype=float)
    if tensor.ndim != 3:
        raise ValueError("need (networks, points, episodes)")
    if tensor.shape[2] < 2:
        raise ValueError("split-half needs at least two episodes")
    tie_rank = _tie_rank(grid)
    select = tensor[:, :, 1::2].mean(axis=2)
    evaluate = tensor[:, :, 0::2].mean(axis=2)
    full = tensor.mean(axis=2)
    held_out = np.array(
        [evaluate[i, _argmax_with_ties(select[i], tie_rank)] for i in range(tensor.shape[0])]
    )
    full_oracle = np.array(
        [full[i, _argmax_with_ties(full[i], tie_rank)] for i in range(tensor.shape[0])]
    )
    denom = full_oracle.mean()
    if denom <= 0.0:
        return math.nan
    return float(held_out.mean() / denom)


def harm_rate(deltas) -> float:
    """Fraction of networks whose reward delta is negative."""
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size == 0:
        raise ValueError("empty delta set")
    return float((deltas < 0.0).mean())


def adaptation_premium(ns_deltas, static_deltas, grid: SweepGrid) -> np.ndarray:
    """Per-network non-stationary minus static delta at the NS-oracle params."""
    ns = np.asarray(ns_deltas, dtype=float)
    st = np.asarray(static_deltas, dtype=float)
    if ns.shape != st.shape or ns.ndim != 2 or ns.shape[1] != len(grid):
        raise ValueError("need matched (n_networks, n_points) matrices")
    tie_rank = _tie_rank(grid)
    idx = [_argmax_with_ties(row, tie_rank) for row in ns]
    return np.array([ns[i, j] - st[i, j] for i, j in enumerate(idx)])


def weight_change_ratio(result: EvalResult) -> float:
    """Mean per-episode ratio of post- to pre-switch per-step |delta w|.

    Episodes with zero pre-switch change cannot form a ratio; if no episode
    qualifies (e.g. OFF->ON, where plasticity is disabled before the
    switch), the ratio is undefined and nan is returned.
    """
    if result.dw_pre is None or result.dw_post is None:
        raise ValueError("record has no perturbation-switch telemetry")
    ratios = [post / pre for pre, post in zip(result.dw_pre, result.dw_post) if pre > 0.0]
    if not ratios:
        return math.nan
    return float(np.mean(ratios))


def hebbian_split(deltas, grid: SweepGrid) -> tuple[np.ndarray, np.ndarray]:
    """Pool per-(network, point) deltas into (anti-Hebbian, Hebbian) groups.

    Points with eta = 0 are excluded.  On negation-closed grids both pools
    have identical sizes, which keeps the downstream effect sizes balanced.
    """
    deltas = np.asarray(deltas, dtype=float)
    if deltas.ndim != 2 or deltas.shape[1] != len(grid):
        raise ValueError(f"need a (n_networks, {len(grid)}) delta matrix")
    etas = np.array([p.eta for p in grid.points])
    return deltas[:, etas < 0.0].ravel(), deltas[:, etas > 0.0].ravel()


def quintile_preference(mean_abs_dw, oracle_etas) -> tuple[float, ...]:
    """Anti-Hebbian-preference fraction per weight-change quintile.

    Networks are bucketed by per-step mean |delta w| at the 20/40/60/80th
    percentiles (values equal to a boundary go to the lower bucket); each
    bucket reports the fraction of networks whose oracle eta is negative.
    """
    dw = np.asarray(mean_abs_dw, dtype=float)
    etas = np.asarray(oracle_etas, dtype=float)
    if dw.shape != etas.shape or dw.ndim != 1:
        raise ValueError("need matched 1-d arrays")
    if dw.size < 5:
        raise ValueError("quintiles need at least 5 networks")
    cuts = np.percentile(dw, [20.0, 40.0, 60.0, 80.0])
    buckets = (dw[:, None] > cuts[None, :]).sum(axis=1)
    fractions = []
    for q in range(5):
        members = etas[buckets == q]
        fractions.append(float((members < 0.0).mean()) if members.size else math.nan)
    return tuple(fractions)


def unsolved_fraction(solved_steps, t_grid) -> tuple[float, ...]:
    """Fraction of episodes still unsolved at each time in ``t_grid``.

    ``solved_steps`` uses -1 (or None) for never-solved episodes.
    """
    steps = [(-1 if s is None else int(s)) for s in solved_steps]
    if not steps:
        raise ValueError("no episodes")
    out = []
    for t in t_grid:
        out.append(sum(1 for s in steps if s < 0 or s > t) / len(steps))
    return tuple(out)


@dataclass(frozen=True)
class DoseResponse:
    switch_steps: tuple[int, ...]
    mean_oracle_deltas: tuple[float, ...]
    spearman: float  # vs post-switch duration; 0 with tied=True when constant
    tied: bool = False


def dose_response(oracle_deltas_by_switch: Mapping[int, Sequence[float]], horizon: int = 500) -> DoseResponse:
    """Mean oracle delta per switch time and its rank correlation with
    post-switch duration (horizon - switch step).  Constant deltas have
    degenerate ranks; they report rho = 0 with the tie flag set."""
    if len(oracle_deltas_by_switch) < 2:
        raise ValueError("need at least two switch times")
    switches = tuple(sorted(oracle_deltas_by_switch))
    means = tuple(float(np.mean(oracle_deltas_by_switch[s])) for s in switches)
    durations = [horizon - s for s in switches]
    if len(set(means)) == 1:
        return DoseResponse(switches, means, 0.0, tied=True)
    return DoseResponse(switches, means, spearman_rho(durations, means))
