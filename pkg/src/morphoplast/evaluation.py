"""Episode rollouts, plasticity modes, and reward stratification.

A network is always scored on a fixed batch of seeded episodes (default
seeds 42..61).  The whole batch advances in lockstep through the vectorised
environment: one synchronous forward pass per env step, action by argmax
over the output neurons, and — in the plastic modes — one Hebbian update
after every executed step.

Modes:

* ``baseline``  – plasticity disabled throughout.
* ``plastic``   – the Hebbian rule runs from the first step.
* ``off_on``    – plasticity stays off until the environment's switch step,
  then runs; only meaningful on a perturbed spec.

Networks that cannot bind the required inputs and outputs never roll out;
they score the environment's minimum episode reward on every seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import BatchedEnv, EnvSpec
from .genome import PlasticityParams
from .network import DevelopedNetwork, NetworkState, apply_plasticity, forward_step

BASELINE = "baseline"
PLASTIC = "plastic"
OFF_ON = "off_on"
MODES = (BASELINE, PLASTIC, OFF_ON)

DEFAULT_SEEDS = tuple(range(42, 62))

STRATUM_NAMES = ("Weak", "LowMid", "HighMid", "NearPerfect", "Perfect")
CARTPOLE_STRATA = (200.0, 350.0, 450.0, 475.0)
ACROBOT_STRATA = (-350.0, -200.0, -120.0, -100.0)


def stratify(mean_reward: float, boundaries: tuple[float, float, float, float]) -> str:
    """Name of the competence stratum; boundaries are left-inclusive."""
    if len(boundaries) != 4 or list(boundaries) != sorted(boundaries):
        raise ValueError("boundaries must be four ascending cut points")
    for name, cut in zip(STRATUM_NAMES, boundaries):
        if mean_reward < cut:
            return name
    return STRATUM_NAMES[-1]


def strata_for(spec: EnvSpec) -> tuple[float, float, float, float]:
    return CARTPOLE_STRATA if spec.kind == "cartpole" else ACROBOT_STRATA


@dataclass(frozen=True)
class EvalResult:
    network_id: str
    env: str
    mode: str
    eta: float
    lam: float
    seeds: tuple[int, ...]
    rewards: tuple[float, ...]
    solved_steps: tuple[int, ...]
    weight_ratios: tuple[float, ...]
    mean_abs_dw: float
    degenerate: bool
    non_functional: bool
    # Per-episode mean per-step |delta w| before/after the perturbation
    # switch; None when the spec has no perturbation.
    dw_pre: tuple[float, ...] | None = None
    dw_post: tuple[float, ...] | None = None

    @property
    def mean_reward(self) -> float:
        return sum(self.rewards) / len(self.rewards)

    @property
    def mean_weight_ratio(self) -> float:
        return sum(self.weight_ratios) / len(self.weight_ratios)

    def to_dict(self) -> dict:
        return {
            "network_id": self.network_id,
            "env": self.env,
            "mode": self.mode,
            "eta": self.eta,
            "lambda": self.lam,
            "seeds": list(self.seeds),
            "rewards": list(self.rewards),
            "solved_steps": list(self.solved_steps),
            "weight_ratios": list(self.weight_ratios),
            "mean_abs_dw": self.mean_abs_dw,
            "degenerate": self.degenerate,
            "non_functional": self.non_functional,
            "dw_pre": list(self.dw_pre) if self.dw_pre is not None else None,
            "dw_post": list(self.dw_post) if self.dw_post is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalResult":
        return cls(
            network_id=d["network_id"],
            env=d["env"],
            mode=d["mode"],
            eta=float(d["eta"]),
            lam=float(d["lambda"]),
            seeds=tuple(int(s) for s in d["seeds"]),
            rewards=tuple(float(r) for r in d["rewards"]),
            solved_steps=tuple(int(s) for s in d["solved_steps"]),
            weight_ratios=tuple(float(r) for r in d["weight_ratios"]),
            mean_abs_dw=float(d["mean_abs_dw"]),
            degenerate=bool(d["degenerate"]),
            non_functional=bool(d["non_functional"]),
            dw_pre=tuple(map(float, d["dw_pre"])) if d.get("dw_pre") is not None else None,
            dw_post=tuple(map(float, d["dw_post"])) if d.get("dw_post") is not None else None,
        )


def _non_functional_result(
    network_id: str, spec: EnvSpec, params: PlasticityParams, mode: str, seeds
) -> EvalResult:
    n = len(seeds)
    return EvalResult(
        network_id=network_id,
        env=spec.descriptor(),
        mode=mode,
        eta=params.eta,
        lam=params.decay,
        seeds=tuple(seeds),
        rewards=(spec.min_episode_reward,) * n,
        solved_steps=(-1,) * n,
        weight_ratios=(1.0,) * n,
        mean_abs_dw=0.0,
        degenerate=False,
        non_functional=True,
    )


def _phase_means(sums: np.ndarray, counts: np.ndarray) -> tuple[float, ...]:
    return tuple(float(s / c) if c > 0 else 0.0 for s, c in zip(sums, counts))


def evaluate_network(
    net: DevelopedNetwork,
    spec: EnvSpec,
    params: PlasticityParams | None = None,
    mode: str = BASELINE,
    seeds=DEFAULT_SEEDS,
) -> EvalResult:
    """Score ``net`` on one seeded episode per entry of ``seeds``."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    params = params or PlasticityParams(0.0, 0.0)
    if mode == OFF_ON and spec.switch_step is None:
        raise ValueError("off_on mode requires a perturbed environment spec")
    network_id = net.canonical_hash()
    if not net.functional(spec.obs_dim, spec.n_actions):
        return _non_functional_result(network_id, spec, params, mode, seeds)

    state = NetworkState(net, batch_size=len(seeds))
    state.configure_io(spec.obs_dim, spec.n_actions)
    state.reset()
    env = BatchedEnv(spec, seeds)
    switch = spec.switch_step
    initial_norm = float(np.sqrt((state.w[0] ** 2).sum()))
    n_ep = len(seeds)
    dw_sums = {"pre": np.zeros(n_ep), "post": np.zeros(n_ep)}
    dw_counts = {"pre": np.zeros(n_ep), "post": np.zeros(n_ep)}

    with np.errstate(over="ignore", invalid="ignore"):
        while env.alive.any():
            step_index = env.steps + 1
            live = env.alive.copy()
            actions = forward_step(state, env.observations(), spec.obs_scale)
            env.step(actions)
            if mode == PLASTIC or (mode == OFF_ON and step_index >= switch):
                dw_mean = apply_plasticity(state, params, live=live)
                if switch is not None:
                    phase = "pre" if step_index < switch else "post"
                    dw_sums[phase] += np.where(live & np.isfinite(dw_mean), dw_mean, 0.0)
                    dw_counts[phase] += live

    if initial_norm > 0.0:
        ratios = np.sqrt((state.w**2).sum(axis=(1, 2))) / initial_norm
    else:
        ratios = np.ones(len(seeds))
    return EvalResult(
        network_id=network_id,
        env=spec.descriptor(),
        mode=mode,
        eta=params.eta,
        lam=params.decay,
        seeds=tuple(seeds),
        rewards=tuple(float(r) for r in env.rewards),
        solved_steps=tuple(int(s) for s in env.solved_steps),
        weight_ratios=tuple(float(r) for r in ratios),
        mean_abs_dw=float(np.mean(state.mean_step_dw())),
        degenerate=not bool(state.finite.all()),
        non_functional=False,
        dw_pre=_phase_means(dw_sums["pre"], dw_counts["pre"]) if switch is not None else None,
        dw_post=_phase_means(dw_sums["post"], dw_counts["post"]) if switch is not None else None,
    )


def run_episode(
    net: DevelopedNetwork,
    spec: EnvSpec,
    seed: int,
    params: PlasticityParams | None = None,
    mode: str = BASELINE,
) -> float:
    """Reward of a single seeded episode (a batch of one internally)."""
    return evaluate_network(net, spec, params=params, mode=mode, seeds=(seed,)).rewards[0]


def delta_reward(plastic: EvalResult, baseline: EvalResult) -> float:
    """Mean plastic reward minus mean baseline reward on matched seeds."""
    if plastic.seeds != baseline.seeds:
        raise ValueError("results were scored on different seed sets")
    return plastic.mean_reward - baseline.mean_reward


class BaselineCache:
    """Memoises baseline evaluations keyed by (network hash, env descriptor).

    Baselines are independent of the plasticity grid, so sweeps reuse one
    baseline run per network/environment pair.
    """

    def __init__(self) -> None:
        self._store: dict[tuple[str, str, tuple[int, ...]], EvalResult] = {}

    def get(
        self, net: DevelopedNetwork, spec: EnvSpec, seeds=DEFAULT_SEEDS
    ) -> EvalResult:
        key = (net.canonical_hash(), spec.descriptor(), tuple(seeds))
        result = self._store.get(key)
        if result is None:
            result = evaluate_network(net, spec, mode=BASELINE, seeds=seeds)
            self._store[key] = result
        return result

    def preload(self, net_id: str, env: str, result: EvalResult) -> None:
        self._store[(net_id, env, result.seeds)] = result

    def __len__(self) -> int:
        return len(self._store)


def is_perfect(result: EvalResult, spec: EnvSpec) -> bool:
    return result.mean_reward >= strata_for(spec)[-1]


def normalized_delta(delta: float, spec: EnvSpec) -> float:
    """Delta reward rescaled by the 500-step episode horizon."""
    return delta / float(spec.max_steps)


def headroom_delta(delta: float, baseline_mean: float, spec: EnvSpec) -> float | None:
    """Delta reward relative to the remaining improvement headroom.

    Returns None when the baseline already exceeds 499 of the 500 available
    reward units (CartPole) — there is no headroom left to attribute.
    """
    ceiling = spec.max_episode_reward
    room = ceiling - baseline_mean
    if baseline_mean > ceiling - 1.0:
        return None
    if room <= 0:
        return None
    return delta / room
