"""Deterministic CartPole / Acrobot physics with mid-episode switches.

Both environments are reimplemented from the published classic-control
dynamics so there is no simulator dependency and no hidden RNG: resets go
through the documented counter-based generator in :mod:`morphoplast.prng`,
and every trajectory is a pure function of (seed, action sequence).

CartPole integrates the standard cart-pole equations with explicit Euler at
dt = 0.02 and force ±10; an episode ends when |x| > 2.4, |theta| > 0.2095
rad, or after 500 steps, scoring +1 per step.  Acrobot integrates the
two-link equations with a single RK4 step of dt = 0.2 per action in
{-1, 0, +1}, scoring -1 per step until -cos(t1) - cos(t1 + t2) > 1, so the
episode return is -(solved_step or 500).

A spec may carry one perturbation: the physics change in place for all env
steps >= switch_step (pole mass 0.1 -> 1.0 kg, gravity 9.8 -> 20.0, or
Acrobot lower-link mass x2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import prng

CARTPOLE = "cartpole"
ACROBOT = "acrobot"

VALID_CHANGES: dict[str, tuple[str, ...]] = {
    CARTPOLE: ("pole_mass_x10", "gravity_x2"),
    ACROBOT: ("link2_mass_x2",),
}

# CartPole constants
CP_GRAVITY = 9.8
CP_MASS_CART = 1.0
CP_MASS_POLE = 0.1
CP_HALF_LENGTH = 0.5
CP_FORCE = 10.0
CP_DT = 0.02
CP_X_LIMIT = 2.4
CP_THETA_LIMIT = 0.2095
CP_RESET_BOUND = 0.05

# Acrobot constants
AC_L1 = 1.0
AC_LC1 = 0.5
AC_LC2 = 0.5
AC_M1 = 1.0
AC_M2 = 1.0
AC_I1 = 1.0
AC_I2 = 1.0
AC_G = 9.8
AC_DT = 0.2
AC_MAX_VEL_1 = 4 * math.pi
AC_MAX_VEL_2 = 9 * math.pi
AC_RESET_BOUND = 0.1

MAX_STEPS = 500

CP_OBS_SCALE = np.array([2.4, 3.0, 0.2095, 3.0])
AC_OBS_SCALE = np.array([1.0, 1.0, 1.0, 1.0, AC_MAX_VEL_1, AC_MAX_VEL_2])


@dataclass(frozen=True)
class Perturbation:
    change: str
    switch_step: int


@dataclass(frozen=True)
class EnvSpec:
    kind: str
    perturbation: Perturbation | None = None
    max_steps: int = MAX_STEPS

    def __post_init__(self) -> None:
        if self.kind not in (CARTPOLE, ACROBOT):
            raise ValueError(f"unknown environment kind {self.kind!r}")
        p = self.perturbation
        if p is not None:
            if p.change not in VALID_CHANGES[self.kind]:
                raise ValueError(f"change {p.change!r} not valid for {self.kind}")
            if not 1 <= p.switch_step <= self.max_steps:
                raise ValueError(f"switch_step {p.switch_step} outside [1, {self.max_steps}]")

    @property
    def obs_dim(self) -> int:
        return 4 if self.kind == CARTPOLE else 6

    @property
    def n_actions(self) -> int:
        return 2 if self.kind == CARTPOLE else 3

    @property
    def obs_scale(self) -> np.ndarray:
        return CP_OBS_SCALE if self.kind == CARTPOLE else AC_OBS_SCALE

    @property
    def min_episode_reward(self) -> float:
        # CartPole scores +1 on the step that fails; Acrobot -1 throughout.
        return 1.0 if self.kind == CARTPOLE else -500.0

    @property
    def max_episode_reward(self) -> float:
        return 500.0 if self.kind == CARTPOLE else -1.0

    @property
    def switch_step(self) -> int | None:
        return self.perturbation.switch_step if self.perturbation else None

    def descriptor(self) -> str:
        if self.perturbation is None:
            return self.kind
        return f"{self.kind}+{self.perturbation.change}@{self.perturbation.switch_step}"

    @classmethod
    def from_descriptor(cls, text: str) -> "EnvSpec":
        if "+" not in text:
            return cls(kind=text)
        kind, rest = text.split("+", 1)
        change, at = rest.split("@", 1)
        return cls(kind=kind, perturbation=Perturbation(change, int(at)))


def make_nonstationary(spec: EnvSpec, change: str, switch_step: int) -> EnvSpec:
    """A copy of ``spec`` with the given physics switch; the base is untouched."""
    return replace(spec, perturbation=Perturbation(change=change, switch_step=switch_step))


def _cartpole_params(spec: EnvSpec, step_index: int) -> tuple[float, float]:
    """(gravity, pole mass) in effect for the 1-based env step ``step_index``."""
    gravity, mass_pole = CP_GRAVITY, CP_MASS_POLE
    p = spec.perturbation
    if p is not None and step_index >= p.switch_step:
        if p.change == "pole_mass_x10":
            mass_pole = 1.0
        elif p.change == "gravity_x2":
            gravity = 20.0
    return gravity, mass_pole


def _acrobot_m2(spec: EnvSpec, step_index: int) -> float:
    p = spec.perturbation
    if p is not None and step_index >= p.switch_step and p.change == "link2_mass_x2":
        return 2.0 * AC_M2
    return AC_M2


class EnvState:
    """Mutable episode state: the kind-specific 4-vector plus bookkeeping."""

    __slots__ = ("vec", "steps", "terminal", "solved_step")

    def __init__(self, vec: np.ndarray):
        self.vec = vec
        self.steps = 0
        self.terminal = False
        self.solved_step: int | None = None


def _observe(kind: str, vec: np.ndarray) -> np.ndarray:
    if kind == CARTPOLE:
        return vec.copy()
    t1, t2, dt1, dt2 = vec
    return np.array([math.cos(t1), math.sin(t1), math.cos(t2), math.sin(t2), dt1, dt2])


def env_reset(spec: EnvSpec, seed: int) -> tuple[EnvState, np.ndarray]:
    """Start an episode; initial components are counter-based uniform draws."""
    bound = CP_RESET_BOUND if spec.kind == CARTPOLE else AC_RESET_BOUND
    vec = np.array(prng.uniforms(seed, 4, -bound, bound))
    state = EnvState(vec)
    return state, _observe(spec.kind, vec)


def cartpole_physics_step(vec, force: float, gravity: float, mass_pole: float):
    """One Euler step of the cart-pole dynamics, ignoring termination."""
    x, x_dot, theta, theta_dot = vec
    total_mass = CP_MASS_CART + mass_pole
    pole_mass_length = mass_pole * CP_HALF_LENGTH
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    temp = (force + pole_mass_length * theta_dot**2 * sin_t) / total_mass
    theta_acc = (gravity * sin_t - cos_t * temp) / (
        CP_HALF_LENGTH * (4.0 / 3.0 - mass_pole * cos_t**2 / total_mass)
    )
    x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass
    return (
        x + CP_DT * x_dot,
        x_dot + CP_DT * x_acc,
        theta + CP_DT * theta_dot,
        theta_dot + CP_DT * theta_acc,
    )


def _acrobot_derivs(s, torque: float, m2: float):
    t1, t2, dt1, dt2 = s
    d1 = AC_M1 * AC_LC1**2 + m2 * (AC_L1**2 + AC_LC2**2 + 2 * AC_L1 * AC_LC2 * math.cos(t2)) + AC_I1 + AC_I2
    d2 = m2 * (AC_LC2**2 + AC_L1 * AC_LC2 * math.cos(t2)) + AC_I2
    phi2 = m2 * AC_LC2 * AC_G * math.cos(t1 + t2 - math.pi / 2)
    phi1 = (
        -m2 * AC_L1 * AC_LC2 * dt2**2 * math.sin(t2)
        - 2 * m2 * AC_L1 * AC_LC2 * dt2 * dt1 * math.sin(t2)
        + (AC_M1 * AC_LC1 + m2 * AC_L1) * AC_G * math.cos(t1 - math.pi / 2)
        + phi2
    )
    ddt2 = (
        torque + d2 / d1 * phi1 - m2 * AC_L1 * AC_LC2 * dt1**2 * math.sin(t2) - phi2
    ) / (m2 * AC_LC2**2 + AC_I2 - d2**2 / d1)
    ddt1 = -(d2 * ddt2 + phi1) / d1
    return (dt1, dt2, ddt1, ddt2)


def _wrap_pi(x: float) -> float:
    return (x + math.pi) % (2 * math.pi) - math.pi


def acrobot_physics_step(vec, torque: float, m2: float):
    """One RK4 step of the two-link dynamics with wrap and velocity clipping."""
    y0 = tuple(vec)
    k1 = _acrobot_derivs(y0, torque, m2)
    y1 = tuple(a + 0.5 * AC_DT * b for a, b in zip(y0, k1))
    k2 = _acrobot_derivs(y1, torque, m2)
    y2 = tuple(a + 0.5 * AC_DT * b for a, b in zip(y0, k2))
    k3 = _acrobot_derivs(y2, torque, m2)
    y3 = tuple(a + AC_DT * b for a, b in zip(y0, k3))
    k4 = _acrobot_derivs(y3, torque, m2)
    out = tuple(
        a + AC_DT / 6.0 * (p + 2 * q + 2 * r + s)
        for a, p, q, r, s in zip(y0, k1, k2, k3, k4)
    )
    t1 = _wrap_pi(out[0])
    t2 = _wrap_pi(out[1])
    dt1 = min(max(out[2], -AC_MAX_VEL_1), AC_MAX_VEL_1)
    dt2 = min(max(out[3], -AC_MAX_VEL_2), AC_MAX_VEL_2)
    return (t1, t2, dt1, dt2)


def env_step(state: EnvState, spec: EnvSpec, action: int) -> tuple[np.ndarray, float, bool]:
    """Advance one step; returns (observation, reward increment, terminal)."""
    if state.terminal:
        raise ValueError("cannot step a terminal episode")
    step_index = state.steps + 1
    if spec.kind == CARTPOLE:
        if action not in (0, 1):
            raise ValueError(f"cartpole action must be 0 or 1, got {action}")
        gravity, mass_pole = _cartpole_params(spec, step_index)
        force = CP_FORCE if action == 1 else -CP_FORCE
        new = cartpole_physics_step(state.vec, force, gravity, mass_pole)
        state.vec = np.array(new)
        reward = 1.0
        failed = abs(new[0]) > CP_X_LIMIT or abs(new[2]) > CP_THETA_LIMIT
        state.terminal = failed or step_index >= spec.max_steps
    else:
        if action not in (0, 1, 2):
            raise ValueError(f"acrobot action must be 0, 1 or 2, got {action}")
        m2 = _acrobot_m2(spec, step_index)
        torque = float(action - 1)
        new = acrobot_physics_step(state.vec, torque, m2)
        state.vec = np.array(new)
        reward = -1.0
        solved = -math.cos(new[0]) - math.cos(new[0] + new[1]) > 1.0
        if solved and state.solved_step is None:
            state.solved_step = step_index
        state.terminal = solved or step_index >= spec.max_steps
    state.steps = step_index
    return _observe(spec.kind, state.vec), reward, state.terminal


class BatchedEnv:
    """All episodes of one evaluation advanced in lockstep.

    Episodes share the step counter (they start together); finished episodes
    are frozen in place and stop accumulating reward.  The arithmetic is the
    same IEEE-754 sequence as the scalar :func:`env_step`, vectorised.
    """

    def __init__(self, spec: EnvSpec, seeds):
        self.spec = spec
        self.seeds = tuple(seeds)
        n = len(self.seeds)
        bound = CP_RESET_BOUND if spec.kind == CARTPOLE else AC_RESET_BOUND
        self.states = np.array(
            [prng.uniforms(seed, 4, -bound, bound) for seed in self.seeds]
        )
        self.alive = np.ones(n, dtype=bool)
        self.rewards = np.zeros(n)
        self.steps = 0
        self.solved_steps = np.full(n, -1, dtype=int)

    def observations(self) -> np.ndarray:
        if self.spec.kind == CARTPOLE:
            return self.states.copy()
        t1 = self.states[:, 0]
        t2 = self.states[:, 1]
        return np.column_stack(
            [np.cos(t1), np.sin(t1), np.cos(t2), np.sin(t2), self.states[:, 2], self.states[:, 3]]
        )

    def step(self, actions: np.ndarray) -> None:
        if not self.alive.any():
            raise ValueError("all episodes already finished")
        step_index = self.steps + 1
        was_alive = self.alive
        if self.spec.kind == CARTPOLE:
            gravity, mass_pole = _cartpole_params(self.spec, step_index)
            x, x_dot, theta, theta_dot = self.states.T
            force = np.where(actions == 1, CP_FORCE, -CP_FORCE)
            total_mass = CP_MASS_CART + mass_pole
            pole_mass_length = mass_pole * CP_HALF_LENGTH
            cos_t = np.cos(theta)
            sin_t = np.sin(theta)
            temp = (force + pole_mass_length * theta_dot**2 * sin_t) / total_mass
            theta_acc = (gravity * sin_t - cos_t * temp) / (
                CP_HALF_LENGTH * (4.0 / 3.0 - mass_pole * cos_t**2 / total_mass)
            )
            x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass
            new = np.column_stack(
                [
                    x + CP_DT * x_dot,
                    x_dot + CP_DT * x_acc,
                    theta + CP_DT * theta_dot,
                    theta_dot + CP_DT * theta_acc,
                ]
            )
            self.states = np.where(was_alive[:, None], new, self.states)
            self.rewards += was_alive
            failed = (np.abs(self.states[:, 0]) > CP_X_LIMIT) | (
                np.abs(self.states[:, 2]) > CP_THETA_LIMIT
            )
            self.alive = was_alive & ~failed & (step_index < self.spec.max_steps)
        else:
            m2 = _acrobot_m2(self.spec, step_index)
            torque = actions.astype(float) - 1.0
            y0 = self.states
            k1 = self._derivs(y0, torque, m2)
            k2 = self._derivs(y0 + 0.5 * AC_DT * k1, torque, m2)
            k3 = self._derivs(y0 + 0.5 * AC_DT * k2, torque, m2)
            k4 = self._derivs(y0 + AC_DT * k3, torque, m2)
            new = y0 + AC_DT / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            new[:, 0] = (new[:, 0] + np.pi) % (2 * np.pi) - np.pi
            new[:, 1] = (new[:, 1] + np.pi) % (2 * np.pi) - np.pi
            new[:, 2] = np.clip(new[:, 2], -AC_MAX_VEL_1, AC_MAX_VEL_1)
            new[:, 3] = np.clip(new[:, 3], -AC_MAX_VEL_2, AC_MAX_VEL_2)
            self.states = np.where(was_alive[:, None], new, self.states)
            self.rewards -= was_alive
            solved = -np.cos(self.states[:, 0]) - np.cos(
                self.states[:, 0] + self.states[:, 1]
            ) > 1.0
            newly_solved = was_alive & solved & (self.solved_steps < 0)
            self.solved_steps[newly_solved] = step_index
            self.alive = was_alive & ~solved & (step_index < self.spec.max_steps)
        self.steps = step_index

    @staticmethod
    def _derivs(s: np.ndarray, torque: np.ndarray, m2: float) -> np.ndarray:
        t1, t2, dt1, dt2 = s.T
        cos_t2 = np.cos(t2)
        sin_t2 = np.sin(t2)
        d1 = AC_M1 * AC_LC1**2 + m2 * (AC_L1**2 + AC_LC2**2 + 2 * AC_L1 * AC_LC2 * cos_t2) + AC_I1 + AC_I2
        d2 = m2 * (AC_LC2**2 + AC_L1 * AC_LC2 * cos_t2) + AC_I2
        phi2 = m2 * AC_LC2 * AC_G * np.cos(t1 + t2 - np.pi / 2)
        phi1 = (
            -m2 * AC_L1 * AC_LC2 * dt2**2 * sin_t2
            - 2 * m2 * AC_L1 * AC_LC2 * dt2 * dt1 * sin_t2
            + (AC_M1 * AC_LC1 + m2 * AC_L1) * AC_G * np.cos(t1 - np.pi / 2)
            + phi2
        )
        ddt2 = (
            torque + d2 / d1 * phi1 - m2 * AC_L1 * AC_LC2 * dt1**2 * sin_t2 - phi2
        ) / (m2 * AC_LC2**2 + AC_I2 - d2**2 / d1)
        ddt1 = -(d2 * ddt2 + phi1) / d1
        return np.column_stack([dt1, dt2, ddt1, ddt2])
