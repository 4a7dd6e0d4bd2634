"""Developed recurrent networks and their plastic runtime.

A :class:`DevelopedNetwork` is the immutable product of development (or of
the random-control generator): neurons with grid positions and roles, plus
weighted directed connections.  :class:`NetworkState` is the mutable runtime
used during episodes — activations, live weights, and weight-change
telemetry.  The runtime is batched: one state advances a whole batch of
episodes in lockstep, which is what makes large sweeps affordable.  A batch
of one gives the single-episode semantics.

The per-step weight update is

    delta_w[i, j] = eta * x[i] * x[j] - decay * w[i, j]

applied to every existing connection, inputs and outputs included.  Weights
are not clipped; the only guard is a non-finite check (see
:meth:`NetworkState.apply_plasticity`).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .genome import PlasticityParams

__all__ = [
    "Role",
    "Neuron",
    "DevelopedNetwork",
    "NetworkState",
    "NonFunctionalNetworkError",
    "PlasticityParams",
    "reset",
]

MIN_INITIAL_WEIGHT = 0.01


class Role(IntEnum):
    INPUT = 0
    HIDDEN = 1
    OUTPUT = 2


ROLE_NAMES = {Role.INPUT: "input", Role.HIDDEN: "hidden", Role.OUTPUT: "output"}
ROLE_BY_NAME = {v: k for k, v in ROLE_NAMES.items()}


class NonFunctionalNetworkError(ValueError):
    pass


@dataclass(frozen=True)
class Neuron:
    row: int
    col: int
    role: Role


@dataclass(frozen=True)
class DevelopedNetwork:
    """Immutable network: neuron list (row-major order) + weighted connections.

    ``connections`` holds (src_index, dst_index, weight) triples; indices
    refer to positions in ``neurons``.  Self-loops are allowed, duplicate
    (src, dst) pairs are not.  ``origin`` distinguishes developed networks
    from random controls in the on-disk format.
    """

    width: int
    height: int
    neurons: tuple[Neuron, ...]
    connections: tuple[tuple[int, int, float], ...]
    origin: str = "developed"
    genome_hash: str | None = None

    def __post_init__(self) -> None:
        n = len(self.neurons)
        if n > self.width * self.height:
            raise ValueError("more neurons than grid cells")
        seen_cells = set()
        last = (-1, -1)
        for nerve in self.neurons:
            cell = (nerve.row, nerve.col)
            if not (0 <= nerve.row < self.height and 0 <= nerve.col < self.width):
                raise ValueError(f"neuron off-grid at {cell}")
            if cell in seen_cells:
                raise ValueError(f"two neurons share cell {cell}")
            if cell < last:
                raise ValueError("neurons must be listed in row-major order")
            seen_cells.add(cell)
            last = cell
        seen_pairs = set()
        for src, dst, w in self.connections:
            if not (0 <= src < n and 0 <= dst < n):
                raise ValueError(f"connection ({src}, {dst}) out of range")
            if (src, dst) in seen_pairs:
                raise ValueError(f"duplicate connection ({src}, {dst})")
            if w < MIN_INITIAL_WEIGHT:
                raise ValueError(f"initial weight {w} below {MIN_INITIAL_WEIGHT}")
            seen_pairs.add((src, dst))

    @property
    def n_neurons(self) -> int:
        return len(self.neurons)

    @property
    def n_connections(self) -> int:
        return len(self.connections)

    def role_indices(self, role: Role) -> tuple[int, ...]:
        """Indices of neurons with ``role``, in row-major order."""
        return tuple(i for i, nv in enumerate(self.neurons) if nv.role == role)

    def role_counts(self) -> dict[Role, int]:
        counts = {role: 0 for role in Role}
        for nv in self.neurons:
            counts[nv.role] += 1
        return counts

    def functional(self, n_obs: int, n_actions: int) -> bool:
        """True iff the network can drive an environment of the given shape."""
        counts = self.role_counts()
        return counts[Role.INPUT] >= n_obs and counts[Role.OUTPUT] >= n_actions

    def weight_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense (w, mask) pair; w[src, dst] is the connection weight."""
        n = self.n_neurons
        w = np.zeros((n, n))
        mask = np.zeros((n, n), dtype=bool)
        for src, dst, weight in self.connections:
            w[src, dst] = weight
            mask[src, dst] = True
        return w, mask

    def canonical_hash(self) -> str:
        """Platform-stable content hash (weights rounded to 12 decimals)."""
        neuron_part = ";".join(
            f"{nv.row},{nv.col},{int(nv.role)}" for nv in sorted(
                self.neurons, key=lambda nv: (nv.row, nv.col)
            )
        )
        conn_part = ";".join(
            f"{src},{dst},{weight:.12f}"
            for src, dst, weight in sorted(self.connections)
        )
        payload = f"{self.width}x{self.height}|{neuron_part}|{conn_part}"
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        d = {
            "width": self.width,
            "height": self.height,
            "neurons": [[nv.row, nv.col, ROLE_NAMES[nv.role]] for nv in self.neurons],
            "connections": [[src, dst, w] for src, dst, w in self.connections],
            "origin": self.origin,
        }
        if self.genome_hash is not None:
            d["genome_hash"] = self.genome_hash
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DevelopedNetwork":
        return cls(
            width=int(d["width"]),
            height=int(d["height"]),
            neurons=tuple(
                Neuron(int(r), int(c), ROLE_BY_NAME[role]) for r, c, role in d["neurons"]
            ),
            connections=tuple(
                (int(src), int(dst), float(w)) for src, dst, w in d["connections"]
            ),
            origin=d.get("origin", "developed"),
            genome_hash=d.get("genome_hash"),
        )


class NetworkState:
    """Mutable runtime for a batch of episodes over one network.

    All episodes start from zero activations and the developmental weights;
    :meth:`reset` restores that state bit-exactly and clears telemetry.
    """

    def __init__(self, net: DevelopedNetwork, batch_size: int = 1):
        self.net = net
        self.batch_size = batch_size
        self._w0, self.mask = net.weight_matrix()
        self.n_conn = net.n_connections
        self._io: tuple[np.ndarray, np.ndarray] | None = None
        self.reset()

    def reset(self) -> None:
        n = self.net.n_neurons
        self.x = np.zeros((self.batch_size, n))
        self.w = np.repeat(self._w0[None, :, :], self.batch_size, axis=0)
        self.dw_sum = np.zeros(self.batch_size)
        self.dw_count = 0
        self.finite = np.ones(self.batch_size, dtype=bool)

    def configure_io(self, n_obs: int, n_actions: int) -> None:
        """Bind the first ``n_obs`` input and ``n_actions`` output neurons.

        Raises :class:`NonFunctionalNetworkError` when the network cannot
        supply them.
        """
        if not self.net.functional(n_obs, n_actions):
            counts = self.net.role_counts()
            raise NonFunctionalNetworkError(
                f"network has {counts[Role.INPUT]} input / {counts[Role.OUTPUT]} output "
                f"neurons; needs {n_obs} / {n_actions}"
            )
        in_idx = np.array(self.net.role_indices(Role.INPUT)[:n_obs], dtype=np.intp)
        out_idx = np.array(self.net.role_indices(Role.OUTPUT)[:n_actions], dtype=np.intp)
        self._io = (in_idx, out_idx)

    def mean_step_dw(self) -> float:
        """Running per-step mean |delta_w| over the whole batch so far."""
        if self.dw_count == 0:
            return float("nan")
        return float(self.dw_sum.sum() / (self.dw_count * self.batch_size))


def reset(net: DevelopedNetwork, batch_size: int = 1) -> NetworkState:
    return NetworkState(net, batch_size)


def forward_step(state: NetworkState, observations: np.ndarray, obs_scale: np.ndarray) -> np.ndarray:
    """One synchronous propagation step; returns the action per episode.

    Every neuron updates as tanh of its weighted inputs from the previous
    step's activations, then the bound input neurons are clamped to the
    scaled observations and the action is the argmax over the bound output
    neurons (ties resolve to the lowest index).
    """
    if state._io is None:
        raise NonFunctionalNetworkError("configure_io() was not called")
    in_idx, out_idx = state._io
    obs = np.atleast_2d(np.asarray(observations, dtype=float))
    x = np.tanh(np.matmul(state.x[:, None, :], state.w)[:, 0, :])
    x[:, in_idx] = obs / obs_scale
    state.x = x
    return np.argmax(x[:, out_idx], axis=1)


def apply_plasticity(
    state: NetworkState,
    params: PlasticityParams,
    live: np.ndarray | None = None,
) -> np.ndarray:
    """Apply the per-step update to every connection; returns mean |delta_w|.

    ``live`` masks out finished episodes in a batch.  Weights that go
    non-finite mark their episode in ``state.finite``; the caller decides
    how to abort (the evaluation layer flags the episode degenerate and
    keeps the reward accumulated so far).
    """
    eta, decay = params.eta, params.decay
    if eta == 0.0 and decay == 0.0:
        dw_mean = np.zeros(state.batch_size)
    else:
        x = state.x
        dw = eta * (x[:, :, None] * x[:, None, :])
        if decay != 0.0:
            dw -= decay * state.w
        dw *= state.mask
        if live is not None:
            dw = np.where(live[:, None, None], dw, 0.0)
        state.w += dw
        with np.errstate(invalid="ignore"):
            dw_mean = np.abs(dw).sum(axis=(1, 2)) / max(state.n_conn, 1)
        state.finite &= np.isfinite(state.w).all(axis=(1, 2))
    state.dw_sum += np.where(np.isfinite(dw_mean), dw_mean, 0.0)
    state.dw_count += 1
    return dw_mean
