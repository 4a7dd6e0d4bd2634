"""Grow a recurrent network from a 54-gene genome on a toroidal grid.

Development iterates a fixed schedule: morphogen secretion by occupied
cells, explicit four-neighbour diffusion, competitive cross-inhibition
between the three morphogens, exponential decay, then a cell-fate pass over
progenitors (divide / differentiate / stay quiescent) and chemotactic wiring
for cells whose growth clock fires.  Everything is deterministic: the same
genome and grid always yield the same
:class:`~morphoplast.network.DevelopedNetwork`.

The field update is deliberately free of BLAS calls (elementwise ops and
``np.roll`` only) so developed topologies hash identically across machines.

Per-iteration order, writing ``c[m]`` for morphogen m's concentration grid:

1. ``c[m] += s_prog[m]`` on progenitor cells, ``+= s_diff[m]`` on neurons.
2. ``c[m] += d_x[m]*(left + right - 2c[m]) + d_y[m]*(up + down - 2c[m])``
   with toroidal neighbours; this step conserves total mass exactly.
3. ``c[m] <- max(0, c[m]*(1 - sum_k chi[k,m]*c[k]))`` evaluated on a
   snapshot of the field taken before any morphogen is updated.  Morphogen
   k inhibits the other two in cyclic order: ``chi_a`` acts on (k+1) % 3
   and ``chi_b`` on (k+2) % 3.
4. ``c[m] *= 1 - gamma[m]``.
5. Fate pass over a row-major snapshot of current progenitors: a cell
   divides if any morphogen sits inside its (ordered) division window,
   placing the child in the empty four-neighbour with the lowest total
   concentration (ties: up, right, down, left); otherwise it differentiates
   if any morphogen reaches its differentiation threshold, and immediately
   wires up; otherwise it waits.  Children act from the next iteration.
6. Every neuron re-wires when (iteration - born) is a positive multiple
   of 10, in order of differentiation.

Differentiation balances the population: the new cell takes whichever role
is furthest below its share of the 4:1:2 input/hidden/output quota, with
the local fate-weight score breaking ties.  Wiring follows an
afferent/efferent motif.  Input and hidden cells grow axons toward the
strongest chemotactic targets within reach, capped at ``fanout`` outgoing
connections over the cell's lifetime; inputs are never targets and outputs
never grow axons.  Output cells instead recruit their nearest non-output
neighbours within reach as afferents — closest first, no score gate —
until they hold ``2 * fanout`` incoming connections.  Both mechanisms
weight fresh connections by local chemistry over distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .genome import Genome, N_MORPHOGENS, genome_hash
from .network import MIN_INITIAL_WEIGHT, DevelopedNetwork, Neuron, Role

GROWTH_PERIOD = 10

# target input : hidden : output population mix used by the fate rule
ROLE_QUOTA = (4.0, 1.0, 2.0)

# an output cell accepts afferents up to this multiple of its own fanout gene
RECRUIT_BUDGET_FACTOR = 2

# occupancy codes used in snapshots (role values 0..2 mean a neuron)
EMPTY = -1
PROGENITOR = 3

SnapshotHook = Callable[[int, np.ndarray, np.ndarray], None]


class DevelopmentError(RuntimeError):
    """Raised when the morphogen field becomes non-finite."""


@dataclass(frozen=True)
class DevelopmentConfig:
    width: int = 10
    height: int = 10
    iterations: int = 200

    def __post_init__(self) -> None:
        if self.width < 2 or self.height < 2:
            raise ValueError("grid dimensions must be at least 2")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")


DEFAULT_CONFIG = DevelopmentConfig()


def diffuse(field: np.ndarray, d_col, d_row) -> np.ndarray:
    """One explicit diffusion step on the last two (toroidal) axes.

    ``d_col`` scales exchange with left/right neighbours, ``d_row`` with
    up/down; both may be scalars or broadcastable against ``field``.  Total
    mass is conserved exactly up to float rounding.
    """
    left = np.roll(field, 1, axis=-1)
    right = np.roll(field, -1, axis=-1)
    up = np.roll(field, 1, axis=-2)
    down = np.roll(field, -1, axis=-2)
    return field + d_col * (left + right - 2.0 * field) + d_row * (up + down - 2.0 * field)


def initial_weight(chem: float, distance: float) -> float:
    """Weight for a fresh connection: chemistry over distance, floored."""
    return max(MIN_INITIAL_WEIGHT, chem / (1.0 + distance))


def _toroidal_distances(cell, targets: np.ndarray, height: int, width: int) -> np.ndarray:
    dr = np.abs(targets[:, 0] - cell[0])
    dr = np.minimum(dr, height - dr)
    dc = np.abs(targets[:, 1] - cell[1])
    dc = np.minimum(dc, width - dc)
    return np.sqrt(dr.astype(float) ** 2 + dc.astype(float) ** 2)


class _Development:
    """Mutable state for one run of :func:`develop`."""

    def __init__(self, genome: Genome, config: DevelopmentConfig):
        self.config = config
        h, w = config.height, config.width
        morphs = genome.morphogens

        def gene(name: str) -> np.ndarray:
            return np.array([getattr(m, name) for m in morphs])

        self.s_prog = gene("s_prog")
        self.s_diff = gene("s_diff")
        self.gamma = gene("gamma")
        self.d_x = gene("d_x")[:, None, None]
        self.d_y = gene("d_y")[:, None, None]
        windows = [m.division_window() for m in morphs]
        self.div_lo = np.array([lo for lo, _ in windows])
        self.div_hi = np.array([hi for _, hi in windows])
        self.th_diff = gene("th_diff")
        self.fate_w = np.stack([gene("fate_w_in"), gene("fate_w_hid"), gene("fate_w_out")])
        self.alpha = gene("alpha")
        self.c_coef = gene("c_coef")
        self.radius = float(gene("rho").sum())
        self.score_floor = float(gene("tau").sum())
        self.fanout = max(1, round(float(gene("beta").sum())))
        self.recruit_budget = RECRUIT_BUDGET_FACTOR * self.fanout
        # chi[k, m]: how strongly morphogen k suppresses morphogen m
        self.chi = np.zeros((N_MORPHOGENS, N_MORPHOGENS))
        for k, m in enumerate(morphs):
            self.chi[k, (k + 1) % N_MORPHOGENS] = m.chi_a
            self.chi[k, (k + 2) % N_MORPHOGENS] = m.chi_b

        self.conc = np.zeros((N_MORPHOGENS, h, w))
        self.is_progenitor = np.zeros((h, w), dtype=bool)
        self.is_progenitor[h // 2, w // 2] = True
        self.is_neuron = np.zeros((h, w), dtype=bool)
        self.role = np.full((h, w), EMPTY, dtype=np.int8)
        self.n_roles = np.zeros(N_MORPHOGENS)
        self.born: dict[tuple[int, int], int] = {}
        self.out_deg: dict[tuple[int, int], int] = {}
        self.in_deg: dict[tuple[int, int], int] = {}
        self.connections: dict[tuple[tuple[int, int], tuple[int, int]], float] = {}

    def update_field(self, iteration: int) -> None:
        c = self.conc
        c += self.s_prog[:, None, None] * self.is_progenitor
        c += self.s_diff[:, None, None] * self.is_neuron
        c = diffuse(c, self.d_x, self.d_y)
        snapshot = c.copy()
        for m in range(N_MORPHOGENS):
            suppression = np.zeros_like(snapshot[m])
            for k in range(N_MORPHOGENS):
                if k != m:
                    suppression += self.chi[k, m] * snapshot[k]
            c[m] = np.maximum(0.0, snapshot[m] * (1.0 - suppression))
        c *= (1.0 - self.gamma)[:, None, None]
        if not np.isfinite(c).all():
            raise DevelopmentError(f"non-finite concentration at iteration {iteration}")
        self.conc = c

    def _division_target(self, r: int, c: int) -> tuple[int, int] | None:
        h, w = self.config.height, self.config.width
        total = self.conc.sum(axis=0)
        best = None
        best_total = np.inf
        for nr, nc in (((r - 1) % h, c), (r, (c + 1) % w), ((r + 1) % h, c), (r, (c - 1) % w)):
            if self.is_progenitor[nr, nc] or self.is_neuron[nr, nc]:
                continue
            if total[nr, nc] < best_total:
                best, best_total = (nr, nc), total[nr, nc]
        return best

    def _pick_role(self, local: np.ndarray) -> int:
        """Role furthest below quota; fate-weight score breaks ties."""
        ratios = self.n_roles / ROLE_QUOTA
        tied = np.nonzero(ratios == ratios.min())[0]
        if tied.size == 1:
            return int(tied[0])
        scores = (self.fate_w * local).sum(axis=1)
        return int(tied[np.argmax(scores[tied])])

    def fate_pass(self, iteration: int) -> None:
        for r, c in np.argwhere(self.is_progenitor):
            local = self.conc[:, r, c]
            if np.any((self.div_lo <= local) & (local <= self.div_hi)):
                target = self._division_target(r, c)
                if target is not None:
                    self.is_progenitor[target] = True
            elif np.any(local >= self.th_diff):
                role = self._pick_role(local)
                self.is_progenitor[r, c] = False
                self.is_neuron[r, c] = True
                self.role[r, c] = role
                self.n_roles[role] += 1
                cell = (int(r), int(c))
                self.born[cell] = iteration
                self.grow_axons(cell)
                if role == Role.OUTPUT:
                    self.recruit_afferents(cell)

    def _chem_at(self, cell: tuple[int, int]) -> float:
        grid_max = self.conc.max(axis=(1, 2))
        safe_max = np.where(grid_max > 0.0, grid_max, 1.0)
        local = self.conc[:, cell[0], cell[1]]
        normalised = np.where(grid_max > 0.0, local / safe_max, 0.0)
        return float((self.c_coef * normalised).mean())

    def grow_axons(self, source: tuple[int, int]) -> None:
        if self.role[source] == Role.OUTPUT:
            return
        deg = self.out_deg.get(source, 0)
        if deg >= self.fanout:
            return
        targets = np.argwhere(self.is_neuron)
        targets = targets[self.role[targets[:, 0], targets[:, 1]] != Role.INPUT]
        if targets.size == 0:
            return
        distances = _toroidal_distances(source, targets, self.config.height, self.config.width)
        local = self.conc[:, targets[:, 0], targets[:, 1]]
        scores = (self.alpha[:, None] * local).sum(axis=0)
        eligible = np.nonzero((distances <= self.radius) & (scores >= self.score_floor))[0]
        if eligible.size == 0:
            return
        ranked = eligible[np.lexsort((eligible, -scores[eligible]))]
        grid_max = self.conc.max(axis=(1, 2))
        safe_max = np.where(grid_max > 0.0, grid_max, 1.0)
        for t in ranked:
            if deg >= self.fanout:
                break
            dst = (int(targets[t, 0]), int(targets[t, 1]))
            key = (source, dst)
            if key in self.connections:
                continue
            normalised = np.where(grid_max > 0.0, local[:, t] / safe_max, 0.0)
            chem = float((self.c_coef * normalised).mean())
            self.connections[key] = initial_weight(chem, float(distances[t]))
            deg += 1
            self.in_deg[dst] = self.in_deg.get(dst, 0) + 1
        self.out_deg[source] = deg

    def recruit_afferents(self, cell: tuple[int, int]) -> None:
        """Pull the nearest in-range non-output neurons onto an output cell."""
        have = self.in_deg.get(cell, 0)
        if have >= self.recruit_budget:
            return
        sources = np.argwhere(self.is_neuron)
        sources = sources[self.role[sources[:, 0], sources[:, 1]] != Role.OUTPUT]
        if sources.size == 0:
            return
        distances = _toroidal_distances(cell, sources, self.config.height, self.config.width)
        keep = distances <= self.radius
        sources, distances = sources[keep], distances[keep]
        if sources.size == 0:
            return
        order = np.lexsort((sources[:, 1], sources[:, 0], distances))
        chem = self._chem_at(cell)
        for t in order:
            if have >= self.recruit_budget:
                break
            src = (int(sources[t, 0]), int(sources[t, 1]))
            key = (src, cell)
            if key in self.connections:
                continue
            self.connections[key] = initial_weight(chem, float(distances[t]))
            have += 1
        self.in_deg[cell] = have

    def growth_phase(self, iteration: int) -> None:
        for cell, born in self.born.items():
            age = iteration - born
            if age > 0 and age % GROWTH_PERIOD == 0:
                self.grow_axons(cell)
                if self.role[cell] == Role.OUTPUT:
                    self.recruit_afferents(cell)

    def occupancy(self) -> np.ndarray:
        occ = self.role.copy()
        occ[self.is_progenitor] = PROGENITOR
        return occ

    def build_network(self, genome: Genome) -> DevelopedNetwork:
        cells = [tuple(map(int, rc)) for rc in np.argwhere(self.is_neuron)]
        index = {cell: i for i, cell in enumerate(cells)}
        neurons = tuple(Neuron(r, c, Role(int(self.role[r, c]))) for r, c in cells)
        connections = tuple(
            sorted((index[src], index[dst], w) for (src, dst), w in self.connections.items())
        )
        return DevelopedNetwork(
            width=self.config.width,
            height=self.config.height,
            neurons=neurons,
            connections=connections,
            origin="developed",
            genome_hash=genome_hash(genome),
        )


def develop(
    genome: Genome,
    config: DevelopmentConfig | None = None,
    snapshot_hook: SnapshotHook | None = None,
) -> DevelopedNetwork:
    """Run the full developmental program and return the grown network.

    ``snapshot_hook``, if given, is called after every iteration with
    ``(iteration, concentrations, occupancy)`` where occupancy holds -1 for
    empty cells, 3 for progenitors and the role code for neurons.
    """
    config = config or DEFAULT_CONFIG
    dev = _Development(genome, config)
    for iteration in range(1, config.iterations + 1):
        dev.update_field(iteration)
        dev.fate_pass(iteration)
        dev.growth_phase(iteration)
        if snapshot_hook is not None:
            snapshot_hook(iteration, dev.conc.copy(), dev.occupancy())
    return dev.build_network(genome)
