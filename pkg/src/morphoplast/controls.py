"""Topology-matched random controls for developed networks.

To ask whether development itself contributes anything beyond raw topology
statistics, each developed network can be paired with random directed RNNs
that keep its neuron count and connection count but nothing else: positions
are re-drawn uniformly over distinct grid cells, connections are sampled
uniformly without replacement from all ordered pairs (self-loops allowed),
and weights are i.i.d. uniform on [0.01, 1.0].

By default the control also copies the source's role sequence (in row-major
order), so it binds to an environment exactly like its source and any
competence gap is attributable to wiring rather than to a missing output
neuron.  ``match_roles=False`` relaxes this to the bare counts-only contract
(roles drawn uniformly), in which case many controls are non-functional and
score the environment minimum.

Generation is a pure function of (source content hash, replicate index,
seed), so re-running a control batch reproduces it bit for bit.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator

import numpy as np

from .network import MIN_INITIAL_WEIGHT, DevelopedNetwork, Neuron, Role

__all__ = ["generate_matched_rnn", "generate_controls"]


def generate_matched_rnn(
    source: DevelopedNetwork,
    replicate: int,
    seed: int,
    *,
    match_roles: bool = True,
) -> DevelopedNetwork:
    """Random directed RNN with the source's neuron and connection counts.

    Parameters
    ----------
    source:
        Developed network whose topology statistics are matched.
    replicate:
        Index of this control among the source's replicates; distinct
        replicates of one source give distinct (independent) networks.
    seed:
        Batch-level seed shared across sources.
    match_roles:
        When true (default), the control reuses the source's row-major role
        sequence so per-role counts match.  When false only the totals are
        matched and roles are drawn uniformly.

    Raises
    ------
    ValueError
        If the source has no neurons, or asks for more connections than the
        n^2 ordered pairs available.
    """
    n = source.n_neurons
    m = source.n_connections
    if n < 1:
        raise ValueError("source network has no neurons")
    if m > n * n:
        raise ValueError(f"{m} connections cannot fit in {n}^2 ordered pairs")

    rng = np.random.default_rng(
        np.random.SeedSequence([int(source.canonical_hash(), 16), replicate, seed])
    )

    cells = np.sort(rng.choice(source.width * source.height, size=n, replace=False))
    if match_roles:
        roles = [nv.role for nv in source.neurons]
    else:
        roles = [Role(int(r)) for r in rng.integers(0, 3, size=n)]
    neurons = tuple(
        Neuron(int(cell) // source.width, int(cell) % source.width, role)
        for cell, role in zip(cells, roles)
    )

    pairs = np.sort(rng.choice(n * n, size=m, replace=False))
    weights = rng.uniform(MIN_INITIAL_WEIGHT, 1.0, size=m)
    connections = tuple(
        (int(p) // n, int(p) % n, float(w)) for p, w in zip(pairs, weights)
    )

    return DevelopedNetwork(
        width=source.width,
        height=source.height,
        neurons=neurons,
        connections=connections,
        origin="random_control",
        genome_hash=source.genome_hash,
    )


def generate_controls(
    sources: Iterable[DevelopedNetwork],
    replicates: int = 5,
    seed: int = 0,
    *,
    match_roles: bool = True,
) -> Iterator[tuple[DevelopedNetwork, int, DevelopedNetwork]]:
    """Yield (source, replicate index, control) over a whole source pool."""
    for source in sources:
        for replicate in range(replicates):
            yield source, replicate, generate_matched_rnn(
                source, replicate, seed, match_roles=match_roles
            )
