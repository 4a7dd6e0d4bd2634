"""Shared fixtures: hand-built networks and frozen genome seeds.

The genome seeds below were chosen by scanning ``sample_random(k)`` for
small values of k; they are frozen here so tests stay fast and
deterministic.  ``FUNCTIONAL_SEED`` develops into a 22-neuron CartPole-capable
network on the default 10x10 grid, ``ACROBOT_SEED`` into an Acrobot-capable
one on 20x20, and ``DEGENERATE_SEED`` produces no neurons at all.
"""

from __future__ import annotations

import pytest

from morphoplast.genome import Genome, sample_random
from morphoplast.morphogenesis import DevelopmentConfig, develop
from morphoplast.network import DevelopedNetwork, Neuron, Role

FUNCTIONAL_SEED = 20
ACROBOT_SEED = 12
DEGENERATE_SEED = 0


def build_net(width: int, height: int, layout, connections, **kwargs) -> DevelopedNetwork:
    """Assemble a network from (row, col, role) triples given in any order."""
    neurons = tuple(Neuron(r, c, role) for r, c, role in sorted(layout))
    return DevelopedNetwork(width, height, neurons, tuple(connections), **kwargs)


@pytest.fixture
def chain_pair() -> DevelopedNetwork:
    """Input -> output, one connection of weight 1.0."""
    return build_net(
        2, 1,
        [(0, 0, Role.INPUT), (0, 1, Role.OUTPUT)],
        [(0, 1, 1.0)],
    )


@pytest.fixture
def cartpole_net() -> DevelopedNetwork:
    """Hand-built net able to drive CartPole: 4 inputs, 1 hidden, 2 outputs."""
    layout = [
        (0, 0, Role.INPUT), (0, 1, Role.INPUT), (0, 2, Role.INPUT), (0, 3, Role.INPUT),
        (1, 0, Role.HIDDEN), (1, 1, Role.OUTPUT), (1, 2, Role.OUTPUT),
    ]
    connections = [
        (0, 4, 0.8), (1, 4, 0.4), (2, 5, 0.6), (3, 6, 0.9),
        (4, 5, 0.7), (4, 6, 0.3), (2, 4, 0.2),
    ]
    return build_net(4, 2, layout, connections)


@pytest.fixture
def acrobot_net() -> DevelopedNetwork:
    """Hand-built net able to drive Acrobot: 6 inputs, 3 outputs."""
    layout = [(0, c, Role.INPUT) for c in range(6)]
    layout += [(1, 0, Role.OUTPUT), (1, 1, Role.OUTPUT), (1, 2, Role.OUTPUT)]
    layout += [(1, 3, Role.HIDDEN)]
    connections = [
        (0, 6, 0.5), (1, 7, 0.5), (2, 8, 0.5), (3, 9, 0.8),
        (9, 6, 0.4), (4, 9, 0.3), (5, 8, 0.2),
    ]
    return build_net(6, 2, layout, connections)


@pytest.fixture(scope="session")
def functional_genome() -> Genome:
    return sample_random(FUNCTIONAL_SEED)


@pytest.fixture(scope="session")
def developed_net(functional_genome) -> DevelopedNetwork:
    net = develop(functional_genome, DevelopmentConfig(width=10, height=10, iterations=200))
    assert net.functional(4, 2)
    return net
