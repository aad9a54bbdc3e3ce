import itertools
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np
import pytest

from app.config import settings
from app.core.routing import etx_route
from app.core.topology import generate_topology
from app.models.network import BufferState, LinkQualityMatrix, Network, Node


def make_network(positions: Mapping[int, Tuple[float, float]], sinks: Iterable[int]) -> Network:
    sinks = frozenset(sinks)
    return Network(
        nodes=tuple(Node(id=i, x=x, y=y) for i, (x, y) in sorted(positions.items())),
        sinks=sinks,
        transceivers=frozenset(positions) - sinks,
    )


def make_matrix(net: Network, links: Dict[Tuple[int, int], float]) -> LinkQualityMatrix:
    """Q with the given (t, p) -> q entries and zeros elsewhere."""
    values = np.zeros((len(net.transceiver_ids), len(net.node_ids)))
    rows = {t: i for i, t in enumerate(net.transceiver_ids)}
    cols = {p: j for j, p in enumerate(net.node_ids)}
    for (t, p), q in links.items():
        values[rows[t], cols[p]] = q
    return LinkQualityMatrix(transmitters=net.transceiver_ids, receivers=net.node_ids, values=values)


@pytest.fixture
def chain():
    """A=1 -> B=2 -> sink 0, q = 0.9 on both hops."""
    net = make_network({0: (0.0, 0.0), 1: (40.0, 0.0), 2: (20.0, 0.0)}, sinks=[0])
    Q = make_matrix(net, {(1, 2): 0.9, (2, 1): 0.9, (2, 0): 0.9})
    return net, Q


@pytest.fixture
def star():
    """Three transceivers, each with a direct q = 0.9 link to the sink and nothing else."""
    net = make_network({0: (0.0, 0.0), 1: (10.0, 0.0), 2: (0.0, 10.0), 3: (-10.0, 0.0)}, sinks=[0])
    Q = make_matrix(net, {(1, 0): 0.9, (2, 0): 0.9, (3, 0): 0.9})
    return net, Q


@pytest.fixture
def single_link():
    net = make_network({0: (0.0, 0.0), 1: (10.0, 0.0)}, sinks=[0])
    return net, make_matrix(net, {(1, 0): 0.9})


@pytest.fixture(scope="session")
def topology50():
    """A seeded size-50 topology with its ETX routing."""
    net, Q = generate_topology(settings.topology_params(50, seed=3), settings.channel_params)
    return net, Q, etx_route(net, Q)


@pytest.fixture(scope="session")
def small_topologies():
    """Thirty seeded 5-node topologies in a small disk, routed."""
    out = []
    for seed in range(30):
        tp = settings.topology_params(5, seed).model_copy(update={"radius": 40.0, "inner_radius": 20.0})
        net, Q = generate_topology(tp, settings.channel_params)
        out.append((net, Q, etx_route(net, Q)))
    return out


def all_sources(net: Network) -> BufferState:
    return BufferState.filled(net.transceiver_ids, net.transceiver_ids)


def enumerate_reliability(attempts: Dict[tuple, int], quality: Dict[tuple, float]) -> float:
    """Exhaustive sum over all success/failure outcomes of every single attempt."""
    flat = [(key, quality[key]) for key, n in attempts.items() for _ in range(n)]
    total = 0.0
    for outcome in itertools.product((True, False), repeat=len(flat)):
        p = 1.0
        delivered = set()
        for (key, q), ok in zip(flat, outcome):
            p *= q if ok else 1.0 - q
            if ok:
                delivered.add(key)
        if delivered == set(attempts):
            total += p
    return total
