import math

import networkx as nx
import numpy as np
import pytest

from app.core.buffers import replay_frame
from app.core.constraints import validate_routing
from app.core.exceptions import RoutingError, StructuralError
from app.core.routing import etx_route, hop_depths, route_costs, subtree_packet_counts
from app.models.network import BufferState, LinkQualityMatrix, RoutingTable, ScheduleFrame, Transmission
from tests.conftest import make_matrix, make_network


def test_chain_has_a_unique_route(chain):
    net, Q = chain
    R = etx_route(net, Q)
    assert R.parent == {1: 2, 2: 0}
    assert R.packet_load == {1: 1, 2: 2}
    assert hop_depths(R) == {1: 2, 2: 1}


def test_two_good_hops_beat_one_poor_link():
    net = make_network({0: (0, 0), 1: (20, 0), 2: (10, 5)}, sinks=[0])
    Q = make_matrix(net, {(1, 0): 0.4, (1, 2): 0.9, (2, 0): 0.9, (2, 1): 0.9})
    R = etx_route(net, Q)
    assert R.parent[1] == 2
    assert route_costs(net, Q)[1] == pytest.approx(2 / 0.9)


def test_ties_go_to_the_smallest_id():
    net = make_network({0: (0, 0), 1: (10, 0), 2: (0, 10), 3: (10, 10)}, sinks=[0])
    Q = make_matrix(net, {(1, 0): 0.8, (2, 0): 0.8, (3, 1): 0.8, (3, 2): 0.8})
    assert etx_route(net, Q).parent[3] == 1


def test_isolated_node_is_named():
    net = make_network({0: (0, 0), 1: (10, 0), 2: (500, 0)}, sinks=[0])
    Q = make_matrix(net, {(1, 0): 0.9})
    with pytest.raises(RoutingError) as info:
        etx_route(net, Q)
    assert info.value.node == 2


def test_interference_only_links_are_never_routed():
    net = make_network({0: (0, 0), 1: (40, 0)}, sinks=[0])
    Q = make_matrix(net, {(1, 0): 1e-5})
    with pytest.raises(RoutingError):
        etx_route(net, Q)


def _random_matrix(rng, n):
    net = make_network({i: (float(i), 0.0) for i in range(n + 1)}, sinks=[0])
    links = {(t, 0): float(rng.uniform(0.05, 0.3)) for t in range(1, n + 1)}
    for t in range(1, n + 1):
        for p in range(1, n + 1):
            if t != p and rng.random() < 0.5:
                links[(t, p)] = float(rng.uniform(0.1, 1.0))
    return net, make_matrix(net, links)


def _brute_force_costs(net, Q: LinkQualityMatrix):
    graph = nx.DiGraph()
    for t in net.transceiver_ids:
        for p in net.node_ids:
            if Q.prr(t, p) > 1e-5:
                graph.add_edge(t, p)
    best = {}
    for t in net.transceiver_ids:
        best[t] = min(
            sum(1.0 / Q.prr(a, b) for a, b in zip(path, path[1:]))
            for path in nx.all_simple_paths(graph, t, 0)
        )
    return best


@pytest.mark.parametrize("seed", range(20))
def test_routes_match_exhaustive_path_search(seed):
    net, Q = _random_matrix(np.random.default_rng(seed), n=6)
    R = etx_route(net, Q)
    best = _brute_force_costs(net, Q)
    assert validate_routing(R, net, Q).is_valid
    for t in net.transceiver_ids:
        cost, node = 0.0, t
        while node != 0:
            cost += 1.0 / Q.prr(node, R.parent[node])
            node = R.parent[node]
        assert math.isclose(cost, best[t], rel_tol=1e-9)


def test_star_loads():
    R = RoutingTable(parent={1: 0, 2: 0, 3: 0})
    assert subtree_packet_counts(R, [1, 2, 3]) == {1: 1, 2: 1, 3: 1}


def test_binary_tree_loads_match_a_packet_replay():
    parent = {1: 0, 2: 1, 3: 1, 4: 2, 5: 2, 6: 3, 7: 3}
    R = RoutingTable(parent=parent)
    loads = subtree_packet_counts(R, parent)
    assert (loads[2], loads[3], loads[1]) == (3, 3, 7)

    # Deepest nodes first, repeated often enough to drain the tree.
    order = [4, 5, 6, 7, 2, 3, 1]
    slots = tuple((Transmission(transmitter=t, receiver=parent[t]),) for _ in range(7) for t in order)
    replay = replay_frame(ScheduleFrame(slots=slots), R, BufferState.filled(parent, parent))
    assert replay.final.is_empty
    assert replay.moves == loads


def test_partial_sources():
    R = RoutingTable(parent={1: 2, 2: 0, 3: 2})
    assert subtree_packet_counts(R, [1]) == {1: 1, 2: 1, 3: 0}


def test_cycle_is_structural():
    R = RoutingTable(parent={1: 2, 2: 1})
    with pytest.raises(StructuralError):
        subtree_packet_counts(R, [1])
    with pytest.raises(StructuralError):
        hop_depths(R)


def test_unknown_source_is_structural():
    with pytest.raises(StructuralError):
        subtree_packet_counts(RoutingTable(parent={1: 0}), [9])


def test_sink_children_carry_every_packet(topology50):
    net, Q, R = topology50
    assert validate_routing(R, net, Q).is_valid
    at_sink = sum(R.packet_load[t] for t, p in R.parent.items() if p in net.sinks)
    assert at_sink == len(net.transceiver_ids)
    for t, p in R.parent.items():
        assert Q.prr(t, p) > 1e-5
