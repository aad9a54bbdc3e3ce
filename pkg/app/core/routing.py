# The module builds single-path routes: Dijkstra over the ETX metric (1/q) towards the sink,
# deterministic tie-breaking by node id, and the per-node subtree packet loads k_t.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

from typing import Dict, Iterable, Optional

import networkx as nx
import numpy as np

from app.core.exceptions import RoutingError, StructuralError
from app.core.logger import console
from app.models.network import INTERFERENCE_PRR, LinkQualityMatrix, Network, NodeId, RoutingTable

# Relative slack under which two route costs count as equal.
COST_TOLERANCE = 1e-9


class EtxGraph:
    """
    Weighted digraph of the routable links: w_tp = 1/q_tp for every q_tp above the
    interference-only level, so every weight is at least 1.
    """

    def __init__(self, Q: LinkQualityMatrix):
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(Q.receivers)
        rows, cols = np.nonzero(Q.values > INTERFERENCE_PRR)
        for i, j in zip(rows, cols):
            self.graph.add_edge(Q.transmitters[i], Q.receivers[j], weight=1.0 / float(Q.values[i, j]))

    def weight(self, t: NodeId, p: NodeId) -> float:
        return self.graph[t][p]["weight"]

    def costs_to(self, sinks: Iterable[NodeId]) -> Dict[NodeId, float]:
        """Minimum path ETX from every node that reaches one of `sinks`."""
        reverse = self.graph.reverse(copy=False)
        return nx.multi_source_dijkstra_path_length(reverse, set(sinks), weight="weight")


def etx_route(
    net: Network,
    Q: LinkQualityMatrix,
    sources: Optional[Iterable[NodeId]] = None,
) -> RoutingTable:
    """
    parent(t) is the successor of t on a minimum-ETX path to a sink; among equally cheap
    successors the smallest id wins. Packet loads are filled in for `sources`
    (default: every transceiver).
    """
    etx = EtxGraph(Q)
    costs = etx.costs_to(net.sinks)
    parent: Dict[NodeId, Optional[NodeId]] = {}
    for t in net.transceiver_ids:
        if t not in costs:
            raise RoutingError(t)
        best = costs[t]
        slack = COST_TOLERANCE * max(1.0, best)
        candidates = [
            p for p in etx.graph.successors(t)
            if p in costs and etx.weight(t, p) + costs[p] <= best + slack
        ]
        parent[t] = min(candidates)

    routing = RoutingTable(parent=parent)
    loads = subtree_packet_counts(routing, net.transceiver_ids if sources is None else sources)
    console.debug(f"ETX routing: {len(parent)} transceivers, max route cost {max(costs.values(), default=0.0):.3f}.")
    return routing.with_loads(loads)


def route_costs(net: Network, Q: LinkQualityMatrix) -> Dict[NodeId, float]:
    """Minimum total ETX to a sink per transceiver; unreachable ones are left out."""
    costs = EtxGraph(Q).costs_to(net.sinks)
    return {t: costs[t] for t in net.transceiver_ids if t in costs}


def subtree_packet_counts(R: RoutingTable, sources: Iterable[NodeId]) -> Dict[NodeId, int]:
    """
    k_t = number of sources in the routing subtree rooted at t (t included when it is
    a source). Every transceiver of R gets an entry.
    """
    loads = {t: 0 for t in R.parent}
    limit = len(R.parent)
    for source in sources:
        if source not in R.parent:
            raise StructuralError(f"Source {source} is not a transceiver of the routing table.")
        node: Optional[NodeId] = source
        steps = 0
        while node in R.parent:
            loads[node] += 1
            node = R.parent[node]
            steps += 1
            if steps > limit:
                raise StructuralError(f"Routing cycle on the route of source {source}.")
        if node is None:
            raise StructuralError(f"Route of source {source} ends before reaching a sink.")
    return loads


def hop_depths(R: RoutingTable) -> Dict[NodeId, int]:
    """Number of hops from every transceiver to its sink."""
    depth: Dict[NodeId, int] = {}
    for t in R.parent:
        chain = []
        node: Optional[NodeId] = t
        while node in R.parent and node not in depth:
            chain.append(node)
            node = R.parent[node]
            if len(chain) > len(R.parent):
                raise StructuralError(f"Routing cycle through {t}.")
        if node is None:
            raise StructuralError(f"Transceiver {chain[-1]} has no routing parent.")
        base = depth.get(node, 0)
        for offset, visited in enumerate(reversed(chain), start=1):
            depth[visited] = base + offset
    return depth
