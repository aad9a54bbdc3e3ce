# The module implements the generic slotted scheduling loop and the four baseline
# slot-selection strategies (node-based, level-based, dedicated, shared). The loop is
# parameterized by a buffer-update policy so that SchedEx can plug into any of them.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

from typing import Dict, FrozenSet, List, Optional, Tuple

import networkx as nx
import numpy as np

from app.config import settings
from app.core.buffers import BufferUpdatePolicy, PacketBuffers
from app.core.exceptions import LivelockError, StructuralError
from app.core.logger import console
from app.core.routing import hop_depths
from app.models.network import (
    BufferState,
    LinkQualityMatrix,
    Network,
    NodeId,
    RoutingTable,
    ScheduleFrame,
    SchedulerKind,
    Transmission,
)

SourceGroups = Dict[NodeId, Dict[NodeId, Tuple[NodeId, ...]]]

SHARED_GROUP_SIZE = 2


class ConflictGraph:
    """Undirected graph over the transceivers; an edge means the pair cannot share a slot."""

    def __init__(self, graph: nx.Graph):
        self.graph = graph
        self._neighbors: Dict[NodeId, FrozenSet[NodeId]] = {
            t: frozenset(graph.neighbors(t)) for t in graph.nodes
        }

    def neighbors(self, t: NodeId) -> FrozenSet[NodeId]:
        return self._neighbors.get(t, frozenset())

    def conflicts(self, t: NodeId, u: NodeId) -> bool:
        return u in self.neighbors(t)

    def is_independent(self, nodes) -> bool:
        nodes = list(nodes)
        return not any(self.conflicts(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:])


def build_conflict_graph(net: Network, Q: LinkQualityMatrix, R: RoutingTable) -> ConflictGraph:
    """
    t and t' conflict iff one hears the other (c4) or one of them is audible at the
    other's parent (c5). Any q > 0 counts, interference-only entries included.
    """
    T = list(net.transceiver_ids)
    cols = Q.col_index
    rows = [Q.row_index[t] for t in T]
    missing = [t for t in T if R.parent.get(t) is None]
    if missing:
        raise StructuralError(f"Transceivers without a routing parent: {missing}.")

    audible = Q.values[np.ix_(rows, [cols[t] for t in T])] > 0.0
    at_parent = Q.values[np.ix_(rows, [cols[R.parent[t]] for t in T])] > 0.0
    conflict = audible | audible.T | at_parent | at_parent.T
    np.fill_diagonal(conflict, False)

    graph = nx.Graph()
    graph.add_nodes_from(T)
    graph.add_edges_from((T[i], T[j]) for i, j in zip(*np.nonzero(np.triu(conflict, k=1))))
    console.debug(f"Conflict graph: {graph.number_of_nodes()} transceivers, {graph.number_of_edges()} conflicts.")
    return ConflictGraph(graph)


def shared_source_groups(R: RoutingTable, sources, group_size: int = SHARED_GROUP_SIZE) -> SourceGroups:
    """
    For every transmitter, the sources of its subtree in DFS pre-order (children by id),
    cut into consecutive groups of `group_size`. Maps transmitter -> source -> group.
    """
    children: Dict[NodeId, List[NodeId]] = {}
    for t, p in R.parent.items():
        if p is not None:
            children.setdefault(p, []).append(t)
    for kids in children.values():
        kids.sort()
    is_source = set(sources)

    groups: SourceGroups = {}
    for t in R.parent:
        order: List[NodeId] = []
        stack = [t]
        while stack:
            node = stack.pop()
            if node in is_source:
                order.append(node)
            stack.extend(reversed(children.get(node, [])))
        mapping: Dict[NodeId, Tuple[NodeId, ...]] = {}
        for start in range(0, len(order), group_size):
            group = tuple(order[start:start + group_size])
            for s in group:
                mapping[s] = group
        groups[t] = mapping
    return groups


def _candidate_order(kind: SchedulerKind, net: Network, Q: LinkQualityMatrix, R: RoutingTable) -> List[NodeId]:
    T = net.transceiver_ids
    if kind is SchedulerKind.NODE_BASED:
        return list(T)
    if kind is SchedulerKind.LEVEL_BASED:
        depth = hop_depths(R)
        return sorted(T, key=lambda t: (depth[t], t))
    # Dedicated and shared: most reliable link first.
    return sorted(T, key=lambda t: (-Q.prr(t, R.parent[t]), t))


def _select(candidates: List[NodeId], cg: ConflictGraph) -> List[NodeId]:
    """Greedy sequential colouring step: take every candidate not blocked by an earlier one."""
    chosen: List[NodeId] = []
    blocked: set = set()
    for t in candidates:
        if t in blocked:
            continue
        chosen.append(t)
        blocked |= cg.neighbors(t)
    return chosen


def run_scheduler(
    kind: SchedulerKind,
    net: Network,
    Q: LinkQualityMatrix,
    R: RoutingTable,
    b0: BufferState,
    policy: Optional[BufferUpdatePolicy] = None,
    conflict_graph: Optional[ConflictGraph] = None,
) -> ScheduleFrame:
    """
    Appends slots until every buffer is empty. Each slot is chosen per `kind` among the
    transceivers holding packets, executed against the buffers at slot start and passed
    through `policy`. Every transmission is attributed to the packet it serves.
    """
    kind = SchedulerKind(kind)
    cg = conflict_graph or build_conflict_graph(net, Q, R)
    buffers = PacketBuffers(R, b0, policy)
    order = _candidate_order(kind, net, Q, R)
    groups = shared_source_groups(R, [t for t, b in b0.counts.items() if b > 0]) if kind is SchedulerKind.SHARED else {}

    max_tau = buffers.policy.max_attempts
    depth = hop_depths(R)
    packet_hops = sum(b * depth[t] for t, b in b0.counts.items())
    guard = settings.LIVELOCK_FACTOR * max_tau * max(len(order), packet_hops)
    slots: List[Tuple[Transmission, ...]] = []
    # Shared: transmitters whose next packet belongs to the group they just served.
    carry: List[NodeId] = []

    while not buffers.is_empty:
        if len(slots) >= guard:
            raise LivelockError(f"{kind.value} scheduler exceeded {guard} slots", buffers.snapshot().counts)
        candidates = carry + [t for t in order if buffers.count(t) and t not in carry]
        chosen = _select(candidates, cg)
        if not chosen:
            raise LivelockError(f"{kind.value} scheduler found no schedulable transmitter", buffers.snapshot().counts)

        if kind is SchedulerKind.SHARED:
            slot = []
            for t in chosen:
                source, _ = buffers.head(t)
                slot.append(Transmission(transmitter=t, receiver=R.parent_of(t), sources=groups[t][source]))
            slots.append(buffers.apply_slot(slot))
            # The slot is repeated for these ahead of everything else; free room is filled greedily.
            carry = [
                tx.transmitter for tx in slot
                if buffers.count(tx.transmitter) and buffers.head(tx.transmitter)[0] in tx.sources
            ]
        else:
            slot = [Transmission(transmitter=t, receiver=R.parent_of(t)) for t in chosen]
            slots.append(buffers.apply_slot(slot))

    console.debug(f"{kind.value} scheduler ({buffers.policy.name}): {len(slots)} slots.")
    return ScheduleFrame(slots=tuple(slots))
