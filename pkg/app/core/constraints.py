# The module implements the constraint system of the network model: routing constraints
# c1-c3 with the "successful" reachability check, collision constraints c4-c5 for frames,
# the frame-length objective and the deterministic frame replay.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

from typing import Dict, List, Optional

import numpy as np

from app.core.buffers import BufferUpdatePolicy, replay_frame
from app.core.exceptions import StructuralError
from app.models.network import (
    BufferState,
    LinkQualityMatrix,
    Network,
    NodeId,
    RoutingTable,
    ScheduleFrame,
    ValidationReport,
    Violation,
)


def _check_dimensions(R: RoutingTable, net: Network, Q: LinkQualityMatrix) -> None:
    if set(R.parent) != set(net.transceivers):
        missing = sorted(set(net.transceivers) - set(R.parent))
        extra = sorted(set(R.parent) - set(net.transceivers))
        raise StructuralError(f"Routing table rows do not match the transceivers (missing={missing}, extra={extra}).")
    if set(Q.transmitters) != set(net.transceivers) or set(Q.receivers) != set(net.node_ids):
        raise StructuralError(
            f"Link quality matrix is {len(Q.transmitters)} x {len(Q.receivers)}, "
            f"network has {len(net.transceivers)} transceivers and {len(net.node_ids)} nodes."
        )
    known = set(net.node_ids)
    for t, p in R.parent.items():
        if p is not None and p not in known:
            raise StructuralError(f"Parent {p} of {t} is not a node of the network.")


def validate_routing(R: RoutingTable, net: Network, Q: LinkQualityMatrix) -> ValidationReport:
    """
    Checks c1 (no self parent), c2 (at most one parent), c3 (parent edge exists) and
    that every transceiver reaches a sink over an acyclic route ("successful").
    Raises StructuralError when R, net and Q do not describe the same network.
    """
    _check_dimensions(R, net, Q)
    violations: List[Violation] = []

    for t in net.transceiver_ids:
        p = R.parent[t]
        if p == t:
            violations.append(Violation(constraint="c1", message=f"{t} is its own parent", nodes=(t,)))
        if t in R.surplus_parents:
            extra = R.surplus_parents[t]
            violations.append(Violation(constraint="c2", message=f"{t} has {1 + len(extra)} parents", nodes=(t, *extra)))
        if p is not None and p != t and Q.prr(t, p) <= 0.0:
            violations.append(Violation(constraint="c3", message=f"no link {t}->{p}", nodes=(t, p)))

    # Reachability: walk every route once; `reaches` memoizes nodes known to end in a sink.
    reaches: Dict[NodeId, bool] = {s: True for s in net.sinks}
    for t in net.transceiver_ids:
        path: List[NodeId] = []
        on_path = set()
        node: Optional[NodeId] = t
        outcome = False
        cycle = False
        while True:
            if node is None:
                break
            if node in reaches:
                outcome = reaches[node]
                break
            if node in on_path:
                violations.append(Violation(constraint="successful", message=f"routing cycle through {node}", nodes=tuple(path)))
                cycle = True
                break
            on_path.add(node)
            path.append(node)
            node = R.parent.get(node)
        for visited in path:
            reaches[visited] = outcome
        if not outcome and not cycle:
            violations.append(Violation(constraint="successful", message=f"{t} has no route to a sink", nodes=(t,)))

    return ValidationReport(violations=tuple(violations))


def validate_schedule(F: ScheduleFrame, R: RoutingTable, Q: LinkQualityMatrix) -> ValidationReport:
    """
    Lists every (slot, nodes) pair violating c4 or c5. Any q > 0, including the
    interference-only entries, counts as audible. Transmissions whose receiver is not
    the routing parent are reported under "route".
    """
    violations: List[Violation] = []
    rows, cols = Q.row_index, Q.col_index
    for s, slot in enumerate(F.slots):
        senders = [tx.transmitter for tx in slot]
        for t in senders:
            if t not in rows:
                raise StructuralError(f"Slot {s} schedules {t}, which is not a transceiver.")
        if len(set(senders)) != len(senders):
            violations.append(Violation(constraint="duplicate", message="transmitter scheduled twice", slot=s, nodes=tuple(senders)))
        for tx in slot:
            parent = R.parent.get(tx.transmitter)
            if tx.receiver != parent:
                violations.append(Violation(
                    constraint="route",
                    message=f"{tx.transmitter} sends to {tx.receiver}, parent is {parent}",
                    slot=s,
                    nodes=(tx.transmitter, tx.receiver),
                ))
        if len(senders) < 2:
            continue

        idx = [rows[t] for t in senders]
        # c4: t transmits while a concurrent sender p is audible at t (q_pt > 0).
        heard = Q.values[np.ix_(idx, [cols[t] for t in senders])] > 0.0
        for i, j in zip(*np.nonzero(heard)):
            if i != j:
                p, t = senders[i], senders[j]
                violations.append(Violation(constraint="c4", message=f"{t} transmits while hearing {p}", slot=s, nodes=(t, p)))

        # c5: a scheduled receiver hears more than one concurrent sender.
        receivers = sorted({R.parent[t] for t in senders if R.parent.get(t) is not None})
        for p in receivers:
            audible = Q.values[idx, cols[p]] > 0.0
            if audible.sum() > 1:
                loud = tuple(senders[i] for i in np.flatnonzero(audible))
                violations.append(Violation(constraint="c5", message=f"receiver {p} hears {loud}", slot=s, nodes=(p, *loud)))

    return ValidationReport(violations=tuple(violations))


def frame_length(F: ScheduleFrame) -> int:
    """The objective o(x) = |F|."""
    return len(F.slots)


def execute_frame_deterministic(
    F: ScheduleFrame,
    R: RoutingTable,
    b0: BufferState,
    policy: Optional[BufferUpdatePolicy] = None,
) -> BufferState:
    """
    Replays F assuming every transmission succeeds and returns the final buffers.
    With the default plain policy each attempt at a nonempty buffer moves a packet;
    pass a SchedEx policy to move only on the tau_t-th attempt.
    """
    return replay_frame(F, R, b0, policy).final
