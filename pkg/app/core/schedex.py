# The module implements SchedEx: splitting the end-to-end reliability bound over routes and
# packets, the per-link attempt counts that meet each share, and the counter-based buffer
# update that delays every packet move until tau_t attempts have been scheduled.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

import math
from typing import Dict, Mapping, Optional, Tuple, Union

from app.core.buffers import BufferUpdatePolicy
from app.core.exceptions import DomainError, InfeasibleDemandError, InfeasibleLinkError, StructuralError
from app.core.logger import console
from app.core.scheduling import ConflictGraph, run_scheduler
from app.models.network import (
    BufferState,
    LinkQualityMatrix,
    Network,
    NodeId,
    ReliabilityBound,
    RepetitionVector,
    RoutingTable,
    ScheduleFrame,
    SchedulerKind,
)


def attempt_success(q: float, attempts: int) -> float:
    """Probability that at least one of `attempts` independent tries over a link q succeeds."""
    return 1.0 - (1.0 - q) ** attempts


def validate_rho(rho: Union[ReliabilityBound, float]) -> float:
    value = rho.rho if isinstance(rho, ReliabilityBound) else float(rho)
    if not 0.0 <= value < 1.0:
        if value == 1.0:
            raise InfeasibleDemandError("A reliability bound of 1 needs infinitely many attempts.")
        raise DomainError(f"Reliability bound must lie in [0, 1), got {value}.")
    return value


def required_attempts(q: float, rho_i: float) -> int:
    """
    Attempts n >= 1 with 1 - (1-q)^n >= rho_i: the plain ceiling of the log ratio, raised
    only while floating point leaves the bound unmet. On an exact-integer ratio n may
    exceed the smallest such count by one.
    """
    if math.isnan(q) or q > 1.0 or q < 0.0:
        raise DomainError(f"Link quality must lie in (0, 1], got {q}.")
    if q == 0.0:
        raise InfeasibleLinkError("A link with q = 0 never delivers a packet.")
    if rho_i >= 1.0:
        raise InfeasibleDemandError(f"Per-link reliability {rho_i} needs infinitely many attempts.")
    if rho_i < 0.0:
        raise DomainError(f"Per-link reliability must lie in [0, 1), got {rho_i}.")
    if q == 1.0 or rho_i == 0.0:
        return 1

    n = max(1, math.ceil(math.log1p(-rho_i) / math.log1p(-q)))
    while attempt_success(q, n) < rho_i:
        n += 1
    return n


def split_reliability(rho: float, links: int, packets: int) -> float:
    """Share of the end-to-end bound each of `links` links must meet for each of `packets` packets."""
    rho = validate_rho(rho)
    if links < 1 or packets < 1:
        raise DomainError(f"Links and packets must be positive, got l={links}, k={packets}.")
    return rho ** (1.0 / (links * packets))


def repetition_vector(
    Q: LinkQualityMatrix,
    R: RoutingTable,
    rho: Union[ReliabilityBound, float],
) -> RepetitionVector:
    """
    tau_t = required_attempts(q_{t R_t}, rho^(1/(|T| k_t))) for every transceiver; nodes
    that forward no packet get tau_t = 1. Counters start at tau_t.
    """
    value = validate_rho(rho)
    links = len(R.parent)
    tau: Dict[NodeId, int] = {}
    for t in R.parent:
        k = R.packet_load.get(t, 0)
        if k == 0:
            tau[t] = 1
            continue
        q = Q.prr(t, R.parent_of(t))
        if q <= 0.0:
            raise InfeasibleLinkError(f"Routed link {t}->{R.parent[t]} has q = 0.")
        tau[t] = required_attempts(q, split_reliability(value, links, k))
    return RepetitionVector(tau=tau, counters=dict(tau))


def total_attempts(rv: RepetitionVector, k: Mapping[NodeId, int]) -> int:
    """n = sum_t k_t * tau_t, the number of transmissions a SchedEx frame contains."""
    missing = [t for t in k if t not in rv.tau]
    if missing:
        raise StructuralError(f"No attempt count for nodes {missing}.")
    return sum(load * rv.tau[t] for t, load in k.items())


def _count_down(counter: int, tau: int) -> Tuple[int, bool]:
    counter -= 1
    if counter == 0:
        return tau, True
    return counter, False


def update_packet_buffers(
    t: NodeId,
    sinks,
    b: BufferState,
    rv: RepetitionVector,
    R: RoutingTable,
) -> Tuple[BufferState, RepetitionVector]:
    """
    One scheduled attempt of t: counts c_t down and, on its tau_t-th attempt, moves a
    packet from t to R_t (dropped into the sink if R_t is one) and resets c_t.
    Returns new objects; the inputs are left untouched.
    """
    if t not in b.counts or t not in rv.tau:
        raise StructuralError(f"Node {t} is not a transceiver of the buffer state.")
    if b.counts[t] == 0:
        return b, rv
    counter, moved = _count_down(rv.counters[t], rv.tau[t])
    counts = dict(b.counts)
    if moved:
        p = R.parent_of(t)
        counts[t] -= 1
        if p not in sinks:
            counts[p] = counts.get(p, 0) + 1
    return BufferState(counts=counts), RepetitionVector(tau=rv.tau, counters={**rv.counters, t: counter})


class SchedExPolicy(BufferUpdatePolicy):
    """Moves the head packet of t only on every tau_t-th scheduled attempt."""

    name = "schedex"

    def __init__(self, rv: RepetitionVector):
        self.rv = rv
        self.counters: Dict[NodeId, int] = dict(rv.tau)

    def reset(self) -> None:
        self.counters = dict(self.rv.tau)

    def register_attempt(self, t: NodeId) -> bool:
        if t not in self.counters:
            raise StructuralError(f"No attempt count for transmitter {t}.")
        self.counters[t], moved = _count_down(self.counters[t], self.rv.tau[t])
        return moved

    @property
    def max_attempts(self) -> int:
        return self.rv.max_tau

    @property
    def state(self) -> RepetitionVector:
        return RepetitionVector(tau=self.rv.tau, counters=dict(self.counters))


def schedex_schedule(
    kind: SchedulerKind,
    net: Network,
    Q: LinkQualityMatrix,
    R: RoutingTable,
    rho: Union[ReliabilityBound, float],
    b0: Optional[BufferState] = None,
    rv: Optional[RepetitionVector] = None,
    conflict_graph: Optional[ConflictGraph] = None,
) -> ScheduleFrame:
    """
    Runs the `kind` scheduler under the SchedEx policy. b0 defaults to one packet per
    transceiver, matching the loads in R.
    """
    rv = rv or repetition_vector(Q, R, rho)
    b0 = b0 or BufferState.filled(net.transceiver_ids, net.transceiver_ids)
    frame = run_scheduler(kind, net, Q, R, b0, SchedExPolicy(rv), conflict_graph)
    console.debug(
        f"SchedEx/{SchedulerKind(kind).value}: max tau {rv.max_tau}, {frame.transmissions} transmissions, "
        f"{len(frame.slots)} slots."
    )
    return frame
