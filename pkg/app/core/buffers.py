# The module holds the packet-buffer machinery shared by the scheduling loop and the
# frame replay: buffer-update policies and slot application with packet attribution.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

from abc import ABC, abstractmethod
from collections import deque
from typing import Deque, Dict, Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from app.core.exceptions import StructuralError
from app.models.network import BufferState, NodeId, RoutingTable, ScheduleFrame, Transmission

Packet = Tuple[NodeId, int]


class BufferUpdatePolicy(ABC):
    """Decides whether a scheduled attempt moves the head packet of a transmitter."""

    name: str = "policy"

    def reset(self) -> None:
        """Restores the initial state before a new scheduler run or replay."""

    @abstractmethod
    def register_attempt(self, t: NodeId) -> bool:
        """Registers one attempt of `t` (which holds a packet); True if the packet moves."""

    @property
    def max_attempts(self) -> int:
        return 1


class PlainPolicy(BufferUpdatePolicy):
    """Every scheduled transmission with a waiting packet moves it."""

    name = "plain"

    def register_attempt(self, t: NodeId) -> bool:
        return True


class PacketBuffers:
    """
    FIFO packet queues of all transceivers. A packet is identified by its source and
    the hop it is about to take. Moves of one slot are evaluated against the buffers
    at slot start: a packet received in slot s can be forwarded from slot s+1 on.
    """

    def __init__(self, routing: RoutingTable, b0: BufferState, policy: Optional[BufferUpdatePolicy] = None):
        self.routing = routing
        self.policy = policy or PlainPolicy()
        self.policy.reset()
        self.queues: Dict[NodeId, Deque[Packet]] = {t: deque() for t in b0.counts}
        for t, count in b0.counts.items():
            self.queues[t].extend((t, 0) for _ in range(count))
        self.moves: Dict[NodeId, int] = {t: 0 for t in b0.counts}

    def count(self, t: NodeId) -> int:
        return len(self.queues[t])

    def head(self, t: NodeId) -> Optional[Packet]:
        queue = self.queues[t]
        return queue[0] if queue else None

    def queued(self, t: NodeId) -> Tuple[Packet, ...]:
        return tuple(self.queues[t])

    def nonempty(self) -> List[NodeId]:
        return [t for t, queue in self.queues.items() if queue]

    @property
    def is_empty(self) -> bool:
        return not any(self.queues.values())

    def snapshot(self) -> BufferState:
        return BufferState(counts={t: len(queue) for t, queue in self.queues.items()})

    def apply_slot(
        self,
        slot: Iterable[Transmission],
    ) -> Tuple[Transmission, ...]:
        """
        Executes one slot and returns its transmissions with attribution filled in
        for every attempt that served a packet.
        """
        arrivals: List[Tuple[NodeId, Packet]] = []
        executed: List[Transmission] = []
        for tx in slot:
            t = tx.transmitter
            if t not in self.queues:
                raise StructuralError(f"Transmitter {t} is not a transceiver of the buffer state.")
            parent = self.routing.parent_of(t)
            queue = self.queues[t]
            if not queue:
                executed.append(tx)
                continue
            source, hop = queue[0]
            if tx.attribution is None:
                tx = tx.model_copy(update={"attribution": (source, hop)})
            executed.append(tx)
            if self.policy.register_attempt(t):
                queue.popleft()
                self.moves[t] += 1
                if parent in self.queues:
                    arrivals.append((parent, (source, hop + 1)))
        for parent, packet in arrivals:
            self.queues[parent].append(packet)
        return tuple(executed)


class ReplayResult(BaseModel):
    """Outcome of a deterministic frame replay."""
    model_config = ConfigDict(frozen=True)

    final: BufferState
    moves: Dict[NodeId, int]
    frame: ScheduleFrame


def replay_frame(
    frame: ScheduleFrame,
    routing: RoutingTable,
    b0: BufferState,
    policy: Optional[BufferUpdatePolicy] = None,
) -> ReplayResult:
    """
    Replays `frame` assuming every transmission succeeds. Nodes without a buffer
    entry (the sinks) absorb packets. The returned frame carries attribution.
    """
    buffers = PacketBuffers(routing, b0, policy)
    slots = tuple(buffers.apply_slot(slot) for slot in frame.slots)
    return ReplayResult(final=buffers.snapshot(), moves=dict(buffers.moves), frame=ScheduleFrame(slots=slots))
