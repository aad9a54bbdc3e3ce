# The module implements the Incrementer baseline: starting from a valid attributed frame,
# repeatedly duplicate the slot with the largest reliability gain (the copy goes right
# after the original) until the exact end-to-end reliability meets the bound.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

import math
from typing import Dict, List, Optional, Tuple, Union

from app.config import settings
from app.core.buffers import replay_frame
from app.core.exceptions import InfeasibleReliabilityError, StructuralError
from app.core.logger import console
from app.core.schedex import validate_rho, attempt_success
from app.models.network import (
    BufferState,
    LinkQualityMatrix,
    NodeId,
    ReliabilityBound,
    RoutingTable,
    ScheduleFrame,
    Transmission,
)

PacketHop = Tuple[NodeId, int]


class AttributedFrame:
    """
    A frame whose transmissions all name the (source, hop) they serve, with the attempt
    count n_{p,h} and link quality of every packet hop. Mutated in place by `repeat`.
    """

    def __init__(
        self,
        slots: List[Tuple[Transmission, ...]],
        slot_keys: List[Tuple[PacketHop, ...]],
        attempts: Dict[PacketHop, int],
        quality: Dict[PacketHop, float],
    ):
        self.slots = slots
        self.slot_keys = slot_keys
        self.attempts = attempts
        self.quality = quality
        self._delta: Dict[PacketHop, float] = {}

    @classmethod
    def from_frame(cls, frame: ScheduleFrame, Q: LinkQualityMatrix, strict: bool = True) -> "AttributedFrame":
        """With strict=False, transmissions without attribution (idle attempts) are ignored."""
        slots: List[Tuple[Transmission, ...]] = []
        slot_keys: List[Tuple[PacketHop, ...]] = []
        attempts: Dict[PacketHop, int] = {}
        quality: Dict[PacketHop, float] = {}
        for s, slot in enumerate(frame.slots):
            keys = []
            for tx in slot:
                if tx.attribution is None:
                    if not strict:
                        continue
                    raise StructuralError(f"Transmission {tx.transmitter}->{tx.receiver} in slot {s} has no attribution.")
                key = tuple(tx.attribution)
                q = Q.prr(tx.transmitter, tx.receiver)
                if quality.setdefault(key, q) != q:
                    raise StructuralError(f"Packet hop {key} is attributed to two different links.")
                attempts[key] = attempts.get(key, 0) + 1
                keys.append(key)
            slots.append(tuple(slot))
            slot_keys.append(tuple(keys))
        return cls(slots, slot_keys, attempts, quality)

    def copy(self) -> "AttributedFrame":
        return AttributedFrame(list(self.slots), list(self.slot_keys), dict(self.attempts), dict(self.quality))

    def __len__(self) -> int:
        return len(self.slots)

    def reliability(self) -> float:
        """Probability that every packet hop succeeds at least once."""
        return math.prod(attempt_success(self.quality[key], n) for key, n in self.attempts.items())

    def _gain_of(self, key: PacketHop) -> float:
        delta = self._delta.get(key)
        if delta is None:
            miss = 1.0 - self.quality[key]
            n = self.attempts[key]
            before = miss ** n
            if before >= 1.0:
                delta = 0.0
            else:
                delta = math.log1p(-(before * miss)) - math.log1p(-before)
            self._delta[key] = delta
        return delta

    def gain(self, s: int) -> float:
        """log of reliability(with slot s repeated) / reliability()."""
        return sum(self._gain_of(key) for key in self.slot_keys[s])

    def best_repeat(self) -> Tuple[int, float]:
        if not self.slots:
            raise StructuralError("Cannot pick a slot to repeat in an empty frame.")
        best, best_gain = 0, self.gain(0)
        for s in range(1, len(self.slots)):
            g = self.gain(s)
            if g > best_gain:
                best, best_gain = s, g
        return best, best_gain

    def repeat(self, s: int) -> None:
        self.slots.insert(s + 1, self.slots[s])
        self.slot_keys.insert(s + 1, self.slot_keys[s])
        for key in self.slot_keys[s]:
            self.attempts[key] += 1
            self._delta.pop(key, None)

    def to_frame(self) -> ScheduleFrame:
        return ScheduleFrame(slots=tuple(self.slots))


FrameLike = Union[AttributedFrame, ScheduleFrame]


def _attributed(F: FrameLike, Q: LinkQualityMatrix) -> AttributedFrame:
    return F if isinstance(F, AttributedFrame) else AttributedFrame.from_frame(F, Q)


def attribute_frame(F: ScheduleFrame, R: RoutingTable, b0: BufferState) -> ScheduleFrame:
    """Fills in missing attribution with the packet each transmission moves in the deterministic replay."""
    if F.is_attributed:
        return F
    return replay_frame(F, R, b0).frame


def exact_reliability(F: FrameLike, Q: LinkQualityMatrix) -> float:
    """Product over packets and hops of 1 - (1 - q)^n under independent attempts."""
    return _attributed(F, Q).reliability()


def best_repeat(F: FrameLike, Q: LinkQualityMatrix) -> int:
    """Slot whose repetition raises the reliability most; the earliest on ties."""
    return _attributed(F, Q).best_repeat()[0]


def increment_until(
    F0: FrameLike,
    Q: LinkQualityMatrix,
    rho: Union[ReliabilityBound, float],
    max_slots: Optional[int] = None,
) -> AttributedFrame:
    """
    Repeats best_repeat slots until the exact reliability reaches rho. Raises
    InfeasibleReliabilityError at `max_slots` slots or when no repetition helps.
    F0 itself is not modified.
    """
    target = validate_rho(rho)
    limit = settings.INCREMENTER_MAX_SLOTS if max_slots is None else max_slots
    frame = _attributed(F0, Q).copy()
    steps = 0
    reached = frame.reliability()
    while reached < target:
        if len(frame) >= limit:
            raise InfeasibleReliabilityError(target, reached, len(frame))
        s, gain = frame.best_repeat()
        if gain <= 0.0:
            raise InfeasibleReliabilityError(target, reached, len(frame))
        frame.repeat(s)
        steps += 1
        reached = frame.reliability()
    console.debug(f"Incrementer: {steps} repetitions, {len(frame)} slots, reliability {reached:.6f}.")
    return frame
