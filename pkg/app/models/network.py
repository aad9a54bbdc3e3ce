# The module provides the immutable domain types of the scheduler: the network digraph,
# the link quality matrix, routing tables, buffers, schedule frames and the parameter sets.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from app.core.exceptions import StructuralError

NodeId = int
INTERFERENCE_PRR = 1e-5


class SchedulerKind(str, Enum):
    """The four baseline slot-selection strategies."""
    NODE_BASED = "node-based"
    LEVEL_BASED = "level-based"
    DEDICATED = "dedicated"
    SHARED = "shared"


class Extension(str, Enum):
    """How reliability is added on top of a scheduler."""
    NONE = "none"
    SCHEDEX = "schedex"
    INCREMENTER = "incrementer"


class Node(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: NodeId
    x: float = Field(allow_inf_nan=False)
    y: float = Field(allow_inf_nan=False)


class Network(BaseModel):
    """A WSN digraph: node coordinates, the sink set and the transceiver set."""
    model_config = ConfigDict(frozen=True)

    nodes: Tuple[Node, ...]
    sinks: frozenset[NodeId]
    transceivers: frozenset[NodeId]

    @model_validator(mode="after")
    def _check_partition(self) -> "Network":
        ids = [node.id for node in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("node ids must be unique")
        if self.sinks & self.transceivers:
            raise ValueError(f"nodes {sorted(self.sinks & self.transceivers)} are both sink and transceiver")
        if set(ids) != self.sinks | self.transceivers:
            raise ValueError("every node must be exactly one of sink or transceiver")
        if not self.sinks:
            raise ValueError("a network needs at least one sink")
        return self

    # Lookup tables derived from the fields.
    _node_ids: Tuple[NodeId, ...] = PrivateAttr(default=())
    _transceiver_ids: Tuple[NodeId, ...] = PrivateAttr(default=())
    _positions: Dict[NodeId, Tuple[float, float]] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context) -> None:
        self._node_ids = tuple(sorted(node.id for node in self.nodes))
        self._transceiver_ids = tuple(sorted(self.transceivers))
        self._positions = {node.id: (node.x, node.y) for node in self.nodes}

    @property
    def node_ids(self) -> Tuple[NodeId, ...]:
        return self._node_ids

    @property
    def transceiver_ids(self) -> Tuple[NodeId, ...]:
        return self._transceiver_ids

    @property
    def positions(self) -> Dict[NodeId, Tuple[float, float]]:
        return self._positions

    def distance(self, a: NodeId, b: NodeId) -> float:
        (xa, ya), (xb, yb) = self.positions[a], self.positions[b]
        return float(np.hypot(xa - xb, ya - yb))


class LinkQualityMatrix(BaseModel):
    """
    Dense |T| x |V| matrix of packet reception rates. Rows are transmitters,
    columns are all nodes; an entry > 0 is a directed link of E, and entries of
    exactly INTERFERENCE_PRR only mark interference.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    transmitters: Tuple[NodeId, ...]
    receivers: Tuple[NodeId, ...]
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_array(cls, value) -> np.ndarray:
        array = np.array(value, dtype=float, copy=True)
        array.flags.writeable = False
        return array

    @model_validator(mode="after")
    def _check_matrix(self) -> "LinkQualityMatrix":
        rows, cols = len(self.transmitters), len(self.receivers)
        if self.values.shape != (rows, cols):
            raise ValueError(f"matrix shape {self.values.shape} does not match {rows} x {cols}")
        if rows and (np.isnan(self.values).any() or self.values.min() < 0.0 or self.values.max() > 1.0):
            raise ValueError("packet reception rates must lie in [0, 1]")
        columns = {p: j for j, p in enumerate(self.receivers)}
        for i, t in enumerate(self.transmitters):
            if t in columns and self.values[i, columns[t]] != 0.0:
                raise ValueError(f"q[{t},{t}] must be 0")
        return self

    _row_index: Dict[NodeId, int] = PrivateAttr(default_factory=dict)
    _col_index: Dict[NodeId, int] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context) -> None:
        self._row_index = {t: i for i, t in enumerate(self.transmitters)}
        self._col_index = {p: j for j, p in enumerate(self.receivers)}

    @property
    def row_index(self) -> Dict[NodeId, int]:
        return self._row_index

    @property
    def col_index(self) -> Dict[NodeId, int]:
        return self._col_index

    def prr(self, t: NodeId, p: NodeId) -> float:
        """q_tp; nodes that never transmit (sinks) have an all-zero row."""
        if p not in self.col_index:
            raise StructuralError(f"Node {p} is not a column of the link quality matrix.")
        row = self.row_index.get(t)
        if row is None:
            if t not in self.col_index:
                raise StructuralError(f"Node {t} is not part of the link quality matrix.")
            return 0.0
        return float(self.values[row, self.col_index[p]])

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinkQualityMatrix):
            return NotImplemented
        return (
            self.transmitters == other.transmitters
            and self.receivers == other.receivers
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        return hash((self.transmitters, self.receivers, self.values.tobytes()))


class RoutingTable(BaseModel):
    """Single-parent routing: R_t per transceiver and the per-node packet load k_t."""
    model_config = ConfigDict(frozen=True)

    parent: Dict[NodeId, Optional[NodeId]]
    packet_load: Dict[NodeId, int] = Field(default_factory=dict)
    # Extra ones found in a row of a binary routing matrix; kept so c2 can be reported.
    surplus_parents: Dict[NodeId, Tuple[NodeId, ...]] = Field(default_factory=dict)

    @field_validator("packet_load")
    @classmethod
    def _nonnegative_loads(cls, value: Dict[NodeId, int]) -> Dict[NodeId, int]:
        if any(k < 0 for k in value.values()):
            raise ValueError("packet loads must be nonnegative")
        return value

    @classmethod
    def from_matrix(
        cls,
        matrix: Iterable[Iterable[int]],
        transmitters: Iterable[NodeId],
        receivers: Iterable[NodeId],
    ) -> "RoutingTable":
        """Reads a binary |T| x |V| routing matrix r_tp."""
        transmitters, receivers = list(transmitters), list(receivers)
        array = np.asarray(matrix, dtype=int)
        if array.shape != (len(transmitters), len(receivers)):
            raise StructuralError(f"routing matrix shape {array.shape} does not match {len(transmitters)} x {len(receivers)}")
        parent: Dict[NodeId, Optional[NodeId]] = {}
        surplus: Dict[NodeId, Tuple[NodeId, ...]] = {}
        for i, t in enumerate(transmitters):
            chosen = [receivers[j] for j in np.flatnonzero(array[i])]
            parent[t] = chosen[0] if chosen else None
            if len(chosen) > 1:
                surplus[t] = tuple(chosen[1:])
        return cls(parent=parent, surplus_parents=surplus)

    def parent_of(self, t: NodeId) -> NodeId:
        p = self.parent.get(t)
        if p is None:
            raise StructuralError(f"Transmitter {t} has no routing parent.")
        return p

    def with_loads(self, packet_load: Dict[NodeId, int]) -> "RoutingTable":
        return self.model_copy(update={"packet_load": dict(packet_load)})


class BufferState(BaseModel):
    """Per-transceiver packet counts b_t."""
    model_config = ConfigDict(frozen=True)

    counts: Dict[NodeId, int]

    @field_validator("counts")
    @classmethod
    def _nonnegative(cls, value: Dict[NodeId, int]) -> Dict[NodeId, int]:
        if any(b < 0 for b in value.values()):
            raise ValueError("buffer counts must be nonnegative")
        return value

    @classmethod
    def filled(cls, transceivers: Iterable[NodeId], sources: Iterable[NodeId], packets: int = 1) -> "BufferState":
        """One (or `packets`) packet per source, zero elsewhere."""
        counts = {t: 0 for t in transceivers}
        for s in sources:
            counts[s] = packets
        return cls(counts=counts)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def is_empty(self) -> bool:
        return self.total == 0


class Transmission(BaseModel):
    """One scheduled attempt of `transmitter` towards its routing parent."""
    model_config = ConfigDict(frozen=True)

    transmitter: NodeId
    receiver: NodeId
    # (source node, hop index) of the packet this attempt is dedicated to.
    attribution: Optional[Tuple[NodeId, int]] = None
    # Source group a shared slot serves; empty when the slot is dedicated.
    sources: Tuple[NodeId, ...] = ()


class ScheduleFrame(BaseModel):
    """Ordered slots; each slot is a set of concurrent transmissions."""
    model_config = ConfigDict(frozen=True)

    slots: Tuple[Tuple[Transmission, ...], ...] = ()

    @property
    def transmissions(self) -> int:
        return sum(len(slot) for slot in self.slots)

    def attempts_per_transmitter(self) -> Dict[NodeId, int]:
        counts: Dict[NodeId, int] = {}
        for slot in self.slots:
            for tx in slot:
                counts[tx.transmitter] = counts.get(tx.transmitter, 0) + 1
        return counts

    @property
    def is_attributed(self) -> bool:
        return all(tx.attribution is not None for slot in self.slots for tx in slot)

    def render(self, limit: Optional[int] = None) -> str:
        """Human-readable listing; slot numbers are 1-based."""
        lines: List[str] = []
        for index, slot in enumerate(self.slots[:limit]):
            links = ", ".join(f"{tx.transmitter}->{tx.receiver}" for tx in slot)
            lines.append(f"slot {index + 1:>5}: {links}")
        if limit is not None and len(self.slots) > limit:
            lines.append(f"... {len(self.slots) - limit} more slots")
        return "\n".join(lines)


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    constraint: str
    message: str
    slot: Optional[int] = None
    nodes: Tuple[NodeId, ...] = ()


class ValidationReport(BaseModel):
    """Violated constraints; an empty report means the input is valid."""
    model_config = ConfigDict(frozen=True)

    violations: Tuple[Violation, ...] = ()

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def constraints(self) -> set[str]:
        return {v.constraint for v in self.violations}

    def __len__(self) -> int:
        return len(self.violations)


class ChannelParams(BaseModel):
    """Rayleigh-fading link model parameters."""
    model_config = ConfigDict(frozen=True)

    a_n: float = Field(default=67.7328, gt=0)
    g_n: float = Field(default=0.9819, gt=0)
    gamma_pn: float = Field(default=4.2935, gt=0)
    alpha: float = Field(default=3.3, gt=0)
    gamma0_db: float = 60.0
    r_t: float = Field(default=30.0, gt=0)
    r_i: float = Field(default=60.0, gt=0)
    calibration_prr: float = Field(default=0.67, gt=0, lt=1)
    calibration_db: float = 60.0

    @model_validator(mode="after")
    def _check_ranges(self) -> "ChannelParams":
        if self.r_t > self.r_i:
            raise ValueError("transmission range must not exceed the interference range")
        return self


class TopologyParams(BaseModel):
    """Random circular topology around a single sink."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2)
    lam: float = Field(default=0.5, ge=0, le=1)
    radius: float = Field(default=100.0, gt=0)
    inner_radius: float = Field(default=100.0 / 2 ** 0.5, gt=0)
    seed: int = Field(ge=0, lt=2 ** 64)

    @property
    def inner_count(self) -> int:
        return int(np.floor(self.n * self.lam / (self.lam + 1)))


class ReliabilityBound(BaseModel):
    """The required end-to-end reliability lower bound."""
    model_config = ConfigDict(frozen=True)

    rho: float = Field(ge=0, lt=1)


class RepetitionVector(BaseModel):
    """Required attempts tau_t per transceiver and the down-counters c_t."""
    model_config = ConfigDict(frozen=True)

    tau: Dict[NodeId, int]
    counters: Dict[NodeId, int]

    @model_validator(mode="after")
    def _check_counters(self) -> "RepetitionVector":
        for t, attempts in self.tau.items():
            if attempts < 1:
                raise ValueError(f"tau[{t}] must be at least 1")
            if not 0 < self.counters.get(t, 0) <= attempts:
                raise ValueError(f"counter of {t} must lie in (0, tau]")
        return self

    @property
    def max_tau(self) -> int:
        return max(self.tau.values(), default=1)


class SimulationResult(BaseModel):
    """Monte-Carlo estimate of the end-to-end success rate with a Clopper-Pearson interval."""
    model_config = ConfigDict(frozen=True)

    successes: int = Field(ge=0)
    trials: int = Field(gt=0)
    confidence: float = Field(gt=0, lt=1)
    ci_low: float
    ci_high: float

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2.0
