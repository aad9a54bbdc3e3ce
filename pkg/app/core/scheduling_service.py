# The module provides the scheduling service: it prepares a scenario (topology, routing,
# initial buffers) and runs one (kind, extension, rho) cell on it, timing the schedule
# construction and verifying the resulting frame.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

import time
from typing import Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict

from app.config import settings
from app.core.constraints import execute_frame_deterministic, validate_schedule
from app.core.exceptions import DomainError, InvalidFrameError
from app.core.incrementer import exact_reliability, increment_until
from app.core.logger import console
from app.core.oracle import analytic_bound, simulate_frame
from app.core.routing import etx_route
from app.core.schedex import SchedExPolicy, repetition_vector, schedex_schedule
from app.core.scheduling import build_conflict_graph, run_scheduler
from app.core.topology import generate_topology
from app.models.network import (
    BufferState,
    ChannelParams,
    Extension,
    LinkQualityMatrix,
    Network,
    RepetitionVector,
    RoutingTable,
    ScheduleFrame,
    SchedulerKind,
    TopologyParams,
)
from app.models.schemas import BenchRecord


class PreparedScenario(BaseModel):
    """A routed network with one packet per transceiver, ready to be scheduled."""
    model_config = ConfigDict(frozen=True)

    net: Network
    Q: LinkQualityMatrix
    routing: RoutingTable
    b0: BufferState
    channel: ChannelParams
    topology: Optional[TopologyParams] = None
    seed: int

    @property
    def size(self) -> int:
        return len(self.net.transceiver_ids)


class CellResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    record: BenchRecord
    frame: ScheduleFrame
    repetition: Optional[RepetitionVector] = None


class SchedulingService:
    """
    Runs the topology -> routing -> scheduling -> verification pipeline for single cells.
    Wall-clock time covers schedule construction only; topology generation and routing
    are shared by all cells of a scenario and happen in `generate`/`prepare`.
    """
    def __init__(self):
        console.info("Initializing SchedulingService...")
        console.info(f"Channel: SNR {settings.CHANNEL_SNR_DB} dB, r_t={settings.TRANSMISSION_RANGE}, r_i={settings.INTERFERENCE_RANGE}")
        console.info(f"Guards: livelock factor {settings.LIVELOCK_FACTOR}, Incrementer cap {settings.INCREMENTER_MAX_SLOTS} slots")
        console.success("SchedulingService initialized successfully.")

    def channel_for(self, snr_db: Optional[float] = None) -> ChannelParams:
        return settings.channel_params_for(settings.CHANNEL_SNR_DB if snr_db is None else snr_db)

    def generate(self, size: int, seed: int, snr_db: Optional[float] = None) -> PreparedScenario:
        cp = self.channel_for(snr_db)
        tp = settings.topology_params(size, seed)
        net, Q = generate_topology(tp, cp)
        return self.prepare(net, Q, cp, tp, seed)

    def prepare(
        self,
        net: Network,
        Q: LinkQualityMatrix,
        cp: ChannelParams,
        tp: Optional[TopologyParams] = None,
        seed: Optional[int] = None,
    ) -> PreparedScenario:
        routing = etx_route(net, Q)
        b0 = BufferState.filled(net.transceiver_ids, net.transceiver_ids)
        seed = seed if seed is not None else (tp.seed if tp is not None else 0)
        return PreparedScenario(net=net, Q=Q, routing=routing, b0=b0, channel=cp, topology=tp, seed=seed)

    def run_cell(
        self,
        scenario: PreparedScenario,
        kind: SchedulerKind,
        extension: Extension,
        rho: Optional[float] = None,
        trials: int = 0,
        mc_seed: Union[int, Sequence[int], None] = None,
    ) -> CellResult:
        """
        Builds the frame of one cell and verifies it. Errors of the scheduling core
        propagate; callers decide whether they fail a request or a record.
        """
        kind, extension = SchedulerKind(kind), Extension(extension)
        net, Q, R, b0 = scenario.net, scenario.Q, scenario.routing, scenario.b0
        rv: Optional[RepetitionVector] = None
        increment_ms: Optional[float] = None
        if extension is Extension.NONE:
            rho = None
        elif rho is None:
            raise DomainError(f"The {extension.value} extension needs a reliability bound.")

        start = time.perf_counter()
        cg = build_conflict_graph(net, Q, R)
        if extension is Extension.SCHEDEX:
            rv = repetition_vector(Q, R, rho)
            frame = schedex_schedule(kind, net, Q, R, rho, b0=b0, rv=rv, conflict_graph=cg)
        elif extension is Extension.INCREMENTER:
            base = run_scheduler(kind, net, Q, R, b0, conflict_graph=cg)
            phase = time.perf_counter()
            frame = increment_until(base, Q, rho).to_frame()
            increment_ms = (time.perf_counter() - phase) * 1000.0
        else:
            frame = run_scheduler(kind, net, Q, R, b0, conflict_graph=cg)
        runtime_ms = (time.perf_counter() - start) * 1000.0

        report = validate_schedule(frame, R, Q)
        final = execute_frame_deterministic(frame, R, b0, SchedExPolicy(rv) if rv is not None else None)
        valid = report.is_valid and final.is_empty
        if not valid:
            raise InvalidFrameError(
                f"{kind.value}/{extension.value} on seed {scenario.seed}", report.constraints(), final.total,
            )

        empirical = half_width = None
        if trials:
            result = simulate_frame(frame, R, Q, b0, trials, seed=scenario.seed if mc_seed is None else mc_seed)
            empirical, half_width = result.rate, result.half_width

        record = BenchRecord(
            size=scenario.size,
            seed=scenario.seed,
            kind=kind,
            extension=extension,
            rho=rho,
            frame_slots=len(frame.slots),
            transmissions=frame.transmissions,
            runtime_ms=runtime_ms,
            increment_ms=increment_ms,
            max_tau=rv.max_tau if rv is not None else None,
            analytic_bound=analytic_bound(rv, Q, R, R.packet_load) if rv is not None else None,
            exact_reliability=exact_reliability(frame, Q),
            empirical_rate=empirical,
            ci_half_width=half_width,
            valid=valid,
            snr_db=scenario.channel.gamma0_db,
        )
        console.debug(
            f"Cell size={record.size} seed={record.seed} {kind.value}/{extension.value} rho={rho}: "
            f"{record.frame_slots} slots in {runtime_ms:.1f} ms."
        )
        return CellResult(record=record, frame=frame, repetition=rv)


# A single instance to be used across the application (singleton-like).
scheduling_service = SchedulingService()
