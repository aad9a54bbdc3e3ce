# The module defines the exception hierarchy shared by the scheduling core, the API and the CLI.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

from typing import Iterable, Mapping


class SchedulingError(Exception):
    """Root of every error raised by the scheduling core."""


class StructuralError(SchedulingError):
    """Inputs do not fit together (dimensions, unknown nodes, cycles, missing attribution)."""


class DomainError(SchedulingError, ValueError):
    """A numeric argument lies outside the domain of the operation."""


class InfeasibleLinkError(DomainError):
    """A routed link has a packet reception rate of zero."""


class InfeasibleDemandError(DomainError):
    """A reliability demand of one cannot be met with finitely many attempts."""


class GenerationError(SchedulingError):
    """Topology generation gave up after the configured number of redraws."""

    def __init__(self, message: str, seed: int):
        super().__init__(f"{message} (seed={seed})")
        self.seed = seed


class RoutingError(SchedulingError):
    """A transceiver cannot reach any sink over routable links."""

    def __init__(self, node: int):
        super().__init__(f"Node {node} cannot reach a sink over routable links.")
        self.node = node


class LivelockError(SchedulingError):
    """The scheduling loop stopped making progress."""

    def __init__(self, message: str, buffers: Mapping[int, int]):
        stuck = {t: b for t, b in buffers.items() if b > 0}
        super().__init__(f"{message}; stuck buffers: {stuck}")
        self.buffers = stuck


class InfeasibleReliabilityError(SchedulingError):
    """The Incrementer hit its frame-length cap before meeting the demand."""

    def __init__(self, rho: float, reached: float, slots: int):
        super().__init__(
            f"Reliability {rho} not reachable within {slots} slots (reached {reached:.6g})."
        )
        self.rho = rho
        self.reached = reached
        self.slots = slots


class InvalidFrameError(SchedulingError):
    """A finished frame breaks a collision constraint or leaves packets undelivered."""

    def __init__(self, label: str, constraints: Iterable[str], left: int):
        self.constraints = sorted(set(constraints))
        self.left = left
        super().__init__(
            f"Frame of {label} is not valid: violated {self.constraints or 'none'}, {left} packet(s) left."
        )


class ScenarioParseError(SchedulingError, ValueError):
    """A scenario file is malformed."""

    def __init__(self, path: str, field: str, detail: str, line: int | None = None):
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: field '{field}': {detail}")
        self.path = path
        self.field = field
        self.line = line
