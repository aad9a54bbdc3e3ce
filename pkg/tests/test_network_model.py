import pytest
from pydantic import ValidationError

from app.core.exceptions import StructuralError
from app.models.network import (
    BufferState,
    LinkQualityMatrix,
    Network,
    Node,
    RepetitionVector,
    RoutingTable,
    ScheduleFrame,
    Transmission,
)
from tests.conftest import make_network


def test_network_needs_a_sink():
    with pytest.raises(ValidationError):
        Network(nodes=(Node(id=1, x=0, y=0),), sinks=frozenset(), transceivers=frozenset({1}))


def test_network_rejects_overlapping_roles():
    with pytest.raises(ValidationError):
        Network(
            nodes=(Node(id=0, x=0, y=0), Node(id=1, x=1, y=0)),
            sinks=frozenset({0, 1}),
            transceivers=frozenset({1}),
        )


def test_network_lookups_are_sorted():
    net = make_network({3: (0, 0), 0: (1, 1), 1: (4, 5)}, sinks=[0])
    assert net.node_ids == (0, 1, 3)
    assert net.transceiver_ids == (1, 3)
    assert net.distance(0, 1) == pytest.approx(5.0)


def test_quality_matrix_validation():
    with pytest.raises(ValidationError):
        LinkQualityMatrix(transmitters=(1,), receivers=(0, 1), values=[[0.5, 0.3]])
    with pytest.raises(ValidationError):
        LinkQualityMatrix(transmitters=(1,), receivers=(0, 1), values=[[1.5, 0.0]])
    with pytest.raises(ValidationError):
        LinkQualityMatrix(transmitters=(1,), receivers=(0, 1), values=[[0.5]])


def test_quality_matrix_is_read_only():
    Q = LinkQualityMatrix(transmitters=(1,), receivers=(0, 1), values=[[0.5, 0.0]])
    with pytest.raises(ValueError):
        Q.values[0, 0] = 0.9
    assert Q.prr(1, 0) == 0.5
    # Sinks never transmit.
    assert Q.prr(0, 1) == 0.0
    with pytest.raises(StructuralError):
        Q.prr(1, 7)


def test_routing_table_from_matrix_keeps_surplus_parents():
    R = RoutingTable.from_matrix([[1, 0, 1], [1, 0, 0]], transmitters=[1, 2], receivers=[0, 1, 2])
    assert R.parent == {1: 0, 2: 0}
    assert R.surplus_parents == {1: (2,)}
    with pytest.raises(StructuralError):
        RoutingTable.from_matrix([[1, 0]], transmitters=[1, 2], receivers=[0, 1])


def test_buffer_state_filled():
    b = BufferState.filled([1, 2, 3], sources=[2])
    assert b.counts == {1: 0, 2: 1, 3: 0}
    assert b.total == 1 and not b.is_empty
    with pytest.raises(ValidationError):
        BufferState(counts={1: -1})


def test_repetition_vector_counters_must_lie_in_range():
    RepetitionVector(tau={1: 3}, counters={1: 1})
    with pytest.raises(ValidationError):
        RepetitionVector(tau={1: 3}, counters={1: 4})
    with pytest.raises(ValidationError):
        RepetitionVector(tau={1: 0}, counters={1: 0})


def test_frame_render_is_one_based_and_truncated():
    slot = (Transmission(transmitter=1, receiver=0),)
    frame = ScheduleFrame(slots=(slot, slot, slot))
    lines = frame.render(limit=2).splitlines()
    assert lines[0].startswith("slot     1:")
    assert lines[-1] == "... 1 more slots"
    assert frame.transmissions == 3
    assert frame.attempts_per_transmitter() == {1: 3}
    assert not frame.is_attributed
