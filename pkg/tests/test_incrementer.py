import math

import pytest

from app.core.constraints import validate_schedule
from app.core.exceptions import InfeasibleReliabilityError, StructuralError
from app.core.incrementer import AttributedFrame, attribute_frame, best_repeat, exact_reliability, increment_until
from app.core.routing import etx_route
from app.core.scheduling import run_scheduler
from app.models.network import BufferState, ScheduleFrame, SchedulerKind, Transmission
from tests.conftest import all_sources, enumerate_reliability, make_matrix, make_network


def attributed(t, p, source, hop=0):
    return Transmission(transmitter=t, receiver=p, attribution=(source, hop))


def test_single_link_with_repeats(single_link):
    _, Q = single_link
    slot = (attributed(1, 0, 1),)
    for n in (1, 2, 5):
        frame = ScheduleFrame(slots=(slot,) * n)
        assert exact_reliability(frame, Q) == pytest.approx(1 - 0.1 ** n, abs=1e-12)


def test_two_hops_multiply(chain):
    _, Q = chain
    frame = ScheduleFrame(slots=((attributed(1, 2, 1, 0),), (attributed(2, 0, 1, 1),)))
    assert exact_reliability(frame, Q) == pytest.approx(0.81, abs=1e-12)


def test_star_frame_matches_outcome_enumeration(star):
    net, Q = star
    R = etx_route(net, Q)
    frame = AttributedFrame.from_frame(run_scheduler(SchedulerKind.DEDICATED, net, Q, R, all_sources(net)), Q)
    for s in (0, 1, 2, 0, 0):
        frame.repeat(s)
    assert sum(frame.attempts.values()) <= 12
    assert frame.reliability() == pytest.approx(enumerate_reliability(frame.attempts, frame.quality), abs=1e-12)


def test_missing_attribution_is_structural(single_link):
    _, Q = single_link
    frame = ScheduleFrame(slots=((Transmission(transmitter=1, receiver=0),),))
    with pytest.raises(StructuralError):
        exact_reliability(frame, Q)


def test_node_frames_are_attributed_by_replay(chain):
    net, Q = chain
    R = etx_route(net, Q)
    bare = ScheduleFrame(slots=((Transmission(transmitter=1, receiver=2),), (Transmission(transmitter=2, receiver=0),)))
    frame = attribute_frame(bare, R, BufferState(counts={1: 1, 2: 0}))
    assert [slot[0].attribution for slot in frame.slots] == [(1, 0), (1, 1)]


def test_weakest_link_is_repeated_first():
    net = make_network({0: (0, 0), 1: (10, 0), 2: (0, 10)}, sinks=[0])
    Q = make_matrix(net, {(1, 0): 0.5, (2, 0): 0.9})
    frame = ScheduleFrame(slots=((attributed(2, 0, 2),), (attributed(1, 0, 1),)))
    assert best_repeat(frame, Q) == 1


def test_identical_slots_pick_the_first():
    net = make_network({0: (0, 0), 1: (10, 0), 2: (0, 10)}, sinks=[0])
    Q = make_matrix(net, {(1, 0): 0.8, (2, 0): 0.8})
    frame = ScheduleFrame(slots=((attributed(1, 0, 1),), (attributed(2, 0, 2),)))
    assert best_repeat(frame, Q) == 0


def test_boundary_is_met_exactly(single_link):
    _, Q = single_link
    result = increment_until(ScheduleFrame(slots=((attributed(1, 0, 1),),)), Q, 0.99)
    assert len(result) == 2
    assert result.reliability() >= 0.99


def test_satisfied_frame_is_returned_unchanged(single_link):
    _, Q = single_link
    frame = ScheduleFrame(slots=((attributed(1, 0, 1),),))
    result = increment_until(frame, Q, 0.9)
    assert result.to_frame() == frame


def test_repeat_is_placed_after_its_original(chain):
    _, Q = chain
    first, second = (attributed(1, 2, 1, 0),), (attributed(2, 0, 1, 1),)
    frame = AttributedFrame.from_frame(ScheduleFrame(slots=(first, second)), Q)
    frame.repeat(0)
    assert frame.slots == [first, first, second]
    assert frame.attempts == {(1, 0): 2, (1, 1): 1}


def test_input_frame_is_not_modified(single_link):
    _, Q = single_link
    frame = AttributedFrame.from_frame(ScheduleFrame(slots=((attributed(1, 0, 1),),)), Q)
    increment_until(frame, Q, 0.999)
    assert len(frame) == 1


def test_slot_cap_raises_infeasible():
    net = make_network({0: (0, 0), 1: (10, 0)}, sinks=[0])
    Q = make_matrix(net, {(1, 0): 0.01})
    with pytest.raises(InfeasibleReliabilityError) as info:
        increment_until(ScheduleFrame(slots=((attributed(1, 0, 1),),)), Q, 0.99, max_slots=50)
    assert info.value.slots == 50
    assert info.value.reached < 0.99


def test_each_step_is_the_best_single_repeat(small_topologies):
    for net, Q, R in small_topologies:
        frame = AttributedFrame.from_frame(run_scheduler(SchedulerKind.NODE_BASED, net, Q, R, all_sources(net)), Q)
        before = frame.reliability()
        for _ in range(8):
            ratios = []
            for s in range(len(frame)):
                trial = frame.copy()
                trial.repeat(s)
                ratios.append(trial.reliability() / before)
            s, gain = frame.best_repeat()
            assert ratios[s] >= max(ratios) * (1 - 1e-12)
            assert math.exp(gain) == pytest.approx(ratios[s], rel=1e-9)
            frame.repeat(s)
            after = frame.reliability()
            assert after > before
            before = after


@pytest.mark.parametrize("kind", list(SchedulerKind))
def test_grown_frames_stay_valid(small_topologies, kind):
    for net, Q, R in small_topologies[:10]:
        base = run_scheduler(kind, net, Q, R, all_sources(net))
        result = increment_until(base, Q, 0.999)
        assert result.reliability() >= 0.999
        assert validate_schedule(result.to_frame(), R, Q).is_valid
        assert len(result) >= len(base.slots)


def test_shared_base_on_generated_topology(topology50):
    net, Q, R = topology50
    base = run_scheduler(SchedulerKind.SHARED, net, Q, R, all_sources(net))
    result = increment_until(base, Q, 0.9)
    assert exact_reliability(result, Q) >= 0.9
    assert validate_schedule(result.to_frame(), R, Q).is_valid
    assert 100 <= len(result) <= 3000


def test_one_packet_hop_on_two_links_is_structural():
    net = make_network({0: (0, 0), 1: (10, 0), 2: (0, 10)}, sinks=[0])
    Q = make_matrix(net, {(1, 0): 0.5, (2, 0): 0.9})
    frame = ScheduleFrame(slots=((attributed(1, 0, 1),), (attributed(2, 0, 1),)))
    with pytest.raises(StructuralError):
        exact_reliability(frame, Q)

