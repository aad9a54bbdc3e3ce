import pytest

from app.core.exceptions import DomainError
from app.core.incrementer import exact_reliability, increment_until
from app.core.oracle import analytic_bound, clopper_pearson, simulate_frame, simulate_replay
from app.core.routing import etx_route
from app.core.scheduling import run_scheduler
from app.core.schedex import repetition_vector, schedex_schedule
from app.models.network import BufferState, RepetitionVector, ScheduleFrame, SchedulerKind, Transmission
from tests.conftest import all_sources, make_matrix, make_network


def one_link(q):
    net = make_network({0: (0, 0), 1: (10, 0)}, sinks=[0])
    Q = make_matrix(net, {(1, 0): q})
    R = etx_route(net, Q)
    frame = ScheduleFrame(slots=((Transmission(transmitter=1, receiver=0),),))
    return net, Q, R, frame


def test_chain_bound(chain):
    net, Q = chain
    R = etx_route(net, Q)
    rv = repetition_vector(Q, R, 0.9)
    bound = analytic_bound(rv, Q, R, R.packet_load)
    assert bound == pytest.approx(0.99 ** 3, abs=1e-12)
    assert bound >= 0.9
    frame = schedex_schedule(SchedulerKind.NODE_BASED, net, Q, R, 0.9, rv=rv)
    assert exact_reliability(frame, Q) == pytest.approx(bound, abs=1e-12)


def test_perfect_links_give_certainty():
    net = make_network({0: (0, 0), 1: (10, 0), 2: (20, 0)}, sinks=[0])
    Q = make_matrix(net, {(1, 0): 1.0, (2, 1): 1.0})
    R = etx_route(net, Q)
    rv = RepetitionVector(tau={1: 1, 2: 1}, counters={1: 1, 2: 1})
    assert analytic_bound(rv, Q, R, R.packet_load) == 1.0


@pytest.mark.parametrize("rho", [0.9, 0.999, 0.99999])
def test_bound_meets_the_demand(topology50, rho):
    _, Q, R = topology50
    assert analytic_bound(repetition_vector(Q, R, rho), Q, R, R.packet_load) >= rho


def test_certain_link_always_delivers():
    net, Q, R, frame = one_link(1.0)
    result = simulate_frame(frame, R, Q, all_sources(net), trials=10_000, seed=1)
    assert result.successes == 10_000
    assert result.rate == 1.0
    assert result.ci_high == 1.0


def test_coin_flip_link():
    net, Q, R, frame = one_link(0.5)
    result = simulate_frame(frame, R, Q, all_sources(net), trials=1_000_000, seed=7)
    assert abs(result.rate - 0.5) < 0.005
    assert result.ci_low < result.rate < result.ci_high
    assert result.half_width < 0.002


def test_fixed_seed_is_reproducible(chain):
    net, Q = chain
    R = etx_route(net, Q)
    frame = run_scheduler(SchedulerKind.NODE_BASED, net, Q, R, all_sources(net))
    first = simulate_frame(frame, R, Q, all_sources(net), trials=20_000, seed=[3, 1])
    second = simulate_frame(frame, R, Q, all_sources(net), trials=20_000, seed=[3, 1])
    assert first == second


def test_batches_do_not_change_the_trial_count(chain):
    net, Q = chain
    R = etx_route(net, Q)
    frame = run_scheduler(SchedulerKind.NODE_BASED, net, Q, R, all_sources(net))
    result = simulate_frame(frame, R, Q, all_sources(net), trials=12_345, seed=2, batch_size=1000)
    assert result.trials == 12_345


def test_trials_must_be_positive():
    net, Q, R, frame = one_link(0.5)
    with pytest.raises(DomainError):
        simulate_frame(frame, R, Q, all_sources(net), trials=0, seed=1)


def test_empty_buffers_always_succeed(chain):
    _, Q = chain
    R = etx_route(*chain)
    # Unattributed attempts at empty buffers carry no packet.
    frame = ScheduleFrame(slots=((Transmission(transmitter=1, receiver=2),), (Transmission(transmitter=2, receiver=0),)))
    result = simulate_frame(frame, R, Q, BufferState(counts={1: 0, 2: 0}), trials=100, seed=1)
    assert result.rate == 1.0


def test_clopper_pearson_edges():
    assert clopper_pearson(0, 10, 0.99)[0] == 0.0
    assert clopper_pearson(10, 10, 0.99)[1] == 1.0
    low, high = clopper_pearson(50, 100, 0.99)
    assert low < 0.5 < high


def test_exact_reliability_agrees_with_simulation(chain):
    net, Q = chain
    R = etx_route(net, Q)
    b0 = all_sources(net)
    frame = increment_until(run_scheduler(SchedulerKind.LEVEL_BASED, net, Q, R, b0), Q, 0.95).to_frame()
    result = simulate_frame(frame, R, Q, b0, trials=200_000, seed=11)
    assert abs(result.rate - exact_reliability(frame, Q)) < 5 * result.half_width


@pytest.mark.slow
@pytest.mark.parametrize("kind", list(SchedulerKind))
def test_schedex_frames_deliver_empirically(topology50, kind):
    net, Q, R = topology50
    rv = repetition_vector(Q, R, 0.9)
    frame = schedex_schedule(kind, net, Q, R, 0.9, rv=rv)
    result = simulate_frame(frame, R, Q, all_sources(net), trials=100_000, seed=5)
    assert result.rate >= 0.9 - result.half_width
    assert result.rate >= analytic_bound(rv, Q, R, R.packet_load) - 3 * result.half_width


def test_buffer_replay_on_a_single_link():
    net, Q, R, frame = one_link(0.5)
    result = simulate_replay(frame, R, Q, all_sources(net), trials=200_000, seed=7)
    assert abs(result.rate - 0.5) < 5 * result.half_width


def test_buffer_replay_pools_the_attempts_of_a_queue(chain):
    net, Q = chain
    R = etx_route(net, Q)
    one, two = Transmission(transmitter=1, receiver=2), Transmission(transmitter=2, receiver=0)
    frame = ScheduleFrame(slots=((one,), (one,), (two,), (two,), (two,), (two,)))
    result = simulate_replay(frame, R, Q, all_sources(net), trials=400_000, seed=13)
    # Node 2 sends whatever it holds, so two successes in its four slots are enough.
    expected = (1 - 0.1 ** 2) * (1 - 0.1 ** 4 - 4 * 0.9 * 0.1 ** 3)
    assert abs(result.rate - expected) < 5 * result.half_width
    assert result.ci_low > 0.99 ** 3


def test_buffer_replay_is_reproducible(chain):
    net, Q = chain
    R = etx_route(net, Q)
    frame = run_scheduler(SchedulerKind.SHARED, net, Q, R, all_sources(net))
    first = simulate_replay(frame, R, Q, all_sources(net), trials=20_000, seed=[3, 1], batch_size=7_000)
    second = simulate_replay(frame, R, Q, all_sources(net), trials=20_000, seed=[3, 1], batch_size=7_000)
    assert first == second
    assert first.trials == 20_000


def test_buffer_replay_of_empty_buffers_always_succeeds(chain):
    _, Q = chain
    R = etx_route(*chain)
    frame = ScheduleFrame(slots=((Transmission(transmitter=1, receiver=2),),))
    assert simulate_replay(frame, R, Q, BufferState(counts={1: 0, 2: 0}), trials=100, seed=1).rate == 1.0
    with pytest.raises(DomainError):
        simulate_replay(frame, R, Q, all_sources(chain[0]), trials=0, seed=1)


@pytest.mark.slow
@pytest.mark.parametrize("kind", list(SchedulerKind))
def test_buffer_replay_is_not_below_exact_reliability(topology50, kind):
    net, Q, R = topology50
    b0 = all_sources(net)
    frame = schedex_schedule(kind, net, Q, R, 0.9)
    result = simulate_replay(frame, R, Q, b0, trials=20_000, seed=17)
    assert result.rate >= exact_reliability(frame, Q) - 3 * result.half_width
    assert result.rate >= 0.9 - 3 * result.half_width
